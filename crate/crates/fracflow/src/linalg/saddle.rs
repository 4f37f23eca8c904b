//! Saddle-point (KKT) solver for constrained energy minimization,
//!
//! ```text
//! [ A  Bᵀ ] [ phi ]   [ 0 ]
//! [ B  0  ] [ mu  ] = [ g ]
//! ```
//!
//! with `A` sparse SPD (guaranteed here by Dirichlet pinning of local
//! problems) and `B` a short, full-row-rank constraint matrix. The system
//! is reduced through the Schur complement `S = B A⁻¹ Bᵀ`: one sparse
//! factorization of `A` plus one dense Cholesky of `S` serve every
//! right-hand side for the same region. A dense LU on the full KKT block
//! matrix is kept as an independent fallback and as a cross-check route.

use super::factor::{norm2, SpdFactor};
use super::CsrMatrix;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct SaddleSolution {
    pub primal: Vec<f64>,
    pub multipliers: Vec<f64>,
}

/// Dense Cholesky with a relative pivot threshold, reporting the first
/// failing pivot index so rank-deficient constraint sets can be named.
struct DenseChol {
    l: DMatrix<f64>,
}

impl DenseChol {
    fn new(s: &DMatrix<f64>) -> std::result::Result<Self, usize> {
        let m = s.nrows();
        let mut l = s.lower_triangle();
        let max_diag = (0..m).map(|i| s[(i, i)]).fold(0.0f64, f64::max);
        let threshold = 1e-12 * max_diag;
        for j in 0..m {
            let mut d = l[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if d <= threshold || !d.is_finite() {
                return Err(j);
            }
            let d = d.sqrt();
            l[(j, j)] = d;
            for i in (j + 1)..m {
                let mut v = l[(i, j)];
                for k in 0..j {
                    v -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = v / d;
            }
        }
        Ok(DenseChol { l })
    }

    fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let m = self.l.nrows();
        let mut x = b.clone();
        for i in 0..m {
            for k in 0..i {
                let v = self.l[(i, k)] * x[k];
                x[i] -= v;
            }
            x[i] /= self.l[(i, i)];
        }
        for i in (0..m).rev() {
            for k in (i + 1)..m {
                let v = self.l[(k, i)] * x[k];
                x[i] -= v;
            }
            x[i] /= self.l[(i, i)];
        }
        x
    }
}

/// Reusable Schur-complement factorization of one KKT system.
pub struct SchurSaddle {
    a: CsrMatrix,
    b: CsrMatrix,
    a_factor: SpdFactor,
    /// columns of Y = A⁻¹Bᵀ, one per constraint
    y: Vec<Vec<f64>>,
    schur_chol: DenseChol,
}

impl SchurSaddle {
    pub fn new(a: CsrMatrix, b: CsrMatrix) -> Result<Self> {
        let n = a.nrows();
        let m = b.nrows();
        if b.ncols() != n {
            return Err(Error::ShapeMismatch { expected: (m, n), got: (b.nrows(), b.ncols()) });
        }
        for row in 0..m {
            if b.row(row).0.is_empty() {
                return Err(Error::RankDeficientConstraint { row });
            }
        }
        let a_factor = SpdFactor::new(&a)?;
        let mut y = Vec::with_capacity(m);
        for c in 0..m {
            let mut rhs = vec![0.0; n];
            let (cols, vals) = b.row(c);
            for (&j, &v) in cols.iter().zip(vals) {
                rhs[j] = v;
            }
            y.push(a_factor.refined_solve(&a, &rhs));
        }
        // Schur complement, symmetrized against round-off.
        let mut s = DMatrix::zeros(m, m);
        for i in 0..m {
            let byi = b.matvec(&y[i]);
            for j in 0..m {
                s[(j, i)] = byi[j];
            }
        }
        let s = (s.clone() + s.transpose()) * 0.5;
        let schur_chol = match s.clone().cholesky() {
            Some(c) => c,
            None => {
                // locate the offending pivot for the error report
                let row = failing_pivot(&s);
                return Err(Error::RankDeficientConstraint { row });
            }
        };
        Ok(SchurSaddle { a, b, a_factor, y, schur_chol })
    }

    pub fn n_constraints(&self) -> usize {
        self.b.nrows()
    }

    /// Solve `A phi + Bᵀ mu = r1`, `B phi = r2`.
    fn solve_kkt(&self, r1: &[f64], r2: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let w = if r1.iter().all(|&v| v == 0.0) {
            vec![0.0; self.a.nrows()]
        } else {
            self.a_factor.refined_solve(&self.a, r1)
        };
        let bw = self.b.matvec(&w);
        let rhs = DVector::from_iterator(r2.len(), bw.iter().zip(r2).map(|(x, y)| x - y));
        let mu = self.schur_chol.solve(&rhs);
        let mut phi = w;
        for (c, yc) in self.y.iter().enumerate() {
            let m = mu[c];
            if m != 0.0 {
                for (pi, yi) in phi.iter_mut().zip(yc) {
                    *pi -= m * yi;
                }
            }
        }
        (phi, mu.iter().copied().collect())
    }

    /// Solve with zero primal right-hand side and constraint targets `g`,
    /// with one step of iterative refinement on the full KKT residual.
    pub fn solve(&self, g: &[f64]) -> Result<SaddleSolution> {
        assert_eq!(g.len(), self.b.nrows());
        let zero = vec![0.0; self.a.nrows()];
        let (mut phi, mut mu) = self.solve_kkt(&zero, g);
        for _ in 0..2 {
            let (r1, r2) = self.kkt_residual(&phi, &mu, g);
            let rinf = r1.iter().chain(&r2).fold(0.0f64, |acc, v| acc.max(v.abs()));
            let scale = g.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
            if rinf <= 1e-12 * scale {
                break;
            }
            let (dphi, dmu) = self.solve_kkt(&r1, &r2);
            for (p, d) in phi.iter_mut().zip(&dphi) {
                *p += d;
            }
            for (p, d) in mu.iter_mut().zip(&dmu) {
                *p += d;
            }
        }
        let (r1, r2) = self.kkt_residual(&phi, &mu, g);
        let rinf = r1.iter().chain(&r2).fold(0.0f64, |acc, v| acc.max(v.abs()));
        let scale = g.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
        if rinf > 1e-8 * scale {
            return Err(Error::SolverTolerance { residual: rinf, tolerance: 1e-8 * scale });
        }
        Ok(SaddleSolution { primal: phi, multipliers: mu })
    }

    fn kkt_residual(&self, phi: &[f64], mu: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let aphi = self.a.matvec(phi);
        let btmu = self.b.matvec_transpose(mu);
        let r1: Vec<f64> = aphi.iter().zip(&btmu).map(|(x, y)| -(x + y)).collect();
        let bphi = self.b.matvec(phi);
        let r2: Vec<f64> = g.iter().zip(&bphi).map(|(gi, bi)| gi - bi).collect();
        (r1, r2)
    }
}

/// One-shot saddle solve; see [`SchurSaddle`].
pub fn saddle_solve(a: &CsrMatrix, b: &CsrMatrix, g: &[f64]) -> Result<SaddleSolution> {
    SchurSaddle::new(a.clone(), b.clone())?.solve(g)
}

/// Dense LU on the assembled KKT block matrix. Independent route used as
/// a fallback for small regions and as the oracle in verification.
pub fn dense_kkt_solve(a: &CsrMatrix, b: &CsrMatrix, g: &[f64]) -> Result<SaddleSolution> {
    let n = a.nrows();
    let m = b.nrows();
    let dim = n + m;
    let mut k = DMatrix::zeros(dim, dim);
    for r in 0..n {
        let (cols, vals) = a.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            k[(r, c)] = v;
        }
    }
    for r in 0..m {
        let (cols, vals) = b.row(r);
        for (&c, &v) in cols.iter().zip(vals) {
            k[(n + r, c)] = v;
            k[(c, n + r)] = v;
        }
    }
    let mut rhs = DVector::zeros(dim);
    for (i, &gi) in g.iter().enumerate() {
        rhs[n + i] = gi;
    }
    let lu = k.lu();
    let sol = lu
        .solve(&rhs)
        .ok_or(Error::RankDeficientConstraint { row: 0 })?;
    Ok(SaddleSolution {
        primal: sol.as_slice()[..n].to_vec(),
        multipliers: sol.as_slice()[n..].to_vec(),
    })
}

fn failing_pivot(s: &DMatrix<f64>) -> usize {
    // Unpivoted Cholesky, reporting the first non-positive pivot.
    let m = s.nrows();
    let mut l = s.clone();
    for j in 0..m {
        let mut d = l[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if d <= 0.0 || !d.is_finite() {
            return j;
        }
        let d = d.sqrt();
        l[(j, j)] = d;
        for i in (j + 1)..m {
            let mut v = l[(i, j)];
            for k in 0..j {
                v -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = v / d;
        }
    }
    m.saturating_sub(1)
}

#[allow(unused)]
pub(crate) fn kkt_residual_norm(
    a: &CsrMatrix,
    b: &CsrMatrix,
    g: &[f64],
    sol: &SaddleSolution,
) -> f64 {
    let aphi = a.matvec(&sol.primal);
    let btmu = b.matvec_transpose(&sol.multipliers);
    let r1: Vec<f64> = aphi.iter().zip(&btmu).map(|(x, y)| x + y).collect();
    let bphi = b.matvec(&sol.primal);
    let r2: Vec<f64> = bphi.iter().zip(g).map(|(x, y)| x - y).collect();
    (norm2(&r1).powi(2) + norm2(&r2).powi(2)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::CooBuilder;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    #[test]
    fn minimum_norm_split() {
        // A = I, B = [1 1], g = [1]  =>  phi = [0.5, 0.5]
        let a = CsrMatrix::identity(2);
        let mut b = CooBuilder::new(1, 2);
        b.push(0, 0, 1.0);
        b.push(0, 1, 1.0);
        let sol = saddle_solve(&a, &b.build(), &[1.0]).unwrap();
        assert!((sol.primal[0] - 0.5).abs() < 1e-12);
        assert!((sol.primal[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_constraints_reduce_to_spd_solve() {
        let a = CsrMatrix::identity(3);
        let b = CooBuilder::new(0, 3).build();
        let sol = saddle_solve(&a, &b, &[]).unwrap();
        assert!(sol.primal.iter().all(|&v| v == 0.0));
        assert!(sol.multipliers.is_empty());
    }

    #[test]
    fn zero_constraint_row_is_reported() {
        let a = CsrMatrix::identity(3);
        let mut b = CooBuilder::new(2, 3);
        b.push(0, 1, 1.0);
        // row 1 left empty
        match saddle_solve(&a, &b.build(), &[1.0, 0.0]) {
            Err(Error::RankDeficientConstraint { row: 1 }) => {}
            other => panic!("expected rank-deficiency on row 1, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_constraint_rows_are_reported() {
        let a = CsrMatrix::identity(3);
        let mut b = CooBuilder::new(2, 3);
        b.push(0, 0, 1.0);
        b.push(0, 1, 1.0);
        b.push(1, 0, 1.0);
        b.push(1, 1, 1.0);
        match saddle_solve(&a, &b.build(), &[1.0, 1.0]) {
            Err(Error::RankDeficientConstraint { .. }) => {}
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn random_kkt_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(99);
        let n = 40;
        let m = 6;
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if rng.random_range(0.0..1.0) < 0.2 {
                    dense[(i, j)] = rng.random_range(-1.0..1.0);
                }
            }
        }
        let spd = &dense * dense.transpose() + DMatrix::identity(n, n) * (n as f64 * 0.5);
        let a = CsrMatrix::from_dense(&spd);
        let mut bcoo = CooBuilder::new(m, n);
        for r in 0..m {
            for c in 0..n {
                if rng.random_range(0.0..1.0) < 0.3 {
                    bcoo.push(r, c, rng.random_range(-1.0..1.0));
                }
            }
        }
        let b = bcoo.build();
        let g: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
        let schur = saddle_solve(&a, &b, &g).unwrap();
        let dense_sol = dense_kkt_solve(&a, &b, &g).unwrap();
        for i in 0..n {
            assert!(
                (schur.primal[i] - dense_sol.primal[i]).abs() < 1e-8,
                "primal mismatch at {i}: {} vs {}",
                schur.primal[i],
                dense_sol.primal[i]
            );
        }
        assert!(kkt_residual_norm(&a, &b, &g, &schur) < 1e-8);
    }
}
