//! Dense symmetric generalized eigensolver for pencils `A Ψ = λ S Ψ`
//! with `S` a positive diagonal.

use crate::{Error, Result};
use nalgebra::DMatrix;

/// The `m` smallest eigenpairs of a symmetric definite pencil.
///
/// `vectors` holds one eigenvector per column, S-orthonormal:
/// `ΨⱼᵀSΨₖ = δⱼₖ`.
#[derive(Debug, Clone)]
pub struct GenEigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

/// Solve `A Ψ = λ S Ψ` through the equivalent standard symmetric problem
/// `S^{-1/2} A S^{-1/2} u = λ u`, returning the `m` smallest eigenpairs in
/// ascending order. Ties are broken by lexicographic comparison of the
/// eigenvector entries and the sign is normalized, so results are
/// reproducible across runs and platforms.
pub fn sym_gen_eig(a: &DMatrix<f64>, s_diag: &[f64], m: usize) -> Result<GenEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::ShapeMismatch { expected: (n, n), got: (a.nrows(), a.ncols()) });
    }
    if s_diag.len() != n {
        return Err(Error::ShapeMismatch { expected: (n, 1), got: (s_diag.len(), 1) });
    }
    for (i, &s) in s_diag.iter().enumerate() {
        if s <= 0.0 || !s.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: i, value: s });
        }
    }
    let m_eff = if m > n {
        log::warn!("requested {m} eigenpairs from a dimension-{n} pencil; clamping to {n}");
        n
    } else {
        m
    };

    let sqrt_inv: Vec<f64> = s_diag.iter().map(|&s| 1.0 / s.sqrt()).collect();
    let mut c = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            c[(i, j)] = a[(i, j)] * sqrt_inv[i] * sqrt_inv[j];
        }
    }
    // force exact symmetry before the eigensolver
    let c = (c.clone() + c.transpose()) * 0.5;
    let eig = c.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[i]
            .partial_cmp(&eig.eigenvalues[j])
            .unwrap()
            .then_with(|| lex_cmp(eig.eigenvectors.column(i), eig.eigenvectors.column(j)))
    });

    let mut values = Vec::with_capacity(m_eff);
    let mut vectors = DMatrix::zeros(n, m_eff);
    for (k, &idx) in order.iter().take(m_eff).enumerate() {
        values.push(eig.eigenvalues[idx]);
        let col = eig.eigenvectors.column(idx);
        // back-transform and normalize sign on the largest-magnitude entry
        let mut v: Vec<f64> = (0..n).map(|i| col[i] * sqrt_inv[i]).collect();
        let mut pivot = 0;
        let mut best = 0.0;
        for (i, &vi) in v.iter().enumerate() {
            if vi.abs() > best {
                best = vi.abs();
                pivot = i;
            }
        }
        if v[pivot] < 0.0 {
            for vi in &mut v {
                *vi = -*vi;
            }
        }
        for i in 0..n {
            vectors[(i, k)] = v[i];
        }
    }

    // Residual contract: ||A psi - lambda S psi|| small relative to the
    // pencil scale.
    let a_norm = a.abs().max();
    let s_norm = s_diag.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    for k in 0..m_eff {
        let psi = vectors.column(k);
        let mut rnorm2 = 0.0;
        let mut pnorm2 = 0.0;
        for i in 0..n {
            let mut api = 0.0;
            for j in 0..n {
                api += a[(i, j)] * psi[j];
            }
            let r = api - values[k] * s_diag[i] * psi[i];
            rnorm2 += r * r;
            pnorm2 += psi[i] * psi[i];
        }
        let scale = (a_norm + values[k].abs() * s_norm) * pnorm2.sqrt();
        if rnorm2.sqrt() > 1e-8 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::SolverTolerance {
                residual: rnorm2.sqrt(),
                tolerance: 1e-8 * scale,
            });
        }
    }

    Ok(GenEigen { values, vectors })
}

fn lex_cmp(
    a: nalgebra::DVectorView<'_, f64>,
    b: nalgebra::DVectorView<'_, f64>,
) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

/// Diagonally pivoted Cholesky rank detection for a PSD matrix.
///
/// Returns the retained row/column indices (ascending) whose pivots stay
/// above `tol_rel * max(initial diagonal)`. Deterministic: pivot ties go
/// to the lowest index.
pub fn pivoted_cholesky(mat: &DMatrix<f64>, tol_rel: f64) -> Vec<usize> {
    let n = mat.nrows();
    assert_eq!(n, mat.ncols());
    let mut work = mat.clone();
    let mut active: Vec<usize> = (0..n).collect();
    let mut kept = Vec::new();
    let threshold = tol_rel * (0..n).map(|i| mat[(i, i)]).fold(0.0f64, f64::max);
    for step in 0..n {
        // choose the largest remaining diagonal
        let mut best = step;
        let mut best_val = f64::NEG_INFINITY;
        for k in step..n {
            let d = work[(k, k)];
            if d > best_val {
                best_val = d;
                best = k;
            }
        }
        if best_val <= threshold {
            break;
        }
        work.swap_rows(step, best);
        work.swap_columns(step, best);
        active.swap(step, best);
        kept.push(active[step]);
        let d = work[(step, step)].sqrt();
        work[(step, step)] = d;
        for i in (step + 1)..n {
            work[(i, step)] /= d;
        }
        for j in (step + 1)..n {
            for i in j..n {
                let v = work[(i, step)] * work[(j, step)];
                work[(i, j)] -= v;
                if i != j {
                    work[(j, i)] -= v;
                }
            }
        }
    }
    kept.sort_unstable();
    kept
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_2x2_pencil() {
        // A = [[2,-1],[-1,2]], S = I  =>  lambda = {1, 3}
        let a = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]);
        let eig = sym_gen_eig(&a, &[1.0, 1.0], 2).unwrap();
        assert!((eig.values[0] - 1.0).abs() < 1e-12);
        assert!((eig.values[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn s_orthonormality() {
        let n = 12;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 2.0 + i as f64 * 0.1;
            if i + 1 < n {
                a[(i, i + 1)] = -1.0;
                a[(i + 1, i)] = -1.0;
            }
        }
        let s: Vec<f64> = (0..n).map(|i| 0.5 + (i % 3) as f64).collect();
        let eig = sym_gen_eig(&a, &s, 5).unwrap();
        for j in 0..5 {
            for k in 0..5 {
                let mut dot = 0.0;
                for i in 0..n {
                    dot += eig.vectors[(i, j)] * s[i] * eig.vectors[(i, k)];
                }
                let expect = if j == k { 1.0 } else { 0.0 };
                assert!((dot - expect).abs() < 1e-10, "S-orthonormality ({j},{k}): {dot}");
            }
        }
        // ascending order
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }

    #[test]
    fn psd_pencil_has_nonnegative_spectrum() {
        let n = 10;
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            // graph Laplacian of a path: PSD with a zero eigenvalue
            let mut d = 0.0;
            if i > 0 {
                a[(i, i - 1)] = -1.0;
                d += 1.0;
            }
            if i + 1 < n {
                a[(i, i + 1)] = -1.0;
                d += 1.0;
            }
            a[(i, i)] = d;
        }
        let s = vec![2.0; n];
        let eig = sym_gen_eig(&a, &s, n).unwrap();
        let floor = -1e-10 * a.abs().max();
        assert!(eig.values.iter().all(|&l| l >= floor));
    }

    #[test]
    fn clamps_oversized_request() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0]);
        let eig = sym_gen_eig(&a, &[1.0, 1.0], 10).unwrap();
        assert_eq!(eig.values.len(), 2);
    }

    #[test]
    fn rejects_nonpositive_s() {
        let a = DMatrix::identity(2, 2);
        assert!(sym_gen_eig(&a, &[1.0, 0.0], 1).is_err());
    }

    #[test]
    fn pivoted_cholesky_detects_rank() {
        // rank-2 Gram matrix in dimension 4
        let b = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let g = &b * b.transpose();
        let kept = pivoted_cholesky(&g, 1e-10);
        assert_eq!(kept.len(), 2);
    }

    #[test]
    fn pivoted_cholesky_keeps_full_rank() {
        let mut g = DMatrix::identity(5, 5);
        g[(0, 1)] = 0.3;
        g[(1, 0)] = 0.3;
        let kept = pivoted_cholesky(&g, 1e-12);
        assert_eq!(kept, vec![0, 1, 2, 3, 4]);
    }
}
