//! Sparse and dense matrix kernels shared by the solver modules.
//!
//! Sparse matrices are compressed-row (CSR) with sorted, unique column
//! indices per row. Dense work is delegated to `nalgebra`.

mod csr;
mod eig;
mod factor;
mod saddle;

pub use csr::{CooBuilder, CsrMatrix};
pub use eig::{pivoted_cholesky, sym_gen_eig, GenEigen};
pub use factor::{spd_solve, SpdFactor};
pub use saddle::{dense_kkt_solve, saddle_solve, SaddleSolution, SchurSaddle};

/// Dense rectangular value block.
pub type DenseMatrix = nalgebra::DMatrix<f64>;
/// Dense column vector.
pub type DenseVector = nalgebra::DVector<f64>;

/// Galerkin triple product `R A Rᵀ`.
///
/// Round-off is symmetrized away with `(X + Xᵀ)/2`, so the output is
/// bit-exactly symmetric whenever `A` is symmetric.
pub fn triple_product(r: &CsrMatrix, a: &CsrMatrix) -> crate::Result<CsrMatrix> {
    if r.ncols() != a.nrows() || !a.is_square() {
        return Err(crate::Error::ShapeMismatch {
            expected: (r.ncols(), r.ncols()),
            got: (a.nrows(), a.ncols()),
        });
    }
    let ra = r.spgemm(a);
    let rt = r.transpose();
    let g = ra.spgemm(&rt);
    Ok(g.symmetrized())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn random_csr(rng: &mut StdRng, nrows: usize, ncols: usize, fill: f64) -> CsrMatrix {
        let mut coo = CooBuilder::new(nrows, ncols);
        for i in 0..nrows {
            for j in 0..ncols {
                if rng.random_range(0.0..1.0) < fill {
                    coo.push(i, j, rng.random_range(-1.0..1.0));
                }
            }
        }
        coo.build()
    }

    #[test]
    fn triple_product_identity_returns_a() {
        let mut rng = StdRng::seed_from_u64(7);
        let a = {
            let m = random_csr(&mut rng, 6, 6, 0.5);
            let t = m.transpose();
            m.add(&t) // symmetric
        };
        let mut eye = CooBuilder::new(6, 6);
        for i in 0..6 {
            eye.push(i, i, 1.0);
        }
        let g = triple_product(&eye.build(), &a).unwrap();
        let (ga, gd) = (g.to_dense(), a.to_dense());
        assert!((ga - gd).abs().max() < 1e-14);
    }

    #[test]
    fn triple_product_single_row_is_quadratic_form() {
        let mut coo = CooBuilder::new(2, 2);
        coo.push(0, 0, 2.0);
        coo.push(1, 1, 3.0);
        coo.push(0, 1, 1.0);
        coo.push(1, 0, 1.0);
        let a = coo.build();
        let mut r = CooBuilder::new(1, 2);
        r.push(0, 0, 1.0);
        r.push(0, 1, 2.0);
        let g = triple_product(&r.build(), &a).unwrap();
        // [1 2] A [1 2]ᵀ = 2 + 1*2*2 + 3*4 = 18
        assert!((g.get(0, 0) - 18.0).abs() < 1e-14);
    }

    #[test]
    fn triple_product_matches_dense_oracle() {
        let mut rng = StdRng::seed_from_u64(11);
        let a_raw = random_csr(&mut rng, 8, 8, 0.4);
        let a = a_raw.add(&a_raw.transpose());
        let r = random_csr(&mut rng, 5, 8, 0.5);
        let g = triple_product(&r, &a).unwrap().to_dense();
        let (rd, ad) = (r.to_dense(), a.to_dense());
        let oracle: DMatrix<f64> = &rd * ad * rd.transpose();
        assert!((g - oracle).abs().max() < 1e-12);
    }

    #[test]
    fn triple_product_output_exactly_symmetric() {
        let mut rng = StdRng::seed_from_u64(13);
        let a_raw = random_csr(&mut rng, 20, 20, 0.3);
        let a = a_raw.add(&a_raw.transpose());
        let r = random_csr(&mut rng, 9, 20, 0.4);
        let g = triple_product(&r, &a).unwrap();
        let gt = g.transpose();
        assert_eq!(g.to_dense(), gt.to_dense());
    }

    #[test]
    fn triple_product_rejects_shape_mismatch() {
        let a = CooBuilder::new(3, 3).build();
        let r = CooBuilder::new(2, 4).build();
        assert!(triple_product(&r, &a).is_err());
    }
}
