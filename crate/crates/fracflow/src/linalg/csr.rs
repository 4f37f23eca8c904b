//! Compressed-row sparse matrix and its COO assembly builder.

use nalgebra::DMatrix;

/// Sparse matrix in compressed row storage.
///
/// Invariants: column indices sorted and unique per row, no explicit zeros
/// after `CooBuilder::build`.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    data: Vec<f64>,
}

/// Triplet accumulator. Duplicate entries are summed in push order at
/// `build`, so symmetric pushes produce bit-exactly symmetric matrices.
#[derive(Debug, Clone)]
pub struct CooBuilder {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl CooBuilder {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        CooBuilder { nrows, ncols, entries: Vec::new() }
    }

    pub fn with_capacity(nrows: usize, ncols: usize, cap: usize) -> Self {
        CooBuilder { nrows, ncols, entries: Vec::with_capacity(cap) }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        self.entries.push((row, col, value));
    }

    /// Finalize into CSR: sort, sum duplicates, drop exact zeros.
    pub fn build(mut self) -> CsrMatrix {
        // Stable sort keeps push order among duplicates, which keeps
        // summation order identical for (i,j) and (j,i) pairs.
        self.entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut data: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut it = self.entries.into_iter().peekable();
        for row in 0..self.nrows {
            while let Some(&(r, c, _)) = it.peek() {
                if r != row {
                    break;
                }
                let mut sum = 0.0;
                while let Some(&(r2, c2, v)) = it.peek() {
                    if r2 != row || c2 != c {
                        break;
                    }
                    sum += v;
                    it.next();
                }
                if sum != 0.0 {
                    indices.push(c);
                    data.push(sum);
                }
            }
            indptr[row + 1] = indices.len();
        }
        CsrMatrix { nrows: self.nrows, ncols: self.ncols, indptr, indices, data }
    }
}

impl CsrMatrix {
    pub fn from_parts(
        nrows: usize,
        ncols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        data: Vec<f64>,
    ) -> Self {
        assert_eq!(indptr.len(), nrows + 1);
        assert_eq!(indices.len(), data.len());
        assert_eq!(*indptr.last().unwrap(), indices.len());
        CsrMatrix { nrows, ncols, indptr, indices, data }
    }

    pub fn identity(n: usize) -> Self {
        let mut coo = CooBuilder::new(n, n);
        for i in 0..n {
            coo.push(i, i, 1.0);
        }
        coo.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn is_square(&self) -> bool {
        self.nrows == self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.data.len()
    }

    pub fn indptr(&self) -> &[usize] {
        &self.indptr
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Column indices and values of one row.
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let range = self.indptr[r]..self.indptr[r + 1];
        (&self.indices[range.clone()], &self.data[range])
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let (cols, vals) = self.row(r);
        match cols.binary_search(&c) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        let mut y = vec![0.0; self.nrows];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            let mut s = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                s += v * x[j];
            }
            y[i] = s;
        }
        y
    }

    /// yᵀ = xᵀ A, i.e. Aᵀ x, without forming the transpose.
    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.nrows);
        let mut y = vec![0.0; self.ncols];
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                y[j] += v * x[i];
            }
        }
        y
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut counts = vec![0usize; self.ncols + 1];
        for &c in &self.indices {
            counts[c + 1] += 1;
        }
        for k in 0..self.ncols {
            counts[k + 1] += counts[k];
        }
        let indptr = counts.clone();
        let mut indices = vec![0usize; self.nnz()];
        let mut data = vec![0.0; self.nnz()];
        let mut next = counts;
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                let slot = next[c];
                indices[slot] = r;
                data[slot] = v;
                next[c] += 1;
            }
        }
        CsrMatrix { nrows: self.ncols, ncols: self.nrows, indptr, indices, data }
    }

    /// Entry-wise sum; keeps exact values, drops entries that cancel to 0.
    pub fn add(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut coo = CooBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + other.nnz());
        for m in [self, other] {
            for r in 0..m.nrows {
                let (cols, vals) = m.row(r);
                for (&c, &v) in cols.iter().zip(vals) {
                    coo.push(r, c, v);
                }
            }
        }
        coo.build()
    }

    pub fn scale(&self, factor: f64) -> CsrMatrix {
        let mut out = self.clone();
        for v in &mut out.data {
            *v *= factor;
        }
        out
    }

    /// `(A + Aᵀ)/2`, used to symmetrize round-off after triple products.
    pub fn symmetrized(&self) -> CsrMatrix {
        assert!(self.is_square());
        let t = self.transpose();
        self.scale(0.5).add(&t.scale(0.5))
    }

    /// A + diag(d).
    pub fn add_diagonal(&self, d: &[f64]) -> CsrMatrix {
        assert!(self.is_square());
        assert_eq!(d.len(), self.nrows);
        let mut coo = CooBuilder::with_capacity(self.nrows, self.ncols, self.nnz() + d.len());
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                coo.push(r, c, v);
            }
        }
        for (i, &v) in d.iter().enumerate() {
            coo.push(i, i, v);
        }
        coo.build()
    }

    /// Principal submatrix on `keep` (sorted global indices): rows and
    /// columns restricted, reindexed by position in `keep`.
    pub fn principal_submatrix(&self, keep: &[usize]) -> CsrMatrix {
        assert!(self.is_square());
        debug_assert!(keep.windows(2).all(|w| w[0] < w[1]));
        let mut local = vec![usize::MAX; self.nrows];
        for (l, &g) in keep.iter().enumerate() {
            local[g] = l;
        }
        let mut coo = CooBuilder::new(keep.len(), keep.len());
        for (li, &gi) in keep.iter().enumerate() {
            let (cols, vals) = self.row(gi);
            for (&c, &v) in cols.iter().zip(vals) {
                let lj = local[c];
                if lj != usize::MAX {
                    coo.push(li, lj, v);
                }
            }
        }
        coo.build()
    }

    /// Sparse matrix product `self * other`.
    pub fn spgemm(&self, other: &CsrMatrix) -> CsrMatrix {
        assert_eq!(self.ncols, other.nrows);
        let n_out = other.ncols;
        let mut acc = vec![0.0f64; n_out];
        let mut touched: Vec<usize> = Vec::new();
        let mut mark = vec![false; n_out];
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::new();
        let mut data = Vec::new();
        for i in 0..self.nrows {
            let (cols, vals) = self.row(i);
            for (&k, &v) in cols.iter().zip(vals) {
                let (bcols, bvals) = other.row(k);
                for (&j, &bv) in bcols.iter().zip(bvals) {
                    if !mark[j] {
                        mark[j] = true;
                        touched.push(j);
                    }
                    acc[j] += v * bv;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j] != 0.0 {
                    indices.push(j);
                    data.push(acc[j]);
                }
                acc[j] = 0.0;
                mark[j] = false;
            }
            touched.clear();
            indptr[i + 1] = indices.len();
        }
        CsrMatrix { nrows: self.nrows, ncols: n_out, indptr, indices, data }
    }

    /// Row sums `A·1`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.nrows).map(|r| self.row(r).1.iter().sum()).collect()
    }

    /// Max absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.nrows)
            .map(|r| self.row(r).1.iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out[(r, c)] = v;
            }
        }
        out
    }

    pub fn from_dense(m: &DMatrix<f64>) -> CsrMatrix {
        let mut coo = CooBuilder::new(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                if m[(r, c)] != 0.0 {
                    coo.push(r, c, m[(r, c)]);
                }
            }
        }
        coo.build()
    }
}
