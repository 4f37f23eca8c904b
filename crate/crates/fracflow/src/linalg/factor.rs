//! Sparse symmetric positive definite factorization.
//!
//! Strategy: reverse Cuthill-McKee reordering to squeeze the envelope,
//! then an in-envelope (skyline) LDLᵀ. The grids this crate assembles are
//! structured with geometrically local couplings, so the RCM envelope
//! stays close to the grid bandwidth and the factorization is exact
//! (direct), deterministic, and reusable across time steps.

use super::CsrMatrix;
use crate::{Error, Result};

/// Reverse Cuthill-McKee ordering of the symmetric sparsity graph.
/// Returns `perm` with `perm[new] = old`. Deterministic: ties broken by
/// ascending degree, then ascending index.
pub fn rcm_order(a: &CsrMatrix) -> Vec<usize> {
    let n = a.nrows();
    let degree: Vec<usize> = (0..n).map(|i| a.row(i).0.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = std::collections::VecDeque::new();
    let mut neigh: Vec<usize> = Vec::new();

    // BFS from `start`, returning the last level reached.
    let bfs_far = |start: usize, a: &CsrMatrix| -> usize {
        let mut seen = vec![false; n];
        let mut q = std::collections::VecDeque::new();
        seen[start] = true;
        q.push_back(start);
        let mut last = start;
        while let Some(u) = q.pop_front() {
            last = u;
            let mut next: Vec<usize> = a.row(u).0.iter().copied().filter(|&v| v != u && !seen[v]).collect();
            next.sort_by_key(|&v| (degree[v], v));
            for v in next {
                if !seen[v] {
                    seen[v] = true;
                    q.push_back(v);
                }
            }
        }
        last
    };

    for seed in 0..n {
        if visited[seed] {
            continue;
        }
        // Pseudo-peripheral start: two BFS sweeps from the component seed.
        let far = bfs_far(seed, a);
        let start = if visited[far] { seed } else { bfs_far(far, a) };
        let start = if visited[start] { seed } else { start };

        visited[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            neigh.clear();
            neigh.extend(a.row(u).0.iter().copied().filter(|&v| v != u && !visited[v]));
            neigh.sort_by_key(|&v| (degree[v], v));
            for &v in &neigh {
                visited[v] = true;
                queue.push_back(v);
            }
        }
    }
    order.reverse();
    order
}

/// LDLᵀ factorization of a sparse SPD matrix within the RCM envelope.
#[derive(Debug)]
pub struct SpdFactor {
    n: usize,
    /// perm[new] = old
    perm: Vec<usize>,
    /// iperm[old] = new
    iperm: Vec<usize>,
    /// first envelope column of each (permuted) row
    first: Vec<usize>,
    /// start of each row's strictly-lower envelope in `low`
    ptr: Vec<usize>,
    low: Vec<f64>,
    diag: Vec<f64>,
}

impl SpdFactor {
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        assert!(a.is_square(), "SpdFactor needs a square matrix");
        let n = a.nrows();
        let perm = rcm_order(a);
        let mut iperm = vec![0usize; n];
        for (new, &old) in perm.iter().enumerate() {
            iperm[old] = new;
        }

        // Envelope: first[i] = min permuted column connected to row i.
        let mut first: Vec<usize> = (0..n).collect();
        for r in 0..n {
            let (cols, _) = a.row(r);
            let pr = iperm[r];
            for &c in cols {
                let pc = iperm[c];
                let (hi, lo) = if pr > pc { (pr, pc) } else { (pc, pr) };
                if lo < first[hi] {
                    first[hi] = lo;
                }
            }
        }
        let mut ptr = vec![0usize; n + 1];
        for i in 0..n {
            ptr[i + 1] = ptr[i] + (i - first[i]);
        }
        let mut low = vec![0.0f64; ptr[n]];
        let mut diag = vec![0.0f64; n];

        // Scatter the lower triangle of the permuted matrix.
        for r in 0..n {
            let (cols, vals) = a.row(r);
            let pr = iperm[r];
            for (&c, &v) in cols.iter().zip(vals) {
                let pc = iperm[c];
                if pr == pc {
                    diag[pr] = v;
                } else if pc < pr {
                    low[ptr[pr] + (pc - first[pr])] = v;
                }
                // upper triangle entries are the mirror of lower ones
            }
        }

        // In-place envelope LDLᵀ.
        for i in 0..n {
            let fi = first[i];
            for j in fi..i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = low[ptr[i] + (j - fi)];
                for k in lo..j {
                    s -= low[ptr[i] + (k - fi)] * diag[k] * low[ptr[j] + (k - fj)];
                }
                if diag[j] == 0.0 {
                    return Err(Error::NotPositiveDefinite { pivot: j, value: 0.0 });
                }
                low[ptr[i] + (j - fi)] = s / diag[j];
            }
            let mut d = diag[i];
            for k in fi..i {
                let l = low[ptr[i] + (k - fi)];
                d -= l * l * diag[k];
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { pivot: i, value: d });
            }
            diag[i] = d;
        }

        Ok(SpdFactor { n, perm, iperm, first, ptr, low, diag })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let mut y: Vec<f64> = (0..self.n).map(|i| b[self.perm[i]]).collect();
        // L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let mut s = y[i];
            for k in fi..i {
                s -= self.low[self.ptr[i] + (k - fi)] * y[k];
            }
            y[i] = s;
        }
        // D z = y
        for i in 0..self.n {
            y[i] /= self.diag[i];
        }
        // Lᵀ x = z
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let yi = y[i];
            for k in fi..i {
                y[k] -= self.low[self.ptr[i] + (k - fi)] * yi;
            }
        }
        let mut x = vec![0.0; self.n];
        for i in 0..self.n {
            x[self.perm[i]] = y[i];
        }
        x
    }

    /// Solve with one step of iterative refinement against `a`.
    pub fn refined_solve(&self, a: &CsrMatrix, b: &[f64]) -> Vec<f64> {
        let mut x = self.solve(b);
        let ax = a.matvec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
        let dx = self.solve(&r);
        for (xi, di) in x.iter_mut().zip(&dx) {
            *xi += di;
        }
        x
    }
}

/// One-shot SPD solve with a relative-residual contract of 1e-10.
pub fn spd_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let factor = SpdFactor::new(a)?;
    let x = factor.refined_solve(a, b);
    let bnorm = norm2(b);
    if bnorm > 0.0 {
        let ax = a.matvec(&x);
        let rnorm = norm2(&b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect::<Vec<_>>());
        let rel = rnorm / bnorm;
        if rel > 1e-10 {
            return Err(Error::SolverTolerance { residual: rel, tolerance: 1e-10 });
        }
    }
    Ok(x)
}

pub(crate) fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
