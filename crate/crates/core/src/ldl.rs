//! Sparse `L D L^T` factorization of symmetric diagonally dominant systems,
//! ordered by minimum degree.
//!
//! Low-treewidth graphs (trees, fractal and hierarchical models, road-like
//! meshes) factor with little fill, after which each right-hand side costs
//! two sparse triangular sweeps. Fill is capped so that graphs which do not
//! factor well fail fast instead of exhausting memory.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap};

use crate::error::{Error, Result};

/// Largest number of off-diagonal factor entries kept.
pub const FILL_CAP: usize = 20_000_000;

/// Right-hand sides processed together; blocks store the `LANES` values of
/// one unknown contiguously.
pub(crate) const LANES: usize = 4;

#[derive(Debug, Clone)]
pub(crate) struct SparseLdl {
    dim: usize,
    /// `order[k]` is the variable eliminated at step `k`.
    order: Vec<usize>,
    /// Inverse of `order`.
    position: Vec<usize>,
    col_ptr: Vec<usize>,
    /// Elimination step of each below-diagonal entry of column `k`.
    row_idx: Vec<usize>,
    values: Vec<f64>,
    d: Vec<f64>,
    /// The unshifted matrix in elimination order, for residuals: diagonal,
    /// then off-diagonal rows in CSR form.
    op_diag: Vec<f64>,
    op_ptr: Vec<usize>,
    op_idx: Vec<usize>,
    op_val: Vec<f64>,
}

impl SparseLdl {
    /// Factor the symmetric matrix with diagonal `diag` and off-diagonal
    /// entries `a_ij = a_ji = value` listed once per pair in `off`, after
    /// adding `shift.1` to diagonal entry `shift.0`. Residuals computed by
    /// [`SparseLdl::residual`] refer to the unshifted matrix.
    pub(crate) fn factor(
        diag: &[f64],
        off: &[(usize, usize, f64)],
        shift: Option<(usize, f64)>,
    ) -> Result<Self> {
        let dim = diag.len();
        let mut rows: Vec<HashMap<usize, f64>> = vec![HashMap::new(); dim];
        for &(i, j, v) in off {
            *rows[i].entry(j).or_insert(0.0) += v;
            *rows[j].entry(i).or_insert(0.0) += v;
        }
        let op_diag_natural = diag.to_vec();
        let mut diag = diag.to_vec();
        if let Some((r, amount)) = shift {
            diag[r] += amount;
        }
        let mut heap: BinaryHeap<Reverse<(usize, usize)>> =
            (0..dim).map(|v| Reverse((rows[v].len(), v))).collect();
        let mut eliminated = vec![false; dim];
        let mut order = Vec::with_capacity(dim);
        let mut columns: Vec<Vec<(usize, f64)>> = Vec::with_capacity(dim);
        let mut d = Vec::with_capacity(dim);
        let mut nnz = 0usize;

        while let Some(Reverse((deg, v))) = heap.pop() {
            if eliminated[v] || deg != rows[v].len() {
                continue;
            }
            let pivot = diag[v];
            if !(pivot > 0.0) || !pivot.is_finite() {
                return Err(Error::Numerical(format!(
                    "nonpositive pivot {pivot} in sparse factorization"
                )));
            }
            let mut nbrs: Vec<(usize, f64)> = std::mem::take(&mut rows[v]).into_iter().collect();
            nbrs.sort_unstable_by_key(|e| e.0);
            nnz += nbrs.len();
            if nnz > FILL_CAP {
                return Err(Error::CapExceeded {
                    what: "sparse factor entries",
                    requested: nnz as u128,
                    limit: FILL_CAP as u128,
                    hint: "; the graph fills in too much, use the conjugate-gradient method",
                });
            }
            for (a, &(u, avu)) in nbrs.iter().enumerate() {
                rows[u].remove(&v);
                diag[u] -= avu * avu / pivot;
                for &(w, avw) in &nbrs[a + 1..] {
                    let update = avu * avw / pivot;
                    *rows[u].entry(w).or_insert(0.0) -= update;
                    *rows[w].entry(u).or_insert(0.0) -= update;
                }
            }
            for &(u, _) in &nbrs {
                heap.push(Reverse((rows[u].len(), u)));
            }
            eliminated[v] = true;
            order.push(v);
            d.push(pivot);
            columns.push(nbrs.into_iter().map(|(u, a)| (u, a / pivot)).collect());
        }

        let mut step = vec![0usize; dim];
        for (k, &v) in order.iter().enumerate() {
            step[v] = k;
        }
        let mut op_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for &(i, j, v) in off {
            op_rows[step[i]].push((step[j], v));
            op_rows[step[j]].push((step[i], v));
        }
        let mut op_ptr = Vec::with_capacity(dim + 1);
        let mut op_idx = Vec::with_capacity(2 * off.len());
        let mut op_val = Vec::with_capacity(2 * off.len());
        op_ptr.push(0);
        for mut row in op_rows {
            row.sort_unstable_by_key(|e| e.0);
            for (j, v) in row {
                op_idx.push(j);
                op_val.push(v);
            }
            op_ptr.push(op_idx.len());
        }
        let op_diag = order.iter().map(|&v| op_diag_natural[v]).collect();
        let mut col_ptr = Vec::with_capacity(dim + 1);
        let mut row_idx = Vec::with_capacity(nnz);
        let mut values = Vec::with_capacity(nnz);
        col_ptr.push(0);
        for col in columns {
            let mut col: Vec<(usize, f64)> = col.into_iter().map(|(u, l)| (step[u], l)).collect();
            col.sort_unstable_by_key(|e| e.0);
            for (i, l) in col {
                row_idx.push(i);
                values.push(l);
            }
            col_ptr.push(row_idx.len());
        }
        Ok(Self {
            dim,
            order,
            position: step,
            col_ptr,
            row_idx,
            values,
            d,
            op_diag,
            op_ptr,
            op_idx,
            op_val,
        })
    }

    /// `order()[k]` is the variable stored at position `k` of a block.
    pub(crate) fn order(&self) -> &[usize] {
        &self.order
    }

    /// Inverse of [`SparseLdl::order`].
    pub(crate) fn position(&self) -> &[usize] {
        &self.position
    }

    /// Off-diagonal entries of the factor.
    #[cfg(test)]
    pub(crate) fn nnz(&self) -> usize {
        self.row_idx.len()
    }

    /// Solve for each column of the column-major `dim x cols` block `b`,
    /// in place.
    pub(crate) fn solve_block(&self, b: &mut [f64]) {
        let n = self.dim;
        if n == 0 {
            return;
        }
        let mut work = vec![0.0; n * LANES];
        for cols in b.chunks_mut(n * LANES) {
            let lanes = cols.len() / n;
            // Interleave so that the lanes of one unknown are contiguous.
            for (c, col) in cols.chunks(n).enumerate() {
                for (k, &v) in self.order.iter().enumerate() {
                    work[k * LANES + c] = col[v];
                }
            }
            self.sweep(&mut work, lanes);
            for (c, col) in cols.chunks_mut(n).enumerate() {
                for (k, &v) in self.order.iter().enumerate() {
                    col[v] = work[k * LANES + c];
                }
            }
        }
    }

    /// Solve in place for the first `lanes` columns of an interleaved block
    /// (`y[k * LANES + c]` is unknown `order()[k]` of column `c`).
    pub(crate) fn sweep(&self, y: &mut [f64], lanes: usize) {
        let n = self.dim;
        let mut yk = [0.0; LANES];
        for k in 0..n {
            yk[..lanes].copy_from_slice(&y[k * LANES..k * LANES + lanes]);
            for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                let (i, l) = (self.row_idx[p], self.values[p]);
                let yi = &mut y[i * LANES..i * LANES + lanes];
                for (a, b) in yi.iter_mut().zip(&yk[..lanes]) {
                    *a -= l * b;
                }
            }
        }
        for k in 0..n {
            let inv = 1.0 / self.d[k];
            for a in &mut y[k * LANES..k * LANES + lanes] {
                *a *= inv;
            }
        }
        for k in (0..n).rev() {
            yk[..lanes].copy_from_slice(&y[k * LANES..k * LANES + lanes]);
            for p in self.col_ptr[k]..self.col_ptr[k + 1] {
                let (i, l) = (self.row_idx[p], self.values[p]);
                let yi = &y[i * LANES..i * LANES + lanes];
                for (a, b) in yk[..lanes].iter_mut().zip(yi) {
                    *a -= l * b;
                }
            }
            y[k * LANES..k * LANES + lanes].copy_from_slice(&yk[..lanes]);
        }
    }
    /// `b - A x` for interleaved blocks, written to `out`.
    pub(crate) fn residual(&self, b: &[f64], x: &[f64], lanes: usize, out: &mut [f64]) {
        for k in 0..self.dim {
            let base = k * LANES;
            let dk = self.op_diag[k];
            for c in 0..lanes {
                out[base + c] = b[base + c] - dk * x[base + c];
            }
            for p in self.op_ptr[k]..self.op_ptr[k + 1] {
                let (j, v) = (self.op_idx[p], self.op_val[p]);
                for c in 0..lanes {
                    out[base + c] -= v * x[j * LANES + c];
                }
            }
        }
    }
}
