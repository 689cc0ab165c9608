//! Solvers for Laplacian and grounded-Laplacian systems.
//!
//! Every solve is bound to a relative energy-norm contract:
//!
//! ```text
//! ||x - A^+ b||_A <= delta * ||A^+ b||_A
//! ```
//!
//! The energy norm cannot be observed while iterating, so the iteration
//! monitors the Euclidean residual `r = b - A x`. Since
//! `||x - A^+ b||_A^2 = r^T A^+ r <= ||r||^2 / lambda_lo` and
//! `||A^+ b||_A^2 = b^T A^+ b >= ||b||^2 / lambda_hi`, stopping once
//! `||r|| <= delta * sqrt(lambda_lo / lambda_hi) * ||b||` certifies the
//! contract. `lambda_lo` and `lambda_hi` are spectral bounds that depend only
//! on `n`, the weight range and the maximum degree. This certified rule is
//! [`ToleranceMode::Strict`]. [`ToleranceMode::Practical`] stops on the plain
//! relative residual `||r|| <= delta * ||b||`, which is far cheaper on large
//! graphs and empirically well inside the contract.

use std::sync::OnceLock;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GroundedSystem, WeightedGraph};
use crate::ldl::{SparseLdl, LANES};

/// Right-hand sides per batch in [`SddSolver::solve_fold`].
const FOLD_BATCH: usize = 256;

/// Refinement steps a direct solve may take to meet its threshold.
const REFINEMENT_STEPS: usize = 3;

/// Largest system the dense direct method will factor.
pub const DENSE_SOLVE_CAP: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceMode {
    /// Certified stopping rule; callers derive `delta` from the worst-case
    /// formulas of the estimators.
    Strict,
    /// Relative-residual stopping; callers use [`practical_delta`].
    #[default]
    Practical,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preconditioner {
    #[default]
    Jacobi,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    /// Preconditioned conjugate gradient; matrix-free, O(m) per iteration.
    #[default]
    ConjugateGradient,
    /// One dense Cholesky factorization, after which every right-hand side
    /// costs a dense product. Worth it when thousands of right-hand sides
    /// share one small system. Limited to [`DENSE_SOLVE_CAP`] unknowns.
    DenseCholesky,
    /// Sparse `L D L^T` factorization in minimum-degree order, after which
    /// every right-hand side costs two sparse triangular sweeps. Very fast on
    /// low-treewidth graphs; refused when the factor would exceed
    /// [`crate::ldl::FILL_CAP`] entries.
    SparseCholesky,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative energy-norm tolerance, in `(0, 1)`.
    pub delta: f64,
    pub max_iterations: usize,
    pub mode: ToleranceMode,
    pub preconditioner: Preconditioner,
    pub method: SolveMethod,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            delta: 1e-8,
            max_iterations: 100_000,
            mode: ToleranceMode::Practical,
            preconditioner: Preconditioner::Jacobi,
            method: SolveMethod::ConjugateGradient,
        }
    }
}

impl SolverOptions {
    pub fn strict() -> Self {
        Self {
            mode: ToleranceMode::Strict,
            ..Self::default()
        }
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_method(mut self, method: SolveMethod) -> Self {
        self.method = method;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "solver delta must lie in (0, 1), got {}",
                self.delta
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// The tolerance used in practical mode: `epsilon / (10 n)`, floored at 1e-10.
pub fn practical_delta(epsilon: f64, n: usize) -> f64 {
    (epsilon / (10.0 * n.max(1) as f64)).max(1e-10)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// Euclidean norm of the true residual `b - A x` at exit.
    pub residual_2norm: f64,
    /// Residual norm below which the solve counts as converged.
    pub residual_threshold: f64,
    pub converged: bool,
    pub effective_delta: f64,
    pub mode: ToleranceMode,
}

#[derive(Debug, Clone, Copy)]
enum Operator<'a> {
    Laplacian(&'a WeightedGraph),
    Grounded(&'a GroundedSystem<'a>),
}

impl Operator<'_> {
    fn dim(&self) -> usize {
        match self {
            Operator::Laplacian(g) => g.n(),
            Operator::Grounded(s) => s.dim(),
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        match self {
            Operator::Laplacian(g) => g.laplacian_mul_into(x, y),
            Operator::Grounded(s) => s.mul_into(x, y),
        }
    }

    fn diagonal(&self) -> &[f64] {
        match self {
            Operator::Laplacian(g) => g.degrees(),
            Operator::Grounded(s) => s.diagonal(),
        }
    }

    fn dense(&self) -> DMatrix<f64> {
        match self {
            Operator::Laplacian(g) => g.laplacian_dense(),
            Operator::Grounded(s) => s.to_dense(),
        }
    }

    /// Sparse factorization of the operator. A Laplacian gets 1 added to the
    /// diagonal entry of a max-degree vertex `r`, which makes it definite;
    /// for `b` orthogonal to the ones vector the modified system is solved by
    /// `L^+ b - (L^+ b)_r 1`, so projecting out the mean recovers `L^+ b`.
    fn sparse(&self) -> Result<SparseLdl> {
        match self {
            Operator::Laplacian(g) => {
                let degrees = g.degrees();
                let r = (0..g.n())
                    .max_by(|&a, &b| degrees[a].total_cmp(&degrees[b]).then(b.cmp(&a)))
                    .expect("graph is nonempty");
                let off: Vec<_> = g.edges().iter().map(|&(u, v, w)| (u, v, -w)).collect();
                SparseLdl::factor(degrees, &off, Some((r, 1.0)))
            }
            Operator::Grounded(s) => {
                let off: Vec<_> = s
                    .interior_edges()
                    .into_iter()
                    .map(|(u, v, w)| (u, v, -w))
                    .collect();
                SparseLdl::factor(s.diagonal(), &off, None)
            }
        }
    }
}

/// A solver bound to one system matrix.
///
/// Reusable across right-hand sides; the dense method factors once, lazily,
/// on first use.
#[derive(Debug)]
pub struct SddSolver<'a> {
    op: Operator<'a>,
    opts: SolverOptions,
    /// `sqrt(lambda_lo / lambda_hi)`.
    conversion: f64,
    inverse: OnceLock<std::result::Result<DMatrix<f64>, String>>,
    factor: Option<SparseLdl>,
}

impl<'a> SddSolver<'a> {
    pub fn laplacian(graph: &'a WeightedGraph, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        graph.require_connected()?;
        let n = graph.n() as f64;
        let conversion = if graph.n() < 2 {
            1.0
        } else {
            let hi = (n * graph.w_max()).min(2.0 * graph.max_degree());
            let lo = 4.0 * graph.w_min() / (n * (n - 1.0));
            (lo / hi).sqrt()
        };
        Self::with_operator(Operator::Laplacian(graph), opts, conversion)
    }

    pub fn grounded(system: &'a GroundedSystem<'a>, opts: SolverOptions) -> Result<Self> {
        opts.validate()?;
        let graph = system.graph();
        graph.require_connected()?;
        let n = graph.n() as f64;
        let hi = (n * graph.w_max()).min(2.0 * system.max_diagonal());
        let lo = graph.w_min() / (n * n);
        Self::with_operator(Operator::Grounded(system), opts, (lo / hi).sqrt())
    }

    fn with_operator(op: Operator<'a>, opts: SolverOptions, conversion: f64) -> Result<Self> {
        if opts.method == SolveMethod::DenseCholesky && op.dim() > DENSE_SOLVE_CAP {
            return Err(Error::CapExceeded {
                what: "dense solve dimension",
                requested: op.dim() as u128,
                limit: DENSE_SOLVE_CAP as u128,
                hint: "; use the conjugate-gradient method",
            });
        }
        let factor = match opts.method {
            SolveMethod::SparseCholesky => Some(op.sparse()?),
            _ => None,
        };
        Ok(Self {
            op,
            opts,
            conversion,
            inverse: OnceLock::new(),
            factor,
        })
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }

    pub fn options(&self) -> &SolverOptions {
        &self.opts
    }

    fn threshold(&self, b_norm: f64) -> f64 {
        match self.opts.mode {
            ToleranceMode::Strict => self.opts.delta * self.conversion * b_norm,
            ToleranceMode::Practical => self.opts.delta * b_norm,
        }
    }

    fn check_rhs(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut b = b.to_vec();
        self.check_rhs_in_place(&mut b)?;
        Ok(b)
    }

    fn check_rhs_in_place(&self, b: &mut [f64]) -> Result<()> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: b.len(),
            });
        }
        if let Operator::Laplacian(_) = self.op {
            let sum: f64 = b.iter().sum();
            let l1: f64 = b.iter().map(|v| v.abs()).sum();
            if sum.abs() > 1e-9 * l1.max(1.0) {
                return Err(Error::NotOrthogonal { sum });
            }
            project_out_mean(b);
        }
        Ok(())
    }

    /// Solve `A x = b`. For Laplacians `b` must sum to zero (within 1e-9
    /// relative to its 1-norm) and the returned `x` sums to zero.
    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let b = self.check_rhs(b)?;
        match self.opts.method {
            SolveMethod::ConjugateGradient => self.pcg(&b),
            SolveMethod::DenseCholesky | SolveMethod::SparseCholesky => {
                let x = self.direct(&DMatrix::from_column_slice(b.len(), 1, &b))?;
                self.finish_direct(&b, x.data.into())
            }
        }
    }

    /// Apply the factored inverse to every column.
    fn direct(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        match (&self.factor, self.opts.method) {
            (Some(ldl), _) => {
                let mut x = b.clone();
                let n = self.dim().max(1);
                let block = n * 64;
                x.as_mut_slice()
                    .par_chunks_mut(block)
                    .for_each(|cols| ldl.solve_block(cols));
                Ok(x)
            }
            (None, SolveMethod::DenseCholesky) => Ok(self.dense_inverse()? * b),
            _ => unreachable!("direct solve without a factorization"),
        }
    }

    /// Solve for every column of `rhs` (one right-hand side per column).
    /// Column solves run in parallel; results keep the input order.
    pub fn solve_columns(&self, rhs: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<SolveReport>)> {
        let b = self.checked_columns(rhs)?;
        match self.opts.method {
            SolveMethod::ConjugateGradient => {
                let n = self.dim();
                let solved: Vec<(Vec<f64>, SolveReport)> = b
                    .as_slice()
                    .par_chunks(n.max(1))
                    .map(|col| self.pcg(col))
                    .collect::<Result<_>>()?;
                let mut out = DMatrix::zeros(n, rhs.ncols());
                let mut reports = Vec::with_capacity(solved.len());
                for (j, (x, rep)) in solved.into_iter().enumerate() {
                    out.column_mut(j).copy_from_slice(&x);
                    reports.push(rep);
                }
                Ok((out, reports))
            }
            SolveMethod::DenseCholesky | SolveMethod::SparseCholesky => {
                let x = self.direct(&b)?;
                self.certify_columns(&b, x)
            }
        }
    }

    /// Solve `cols` right-hand sides and fold every solution into `acc`.
    ///
    /// Column `j` is written by `fill(j, w)` through a [`ColumnWriter`] over
    /// a zeroed vector. Columns are
    /// processed in batches, so memory stays proportional to the batch size;
    /// the result does not depend on thread scheduling.
    pub(crate) fn solve_fold<F>(
        &self,
        cols: usize,
        fill: F,
        fold: Fold<'_>,
        acc: &mut [f64],
    ) -> Result<Vec<SolveReport>>
    where
        F: Fn(usize, &mut ColumnWriter<'_>) + Sync,
    {
        let n = self.dim();
        let mut reports = Vec::with_capacity(cols);
        if let Some(ldl) = &self.factor {
            let blocks = cols.div_ceil(LANES);
            let per_batch = FOLD_BATCH / LANES;
            for first in (0..blocks).step_by(per_batch) {
                let last = (first + per_batch).min(blocks);
                let parts: Vec<(Vec<f64>, Vec<SolveReport>)> = (first..last)
                    .into_par_iter()
                    .map(|blk| self.sparse_block(ldl, blk, cols, &fill, fold))
                    .collect::<Result<_>>()?;
                for (part, reps) in parts {
                    for (a, p) in acc.iter_mut().zip(&part) {
                        *a += p;
                    }
                    reports.extend(reps);
                }
            }
            return Ok(reports);
        }
        for start in (0..cols).step_by(FOLD_BATCH) {
            let len = FOLD_BATCH.min(cols - start);
            let mut rhs = DMatrix::zeros(n, len);
            rhs.as_mut_slice()
                .par_chunks_mut(n.max(1))
                .enumerate()
                .for_each(|(c, col)| {
                    fill(
                        start + c,
                        &mut ColumnWriter {
                            data: col,
                            position: None,
                            stride: 1,
                            lane: 0,
                        },
                    )
                });
            let (sol, reps) = self.solve_columns(&rhs)?;
            for col in sol.column_iter() {
                fold.apply(col.as_slice(), acc);
            }
            reports.extend(reps);
        }
        Ok(reports)
    }

    /// One interleaved block of [`LANES`] columns through the sparse factor:
    /// build, solve, certify (refining if needed) and fold.
    fn sparse_block<F>(
        &self,
        ldl: &SparseLdl,
        blk: usize,
        cols: usize,
        fill: &F,
        fold: Fold<'_>,
    ) -> Result<(Vec<f64>, Vec<SolveReport>)>
    where
        F: Fn(usize, &mut ColumnWriter<'_>) + Sync,
    {
        let n = self.dim();
        let order = ldl.order();
        let laplacian = matches!(self.op, Operator::Laplacian(_));
        let c0 = blk * LANES;
        let lanes = LANES.min(cols - c0);
        let mut b = vec![0.0; n * LANES];
        for c in 0..lanes {
            fill(
                c0 + c,
                &mut ColumnWriter {
                    data: &mut b,
                    position: Some(ldl.position()),
                    stride: LANES,
                    lane: c,
                },
            );
        }
        if laplacian {
            let mut sum = [0.0; LANES];
            let mut l1 = [0.0; LANES];
            for k in 0..n {
                for c in 0..lanes {
                    sum[c] += b[k * LANES + c];
                    l1[c] += b[k * LANES + c].abs();
                }
            }
            for c in 0..lanes {
                if sum[c].abs() > 1e-9 * l1[c].max(1.0) {
                    return Err(Error::NotOrthogonal { sum: sum[c] });
                }
            }
        }
        let center = |y: &mut [f64]| {
            if laplacian {
                let mut mean = [0.0; LANES];
                for k in 0..n {
                    for c in 0..lanes {
                        mean[c] += y[k * LANES + c];
                    }
                }
                for m in &mut mean {
                    *m /= n as f64;
                }
                for k in 0..n {
                    for c in 0..lanes {
                        y[k * LANES + c] -= mean[c];
                    }
                }
            }
        };
        let lane_norms = |y: &[f64]| {
            let mut sq = [0.0; LANES];
            for k in 0..n {
                for c in 0..lanes {
                    sq[c] += y[k * LANES + c] * y[k * LANES + c];
                }
            }
            sq.map(f64::sqrt)
        };
        center(&mut b);
        let threshold = lane_norms(&b).map(|bn| self.threshold(bn));

        let mut x = b.clone();
        ldl.sweep(&mut x, lanes);
        center(&mut x);
        let mut r = vec![0.0; n * LANES];
        ldl.residual(&b, &x, lanes, &mut r);
        let mut res = lane_norms(&r);
        let mut steps = 1;
        while (0..lanes).any(|c| res[c] > threshold[c]) && steps <= REFINEMENT_STEPS {
            center(&mut r);
            ldl.sweep(&mut r, lanes);
            for (xi, ri) in x.iter_mut().zip(&r) {
                *xi += ri;
            }
            center(&mut x);
            ldl.residual(&b, &x, lanes, &mut r);
            res = lane_norms(&r);
            steps += 1;
        }
        let mut reports = Vec::with_capacity(lanes);
        for c in 0..lanes {
            let report = SolveReport {
                iterations: steps,
                residual_2norm: res[c],
                residual_threshold: threshold[c],
                converged: res[c] <= threshold[c],
                effective_delta: self.opts.delta,
                mode: self.opts.mode,
            };
            if !report.converged {
                return Err(Error::NotConverged(report));
            }
            reports.push(report);
        }

        let mut part = vec![0.0; n];
        let mut shift = [0.0; LANES];
        if let Fold::CenteredSquares(w) = fold {
            for (k, &v) in order.iter().enumerate() {
                for c in 0..lanes {
                    shift[c] += w[v] * x[k * LANES + c];
                }
            }
        }
        for (k, &v) in order.iter().enumerate() {
            let mut sum = 0.0;
            for c in 0..lanes {
                let d = x[k * LANES + c] - shift[c];
                sum += d * d;
            }
            part[v] = sum;
        }
        Ok((part, reports))
    }

    fn checked_columns(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if rhs.nrows() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: rhs.nrows(),
            });
        }
        let mut b = rhs.clone();
        for mut col in b.column_iter_mut() {
            let checked = self.check_rhs(col.as_slice())?;
            col.copy_from_slice(&checked);
        }
        Ok(b)
    }

    /// Check externally computed solutions `x` (one per column of `rhs`)
    /// against this solver's stopping rule, producing the same reports a
    /// direct solve would.
    pub(crate) fn certify_columns(
        &self,
        rhs: &DMatrix<f64>,
        x: DMatrix<f64>,
    ) -> Result<(DMatrix<f64>, Vec<SolveReport>)> {
        let n = self.dim();
        let mut x = x;
        let reports: Vec<SolveReport> = x
            .as_mut_slice()
            .par_chunks_mut(n.max(1))
            .zip(rhs.as_slice().par_chunks(n.max(1)))
            .map(|(xj, bj)| {
                let (fixed, rep) = self.finish_direct(bj, xj.to_vec())?;
                xj.copy_from_slice(&fixed);
                Ok(rep)
            })
            .collect::<Result<_>>()?;
        Ok((x, reports))
    }

    /// The dense inverse (pseudoinverse for Laplacians) used by the direct
    /// method, factored on first call.
    pub fn dense_inverse(&self) -> Result<&DMatrix<f64>> {
        if self.dim() > DENSE_SOLVE_CAP {
            return Err(Error::CapExceeded {
                what: "dense solve dimension",
                requested: self.dim() as u128,
                limit: DENSE_SOLVE_CAP as u128,
                hint: "; use the conjugate-gradient method",
            });
        }
        self.inverse
            .get_or_init(|| {
                let n = self.dim();
                let mut a = self.op.dense();
                let shift = matches!(self.op, Operator::Laplacian(_));
                if shift {
                    a.add_scalar_mut(1.0 / n as f64);
                }
                let chol = a
                    .cholesky()
                    .ok_or_else(|| "system matrix is not positive definite".to_string())?;
                let mut inv = chol.inverse();
                if shift {
                    inv.add_scalar_mut(-1.0 / n as f64);
                }
                Ok(inv)
            })
            .as_ref()
            .map_err(|msg| Error::Numerical(msg.clone()))
    }

    /// Check a direct solution against the stopping rule, refining it with
    /// the factorization when rounding left the residual too large.
    fn finish_direct(&self, b: &[f64], mut x: Vec<f64>) -> Result<(Vec<f64>, SolveReport)> {
        let laplacian = matches!(self.op, Operator::Laplacian(_));
        if laplacian {
            project_out_mean(&mut x);
        }
        let threshold = self.threshold(norm(b));
        let mut res = self.true_residual(b, &x);
        let mut steps = 1;
        while res > threshold
            && steps <= REFINEMENT_STEPS
            && self.opts.method != SolveMethod::ConjugateGradient
        {
            let mut ax = vec![0.0; x.len()];
            self.op.apply(&x, &mut ax);
            let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if laplacian {
                project_out_mean(&mut r);
            }
            let dx = self.direct(&DMatrix::from_column_slice(r.len(), 1, &r))?;
            for (xi, di) in x.iter_mut().zip(dx.iter()) {
                *xi += di;
            }
            if laplacian {
                project_out_mean(&mut x);
            }
            res = self.true_residual(b, &x);
            steps += 1;
        }
        let report = SolveReport {
            iterations: steps,
            residual_2norm: res,
            residual_threshold: threshold,
            converged: res <= threshold,
            effective_delta: self.opts.delta,
            mode: self.opts.mode,
        };
        if report.converged {
            Ok((x, report))
        } else {
            Err(Error::NotConverged(report))
        }
    }

    fn true_residual(&self, b: &[f64], x: &[f64]) -> f64 {
        let mut ax = vec![0.0; x.len()];
        self.op.apply(x, &mut ax);
        b.iter()
            .zip(&ax)
            .map(|(bi, ai)| (bi - ai) * (bi - ai))
            .sum::<f64>()
            .sqrt()
    }

    fn pcg(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let n = b.len();
        let b_norm = norm(b);
        let threshold = self.threshold(b_norm);
        let mut report = SolveReport {
            iterations: 0,
            residual_2norm: b_norm,
            residual_threshold: threshold,
            converged: false,
            effective_delta: self.opts.delta,
            mode: self.opts.mode,
        };
        let mut x = vec![0.0; n];
        if b_norm == 0.0 {
            report.converged = true;
            return Ok((x, report));
        }
        let inv_diag: Vec<f64> = match self.opts.preconditioner {
            Preconditioner::Jacobi => self.op.diagonal().iter().map(|&d| 1.0 / d).collect(),
            Preconditioner::None => vec![1.0; n],
        };
        let laplacian = matches!(self.op, Operator::Laplacian(_));
        let precondition = |r: &[f64], z: &mut [f64]| {
            for i in 0..n {
                z[i] = inv_diag[i] * r[i];
            }
            if laplacian {
                project_out_mean(z);
            }
        };

        let mut r = b.to_vec();
        let mut z = vec![0.0; n];
        precondition(&r, &mut z);
        let mut p = z.clone();
        let mut ap = vec![0.0; n];
        let mut rz = dot(&r, &z);
        let mut r_norm = b_norm;

        while report.iterations < self.opts.max_iterations {
            self.op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            report.iterations += 1;
            r_norm = norm(&r);
            if r_norm <= threshold {
                // The recursive residual drifts from the true one; only stop
                // once the true residual agrees, otherwise restart from it.
                let true_res = self.true_residual(b, &x);
                if true_res <= threshold {
                    r_norm = true_res;
                    report.converged = true;
                    break;
                }
                self.op.apply(&x, &mut ap);
                for i in 0..n {
                    r[i] = b[i] - ap[i];
                }
                precondition(&r, &mut z);
                p.copy_from_slice(&z);
                rz = dot(&r, &z);
                r_norm = true_res;
                continue;
            }
            precondition(&r, &mut z);
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        if laplacian {
            project_out_mean(&mut x);
        }
        report.residual_2norm = if report.converged {
            r_norm
        } else {
            self.true_residual(b, &x)
        };
        if !report.converged && report.residual_2norm <= threshold {
            report.converged = true;
        }
        if report.converged {
            Ok((x, report))
        } else {
            Err(Error::NotConverged(report))
        }
    }
}

/// Write access to one right-hand side in [`SddSolver::solve_fold`],
/// indexed by variable, whatever the solver's internal layout.
pub(crate) struct ColumnWriter<'a> {
    data: &'a mut [f64],
    position: Option<&'a [usize]>,
    stride: usize,
    lane: usize,
}

impl ColumnWriter<'_> {
    #[inline]
    pub(crate) fn add(&mut self, i: usize, v: f64) {
        let k = match self.position {
            Some(p) => p[i],
            None => i,
        };
        self.data[k * self.stride + self.lane] += v;
    }
}

/// How [`SddSolver::solve_fold`] folds each solution `x` into its
/// accumulator.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Fold<'w> {
    /// `acc_v += x_v^2`.
    Squares,
    /// `acc_v += (x_v - w^T x)^2`.
    CenteredSquares(&'w [f64]),
}

impl Fold<'_> {
    fn apply(&self, x: &[f64], acc: &mut [f64]) {
        let shift = match self {
            Fold::Squares => 0.0,
            Fold::CenteredSquares(w) => dot(w, x),
        };
        for (a, &v) in acc.iter_mut().zip(x) {
            *a += (v - shift) * (v - shift);
        }
    }
}

/// Solve `L x = b` on a connected graph. See [`SddSolver::solve`].
pub fn solve_laplacian(
    graph: &WeightedGraph,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    SddSolver::laplacian(graph, *opts)?.solve(b)
}

/// Solve `L_{-S} x = b`.
pub fn solve_grounded(
    system: &GroundedSystem<'_>,
    b: &[f64],
    opts: &SolverOptions,
) -> Result<(Vec<f64>, SolveReport)> {
    SddSolver::grounded(system, *opts)?.solve(b)
}

pub(crate) fn project_out_mean(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    for v in x.iter_mut() {
        *v -= mean;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `sqrt((x - y)^T A (x - y))` for a Laplacian.
pub fn laplacian_energy_distance(graph: &WeightedGraph, x: &[f64], y: &[f64]) -> f64 {
    let e: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut le = vec![0.0; e.len()];
    graph.laplacian_mul_into(&e, &mut le);
    dot(&e, &le).max(0.0).sqrt()
}

/// `sqrt((x - y)^T L_{-S} (x - y))`.
pub fn grounded_energy_distance(system: &GroundedSystem<'_>, x: &[f64], y: &[f64]) -> f64 {
    let e: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut le = vec![0.0; e.len()];
    system.mul_into(&e, &mut le);
    dot(&e, &le).max(0.0).sqrt()
}
