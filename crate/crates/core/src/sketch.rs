//! Randomized estimators built from Johnson-Lindenstrauss sketches and
//! Laplacian solves.
//!
//! [`approx_hk`] estimates every walk centrality `H_u` and the Kemeny
//! constant with `k = ceil(24 ln n / eps^2)` Laplacian solves.
//! [`approx_delta`] estimates every marginal gain `Delta(u, S)` with one
//! grounded solve for the numerators plus `2q` grounded solves for the
//! denominators, `q = ceil(24 ln n / (eps/7)^2)`.
//!
//! Sketch rows are generated, solved and folded into per-vertex sums in
//! chunks, so memory stays `O(chunk * n + m)` however many rows there are.
//! Row `i` of every random matrix draws from stream `i` of its seed, so the
//! output depends only on the seed, not on scheduling.

use nalgebra::DMatrix;
use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{CentralityMethod, CentralityReport};
use crate::graph::{incidence_decomposition, stationary, GroundedSystem, WeightedGraph};
use crate::rng::{derive_seed, stream_rng};
use crate::solver::{
    dot, practical_delta, ColumnWriter, Fold, SddSolver, SolveMethod, SolveReport, SolverOptions, ToleranceMode,
};

/// Right-hand sides solved per batch.
const CHUNK: usize = 256;

/// Rows of a JL sketch with distortion `epsilon` over `n` points:
/// `ceil(24 ln n / epsilon^2)`, at least 1.
pub fn jl_rows(n: usize, epsilon: f64) -> usize {
    let k = (24.0 * (n.max(1) as f64).ln() / (epsilon * epsilon)).ceil();
    (k as usize).max(1)
}

/// Sketch rows used by [`approx_delta`]: `jl_rows(n, epsilon / 7)`.
pub fn gain_rows(n: usize, epsilon: f64) -> usize {
    jl_rows(n, epsilon / 7.0)
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1), got {epsilon}"
        )))
    }
}

const ONE_BITS: u64 = 0x3FF0_0000_0000_0000;

/// Call `f(j, s)` with `s = +1` or `-1` for `j in 0..len`, from stream `row`
/// of `seed`. Entry `j` is bit `j % 64` of the stream's `j / 64`-th word.
fn rademacher_signs(seed: u64, row: u64, len: usize, mut f: impl FnMut(usize, f64)) {
    let mut rng = stream_rng(seed, row);
    let mut j = 0;
    while j < len {
        let bits = rng.next_u64();
        let end = (j + 64).min(len);
        for (b, idx) in (j..end).enumerate() {
            // Branch-free: a clear bit sets the sign bit of 1.0.
            let sign = (!bits >> b) & 1;
            f(idx, f64::from_bits(ONE_BITS | (sign << 63)));
        }
        j = end;
    }
}

/// Write row `row` of `scale * Q W^{1/2} B` into `col`, where `Q` is the
/// Rademacher matrix of `seed` and `B` the signed incidence matrix of
/// `edges`.
fn incidence_row(
    seed: u64,
    row: usize,
    edges: &[(usize, usize, f64)],
    sqrt_w: &[f64],
    scale: f64,
    col: &mut ColumnWriter<'_>,
) {
    rademacher_signs(seed, row as u64, edges.len(), |e, s| {
        let (a, b, _) = edges[e];
        let v = s * scale * sqrt_w[e];
        col.add(a, v);
        col.add(b, -v);
    });
}

/// A dense random or projected matrix with the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchMatrix {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
    pub seed: u64,
    pub epsilon: Option<f64>,
    pub delta_used: Option<f64>,
}

impl SketchMatrix {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `Q v`.
    pub fn project(&self, v: &[f64]) -> Result<Vec<f64>> {
        if v.len() != self.cols {
            return Err(Error::DimensionMismatch {
                expected: self.cols,
                got: v.len(),
            });
        }
        Ok((0..self.rows).map(|i| dot(self.row(i), v)).collect())
    }
}

/// A `rows x cols` matrix of independent `+-1/sqrt(rows)` entries.
pub fn rademacher_projection(rows: usize, cols: usize, seed: u64) -> Result<SketchMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(
            "projection needs at least one row and one column".into(),
        ));
    }
    let scale = 1.0 / (rows as f64).sqrt();
    let mut data = vec![0.0; rows * cols];
    data.par_chunks_mut(cols).enumerate().for_each(|(i, row)| {
        rademacher_signs(seed, i as u64, cols, |j, s| row[j] = s * scale);
    });
    Ok(SketchMatrix {
        rows,
        cols,
        data,
        seed,
        epsilon: None,
        delta_used: None,
    })
}

/// Aggregate of many [`SolveReport`]s.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub solves: usize,
    pub total_iterations: usize,
    pub max_iterations: usize,
    /// Largest `residual / threshold` seen; at most 1 when all converged.
    pub worst_residual_ratio: f64,
}

impl SolveSummary {
    pub fn absorb(&mut self, rep: &SolveReport) {
        self.solves += 1;
        self.total_iterations += rep.iterations;
        self.max_iterations = self.max_iterations.max(rep.iterations);
        let ratio = if rep.residual_threshold > 0.0 {
            rep.residual_2norm / rep.residual_threshold
        } else if rep.residual_2norm == 0.0 {
            0.0
        } else {
            f64::INFINITY
        };
        self.worst_residual_ratio = self.worst_residual_ratio.max(ratio);
    }

    fn absorb_all(&mut self, reps: &[SolveReport]) {
        reps.iter().for_each(|r| self.absorb(r));
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchMeta {
    pub seed: u64,
    pub epsilon: f64,
    /// Sketch rows `k`.
    pub rows: usize,
    /// Solver tolerance actually used.
    pub delta: f64,
    pub mode: ToleranceMode,
    pub method: SolveMethod,
    pub solves: SolveSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxCentralityResult {
    pub h_tilde: Vec<f64>,
    pub kemeny_tilde: f64,
    pub meta: SketchMeta,
}

impl ApproxCentralityResult {
    pub fn to_report(&self) -> CentralityReport {
        CentralityReport {
            walk_centrality: self.h_tilde.clone(),
            kemeny: self.kemeny_tilde,
            method: CentralityMethod::Sketch,
        }
    }
}

/// Solver tolerance that makes the sketch's solver error at most a
/// `(1 +- eps)` distortion of every `H_u`:
/// `eps/3 * min_u (d - d_u)/d * sqrt((1 - eps) w_min / ((1 + eps) n^4 w_max))`.
pub fn strict_hk_delta(graph: &WeightedGraph, epsilon: f64) -> f64 {
    let n = graph.n() as f64;
    let d = graph.total_degree();
    let min_frac = graph
        .degrees()
        .iter()
        .map(|du| (d - du) / d)
        .fold(f64::INFINITY, f64::min);
    epsilon / 3.0
        * min_frac
        * ((1.0 - epsilon) * graph.w_min() / ((1.0 + epsilon) * n.powi(4) * graph.w_max())).sqrt()
}

/// Estimate every `H_u` and the Kemeny constant.
///
/// The tolerance in `opts.delta` is replaced according to `opts.mode`:
/// [`strict_hk_delta`] in strict mode, [`practical_delta`] otherwise.
/// `H~_u = d ||Z~ (e_u - pi)||^2`, where row `i` of `Z~` solves
/// `L z = (Q W^{1/2} B)_i`, and `K~ = sum_u (d_u / d) H~_u`.
pub fn approx_hk(
    graph: &WeightedGraph,
    epsilon: f64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<ApproxCentralityResult> {
    check_epsilon(epsilon)?;
    graph.require_connected()?;
    let n = graph.n();
    let k = jl_rows(n, epsilon);
    let delta = match opts.mode {
        ToleranceMode::Strict => strict_hk_delta(graph, epsilon),
        ToleranceMode::Practical => practical_delta(epsilon, n),
    };
    let mut meta = SketchMeta {
        seed,
        epsilon,
        rows: k,
        delta,
        mode: opts.mode,
        method: opts.method,
        solves: SolveSummary::default(),
    };
    if n == 1 {
        return Ok(ApproxCentralityResult {
            h_tilde: vec![0.0],
            kemeny_tilde: 0.0,
            meta,
        });
    }
    let solver = SddSolver::laplacian(graph, opts.with_delta(delta))?;
    let pi = stationary(graph)?.pi;
    let edges = graph.edges();
    let sqrt_w: Vec<f64> = edges.iter().map(|e| e.2.sqrt()).collect();
    let scale = 1.0 / (k as f64).sqrt();
    let mut acc = vec![0.0; n];
    let reps = solver.solve_fold(
        k,
        |row, col| incidence_row(seed, row, edges, &sqrt_w, scale, col),
        Fold::CenteredSquares(&pi),
        &mut acc,
    )?;
    meta.solves.absorb_all(&reps);
    let d = graph.total_degree();
    let h_tilde: Vec<f64> = acc.iter().map(|a| d * a).collect();
    let kemeny_tilde = h_tilde
        .iter()
        .zip(graph.degrees())
        .map(|(h, du)| du / d * h)
        .sum();
    Ok(ApproxCentralityResult {
        h_tilde,
        kemeny_tilde,
        meta,
    })
}

/// `sigma = (1/n) sum_u |H_u - H~_u| / H_u`.
pub fn mean_relative_error(exact: &[f64], approx: &[f64]) -> Result<f64> {
    if exact.len() != approx.len() {
        return Err(Error::DimensionMismatch {
            expected: exact.len(),
            got: approx.len(),
        });
    }
    if exact.is_empty() {
        return Err(Error::InvalidParameter("empty vectors".into()));
    }
    let mut total = 0.0;
    for (e, a) in exact.iter().zip(approx) {
        if !(*e > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "relative error undefined for exact value {e}"
            )));
        }
        total += (e - a).abs() / e;
    }
    Ok(total / exact.len() as f64)
}

/// `H(S) ~ pi_{-S}^T x` with `x` the solver's answer to `L_{-S} x = d_{-S}`
/// at tolerance `delta`.
pub fn approx_gwc(
    graph: &WeightedGraph,
    set: &[usize],
    delta: f64,
    opts: &SolverOptions,
) -> Result<(f64, SolveReport)> {
    let system = GroundedSystem::new(graph, set)?;
    let solver = SddSolver::grounded(&system, opts.with_delta(delta))?;
    let (x, rep) = solver.solve(system.degrees())?;
    Ok((dot(&system.stationary_free(), &x), rep))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainMeta {
    pub epsilon: f64,
    pub seed: u64,
    /// Tolerance of the numerator solve.
    pub delta1: f64,
    /// Tolerance of the sketched denominator solves.
    pub delta2: f64,
    /// Rows in each of the two sketches.
    pub q: usize,
    pub mode: ToleranceMode,
    pub method: SolveMethod,
    /// Gains set to 0 because the estimate was not positive and finite.
    pub clamped: usize,
    /// Whether the boundary term was computed exactly (boundary of at most
    /// `q` vertices) rather than sketched.
    pub boundary_exact: bool,
    pub numerator_solve: SolveReport,
    pub solves: SolveSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxGainResult {
    /// `(u, Delta'(u, S))` for every `u` outside `S`, ascending in `u`.
    pub gains: Vec<(usize, f64)>,
    pub meta: GainMeta,
}

/// Numerator tolerance `w_min eps / (7 n^3 w_max)`.
pub fn strict_delta1(graph: &WeightedGraph, epsilon: f64) -> f64 {
    let n = graph.n() as f64;
    graph.w_min() * epsilon / (7.0 * n.powi(3) * graph.w_max())
}

/// Denominator tolerance
/// `(w_min eps / (31 n^2)) sqrt((1 - eps/7) / (2 w_max (1 + eps/7)))`.
pub fn strict_delta2(graph: &WeightedGraph, epsilon: f64) -> f64 {
    let n = graph.n() as f64;
    let e7 = epsilon / 7.0;
    graph.w_min() * epsilon / (31.0 * n * n)
        * ((1.0 - e7) / (2.0 * graph.w_max() * (1.0 + e7))).sqrt()
}

/// Estimate `Delta(u, S)` for every `u` outside a nonempty `S`.
///
/// Writing `L_{-S} = B'^T W' B' + Z`, the diagonal entry
/// `e_u^T L_{-S}^{-1} e_u` equals `||W'^{1/2} B' L_{-S}^{-1} e_u||^2 +
/// ||Z^{1/2} L_{-S}^{-1} e_u||^2`; both norms are sketched with independent
/// `q`-row Rademacher matrices `Q` and `R`. The numerator comes from one
/// solve `x' = L_{-S}^{-1} d_{-S}`. Tolerances follow `opts.mode` as in
/// [`approx_hk`].
pub fn approx_delta(
    graph: &WeightedGraph,
    set: &[usize],
    epsilon: f64,
    seed: u64,
    opts: &SolverOptions,
) -> Result<ApproxGainResult> {
    check_epsilon(epsilon)?;
    graph.require_connected()?;
    let system = GroundedSystem::new(graph, set)?;
    let n = graph.n();
    let k = system.dim();
    let q = gain_rows(n, epsilon);
    let (delta1, delta2) = match opts.mode {
        ToleranceMode::Strict => (strict_delta1(graph, epsilon), strict_delta2(graph, epsilon)),
        ToleranceMode::Practical => {
            let p = practical_delta(epsilon, n);
            (p, p)
        }
    };

    let numer = SddSolver::grounded(&system, opts.with_delta(delta1))?;
    let (x, numerator_solve) = numer.solve(system.degrees())?;

    let solver = SddSolver::grounded(&system, opts.with_delta(delta2))?;
    let dec = incidence_decomposition(&system);
    let scale = 1.0 / (q as f64).sqrt();
    let mut col_norm = vec![0.0; k];
    let mut summary = SolveSummary::default();

    // Interior part: rows of Q W'^{1/2} B'.
    let interior = &dec.interior_edges;
    if !interior.is_empty() {
        let q_seed = derive_seed(seed, 1);
        let sqrt_w: Vec<f64> = interior.iter().map(|e| e.2.sqrt()).collect();
        let reps = solver.solve_fold(
            q,
            |row, col| incidence_row(q_seed, row, interior, &sqrt_w, scale, col),
            Fold::Squares,
            &mut col_norm,
        )?;
        summary.absorb_all(&reps);
    }

    // Boundary part. Only free vertices with edges into S carry a nonzero
    // column of Z^{1/2}, so ||Z^{1/2} L^{-1} e_v||^2 is a sum over the
    // boundary. When the boundary has at most q vertices, that sum is
    // computed exactly from one solve per boundary vertex, which is both
    // cheaper and more accurate than q sketched solves.
    let boundary: Vec<(usize, f64)> = dec
        .boundary_mass
        .iter()
        .enumerate()
        .filter(|(_, &z)| z > 0.0)
        .map(|(u, &z)| (u, z.sqrt()))
        .collect();
    let boundary_exact = boundary.len() <= q;
    if boundary_exact {
        let reps = solver.solve_fold(
            boundary.len(),
            |c, col| col.add(boundary[c].0, boundary[c].1),
            Fold::Squares,
            &mut col_norm,
        )?;
        summary.absorb_all(&reps);
    } else {
        sketch_boundary(&solver, &boundary, q, derive_seed(seed, 2), &mut summary, &mut col_norm)?;
    }
    let d = graph.total_degree();
    let mut clamped = 0;
    let gains = system
        .free_vertices()
        .iter()
        .enumerate()
        .map(|(i, &u)| {
            let den = d * col_norm[i];
            let g = x[i] * x[i] / den;
            if x[i] > 0.0 && den > 0.0 && g.is_finite() {
                (u, g)
            } else {
                clamped += 1;
                (u, 0.0)
            }
        })
        .collect();
    if clamped > 0 {
        log::warn!("{clamped} marginal-gain estimates were not positive and were clamped to 0");
    }
    Ok(ApproxGainResult {
        gains,
        meta: GainMeta {
            epsilon,
            seed,
            delta1,
            delta2,
            q,
            mode: opts.mode,
            method: opts.method,
            clamped,
            boundary_exact,
            numerator_solve,
            solves: summary,
        },
    })
}

/// Add the column norms of `R Z^{1/2} L^{-1}` to `col_norm`, with `R` a
/// `q`-row Rademacher sketch over the boundary vertices.
fn sketch_boundary(
    solver: &SddSolver<'_>,
    boundary: &[(usize, f64)],
    q: usize,
    r_seed: u64,
    summary: &mut SolveSummary,
    col_norm: &mut [f64],
) -> Result<()> {
    let k = solver.dim();
    let scale = 1.0 / (q as f64).sqrt();
    // With the direct method, L^{-1} (sum_u r_u sqrt(z_u) e_u) is a
    // combination of the |boundary| inverse columns, which is much cheaper
    // than a full dense product per row.
    let boundary_inverse = match solver.options().method {
        SolveMethod::DenseCholesky => {
            let inv = solver.dense_inverse()?;
            let mut cols = DMatrix::zeros(k, boundary.len());
            for (c, &(u, sz)) in boundary.iter().enumerate() {
                cols.column_mut(c).copy_from(&(inv.column(u) * sz));
            }
            Some(cols)
        }
        SolveMethod::ConjugateGradient | SolveMethod::SparseCholesky => None,
    };
    for start in (0..q).step_by(CHUNK) {
        let len = CHUNK.min(q - start);
        let mut signs = DMatrix::zeros(boundary.len(), len);
        signs
            .as_mut_slice()
            .par_chunks_mut(boundary.len().max(1))
            .enumerate()
            .for_each(|(c, col)| {
                let mut next = 0;
                let last = boundary.last().map_or(0, |b| b.0 + 1);
                rademacher_signs(r_seed, (start + c) as u64, last, |u, s| {
                    if next < boundary.len() && boundary[next].0 == u {
                        col[next] = s * scale;
                        next += 1;
                    }
                });
            });
        let mut rhs = DMatrix::zeros(k, len);
        for c in 0..len {
            for (b, &(u, sz)) in boundary.iter().enumerate() {
                rhs[(u, c)] = signs[(b, c)] * sz;
            }
        }
        let (sol, reps) = match &boundary_inverse {
            Some(cols) => solver.certify_columns(&rhs, cols * &signs)?,
            None => solver.solve_columns(&rhs)?,
        };
        summary.absorb_all(&reps);
        fold_norms(&sol, col_norm);
    }

    Ok(())
}

fn fold_norms(sol: &DMatrix<f64>, col_norm: &mut [f64]) {
    for col in sol.column_iter() {
        for (c, v) in col_norm.iter_mut().zip(col.iter()) {
            *c += v * v;
        }
    }
}
