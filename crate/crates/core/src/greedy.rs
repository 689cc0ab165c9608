//! Choosing `k` vertices that minimize group walk centrality.
//!
//! `H(S)` is monotone decreasing and supermodular, so the greedy rule (take
//! the most central single vertex, then repeatedly add the vertex with the
//! largest marginal gain) is within `1 - (k/(k-1))/e` of optimal. This module
//! provides that rule with exact gains ([`deter_min_gwc`]) and sketched gains
//! ([`approx_min_gwc`]), exhaustive search for small instances, and the
//! usual heuristic baselines.
//!
//! All argmin/argmax choices break ties toward the smallest vertex id;
//! values within a relative `1e-12` of each other count as tied.

use std::ops::ControlFlow;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{
    check_dense_cap, walk_centrality_exact, GroundedInverse, DEFAULT_DENSE_CAP,
};
use crate::graph::{GroundedSystem, WeightedGraph};
use crate::rng::{derive_seed, stream_rng};
use crate::sketch::{approx_delta, approx_gwc, approx_hk};
use crate::solver::{practical_delta, SolveMethod, SolverOptions, ToleranceMode};

const TIE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMethod {
    Deter,
    Approx,
    Brute,
    TopDegree,
    TopPagerank,
    TopAbsorb,
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Baseline {
    TopDegree,
    TopPagerank,
    TopAbsorb,
    Random,
}

impl Baseline {
    pub const ALL: [Baseline; 4] = [
        Baseline::TopDegree,
        Baseline::TopPagerank,
        Baseline::TopAbsorb,
        Baseline::Random,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Baseline::TopDegree => "top-degree",
            Baseline::TopPagerank => "top-pagerank",
            Baseline::TopAbsorb => "top-absorb",
            Baseline::Random => "random",
        }
    }
}

impl std::str::FromStr for Baseline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Baseline::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown baseline '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    /// Selected vertices in order; `S_i` is the first `i` of them.
    pub selected: Vec<usize>,
    /// Gain recorded when adding `selected[i + 1]` (so `k - 1` entries).
    /// Exact for the deterministic path, estimated for the sketched path,
    /// and realized differences `H(S_i) - H(S_{i+1})` for baselines.
    pub gains: Vec<f64>,
    /// `H(S_i)` for `i = 1..=k`.
    pub gwc_values: Vec<f64>,
    /// Whether `gwc_values` are exact (dense) or solver estimates.
    pub gwc_exact: bool,
    pub method: SelectionMethod,
}

impl GreedyTrace {
    /// `H(S_k)`.
    pub fn value(&self) -> f64 {
        *self.gwc_values.last().expect("trace is nonempty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub k: usize,
    /// Error parameter of the sketched path, in `(0, 1)`.
    pub epsilon: f64,
    pub seed: u64,
    pub mode: ToleranceMode,
    pub method: SolveMethod,
    /// Graphs up to this size get exact `H(S_i)` values in traces.
    pub dense_cap: usize,
}

impl OptimizerConfig {
    pub fn new(k: usize, epsilon: f64, seed: u64) -> Self {
        Self {
            k,
            epsilon,
            seed,
            mode: ToleranceMode::Practical,
            method: SolveMethod::ConjugateGradient,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }

    fn solver_options(&self) -> SolverOptions {
        SolverOptions {
            mode: self.mode,
            method: self.method,
            ..SolverOptions::default()
        }
    }
}

fn check_budget(graph: &WeightedGraph, k: usize) -> Result<()> {
    if k == 0 || k >= graph.n() {
        Err(Error::InvalidParameter(format!(
            "k must satisfy 1 <= k < n = {}, got {k}",
            graph.n()
        )))
    } else {
        Ok(())
    }
}

/// Index of the smallest value, earliest on ties.
fn argmin(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (u, v) in values {
        match best {
            Some((_, b)) if v >= b - TIE * b.abs() => {}
            _ => best = Some((u, v)),
        }
    }
    best
}

/// Index of the largest value, earliest on ties.
fn argmax(values: impl Iterator<Item = (usize, f64)>) -> Option<(usize, f64)> {
    argmin(values.map(|(u, v)| (u, -v))).map(|(u, v)| (u, -v))
}

/// Greedy selection with exact gains; one dense factorization per step.
pub fn deter_min_gwc(graph: &WeightedGraph, k: usize) -> Result<GreedyTrace> {
    graph.require_connected()?;
    check_budget(graph, k)?;
    check_dense_cap(graph.n(), DEFAULT_DENSE_CAP)?;
    let h = walk_centrality_exact(graph)?.walk_centrality;
    let (first, h_first) = argmin(h.iter().copied().enumerate()).expect("graph is nonempty");
    let mut selected = vec![first];
    let mut gains = Vec::with_capacity(k - 1);
    let mut gwc_values = vec![h_first];
    for step in 2..=k {
        let inv = GroundedInverse::new(graph, &selected).map_err(Error::at_step(step))?;
        let free = inv.system.free_vertices().to_vec();
        let (u, gain) = argmax(free.into_iter().zip(inv.gains())).expect("free set is nonempty");
        if step > 2 {
            // This factorization also yields H(S_{step-1}) exactly.
            *gwc_values.last_mut().unwrap() = inv.gwc();
        }
        selected.push(u);
        gains.push(gain);
        gwc_values.push(gwc_values.last().unwrap() - gain);
    }
    if k >= 2 {
        let last = GroundedInverse::new(graph, &selected).map_err(Error::at_step(k))?;
        *gwc_values.last_mut().unwrap() = last.gwc();
    }
    Ok(GreedyTrace {
        selected,
        gains,
        gwc_values,
        gwc_exact: true,
        method: SelectionMethod::Deter,
    })
}

/// `H(S_i)` for each prefix of `selected`: exact when the graph is within
/// `dense_cap`, otherwise a solver estimate.
fn prefix_gwc(
    graph: &WeightedGraph,
    selected: &[usize],
    dense_cap: usize,
    opts: &SolverOptions,
) -> Result<(Vec<f64>, bool)> {
    let exact = graph.n() <= dense_cap;
    let values = (1..=selected.len())
        .map(|i| {
            let set = &selected[..i];
            if exact {
                Ok(GroundedInverse::new(graph, set)?.gwc())
            } else {
                let delta = practical_delta(0.01, graph.n());
                let opts = SolverOptions {
                    mode: ToleranceMode::Practical,
                    method: SolveMethod::ConjugateGradient,
                    ..*opts
                };
                approx_gwc(graph, set, delta, &opts).map(|(v, _)| v)
            }
            .map_err(Error::at_step(i))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((values, exact))
}

/// Progress report passed to the observer of [`approx_min_gwc_observed`].
#[derive(Debug, Clone, Copy)]
pub struct StepProgress<'a> {
    /// Steps completed so far (`selected.len()`).
    pub step: usize,
    pub k: usize,
    pub selected: &'a [usize],
    /// Linear solves performed by the step just completed.
    pub solves: usize,
}

/// Greedy selection with sketched centralities and gains. Step `i` uses the
/// seed `derive_seed(cfg.seed, i)`.
pub fn approx_min_gwc(graph: &WeightedGraph, cfg: &OptimizerConfig) -> Result<GreedyTrace> {
    approx_min_gwc_observed(graph, cfg, |_| ControlFlow::Continue(()))
}

/// [`approx_min_gwc`] with an observer called after every step; returning
/// `ControlFlow::Break` stops the run with [`Error::Cancelled`].
pub fn approx_min_gwc_observed(
    graph: &WeightedGraph,
    cfg: &OptimizerConfig,
    mut observer: impl FnMut(&StepProgress<'_>) -> ControlFlow<()>,
) -> Result<GreedyTrace> {
    graph.require_connected()?;
    check_budget(graph, cfg.k)?;
    let opts = cfg.solver_options();
    let hk = approx_hk(graph, cfg.epsilon, derive_seed(cfg.seed, 1), &opts)
        .map_err(Error::at_step(1))?;
    let (first, _) = argmin(hk.h_tilde.iter().copied().enumerate()).expect("graph is nonempty");
    let mut selected = vec![first];
    let mut notify = |selected: &[usize], solves: usize| {
        let progress = StepProgress {
            step: selected.len(),
            k: cfg.k,
            selected,
            solves,
        };
        match observer(&progress) {
            ControlFlow::Continue(()) => Ok(()),
            ControlFlow::Break(()) => Err(Error::Cancelled {
                step: selected.len(),
            }),
        }
    };
    notify(&selected, hk.meta.solves.solves)?;
    let mut gains = Vec::with_capacity(cfg.k - 1);
    for step in 2..=cfg.k {
        let est = approx_delta(
            graph,
            &selected,
            cfg.epsilon,
            derive_seed(cfg.seed, step as u64),
            &opts,
        )
        .map_err(Error::at_step(step))?;
        let (u, gain) = argmax(est.gains.into_iter()).expect("free set is nonempty");
        log::debug!("approx greedy step {step}: vertex {u}, estimated gain {gain}");
        selected.push(u);
        gains.push(gain);
        notify(&selected, est.meta.solves.solves + 1)?;
    }
    let (gwc_values, gwc_exact) = prefix_gwc(graph, &selected, cfg.dense_cap, &opts)?;
    Ok(GreedyTrace {
        selected,
        gains,
        gwc_values,
        gwc_exact,
        method: SelectionMethod::Approx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BruteForceConfig {
    /// Refuse to enumerate more than this many sets.
    pub max_combinations: u128,
    /// Skip sets whose lower bound `1 - pi(S)` already exceeds the incumbent.
    pub prune: bool,
}

impl Default for BruteForceConfig {
    fn default() -> Self {
        Self {
            max_combinations: 2_000_000,
            prune: false,
        }
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// Advance `c` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// `k`-combination of `0..n` with lexicographic rank `rank`.
fn unrank_combination(mut rank: u128, n: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k);
    let mut next = 0;
    for slot in 0..k {
        let mut v = next;
        loop {
            let count = binomial(n - v - 1, k - slot - 1);
            if rank < count {
                break;
            }
            rank -= count;
            v += 1;
        }
        out.push(v);
        next = v + 1;
    }
    out
}

/// `H(S)` by one dense Cholesky solve of the grounded system.
fn gwc_dense_solve(graph: &WeightedGraph, set: &[usize]) -> Result<f64> {
    let sys = GroundedSystem::new(graph, set)?;
    let chol = sys
        .to_dense()
        .cholesky()
        .ok_or_else(|| Error::Numerical("grounded Laplacian is not positive definite".into()))?;
    let x = chol.solve(&nalgebra::DVector::from_column_slice(sys.degrees()));
    Ok(sys
        .stationary_free()
        .iter()
        .zip(x.iter())
        .map(|(p, h)| p * h)
        .sum())
}

fn better(candidate: f64, incumbent: f64) -> bool {
    candidate < incumbent - TIE * incumbent.abs()
}

/// The optimal `k`-set by exhaustive enumeration; ties go to the
/// lexicographically smallest set.
pub fn brute_force_min_gwc(
    graph: &WeightedGraph,
    k: usize,
    cfg: &BruteForceConfig,
) -> Result<(Vec<usize>, f64)> {
    graph.require_connected()?;
    check_budget(graph, k)?;
    check_dense_cap(graph.n(), DEFAULT_DENSE_CAP)?;
    let n = graph.n();
    let total = binomial(n, k);
    if total > cfg.max_combinations {
        return Err(Error::CapExceeded {
            what: "subsets for brute-force search",
            requested: total,
            limit: cfg.max_combinations,
            hint: "; use the greedy optimizers",
        });
    }
    let pi: Vec<f64> = graph.degrees().iter().map(|d| d / graph.total_degree()).collect();
    const BLOCK: u128 = 4096;
    let blocks = total.div_ceil(BLOCK);
    let results: Vec<Option<(Vec<usize>, f64)>> = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<Option<(Vec<usize>, f64)>> {
            let mut c = unrank_combination(b * BLOCK, n, k);
            let len = BLOCK.min(total - b * BLOCK);
            let mut best: Option<(Vec<usize>, f64)> = None;
            for i in 0..len {
                if i > 0 {
                    next_combination(&mut c, n);
                }
                if cfg.prune {
                    if let Some((_, inc)) = &best {
                        let bound = 1.0 - c.iter().map(|&v| pi[v]).sum::<f64>();
                        if !better(bound, *inc) {
                            continue;
                        }
                    }
                }
                let v = gwc_dense_solve(graph, &c)?;
                if best.as_ref().map_or(true, |(_, inc)| better(v, *inc)) {
                    best = Some((c.clone(), v));
                }
            }
            Ok(best)
        })
        .collect::<Result<_>>()?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for cand in results.into_iter().flatten() {
        if best.as_ref().map_or(true, |(_, inc)| better(cand.1, *inc)) {
            best = Some(cand);
        }
    }
    Ok(best.expect("at least one subset"))
}

/// PageRank by power iteration on the weighted random walk, stopped when
/// successive iterates differ by less than `tol` in 1-norm.
pub fn pagerank(graph: &WeightedGraph, damping: f64, tol: f64) -> Result<Vec<f64>> {
    if !(damping > 0.0 && damping < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "damping must lie in (0, 1), got {damping}"
        )));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let n = graph.n();
    let teleport = (1.0 - damping) / n as f64;
    let mut x = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..100_000 {
        // Mass at vertices without edges is spread uniformly.
        let dangling: f64 = (0..n).filter(|&v| graph.degree(v) == 0.0).map(|v| x[v]).sum();
        let base = teleport + damping * dangling / n as f64;
        for (j, nj) in next.iter_mut().enumerate() {
            *nj = base
                + damping
                    * graph
                        .neighbors(j)
                        .map(|(i, w)| w / graph.degree(i) * x[i])
                        .sum::<f64>();
        }
        let diff: f64 = x.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut x, &mut next);
        if diff < tol {
            let s: f64 = x.iter().sum();
            return Ok(x.into_iter().map(|v| v / s).collect());
        }
    }
    Err(Error::Numerical("PageRank did not converge".into()))
}

/// Vertices ordered by decreasing score, ties by id.
fn top_by(scores: &[f64], k: usize, largest: bool) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let ord = scores[a].total_cmp(&scores[b]);
        (if largest { ord.reverse() } else { ord }).then(a.cmp(&b))
    });
    order.truncate(k);
    order
}

/// Heuristic selections. `seed` drives the random strategy and, on graphs too
/// large for the dense engine, the sketched centralities behind top-absorb.
pub fn baseline_select(
    graph: &WeightedGraph,
    k: usize,
    strategy: Baseline,
    seed: u64,
) -> Result<GreedyTrace> {
    graph.require_connected()?;
    check_budget(graph, k)?;
    let selected = match strategy {
        Baseline::TopDegree => top_by(graph.degrees(), k, true),
        Baseline::TopPagerank => top_by(&pagerank(graph, 0.85, 1e-12)?, k, true),
        Baseline::TopAbsorb => {
            let h = if graph.n() <= DEFAULT_DENSE_CAP {
                walk_centrality_exact(graph)?.walk_centrality
            } else {
                approx_hk(graph, 0.3, seed, &SolverOptions::default())?.h_tilde
            };
            top_by(&h, k, false)
        }
        Baseline::Random => {
            let mut rng = stream_rng(seed, 0);
            index::sample(&mut rng, graph.n(), k).into_vec()
        }
    };
    let (gwc_values, gwc_exact) =
        prefix_gwc(graph, &selected, DEFAULT_DENSE_CAP, &SolverOptions::default())?;
    let gains = gwc_values.windows(2).map(|w| w[0] - w[1]).collect();
    Ok(GreedyTrace {
        selected,
        gains,
        gwc_values,
        gwc_exact,
        method: match strategy {
            Baseline::TopDegree => SelectionMethod::TopDegree,
            Baseline::TopPagerank => SelectionMethod::TopPagerank,
            Baseline::TopAbsorb => SelectionMethod::TopAbsorb,
            Baseline::Random => SelectionMethod::Random,
        },
    })
}

/// `1 - (k/(k-1))/e`, the greedy guarantee for `k >= 2`.
pub fn greedy_ratio(k: usize) -> f64 {
    1.0 - (k as f64 / (k as f64 - 1.0)) / std::f64::consts::E
}
