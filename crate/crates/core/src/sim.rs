//! Monte Carlo random walks, used as an independent statistical check on the
//! exact and sketched engines.
//!
//! Trials are split into fixed-size chunks by trial index; chunk `c` draws
//! from stream `c` of the caller's seed and chunk results are merged in chunk
//! order, so estimates are identical for any thread count.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::rng::stream_rng;

const CHUNK: u64 = 4096;

/// Vose alias table over a finite set of weights.
#[derive(Debug, Clone)]
struct Alias {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl Alias {
    fn new(weights: &[f64]) -> Self {
        let k = weights.len();
        let total: f64 = weights.iter().sum();
        let mut scaled: Vec<f64> = weights.iter().map(|w| w * k as f64 / total).collect();
        let mut prob = vec![1.0; k];
        let mut alias: Vec<usize> = (0..k).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) = (0..k).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // Leftovers are 1 up to rounding.
        Self { prob, alias }
    }

    #[inline]
    fn sample(&self, rng: &mut ChaCha8Rng) -> usize {
        let i = rng.gen_range(0..self.prob.len());
        if rng.gen::<f64>() < self.prob[i] {
            i
        } else {
            self.alias[i]
        }
    }
}

/// Per-vertex neighbour samplers plus a stationary-distribution sampler.
/// Built lazily and cached on the graph.
#[derive(Debug)]
pub(crate) struct AliasTables {
    /// Entry `k` of vertex `v`'s list lives at `offsets[v] + k`, mirroring
    /// the CSR layout; `alias` stores the CSR position of the alias target.
    prob: Vec<f64>,
    alias: Vec<usize>,
    stationary: Alias,
}

impl AliasTables {
    pub(crate) fn build(graph: &WeightedGraph) -> Self {
        let (offsets, _, weights) = graph.csr();
        let mut prob = vec![1.0; weights.len()];
        let mut alias: Vec<usize> = (0..weights.len()).collect();
        for v in 0..graph.n() {
            let (s, e) = (offsets[v], offsets[v + 1]);
            if s == e {
                continue;
            }
            let local = Alias::new(&weights[s..e]);
            prob[s..e].copy_from_slice(&local.prob);
            for (k, a) in local.alias.into_iter().enumerate() {
                alias[s + k] = s + a;
            }
        }
        Self {
            prob,
            alias,
            stationary: Alias::new(graph.degrees()),
        }
    }
}

/// One step of the walk from `v`, drawn with probability `a_vu / d_v`.
#[inline]
fn step(graph: &WeightedGraph, tables: &AliasTables, v: usize, rng: &mut ChaCha8Rng) -> usize {
    let (offsets, targets, _) = graph.csr();
    let (s, e) = (offsets[v], offsets[v + 1]);
    let k = s + rng.gen_range(0..e - s);
    if rng.gen::<f64>() < tables.prob[k] {
        targets[k]
    } else {
        targets[tables.alias[k]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub trials: u64,
    pub seed: u64,
}

impl EstimateWithError {
    /// Number of standard errors separating the estimate from `exact`.
    /// A zero-variance estimate is either exact (0) or infinitely far.
    pub fn z_score(&self, exact: f64) -> f64 {
        let diff = (self.mean - exact).abs();
        if self.stderr > 0.0 {
            diff / self.stderr
        } else if diff <= 1e-12 * exact.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// The default step cap, `100 n^2 w_max / w_min`.
pub fn default_max_steps(graph: &WeightedGraph) -> u64 {
    let n = graph.n() as f64;
    let ratio = if graph.m() == 0 {
        1.0
    } else {
        graph.w_max() / graph.w_min()
    };
    let cap = 100.0 * n * n * ratio;
    if cap >= u64::MAX as f64 {
        u64::MAX
    } else {
        (cap as u64).max(1)
    }
}

#[derive(Default)]
struct Tally {
    sum: f64,
    sum_sq: f64,
    count: u64,
    truncated: u64,
}

/// Run `trials` independent samples of `sample(rng) -> Option<steps>`
/// (`None` = truncated) and merge them deterministically.
fn run_trials<F>(trials: u64, seed: u64, max_steps: u64, sample: F) -> Result<EstimateWithError>
where
    F: Fn(&mut ChaCha8Rng) -> Option<u64> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let chunks = trials.div_ceil(CHUNK);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream_rng(seed, c);
            let len = CHUNK.min(trials - c * CHUNK);
            let mut t = Tally::default();
            for _ in 0..len {
                match sample(&mut rng) {
                    Some(steps) => {
                        let s = steps as f64;
                        t.sum += s;
                        t.sum_sq += s * s;
                        t.count += 1;
                    }
                    None => t.truncated += 1,
                }
            }
            t
        })
        .collect();
    let mut total = Tally::default();
    for t in tallies {
        total.sum += t.sum;
        total.sum_sq += t.sum_sq;
        total.count += t.count;
        total.truncated += t.truncated;
    }
    if total.truncated > 0 {
        return Err(Error::WalkTruncated {
            truncated: total.truncated,
            trials,
            max_steps,
        });
    }
    let n = total.count as f64;
    let mean = total.sum / n;
    let stderr = if total.count > 1 {
        let var = ((total.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(EstimateWithError {
        mean,
        stderr,
        trials,
        seed,
    })
}

fn target_mask(graph: &WeightedGraph, targets: &[usize]) -> Result<Vec<bool>> {
    if targets.is_empty() {
        return Err(Error::InvalidSet("target set is empty".into()));
    }
    let mut mask = vec![false; graph.n()];
    for &t in targets {
        if t >= graph.n() {
            return Err(Error::InvalidSet(format!(
                "vertex {t} out of range for {} vertices",
                graph.n()
            )));
        }
        mask[t] = true;
    }
    Ok(mask)
}

/// Walk from `start` until a masked vertex is reached; `None` if it takes
/// more than `max_steps` steps.
#[inline]
fn walk_until(
    graph: &WeightedGraph,
    tables: &AliasTables,
    start: usize,
    mask: &[bool],
    max_steps: u64,
    rng: &mut ChaCha8Rng,
) -> Option<(u64, usize)> {
    let mut v = start;
    let mut steps = 0u64;
    while !mask[v] {
        if steps == max_steps || graph.degree(v) == 0.0 {
            return None;
        }
        v = step(graph, tables, v, rng);
        steps += 1;
    }
    Some((steps, v))
}

/// Mean first-passage time from `start` into `targets`.
pub fn simulate_hitting(
    graph: &WeightedGraph,
    start: usize,
    targets: &[usize],
    trials: u64,
    max_steps: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    graph.check_vertex(start)?;
    let mask = target_mask(graph, targets)?;
    let tables = graph.alias_tables();
    run_trials(trials, seed, max_steps, |rng| {
        walk_until(graph, tables, start, &mask, max_steps, rng).map(|(s, _)| s)
    })
}

/// Group walk centrality `H(S)`: start drawn from the stationary
/// distribution, run until absorbed in `S`. Free starts only contribute
/// through their walk lengths; starts inside `S` contribute 0.
pub fn estimate_gwc(
    graph: &WeightedGraph,
    set: &[usize],
    trials: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    estimate_gwc_with(graph, set, trials, default_max_steps(graph), seed)
}

pub fn estimate_gwc_with(
    graph: &WeightedGraph,
    set: &[usize],
    trials: u64,
    max_steps: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    graph.require_connected()?;
    let mask = target_mask(graph, set)?;
    if mask.iter().all(|&b| b) {
        return Err(Error::InvalidSet("absorbing set covers every vertex".into()));
    }
    let tables = graph.alias_tables();
    run_trials(trials, seed, max_steps, |rng| {
        let start = tables.stationary.sample(rng);
        walk_until(graph, tables, start, &mask, max_steps, rng).map(|(s, _)| s)
    })
}

/// Walk centrality `H_j`, the stationary-start mean hitting time of `j`.
pub fn estimate_walk_centrality(
    graph: &WeightedGraph,
    j: usize,
    trials: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    graph.check_vertex(j)?;
    estimate_gwc(graph, &[j], trials, seed)
}

/// Kemeny constant: start and target drawn independently from the
/// stationary distribution.
pub fn estimate_kemeny(graph: &WeightedGraph, trials: u64, seed: u64) -> Result<EstimateWithError> {
    graph.require_connected()?;
    let max_steps = default_max_steps(graph);
    let tables = graph.alias_tables();
    run_trials(trials, seed, max_steps, |rng| {
        let start = tables.stationary.sample(rng);
        let target = tables.stationary.sample(rng);
        let mut v = start;
        let mut steps = 0u64;
        while v != target {
            if steps == max_steps {
                return None;
            }
            v = step(graph, tables, v, rng);
            steps += 1;
        }
        Some(steps)
    })
}

/// Detour time `D_ij(S)`: walk from `i` until it first reaches `S`, then on
/// until it first reaches `j`.
pub fn estimate_detour(
    graph: &WeightedGraph,
    set: &[usize],
    i: usize,
    j: usize,
    trials: u64,
    seed: u64,
) -> Result<EstimateWithError> {
    graph.require_connected()?;
    graph.check_vertex(i)?;
    graph.check_vertex(j)?;
    let mask = target_mask(graph, set)?;
    let mut goal = vec![false; graph.n()];
    goal[j] = true;
    let max_steps = default_max_steps(graph);
    let tables = graph.alias_tables();
    run_trials(trials, seed, max_steps, |rng| {
        let (first, hit) = walk_until(graph, tables, i, &mask, max_steps, rng)?;
        let (second, _) = walk_until(graph, tables, hit, &goal, max_steps - first, rng)?;
        Some(first + second)
    })
}
