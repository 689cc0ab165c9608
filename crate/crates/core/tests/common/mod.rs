//! Random instances shared by the property and acceptance suites.

#![allow(dead_code)]

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use walkcent::rng::stream_rng;
use walkcent::{build_graph, build_unweighted, WeightedGraph};

/// A connected graph on `n` vertices: a random recursive tree on a shuffled
/// vertex order, plus each remaining pair independently with probability
/// `p`. Weights are uniform in `[0.5, 2]` when `weighted`, else 1.
pub fn random_connected(n: usize, p: f64, weighted: bool, seed: u64) -> WeightedGraph {
    let mut rng = stream_rng(seed, 0x6a09);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut pairs = HashSet::new();
    for i in 1..n {
        let j = rng.gen_range(0..i);
        let (a, b) = (order[i], order[j]);
        pairs.insert((a.min(b), a.max(b)));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(p) {
                pairs.insert((a, b));
            }
        }
    }
    let mut pairs: Vec<_> = pairs.into_iter().collect();
    pairs.sort_unstable();
    let edges: Vec<_> = pairs
        .into_iter()
        .map(|(a, b)| {
            let w = if weighted { rng.gen_range(0.5..=2.0) } else { 1.0 };
            (a, b, w)
        })
        .collect();
    build_graph(&edges, n).unwrap()
}

/// A random subset of `0..n` of the given size, sorted.
pub fn random_subset(n: usize, size: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut s = rand::seq::index::sample(rng, n, size).into_vec();
    s.sort_unstable();
    s
}

pub fn path(n: usize) -> WeightedGraph {
    let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
    build_unweighted(&edges, n).unwrap()
}

pub fn cycle(n: usize) -> WeightedGraph {
    let edges: Vec<_> = (0..n).map(|v| (v, (v + 1) % n)).collect();
    build_unweighted(&edges, n).unwrap()
}

pub fn star(n: usize) -> WeightedGraph {
    let edges: Vec<_> = (1..n).map(|v| (0, v)).collect();
    build_unweighted(&edges, n).unwrap()
}

pub fn complete(n: usize) -> WeightedGraph {
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            edges.push((a, b));
        }
    }
    build_unweighted(&edges, n).unwrap()
}

/// A connected simple 3-regular graph on `n` (even) vertices from the
/// configuration model, resampled until simple and connected.
pub fn random_cubic(n: usize, seed: u64) -> WeightedGraph {
    assert!(n >= 4 && n % 2 == 0);
    let mut rng = stream_rng(seed, 0xc0b1c);
    loop {
        let mut stubs: Vec<usize> = (0..n).flat_map(|v| [v, v, v]).collect();
        stubs.shuffle(&mut rng);
        let mut pairs = HashSet::new();
        let simple = stubs.chunks(2).all(|c| {
            let (a, b) = (c[0].min(c[1]), c[0].max(c[1]));
            a != b && pairs.insert((a, b))
        });
        if !simple {
            continue;
        }
        let mut edges: Vec<_> = pairs.into_iter().collect();
        edges.sort_unstable();
        let g = build_unweighted(&edges, n).unwrap();
        if g.is_connected() {
            return g;
        }
    }
}
