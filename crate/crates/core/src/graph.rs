//! Undirected weighted graphs in compressed adjacency form, plus the
//! matrix-free operators every engine in the crate is built on: the
//! Laplacian `L = D - A`, the grounded Laplacian `L_{-S}` obtained by deleting
//! the rows and columns of an absorbing set `S`, and its split into an
//! interior Laplacian plus a nonnegative diagonal.

use std::collections::VecDeque;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result, ValidationError};
use crate::sim::AliasTables;

/// How [`build_graph_with`] treats a repeated vertex pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DuplicatePolicy {
    #[default]
    Reject,
    /// Sum the weights of repeated pairs into one edge.
    Merge,
}

/// Immutable undirected graph with strictly positive edge weights.
///
/// Adjacency is stored in CSR form with each neighbour list sorted by vertex
/// id. Edges are also kept once each as `(u, v, w)` with `u < v`, sorted
/// lexicographically; that order is the canonical edge order used by the
/// incidence matrix and by edge-list output.
#[derive(Debug)]
pub struct WeightedGraph {
    n: usize,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    edges: Vec<(usize, usize, f64)>,
    degree: Vec<f64>,
    total_degree: f64,
    w_min: f64,
    w_max: f64,
    alias: OnceLock<AliasTables>,
}

impl Clone for WeightedGraph {
    fn clone(&self) -> Self {
        Self {
            n: self.n,
            offsets: self.offsets.clone(),
            targets: self.targets.clone(),
            weights: self.weights.clone(),
            edges: self.edges.clone(),
            degree: self.degree.clone(),
            total_degree: self.total_degree,
            w_min: self.w_min,
            w_max: self.w_max,
            alias: OnceLock::new(),
        }
    }
}

impl PartialEq for WeightedGraph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

/// Build a graph from `(u, v, weight)` triples, rejecting duplicates.
pub fn build_graph(edges: &[(usize, usize, f64)], n: usize) -> Result<WeightedGraph> {
    build_graph_with(edges, n, DuplicatePolicy::Reject)
}

/// Build a graph with every weight set to 1.
pub fn build_unweighted(edges: &[(usize, usize)], n: usize) -> Result<WeightedGraph> {
    let weighted: Vec<_> = edges.iter().map(|&(u, v)| (u, v, 1.0)).collect();
    build_graph(&weighted, n)
}

pub fn build_graph_with(
    edges: &[(usize, usize, f64)],
    n: usize,
    duplicates: DuplicatePolicy,
) -> Result<WeightedGraph> {
    if n == 0 {
        return Err(ValidationError::Empty.into());
    }
    let mut canon = Vec::with_capacity(edges.len());
    for &(u, v, w) in edges {
        for id in [u, v] {
            if id >= n {
                return Err(ValidationError::OutOfRange { id, n }.into());
            }
        }
        if u == v {
            return Err(ValidationError::SelfLoop { vertex: u }.into());
        }
        if !(w.is_finite() && w > 0.0) {
            return Err(ValidationError::BadWeight { u, v, weight: w }.into());
        }
        canon.push((u.min(v), u.max(v), w));
    }
    // Stable sort keeps input order among duplicates so merged sums are
    // reproducible.
    canon.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut dedup: Vec<(usize, usize, f64)> = Vec::with_capacity(canon.len());
    for (u, v, w) in canon {
        match dedup.last_mut() {
            Some(last) if last.0 == u && last.1 == v => match duplicates {
                DuplicatePolicy::Reject => {
                    return Err(ValidationError::DuplicateEdge { u, v }.into())
                }
                DuplicatePolicy::Merge => last.2 += w,
            },
            _ => dedup.push((u, v, w)),
        }
    }
    Ok(WeightedGraph::from_canonical_edges(n, dedup))
}

impl WeightedGraph {
    /// `edges` must already be canonical: `u < v`, sorted, unique, valid weights.
    fn from_canonical_edges(n: usize, edges: Vec<(usize, usize, f64)>) -> Self {
        let mut count = vec![0usize; n + 1];
        for &(u, v, _) in &edges {
            count[u + 1] += 1;
            count[v + 1] += 1;
        }
        for i in 0..n {
            count[i + 1] += count[i];
        }
        let offsets = count;
        let mut fill = offsets.clone();
        let mut targets = vec![0usize; 2 * edges.len()];
        let mut weights = vec![0.0; 2 * edges.len()];
        // Edges are sorted by (u, v), so pushing v into u's list and u into
        // v's list in this order leaves every neighbour list sorted.
        for &(u, v, w) in &edges {
            targets[fill[v]] = u;
            weights[fill[v]] = w;
            fill[v] += 1;
        }
        for &(u, v, w) in &edges {
            targets[fill[u]] = v;
            weights[fill[u]] = w;
            fill[u] += 1;
        }
        for i in 0..n {
            let (s, e) = (offsets[i], offsets[i + 1]);
            debug_assert!(targets[s..e].windows(2).all(|p| p[0] < p[1]));
        }
        let degree: Vec<f64> = (0..n)
            .map(|i| weights[offsets[i]..offsets[i + 1]].iter().sum())
            .collect();
        let total_degree = degree.iter().sum();
        let (w_min, w_max) = if edges.is_empty() {
            (0.0, 0.0)
        } else {
            edges.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), e| {
                (lo.min(e.2), hi.max(e.2))
            })
        };
        Self {
            n,
            offsets,
            targets,
            weights,
            edges,
            degree,
            total_degree,
            w_min,
            w_max,
            alias: OnceLock::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list: `(u, v, w)` with `u < v`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn degree(&self, v: usize) -> f64 {
        self.degree[v]
    }

    pub fn degrees(&self) -> &[f64] {
        &self.degree
    }

    /// `d`, the sum of all weighted degrees (twice the total edge weight).
    pub fn total_degree(&self) -> f64 {
        self.total_degree
    }

    /// Smallest edge weight, or 0 for an edgeless graph.
    pub fn w_min(&self) -> f64 {
        self.w_min
    }

    /// Largest edge weight, or 0 for an edgeless graph.
    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    pub fn max_degree(&self) -> f64 {
        self.degree.iter().copied().fold(0.0, f64::max)
    }

    /// Neighbours of `v` in increasing id order, with edge weights.
    pub fn neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.offsets[v], self.offsets[v + 1]);
        self.targets[s..e]
            .iter()
            .copied()
            .zip(self.weights[s..e].iter().copied())
    }

    pub(crate) fn csr(&self) -> (&[usize], &[usize], &[f64]) {
        (&self.offsets, &self.targets, &self.weights)
    }

    pub(crate) fn alias_tables(&self) -> &AliasTables {
        self.alias.get_or_init(|| AliasTables::build(self))
    }

    /// Weight of edge `{u, v}`, or `None` when they are not adjacent.
    pub fn weight(&self, u: usize, v: usize) -> Option<f64> {
        let (s, e) = (self.offsets[u], self.offsets[u + 1]);
        self.targets[s..e]
            .binary_search(&v)
            .ok()
            .map(|k| self.weights[s + k])
    }

    /// Component label per vertex, numbered in order of smallest member.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for root in 0..self.n {
            if label[root] != usize::MAX {
                continue;
            }
            label[root] = count;
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                for (u, _) in self.neighbors(v) {
                    if label[u] == usize::MAX {
                        label[u] = count;
                        queue.push_back(u);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    pub fn is_connected(&self) -> bool {
        self.components().0 == 1
    }

    pub(crate) fn require_connected(&self) -> Result<()> {
        if self.is_connected() {
            Ok(())
        } else {
            Err(Error::Disconnected)
        }
    }

    pub(crate) fn check_vertex(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "vertex {v} out of range for {} vertices",
                self.n
            )))
        }
    }

    /// `y = L x` without allocating.
    pub fn laplacian_mul_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let (s, e) = (self.offsets[i], self.offsets[i + 1]);
            let mut acc = self.degree[i] * x[i];
            for k in s..e {
                acc -= self.weights[k] * x[self.targets[k]];
            }
            y[i] = acc;
        }
    }

    /// Dense `D - A`, for tests and the exact engine.
    pub fn laplacian_dense(&self) -> DMatrix<f64> {
        let mut l = DMatrix::zeros(self.n, self.n);
        for &(u, v, w) in &self.edges {
            l[(u, v)] -= w;
            l[(v, u)] -= w;
            l[(u, u)] += w;
            l[(v, v)] += w;
        }
        l
    }

    /// Dense row-stochastic transition matrix `P = D^{-1} A`.
    pub fn transition_dense(&self) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.n, self.n);
        for &(u, v, w) in &self.edges {
            p[(u, v)] = w / self.degree[u];
            p[(v, u)] = w / self.degree[v];
        }
        p
    }
}

/// Extract the largest connected component.
///
/// Ties between equally large components go to the one holding the smallest
/// original vertex id. Returns the relabelled subgraph (original relative
/// order preserved) and the old-to-new map, `None` for dropped vertices.
pub fn largest_connected_component(
    graph: &WeightedGraph,
) -> Result<(WeightedGraph, Vec<Option<usize>>)> {
    if graph.n() == 0 {
        return Err(ValidationError::Empty.into());
    }
    let (count, label) = graph.components();
    let mut sizes = vec![0usize; count];
    for &c in &label {
        sizes[c] += 1;
    }
    // Components are numbered by smallest member, so the first maximum wins ties.
    let mut best = 0;
    for c in 1..count {
        if sizes[c] > sizes[best] {
            best = c;
        }
    }
    let mut map = vec![None; graph.n()];
    let mut next = 0;
    for v in 0..graph.n() {
        if label[v] == best {
            map[v] = Some(next);
            next += 1;
        }
    }
    let edges: Vec<_> = graph
        .edges()
        .iter()
        .filter_map(|&(u, v, w)| Some((map[u]?, map[v]?, w)))
        .collect();
    // Relabelling is monotone, so the edge list stays canonical.
    Ok((WeightedGraph::from_canonical_edges(next, edges), map))
}

/// Stationary distribution of the simple random walk, `pi_i = d_i / d`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationaryDistribution {
    pub pi: Vec<f64>,
}

pub fn stationary(graph: &WeightedGraph) -> Result<StationaryDistribution> {
    graph.require_connected()?;
    if graph.n() == 1 {
        return Ok(StationaryDistribution { pi: vec![1.0] });
    }
    let d = graph.total_degree();
    Ok(StationaryDistribution {
        pi: graph.degrees().iter().map(|&di| di / d).collect(),
    })
}

pub fn apply_laplacian(graph: &WeightedGraph, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != graph.n() {
        return Err(Error::DimensionMismatch {
            expected: graph.n(),
            got: x.len(),
        });
    }
    let mut y = vec![0.0; x.len()];
    graph.laplacian_mul_into(x, &mut y);
    Ok(y)
}

/// The Laplacian with the rows and columns of an absorbing set deleted.
///
/// Free vertices are indexed `0..n - |S|` in increasing original id.
#[derive(Debug, Clone)]
pub struct GroundedSystem<'g> {
    graph: &'g WeightedGraph,
    absorbed: Vec<usize>,
    free: Vec<usize>,
    position: Vec<Option<usize>>,
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
    diagonal: Vec<f64>,
    boundary: Vec<f64>,
}

impl<'g> GroundedSystem<'g> {
    /// `absorbed` may be in any order but must be nonempty, in range,
    /// duplicate-free, and leave at least one free vertex.
    pub fn new(graph: &'g WeightedGraph, absorbed: &[usize]) -> Result<Self> {
        let n = graph.n();
        let mut set = absorbed.to_vec();
        set.sort_unstable();
        if set.is_empty() {
            return Err(Error::InvalidSet("absorbing set is empty".into()));
        }
        if let Some(&v) = set.iter().find(|&&v| v >= n) {
            return Err(Error::InvalidSet(format!(
                "vertex {v} out of range for {n} vertices"
            )));
        }
        if set.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidSet("absorbing set has repeated vertices".into()));
        }
        if set.len() == n {
            return Err(Error::InvalidSet("absorbing set covers every vertex".into()));
        }
        let mut position = vec![None; n];
        let mut in_set = vec![false; n];
        for &s in &set {
            in_set[s] = true;
        }
        let free: Vec<usize> = (0..n).filter(|&v| !in_set[v]).collect();
        for (i, &v) in free.iter().enumerate() {
            position[v] = Some(i);
        }
        let mut offsets = Vec::with_capacity(free.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        let mut boundary = Vec::with_capacity(free.len());
        offsets.push(0);
        for &v in &free {
            let mut z = 0.0;
            for (u, w) in graph.neighbors(v) {
                match position[u] {
                    Some(pu) => {
                        targets.push(pu);
                        weights.push(w);
                    }
                    None => z += w,
                }
            }
            boundary.push(z);
            offsets.push(targets.len());
        }
        let diagonal = free.iter().map(|&v| graph.degree(v)).collect();
        Ok(Self {
            graph,
            absorbed: set,
            free,
            position,
            offsets,
            targets,
            weights,
            diagonal,
            boundary,
        })
    }

    pub fn graph(&self) -> &'g WeightedGraph {
        self.graph
    }

    /// Absorbing vertices, sorted.
    pub fn absorbed(&self) -> &[usize] {
        &self.absorbed
    }

    /// Original ids of the free vertices, in free-index order.
    pub fn free_vertices(&self) -> &[usize] {
        &self.free
    }

    /// Free index of an original vertex, `None` if it is absorbed.
    pub fn free_index(&self, v: usize) -> Option<usize> {
        self.position.get(v).copied().flatten()
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Diagonal of `L_{-S}`: the full weighted degrees of the free vertices.
    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `d_{-S}`, identical to [`Self::diagonal`] but named for its role as a
    /// right-hand side.
    pub fn degrees(&self) -> &[f64] {
        &self.diagonal
    }

    /// Per free vertex, the total weight of its edges into the absorbing set.
    pub fn boundary_mass(&self) -> &[f64] {
        &self.boundary
    }

    /// `pi_{-S}`.
    pub fn stationary_free(&self) -> Vec<f64> {
        let d = self.graph.total_degree();
        self.diagonal.iter().map(|&di| di / d).collect()
    }

    pub(crate) fn max_diagonal(&self) -> f64 {
        self.diagonal.iter().copied().fold(0.0, f64::max)
    }

    pub fn mul_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.free.len() {
            let (s, e) = (self.offsets[i], self.offsets[i + 1]);
            let mut acc = self.diagonal[i] * x[i];
            for k in s..e {
                acc -= self.weights[k] * x[self.targets[k]];
            }
            y[i] = acc;
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let k = self.dim();
        let mut a = DMatrix::zeros(k, k);
        for i in 0..k {
            a[(i, i)] = self.diagonal[i];
            for p in self.offsets[i]..self.offsets[i + 1] {
                a[(i, self.targets[p])] -= self.weights[p];
            }
        }
        a
    }

    /// Interior edges in free indices, `(a, b, w)` with `a < b`, in
    /// canonical order of the original graph.
    pub fn interior_edges(&self) -> Vec<(usize, usize, f64)> {
        self.graph
            .edges()
            .iter()
            .filter_map(|&(u, v, w)| Some((self.position[u]?, self.position[v]?, w)))
            .collect()
    }
}

pub fn apply_grounded(system: &GroundedSystem<'_>, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            got: x.len(),
        });
    }
    let mut y = vec![0.0; x.len()];
    system.mul_into(x, &mut y);
    Ok(y)
}

/// `L_{-S} = B'^T W' B' + Z`: the Laplacian of the subgraph induced on the
/// free vertices plus the diagonal of edge mass leaking into `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceDecomposition {
    /// Rows of `B'` with the matching diagonal of `W'`; tail first.
    pub interior_edges: Vec<(usize, usize, f64)>,
    /// Diagonal of `Z`.
    pub boundary_mass: Vec<f64>,
}

impl IncidenceDecomposition {
    pub fn dim(&self) -> usize {
        self.boundary_mass.len()
    }

    /// Dense `B'^T W' B' + Z`.
    pub fn reassemble(&self) -> DMatrix<f64> {
        let k = self.dim();
        let mut a = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(
            &self.boundary_mass,
        ));
        for &(u, v, w) in &self.interior_edges {
            a[(u, u)] += w;
            a[(v, v)] += w;
            a[(u, v)] -= w;
            a[(v, u)] -= w;
        }
        debug_assert_eq!(a.nrows(), k);
        a
    }
}

pub fn incidence_decomposition(system: &GroundedSystem<'_>) -> IncidenceDecomposition {
    IncidenceDecomposition {
        interior_edges: system.interior_edges(),
        boundary_mass: system.boundary_mass().to_vec(),
    }
}
