//! Random-walk hitting-time analytics on undirected weighted graphs.
//!
//! The crate computes, for a connected graph:
//!
//! * the walk centrality `H_j` of every vertex (mean hitting time into `j`
//!   from a stationary start) and the Kemeny constant `K`;
//! * the group walk centrality `H(S)` of a vertex set (mean absorption time
//!   into `S` from a stationary start) and its marginal gains;
//! * greedy and exhaustive minimizers of `H(S)` over sets of size `k`.
//!
//! Each quantity is available exactly ([`exact`], dense, up to a few thousand
//! vertices) and approximately ([`sketch`], random projections plus
//! Laplacian solves, nearly linear in the edge count). [`generators`] builds
//! model networks with known Kemeny constants and [`sim`] provides Monte
//! Carlo estimates; both serve as independent checks.

pub mod error;
pub mod exact;
pub mod generators;
pub mod graph;
pub mod greedy;
pub mod io;
pub mod ldl;
pub mod rng;
pub mod sim;
pub mod sketch;
pub mod solver;

pub use error::{Error, Result, ValidationError};
pub use exact::{CentralityMethod, CentralityReport, GwcValue, HittingStructure};
pub use generators::{ModelFamily, ModelSpec};
pub use graph::{
    build_graph, build_graph_with, build_unweighted, largest_connected_component, stationary,
    DuplicatePolicy, GroundedSystem, IncidenceDecomposition, StationaryDistribution,
    WeightedGraph,
};
pub use greedy::{Baseline, GreedyTrace, OptimizerConfig, SelectionMethod, StepProgress};
pub use io::{EdgeListFormat, Indexing, VertexLabels};
pub use sim::EstimateWithError;
pub use sketch::{ApproxCentralityResult, ApproxGainResult, SketchMatrix};
pub use solver::{
    Preconditioner, SddSolver, SolveMethod, SolveReport, SolverOptions, ToleranceMode,
};
