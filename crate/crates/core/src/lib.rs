//! Contiguous, population-balanced districting of node-weighted adjacency
//! graphs by adaptive randomized rounding.
//!
//! A plan assigns every node to one of `k` districts. Feasible plans have
//! connected, nonempty districts whose populations lie within a relative
//! deviation of the mean. Among feasible plans the solver minimizes the
//! gerrymander score: for each district, the smallest sum of hop distances
//! from one of its nodes (the center) to all of its nodes.
//!
//! * [`graph`]: adjacency graphs and all-pairs hop distances.
//! * [`model`]: instances, plans, scores and the two-phase objective.
//! * [`rounding`]: fractional seeds and their rounding to connected partitions.
//! * [`arr`]: the adaptive randomized rounding search.
//! * [`oracle`]: exhaustive enumeration for tiny instances.
//! * [`io`]: CSV files, reports and synthetic instance generators.

pub mod arr;
pub mod error;
pub mod graph;
pub mod io;
pub mod model;
pub mod oracle;
pub mod rounding;

pub use arr::{run_arr, ArrConfig, ArrOutcome, PerturbationMode, TrialTrace};
pub use error::{Error, GraphError, Result};
pub use graph::{all_pairs_distances, build_graph, AdjacencyGraph, DistanceMatrix, NodeId};
pub use model::{
    conditional_objective, district_score, evaluate, infeasibility_score, is_feasible, make_instance,
    total_score_phase2, Deviation, DistrictScore, Plan, ProblemInstance, Score,
};
pub use rounding::{round_to_plan, FractionalSeed};
