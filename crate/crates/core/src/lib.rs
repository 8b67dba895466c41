//! Exact weighted bandwidth minimization for site orderings.
//!
//! Given points in the plane, the interaction between two sites decays as
//! `1/d^6`. An ordering of the sites maps every vertex to a position, and its
//! weighted bandwidth is the largest `u_ij * |pos(i) - pos(j)|` over all pairs.
//! This crate finds orderings that minimize that quantity exactly and compares
//! them with the Reverse Cuthill-McKee heuristic.
//!
//! Modules:
//!
//! * [`instance`]: geometric instances, the generator and the interaction matrix.
//! * [`metrics`]: orderings and the objective functions.
//! * [`rcm`]: Cuthill-McKee and its reverse on the sparse bond graph.
//! * [`exact`]: brute force, branch-and-bound and the LP exporter.
//! * [`harness`]: batch experiments and CSV/JSON reports.
//!
//! The `parallel` feature (on by default) lets the solver and the harness use
//! rayon. Without it every entry point runs sequentially and produces the same
//! objectives.

pub mod exact;
pub mod harness;
pub mod instance;
pub mod metrics;
pub mod rcm;

pub use exact::{
    branch_and_bound, brute_force, export_lp, solve_instance, theoretical_lower_bound,
    write_lp, ExactError, SolveConfig, SolveResult, SolveStatus,
};
pub use harness::{run_suite, summarize, GapReport, GapRow, HarnessError, SuiteOptions, Summary};
pub use instance::{generate, GenParams, Instance, InstanceError, InteractionMatrix};
pub use metrics::{
    classic_bandwidth, permute_matrix, rcm_gap, weighted_bandwidth, Bandwidth, MetricsError,
    Ordering,
};
pub use rcm::{cuthill_mckee, rcm_on_instance, reverse_cuthill_mckee, RcmError};
