//! Simulation and exact analysis of four-state binary consensus gossip.
//!
//! Nodes hold one of four opinions (strong or weak, positive or negative).
//! When an edge activates, the two endpoints update by fixed pairwise rules;
//! opposite strong opinions annihilate, so the initial strong majority wins.
//! Before they annihilate, two opposite strong opinions behave like a pair of
//! random walkers with a biased transition law, which makes hitting times,
//! effective resistances and meeting times the natural tools for bounding
//! convergence time.

pub mod analysis;
pub mod chains;
pub mod engine;
pub mod error;
pub mod experiments;
pub mod graph;
pub mod protocol;
pub mod rng;

pub use analysis::{bound_report, edge_weights, hitting_matrix, BoundReport, HittingMatrix, WeightedView};
pub use chains::{
    estimate_meeting_time, transition_matrix, JointChain, MeetingEstimate, Start, TokenPair, TransitionMatrix,
    Variant, WalkKind,
};
pub use engine::{run, run_traced, RunResult, TraceRow};
pub use error::{Error, Result};
pub use experiments::{sweep_convergence, SweepConfig, SweepSummary, SweepTopology};
pub use graph::{make_topology, Graph, TopologyKind};
pub use protocol::{apply_update, Counts, NetworkState, Opinion};
pub use rng::SimRng;
