//! Fixed workloads shared by the criterion benches.

use binvote_core::graph::{erdos_renyi_connected, make_topology, Graph, TopologyKind};
use binvote_core::protocol::{init_state, strong_split, NetworkState};
use binvote_core::SimRng;
use rand::SeedableRng;

pub const SEED: u64 = 0x5eed;

pub fn star(n: usize) -> Graph {
    make_topology(TopologyKind::Star, n).expect("star")
}

pub fn er(n: usize) -> Graph {
    let mut rng = SimRng::seed_from_u64(SEED);
    erdos_renyi_connected(n, TopologyKind::er_default_p(n), &mut rng, 1000)
        .expect("connected sample")
        .graph
}

/// Margin-one all-strong start.
pub fn margin_one(n: usize) -> NetworkState {
    let (pos, neg) = strong_split(n, 1).expect("odd n");
    let mut rng = SimRng::seed_from_u64(SEED ^ n as u64);
    init_state(n, pos, neg, &mut rng).expect("valid counts")
}
