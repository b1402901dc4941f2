mod support;

use std::collections::{HashSet, VecDeque};

use binvote_core::engine::{activate, run, run_traced, DEFAULT_MAX_TICKS};
use binvote_core::graph::{make_topology, TopologyKind};
use binvote_core::protocol::{apply_update, init_state, strong_split, NetworkState, Opinion};
use binvote_core::SimRng;
use rand::{Rng, SeedableRng};
use support::{chi_square, chi_square_99, random_odd_graph};

#[test]
fn star_edge_activation_is_uniform() {
    // Edge (hub, leaf) fires from the hub with 1/5 * 1/4 and from the leaf
    // with 1/5 * 1, so every leaf edge has probability 1/4.
    let g = make_topology(TopologyKind::Star, 5).unwrap();
    let mut rng = SimRng::seed_from_u64(99);
    let ticks = 1_000_000u64;
    let mut counts = [0u64; 4];
    for _ in 0..ticks {
        let (i, j) = activate(&g, &mut rng).unwrap();
        counts[i.max(j) - 1] += 1;
    }
    let expected = [ticks as f64 / 4.0; 4];
    assert!(chi_square(&counts, &expected) < chi_square_99(3), "{counts:?}");
}

#[test]
fn zero_margin_two_nodes_cannot_converge() {
    // Every state reachable from (S+, S-) on one edge, both orientations.
    let start = [Opinion::StrongPos, Opinion::StrongNeg];
    let mut seen = HashSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        let (a, b) = apply_update(s[0], s[1]);
        let (d, c) = apply_update(s[1], s[0]);
        for next in [[a, b], [c, d]] {
            if seen.insert(next) {
                queue.push_back(next);
            }
        }
    }
    assert_eq!(seen.len(), 3);
    for s in &seen {
        assert!(!NetworkState::new(s.to_vec()).unwrap().is_converged(), "{s:?}");
    }
}

#[test]
fn majority_wins_on_random_graphs() {
    let mut rng = SimRng::seed_from_u64(2718);
    for k in 0..200 {
        let g = random_odd_graph(&mut rng, 15);
        let n = g.n();
        let margin = 2 * rng.random_range(0..=(n - 1) / 2) + 1;
        let (pos, neg) = strong_split(n, margin).unwrap();
        let s0 = init_state(n, pos, neg, &mut rng).unwrap();
        let r = run(&g, &s0, k, DEFAULT_MAX_TICKS);
        assert!(r.converged, "graph {k} did not converge");
        assert_eq!(r.final_sign, Some(1));
    }
}

#[test]
fn negative_majority_wins() {
    let g = make_topology(TopologyKind::Cycle, 9).unwrap();
    let mut rng = SimRng::seed_from_u64(5);
    let s0 = init_state(9, 4, 5, &mut rng).unwrap();
    let r = run(&g, &s0, 1, DEFAULT_MAX_TICKS);
    assert!(r.converged);
    assert_eq!(r.final_sign, Some(-1));
    assert_eq!(r.margin, -1);
}

#[test]
fn traced_runs_conserve_margin() {
    let mut rng = SimRng::seed_from_u64(31);
    for k in 0..50 {
        let g = random_odd_graph(&mut rng, 21);
        let n = g.n();
        let margin = if n >= 3 && k % 2 == 0 { 3 } else { 1 };
        let (pos, neg) = strong_split(n, margin).unwrap();
        let s0 = init_state(n, pos, neg, &mut rng).unwrap();
        let (r, rows) = run_traced(&g, &s0, k, DEFAULT_MAX_TICKS, 1);
        assert!(r.converged);
        let mut strong = usize::MAX;
        for row in &rows {
            assert_eq!(row.counts.margin(), margin as i64);
            assert_eq!(row.counts.total(), n);
            assert!(row.counts.strong() <= strong);
            strong = row.counts.strong();
        }
        let last = rows.last().unwrap().counts;
        assert_eq!(last.strong_neg + last.weak_neg, 0);
    }
}

#[test]
fn runs_are_deterministic() {
    let g = make_topology(TopologyKind::Star, 21).unwrap();
    let mut rng = SimRng::seed_from_u64(8);
    let s0 = init_state(21, 11, 10, &mut rng).unwrap();
    assert_eq!(run_traced(&g, &s0, 77, DEFAULT_MAX_TICKS, 10), run_traced(&g, &s0, 77, DEFAULT_MAX_TICKS, 10));
    assert_eq!(run(&g, &s0, 77, DEFAULT_MAX_TICKS), run_traced(&g, &s0, 77, DEFAULT_MAX_TICKS, 10).0);
    assert_ne!(run(&g, &s0, 77, DEFAULT_MAX_TICKS).ticks, run(&g, &s0, 78, DEFAULT_MAX_TICKS).ticks);
}

#[test]
fn cap_exhaustion_is_reported() {
    let g = make_topology(TopologyKind::Path, 101).unwrap();
    let mut rng = SimRng::seed_from_u64(3);
    let s0 = init_state(101, 51, 50, &mut rng).unwrap();
    let r = run(&g, &s0, 1, 10);
    assert!(!r.converged);
    assert_eq!(r.ticks, 10);
}
