//! Asynchronous gossip simulation driven by the merged global clock.
//!
//! One tick is one event of the rate-N merged clock: a node drawn uniformly
//! wakes up, picks a uniform neighbor, and the pair applies the update rules.
//! Inter-arrival times are never sampled; only the event count matters.

use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::graph::Graph;
use crate::protocol::{Counts, NetworkState};
use crate::SimRng;

pub const DEFAULT_MAX_TICKS: u64 = 10_000_000;

pub const TRACE_CSV_HEADER: &str = "tick,s_pos,w_pos,w_neg,s_neg";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RunResult {
    pub converged: bool,
    pub ticks: u64,
    pub final_sign: Option<i8>,
    pub seed: u64,
    pub n: usize,
    pub margin: i64,
}

impl RunResult {
    /// Ticks divided by the global clock rate N.
    pub fn absolute_time(&self) -> f64 {
        self.ticks as f64 / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct TraceRow {
    pub tick: u64,
    pub counts: Counts,
}

/// Draws the activated edge for one tick.
pub fn activate<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Option<(usize, usize)> {
    let i = rng.random_range(0..g.n());
    let neighbors = g.neighbors(i);
    if neighbors.is_empty() {
        return None;
    }
    Some((i, neighbors[rng.random_range(0..neighbors.len())]))
}

/// Advances the state by one tick and returns the activated edge. On a
/// single-node graph the tick is consumed with no activation.
pub fn step<R: Rng + ?Sized>(state: &mut NetworkState, g: &Graph, rng: &mut R) -> Option<(usize, usize)> {
    debug_assert_eq!(state.len(), g.n());
    let edge = activate(g, rng)?;
    state.update_pair(edge.0, edge.1);
    Some(edge)
}

/// Steps until `stop` holds or `max_ticks` ticks were consumed. Returns the
/// tick count and whether `stop` was reached. `observe` sees every state
/// after its tick.
pub fn run_until<R, S, O>(
    g: &Graph,
    state: &mut NetworkState,
    rng: &mut R,
    max_ticks: u64,
    mut stop: S,
    mut observe: O,
) -> (u64, bool)
where
    R: Rng + ?Sized,
    S: FnMut(&NetworkState) -> bool,
    O: FnMut(u64, &NetworkState),
{
    let mut ticks = 0;
    while !stop(state) {
        if ticks == max_ticks {
            return (ticks, false);
        }
        step(state, g, rng);
        ticks += 1;
        observe(ticks, state);
    }
    (ticks, true)
}

fn result(state: &NetworkState, s0: &NetworkState, seed: u64, ticks: u64, converged: bool) -> RunResult {
    RunResult {
        converged,
        ticks,
        final_sign: state.converged_sign(),
        seed,
        n: state.len(),
        margin: s0.counts().margin(),
    }
}

/// Runs to convergence or `max_ticks`, whichever comes first.
pub fn run(g: &Graph, s0: &NetworkState, seed: u64, max_ticks: u64) -> RunResult {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut state = s0.clone();
    let (ticks, converged) = run_until(g, &mut state, &mut rng, max_ticks, NetworkState::is_converged, |_, _| {});
    result(&state, s0, seed, ticks, converged)
}

/// Like [`run`], also sampling counts at tick 0, every `sample_every` ticks,
/// and at the final tick.
pub fn run_traced(
    g: &Graph,
    s0: &NetworkState,
    seed: u64,
    max_ticks: u64,
    sample_every: u64,
) -> (RunResult, Vec<TraceRow>) {
    assert!(sample_every >= 1, "sample_every must be at least 1");
    let mut rng = SimRng::seed_from_u64(seed);
    let mut state = s0.clone();
    let mut rows = vec![TraceRow {
        tick: 0,
        counts: state.counts(),
    }];
    let (ticks, converged) = run_until(
        g,
        &mut state,
        &mut rng,
        max_ticks,
        NetworkState::is_converged,
        |tick, s| {
            if tick % sample_every == 0 {
                rows.push(TraceRow {
                    tick,
                    counts: s.counts(),
                });
            }
        },
    );
    if rows.last().is_some_and(|r| r.tick != ticks) {
        rows.push(TraceRow {
            tick: ticks,
            counts: state.counts(),
        });
    }
    (result(&state, s0, seed, ticks, converged), rows)
}

pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRACE_CSV_HEADER}")?;
    for r in rows {
        let c = r.counts;
        writeln!(
            out,
            "{},{},{},{},{}",
            r.tick, c.strong_pos, c.weak_pos, c.weak_neg, c.strong_neg
        )?;
    }
    Ok(())
}
