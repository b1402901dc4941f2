//! Single-walker transition matrices and the two-token joint chains.
//!
//! Two opposite strong opinions move as walkers whose marginal law is the
//! biased walk. Variant `X` is the chain the protocol actually induces:
//! adjacent tokens meet only by crossing the shared edge. Variant `XPrime`
//! doubles the meeting mass of adjacent tokens and drops the matching
//! correction from the stay probability.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, SimRng};
use rand::SeedableRng;

/// Per-trial tick cap for meeting-time estimation.
pub const MEETING_TICK_CAP: u64 = 100_000_000;

const ROW_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkKind {
    Simple,
    Natural,
    Biased,
}

/// Dense row-major `n x n` row-stochastic matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    kind: WalkKind,
    n: usize,
    data: Vec<f64>,
}

impl TransitionMatrix {
    pub fn kind(&self) -> WalkKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_row_slice(self.n, self.n, &self.data)
    }

    /// Largest `|sum_j P_ij - 1|` over rows.
    pub fn max_row_deviation(&self) -> f64 {
        (0..self.n)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest `|(v P)_j - v_j|`.
    pub fn max_stationarity_deviation(&self, v: &[f64]) -> f64 {
        (0..self.n)
            .map(|j| {
                let vp: f64 = (0..self.n).map(|i| v[i] * self.get(i, j)).sum();
                (vp - v[j]).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

/// Hop probability of the biased walk along edge `(i, j)`:
/// `(1/d_i + 1/d_j) / N`. Symmetric bit-for-bit.
pub fn biased_hop(g: &Graph, i: usize, j: usize) -> f64 {
    let (a, b) = (g.degree(i) as f64, g.degree(j) as f64);
    (1.0 / a + 1.0 / b) / g.n() as f64
}

fn clamp_remainder(r: f64) -> f64 {
    if r.abs() < 1e-14 {
        0.0
    } else {
        r
    }
}

/// Builds the simple, natural or biased walk on a connected graph.
pub fn transition_matrix(g: &Graph, kind: WalkKind) -> Result<TransitionMatrix> {
    if !g.is_connected() {
        return Err(Error::Disconnected);
    }
    let n = g.n();
    if kind == WalkKind::Simple && n < 2 {
        return Err(Error::TopologyTooSmall {
            topology: "simple walk",
            min: 2,
            n,
        });
    }
    let nf = n as f64;
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        let d = g.degree(i) as f64;
        let row = &mut data[i * n..(i + 1) * n];
        for &j in g.neighbors(i) {
            row[j] = match kind {
                WalkKind::Simple => 1.0 / d,
                WalkKind::Natural => 1.0 / (nf * d),
                WalkKind::Biased => biased_hop(g, i, j),
            };
        }
        row[i] = match kind {
            WalkKind::Simple => 0.0,
            WalkKind::Natural => 1.0 - 1.0 / nf,
            WalkKind::Biased => clamp_remainder(
                1.0 - 1.0 / nf - g.neighbors(i).iter().map(|&k| 1.0 / (nf * g.degree(k) as f64)).sum::<f64>(),
            ),
        };
        if kind == WalkKind::Natural && g.degree(i) == 0 {
            row[i] = 1.0;
        }
        debug_assert!(row[i] >= 0.0);
    }
    let p = TransitionMatrix { kind, n, data };
    debug_assert!(p.max_row_deviation() <= ROW_TOL);
    Ok(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    X,
    XPrime,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::X => "x",
            Variant::XPrime => "xprime",
        })
    }
}

/// Positions of the two marked tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenPair {
    pub x: usize,
    pub y: usize,
    pub met: bool,
    pub variant: Variant,
}

impl TokenPair {
    pub fn new(x: usize, y: usize, variant: Variant) -> Self {
        Self {
            x,
            y,
            met: x == y,
            variant,
        }
    }
}

/// One-tick outcome of the joint chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum JointOutcome {
    /// First token hops to the node, second stays.
    FirstMoves(usize),
    /// Second token hops to the node, first stays.
    SecondMoves(usize),
    /// Both traverse the shared edge at once (variant `X`); counts as meeting.
    Cross,
    /// Tokens end on the given node (variant `XPrime`).
    MeetAt(usize),
    Stay,
}

impl JointOutcome {
    pub fn is_meeting(self) -> bool {
        matches!(self, JointOutcome::Cross | JointOutcome::MeetAt(_))
    }
}

/// Every one-tick outcome from `(x, y)` with its probability.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    pub x: usize,
    pub y: usize,
    pub variant: Variant,
    pub outcomes: Vec<(JointOutcome, f64)>,
    /// The `XPrime` meeting mass was cut back to keep the stay probability
    /// non-negative.
    pub clamped: bool,
}

impl JointDistribution {
    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|&(_, p)| p).sum()
    }

    pub fn probability(&self, outcome: JointOutcome) -> f64 {
        self.outcomes
            .iter()
            .filter(|&&(o, _)| o == outcome)
            .map(|&(_, p)| p)
            .sum()
    }

    pub fn meet_probability(&self) -> f64 {
        self.outcomes
            .iter()
            .filter(|(o, _)| o.is_meeting())
            .map(|&(_, p)| p)
            .sum()
    }

    pub fn stay_probability(&self) -> f64 {
        self.probability(JointOutcome::Stay)
    }
}

/// The joint chain of one variant on a fixed graph, with hop probabilities
/// precomputed per node.
#[derive(Debug, Clone)]
pub struct JointChain<'g> {
    graph: &'g Graph,
    variant: Variant,
    hops: Vec<Vec<(usize, f64)>>,
    out_mass: Vec<f64>,
}

impl<'g> JointChain<'g> {
    pub fn new(graph: &'g Graph, variant: Variant) -> Result<Self> {
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        if graph.n() < 2 {
            return Err(Error::InvalidArgument("joint chain needs two distinct nodes".into()));
        }
        let hops: Vec<Vec<(usize, f64)>> = (0..graph.n())
            .map(|i| graph.neighbors(i).iter().map(|&j| (j, biased_hop(graph, i, j))).collect())
            .collect();
        let out_mass = hops.iter().map(|h| h.iter().map(|&(_, p)| p).sum()).collect();
        Ok(Self {
            graph,
            variant,
            hops,
            out_mass,
        })
    }

    pub fn graph(&self) -> &Graph {
        self.graph
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// One-tick distribution from tokens at `x != y`.
    pub fn distribution(&self, x: usize, y: usize) -> JointDistribution {
        assert_ne!(x, y, "tokens must be on distinct nodes");
        let mut outcomes = Vec::with_capacity(self.hops[x].len() + self.hops[y].len() + 2);
        outcomes.extend(
            self.hops[x]
                .iter()
                .filter(|&&(i, _)| i != y)
                .map(|&(i, p)| (JointOutcome::FirstMoves(i), p)),
        );
        outcomes.extend(
            self.hops[y]
                .iter()
                .filter(|&&(j, _)| j != x)
                .map(|&(j, p)| (JointOutcome::SecondMoves(j), p)),
        );
        let base_stay = 1.0 - self.out_mass[x] - self.out_mass[y];
        let mut clamped = false;
        let stay = if !self.graph.has_edge(x, y) {
            base_stay
        } else {
            let shared = biased_hop(self.graph, x, y);
            match self.variant {
                Variant::X => {
                    outcomes.push((JointOutcome::Cross, shared));
                    base_stay + shared
                }
                Variant::XPrime => {
                    let mut meet = 2.0 * shared;
                    let mut stay = base_stay;
                    if stay < 0.0 {
                        clamped = true;
                        meet += stay;
                        stay = 0.0;
                    }
                    outcomes.push((JointOutcome::MeetAt(y), meet / 2.0));
                    outcomes.push((JointOutcome::MeetAt(x), meet / 2.0));
                    stay
                }
            }
        };
        outcomes.push((JointOutcome::Stay, clamp_remainder(stay)));
        JointDistribution {
            x,
            y,
            variant: self.variant,
            outcomes,
            clamped,
        }
    }

    fn sample<R: Rng + ?Sized>(dist: &JointDistribution, rng: &mut R, skip_stay: bool) -> JointOutcome {
        let mass = if skip_stay {
            1.0 - dist.stay_probability()
        } else {
            1.0
        };
        let mut u = rng.random::<f64>() * mass;
        let mut last = JointOutcome::Stay;
        for &(o, p) in &dist.outcomes {
            if skip_stay && o == JointOutcome::Stay {
                continue;
            }
            if u < p {
                return o;
            }
            u -= p;
            if p > 0.0 {
                last = o;
            }
        }
        last
    }

    fn apply(pair: &mut TokenPair, outcome: JointOutcome) {
        match outcome {
            JointOutcome::FirstMoves(i) => pair.x = i,
            JointOutcome::SecondMoves(j) => pair.y = j,
            JointOutcome::Cross => {
                std::mem::swap(&mut pair.x, &mut pair.y);
                pair.met = true;
            }
            JointOutcome::MeetAt(v) => {
                pair.x = v;
                pair.y = v;
                pair.met = true;
            }
            JointOutcome::Stay => {}
        }
    }

    /// Advances the pair by exactly one tick.
    pub fn joint_step<R: Rng + ?Sized>(&self, mut pair: TokenPair, rng: &mut R) -> Result<(TokenPair, JointOutcome)> {
        if pair.met {
            return Err(Error::AlreadyMet);
        }
        let dist = self.distribution(pair.x, pair.y);
        let outcome = Self::sample(&dist, rng, false);
        Self::apply(&mut pair, outcome);
        Ok((pair, outcome))
    }

    /// Ticks until the tokens meet, simulated one tick at a time.
    pub fn meeting_ticks_stepwise<R: Rng + ?Sized>(&self, x: usize, y: usize, rng: &mut R, cap: u64) -> Result<u64> {
        let mut pair = TokenPair::new(x, y, self.variant);
        let mut ticks = 0;
        while !pair.met {
            if ticks == cap {
                return Err(Error::TickCapExceeded { x, y, cap });
            }
            pair = self.joint_step(pair, rng)?.0;
            ticks += 1;
        }
        Ok(ticks)
    }

    /// Ticks until the tokens meet. Runs of stay ticks are drawn in one
    /// geometric sample, then the next non-stay outcome is drawn from the
    /// conditional law; the tick count has the same distribution as
    /// [`Self::meeting_ticks_stepwise`].
    pub fn meeting_ticks<R: Rng + ?Sized>(&self, x: usize, y: usize, rng: &mut R, cap: u64) -> Result<u64> {
        let mut pair = TokenPair::new(x, y, self.variant);
        let mut ticks: u64 = 0;
        while !pair.met {
            let dist = self.distribution(pair.x, pair.y);
            let move_p = 1.0 - dist.stay_probability();
            let waited = if move_p >= 1.0 {
                0
            } else {
                Geometric::new(move_p)
                    .map_err(|e| Error::JointDistribution {
                        x: pair.x,
                        y: pair.y,
                        msg: e.to_string(),
                    })?
                    .sample(rng)
            };
            ticks = ticks.saturating_add(waited).saturating_add(1);
            if ticks > cap {
                return Err(Error::TickCapExceeded { x, y, cap });
            }
            Self::apply(&mut pair, Self::sample(&dist, rng, true));
        }
        Ok(ticks)
    }
}

/// Enumerates the one-tick distribution and checks it is a probability law:
/// every entry in `[0, 1]`, total within `1e-12` of one.
pub fn validate_joint_distribution(g: &Graph, x: usize, y: usize, variant: Variant) -> Result<JointDistribution> {
    if x == y {
        return Err(Error::InvalidArgument("tokens must start on distinct nodes".into()));
    }
    for node in [x, y] {
        if node >= g.n() {
            return Err(Error::NodeOutOfRange { node, n: g.n() });
        }
    }
    let dist = JointChain::new(g, variant)?.distribution(x, y);
    if let Some(&(o, p)) = dist.outcomes.iter().find(|&&(_, p)| !(0.0..=1.0).contains(&p)) {
        return Err(Error::JointDistribution {
            x,
            y,
            msg: format!("{o:?} has probability {p}"),
        });
    }
    let total = dist.total();
    if (total - 1.0).abs() > ROW_TOL {
        return Err(Error::JointDistribution {
            x,
            y,
            msg: format!("total probability {total}"),
        });
    }
    Ok(dist)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    Pair(usize, usize),
    Worst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeetingEstimate {
    pub mean_ticks: f64,
    pub std_error: f64,
    pub trials: u64,
    pub variant: Variant,
    pub start: Start,
    /// The pair the estimate belongs to (the maximizing pair for `Worst`).
    pub pair: (usize, usize),
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct RunningStats {
    count: u64,
    mean: f64,
    m2: f64,
    min: f64,
    max: f64,
}

impl RunningStats {
    pub fn push(&mut self, v: f64) {
        if self.count == 0 {
            self.min = v;
            self.max = v;
        }
        self.count += 1;
        let delta = v - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (v - self.mean);
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation; zero with fewer than two values.
    pub fn std_dev(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).sqrt()
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.std_dev() / (self.count as f64).sqrt()
        }
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }
}

/// Monte Carlo meeting time from one start pair. Trial `k` uses a generator
/// seeded from `(seed, x, y)`; trials run sequentially on it.
pub fn estimate_pair(chain: &JointChain<'_>, x: usize, y: usize, trials: u64, seed: u64) -> Result<MeetingEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be at least 1".into()));
    }
    let mut rng = SimRng::seed_from_u64(derive_seed(seed, &[x as u64, y as u64]));
    let mut stats = RunningStats::default();
    for _ in 0..trials {
        stats.push(chain.meeting_ticks(x, y, &mut rng, MEETING_TICK_CAP)? as f64);
    }
    Ok(MeetingEstimate {
        mean_ticks: stats.mean(),
        std_error: stats.std_error(),
        trials,
        variant: chain.variant(),
        start: Start::Pair(x, y),
        pair: (x, y),
    })
}

/// Estimates for every unordered pair `x < y`, in lexicographic order. Pairs
/// are evaluated in parallel on the current rayon pool; results do not depend
/// on the pool size.
pub fn estimate_all_pairs(g: &Graph, variant: Variant, trials: u64, seed: u64) -> Result<Vec<MeetingEstimate>> {
    let chain = JointChain::new(g, variant)?;
    let n = g.n();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    pairs
        .into_par_iter()
        .map(|(x, y)| estimate_pair(&chain, x, y, trials, seed))
        .collect()
}

/// Monte Carlo meeting time from a given pair, or the largest per-pair mean
/// over all pairs. Tokens are interchangeable, so the worst-case sweep visits
/// unordered pairs.
pub fn estimate_meeting_time(g: &Graph, variant: Variant, start: Start, trials: u64, seed: u64) -> Result<MeetingEstimate> {
    match start {
        Start::Pair(x, y) => {
            for node in [x, y] {
                if node >= g.n() {
                    return Err(Error::NodeOutOfRange { node, n: g.n() });
                }
            }
            if x == y {
                return Err(Error::InvalidArgument("start pair must be two distinct nodes".into()));
            }
            estimate_pair(&JointChain::new(g, variant)?, x, y, trials, seed)
        }
        Start::Worst => {
            let all = estimate_all_pairs(g, variant, trials, seed)?;
            let mut worst = all
                .into_iter()
                .reduce(|a, b| if b.mean_ticks > a.mean_ticks { b } else { a })
                .ok_or_else(|| Error::InvalidArgument("graph has fewer than two nodes".into()))?;
            worst.start = Start::Worst;
            Ok(worst)
        }
    }
}
