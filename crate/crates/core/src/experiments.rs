//! Convergence-time sweeps and meeting-versus-hitting theorem checks.

use std::fmt;
use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::biased_hitting_matrix;
use crate::chains::{estimate_meeting_time, MeetingEstimate, RunningStats, Start, Variant};
use crate::engine::{run, DEFAULT_MAX_TICKS};
use crate::error::{Error, Result};
use crate::graph::{erdos_renyi_connected, make_topology, Graph, TopologyKind, DEFAULT_ER_ATTEMPTS};
use crate::protocol::{init_state, strong_split};
use crate::rng::{derive_seed, SimRng};

pub const SWEEP_CSV_HEADER: &str =
    "n,runs,margin,mean_ticks,std_ticks,min_ticks,max_ticks,nonconverged,mean_over_n2ln,mean_ticks_over_n";

/// Constant on the star reference curve `c N^2 log N`.
pub const STAR_REFERENCE_CONSTANT: f64 = 0.63;
/// Constants on the Erdős–Rényi reference curves.
pub const ER_REFERENCE_CONSTANTS: [f64; 2] = [2.0, 2.3];

/// Largest graph `meeting_vs_hitting` accepts (dense solves).
pub const MAX_THEOREM_N: usize = 200;

/// z-value for a one-sided 99% upper confidence bound.
const Z99: f64 = 2.326_347_874;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepTopology {
    Fixed(#[serde(skip)] TopologyKind),
    /// Fresh G(N, p) per run with `p = scale * ln N / N`.
    ErdosRenyi { scale: f64 },
}

impl SweepTopology {
    pub fn star() -> Self {
        SweepTopology::Fixed(TopologyKind::Star)
    }

    pub fn erdos_renyi() -> Self {
        SweepTopology::ErdosRenyi { scale: 5.0 }
    }

    pub fn edge_probability(&self, n: usize) -> Option<f64> {
        match *self {
            SweepTopology::ErdosRenyi { scale } => Some((scale * (n as f64).ln() / n as f64).min(1.0)),
            SweepTopology::Fixed(_) => None,
        }
    }
}

impl fmt::Display for SweepTopology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepTopology::Fixed(kind) => f.write_str(kind.name()),
            SweepTopology::ErdosRenyi { scale } => write!(f, "erdos_renyi(p={scale}*ln(n)/n)"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub topology: SweepTopology,
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
    pub runs: usize,
    pub margin: usize,
    pub base_seed: u64,
    pub max_ticks: u64,
}

impl SweepConfig {
    /// Desk-scale grid 21..=201 step 20, 20 runs, margin 1.
    pub fn desk(topology: SweepTopology, base_seed: u64) -> Self {
        Self {
            topology,
            n_min: 21,
            n_max: 201,
            n_step: 20,
            runs: 20,
            margin: 1,
            base_seed,
            max_ticks: DEFAULT_MAX_TICKS,
        }
    }

    /// Full grid 21..=481 step 20.
    pub fn full(topology: SweepTopology, base_seed: u64) -> Self {
        Self {
            n_max: 481,
            ..Self::desk(topology, base_seed)
        }
    }

    pub fn grid(&self) -> Vec<usize> {
        (self.n_min..=self.n_max).step_by(self.n_step.max(1)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.runs == 0 {
            return bad("runs must be at least 1".into());
        }
        if self.n_step == 0 {
            return bad("n_step must be at least 1".into());
        }
        if self.n_min > self.n_max {
            return bad(format!("n_min {} exceeds n_max {}", self.n_min, self.n_max));
        }
        if self.max_ticks == 0 {
            return bad("max_ticks must be at least 1".into());
        }
        if let SweepTopology::ErdosRenyi { scale } = self.topology {
            if scale.is_nan() || scale <= 0.0 {
                return bad(format!("ER scale must be positive, got {scale}"));
            }
        }
        for n in self.grid() {
            strong_split(n, self.margin)?;
            match self.topology {
                SweepTopology::Fixed(kind) => {
                    make_topology(kind, n)?;
                }
                SweepTopology::ErdosRenyi { .. } if n < 2 => return bad("ER sweep needs n >= 2".into()),
                SweepTopology::ErdosRenyi { .. } => {}
            }
        }
        Ok(())
    }
}

/// One simulated run inside a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunRecord {
    pub n: usize,
    pub run: usize,
    pub seed: u64,
    pub ticks: u64,
    pub converged: bool,
    pub final_sign: Option<i8>,
    pub edges: usize,
    pub graph_attempts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub n: usize,
    pub runs: usize,
    pub margin: usize,
    pub mean_ticks: f64,
    pub std_ticks: f64,
    pub min_ticks: u64,
    pub max_ticks: u64,
    pub nonconverged: usize,
    pub mean_over_n2ln: f64,
    pub mean_ticks_over_n: f64,
    pub mean_edges: f64,
    /// `0.5 N (N - 1) p` for ER sweeps.
    pub expected_edges: Option<f64>,
    /// Standard deviation of the edge count of one G(N, p) sample.
    pub edge_count_sd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSummary {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub runs: Vec<RunRecord>,
}

/// Per-run seed from the base seed, N and run index.
pub fn run_seed(base: u64, n: usize, run: usize) -> u64 {
    derive_seed(base, &[n as u64, run as u64])
}

fn simulate_one(cfg: &SweepConfig, n: usize, run_index: usize) -> Result<RunRecord> {
    let seed = run_seed(cfg.base_seed, n, run_index);
    let mut rng = SimRng::seed_from_u64(seed);
    let (graph, graph_attempts) = match cfg.topology {
        SweepTopology::Fixed(kind) => (make_topology(kind, n)?, 0),
        SweepTopology::ErdosRenyi { .. } => {
            let p = cfg.topology.edge_probability(n).unwrap();
            let s = erdos_renyi_connected(n, p, &mut rng, DEFAULT_ER_ATTEMPTS)?;
            (s.graph, s.attempts)
        }
    };
    let (pos, neg) = strong_split(n, cfg.margin)?;
    let s0 = init_state(n, pos, neg, &mut rng)?;
    let result = run(&graph, &s0, rng.random(), cfg.max_ticks);
    Ok(RunRecord {
        n,
        run: run_index,
        seed,
        ticks: result.ticks,
        converged: result.converged,
        final_sign: result.final_sign,
        edges: graph.m(),
        graph_attempts,
    })
}

/// Runs every (N, run) cell, in parallel on the current rayon pool. Output is
/// keyed by (N, run index) and independent of scheduling.
pub fn sweep_convergence(cfg: &SweepConfig) -> Result<SweepSummary> {
    cfg.validate()?;
    let cells: Vec<(usize, usize)> = cfg
        .grid()
        .into_iter()
        .flat_map(|n| (0..cfg.runs).map(move |r| (n, r)))
        .collect();
    let runs: Vec<RunRecord> = cells
        .into_par_iter()
        .map(|(n, r)| simulate_one(cfg, n, r))
        .collect::<Result<_>>()?;
    let rows = runs
        .chunks(cfg.runs)
        .map(|chunk| summarize(cfg, chunk))
        .collect();
    Ok(SweepSummary {
        config: cfg.clone(),
        rows,
        runs,
    })
}

fn summarize(cfg: &SweepConfig, chunk: &[RunRecord]) -> SweepRow {
    let n = chunk[0].n;
    let mut ticks = RunningStats::default();
    let mut edges = RunningStats::default();
    for r in chunk {
        ticks.push(r.ticks as f64);
        edges.push(r.edges as f64);
    }
    let nf = n as f64;
    let p = cfg.topology.edge_probability(n);
    let pairs = 0.5 * nf * (nf - 1.0);
    SweepRow {
        n,
        runs: chunk.len(),
        margin: cfg.margin,
        mean_ticks: ticks.mean(),
        std_ticks: ticks.std_dev(),
        min_ticks: ticks.min() as u64,
        max_ticks: ticks.max() as u64,
        nonconverged: chunk.iter().filter(|r| !r.converged).count(),
        mean_over_n2ln: ticks.mean() / (nf * nf * nf.ln()),
        mean_ticks_over_n: ticks.mean() / nf,
        mean_edges: edges.mean(),
        expected_edges: p.map(|p| pairs * p),
        edge_count_sd: p.map(|p| (pairs * p * (1.0 - p)).sqrt()),
    }
}

/// `c N^2 ln N` and `c N^2 log2 N`.
pub fn reference_curve(c: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    (c * nf * nf * nf.ln(), c * nf * nf * nf.log2())
}

/// Writes the sweep table with `#` metadata lines echoing the configuration
/// and the reference curves in both log bases.
pub fn write_sweep_csv<W: Write>(summary: &SweepSummary, mut out: W) -> io::Result<()> {
    let cfg = &summary.config;
    writeln!(out, "# topology={}", cfg.topology)?;
    writeln!(
        out,
        "# n_min={} n_max={} n_step={} runs={} margin={} max_ticks={}",
        cfg.n_min, cfg.n_max, cfg.n_step, cfg.runs, cfg.margin, cfg.max_ticks
    )?;
    writeln!(out, "# base_seed={}", cfg.base_seed)?;
    writeln!(out, "# time_unit=global_tick absolute_time=ticks/n")?;
    let constants: &[f64] = match cfg.topology {
        SweepTopology::ErdosRenyi { .. } => {
            writeln!(out, "# er_sampling=fresh_graph_per_run resample_until_connected")?;
            &ER_REFERENCE_CONSTANTS
        }
        SweepTopology::Fixed(_) => &[STAR_REFERENCE_CONSTANT],
    };
    for row in &summary.rows {
        for &c in constants {
            let (ln, log2) = reference_curve(c, row.n);
            writeln!(out, "# reference n={} c={c} c_n2_ln_n={ln:.3} c_n2_log2_n={log2:.3}", row.n)?;
        }
        if let (Some(e), Some(sd)) = (row.expected_edges, row.edge_count_sd) {
            writeln!(
                out,
                "# edges n={} mean_edges={:.3} expected_edges={e:.3} sample_sd={sd:.3}",
                row.n, row.mean_edges
            )?;
        }
    }
    writeln!(out, "{SWEEP_CSV_HEADER}")?;
    for r in &summary.rows {
        writeln!(
            out,
            "{},{},{},{:.3},{:.3},{},{},{},{:.6},{:.6}",
            r.n,
            r.runs,
            r.margin,
            r.mean_ticks,
            r.std_ticks,
            r.min_ticks,
            r.max_ticks,
            r.nonconverged,
            r.mean_over_n2ln,
            r.mean_ticks_over_n
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRatios {
    pub exponent: f64,
    pub log_power: u32,
    pub ratios: Vec<(usize, f64)>,
    /// Largest ratio over smallest.
    pub spread: f64,
}

impl ScalingRatios {
    pub fn strictly_decreasing(&self) -> bool {
        self.ratios.windows(2).all(|w| w[1].1 < w[0].1)
    }
}

/// `mean_ticks / (N^exponent (ln N)^log_power)` for every row.
pub fn scaling_ratio(summary: &SweepSummary, exponent: f64, log_power: u32) -> Result<ScalingRatios> {
    if summary.rows.is_empty() {
        return Err(Error::InvalidArgument("empty sweep summary".into()));
    }
    if log_power > 1 {
        return Err(Error::InvalidArgument("log_power must be 0 or 1".into()));
    }
    let ratios: Vec<(usize, f64)> = summary
        .rows
        .iter()
        .map(|r| {
            let nf = r.n as f64;
            (r.n, r.mean_ticks / (nf.powf(exponent) * nf.ln().powi(log_power as i32)))
        })
        .collect();
    let max = ratios.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let min = ratios.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
    Ok(ScalingRatios {
        exponent,
        log_power,
        ratios,
        spread: max / min,
    })
}

/// Exact maximum hitting time against Monte Carlo worst-pair meeting times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoremCheck {
    pub n: usize,
    pub max_hitting: f64,
    pub n4_over_2: f64,
    pub meeting_x: MeetingEstimate,
    pub meeting_xprime: MeetingEstimate,
    /// Worst `M_X` (99% upper confidence bound) below `4 H`.
    pub meeting_below_4h: bool,
    /// Worst `M_X <= 2 M_X'` within three combined standard errors.
    pub coupling_holds: bool,
    pub hitting_below_n4_over_2: bool,
    pub pass: bool,
}

pub fn meeting_vs_hitting(g: &Graph, trials: u64, seed: u64) -> Result<TheoremCheck> {
    let n = g.n();
    if n > MAX_THEOREM_N {
        return Err(Error::InvalidArgument(format!(
            "meeting_vs_hitting supports n <= {MAX_THEOREM_N}, got {n}"
        )));
    }
    if n < 2 {
        return Err(Error::TopologyTooSmall {
            topology: "theorem check",
            min: 2,
            n,
        });
    }
    let h = biased_hitting_matrix(g)?;
    let max_hitting = h.max().0;
    let mx = estimate_meeting_time(g, Variant::X, Start::Worst, trials, derive_seed(seed, &[0]))?;
    let mxp = estimate_meeting_time(g, Variant::XPrime, Start::Worst, trials, derive_seed(seed, &[1]))?;
    let n4_over_2 = (n as f64).powi(4) / 2.0;
    let meeting_below_4h = mx.mean_ticks + Z99 * mx.std_error < 4.0 * max_hitting;
    let combined = (mx.std_error.powi(2) + 4.0 * mxp.std_error.powi(2)).sqrt();
    let coupling_holds = mx.mean_ticks <= 2.0 * mxp.mean_ticks + 3.0 * combined;
    let hitting_below_n4_over_2 = max_hitting < n4_over_2;
    Ok(TheoremCheck {
        n,
        max_hitting,
        n4_over_2,
        meeting_x: mx,
        meeting_xprime: mxp,
        meeting_below_4h,
        coupling_holds,
        hitting_below_n4_over_2,
        pass: meeting_below_4h && coupling_holds && hitting_below_n4_over_2,
    })
}
