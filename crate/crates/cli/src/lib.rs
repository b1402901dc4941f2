//! Command-line front end for the `binvote` simulator and analysis tools.
//!
//! [`run_command`] parses an argument vector, runs the requested subcommand
//! and returns the process exit status: 0 on success, 1 when the arguments or
//! inputs are invalid, 2 when the computation itself fails or a checked bound
//! does not hold.

use std::ffi::OsString;
use std::fmt;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use binvote_core::analysis::biased_hitting_matrix;
use binvote_core::engine::{run_traced, write_trace_csv, DEFAULT_MAX_TICKS};
use binvote_core::experiments::{write_sweep_csv, SweepConfig, SweepTopology};
use binvote_core::graph::{erdos_renyi_connected, DEFAULT_ER_ATTEMPTS};
use binvote_core::protocol::{init_state, strong_split};
use binvote_core::{
    bound_report, estimate_meeting_time, make_topology, sweep_convergence, Error, Graph, SimRng, Start,
    TopologyKind, Variant,
};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "binvote", version, about = "Four-state binary consensus: simulation, sweeps and exact analysis")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a graph as an edge-list file.
    Gen(GenArgs),
    /// Run the protocol once until consensus or the tick cap.
    Simulate(SimulateArgs),
    /// Convergence-time sweep over a grid of network sizes.
    Sweep(SweepArgs),
    /// Hitting times, resistances, hidden vertices and the bound certificate.
    Analyze(AnalyzeArgs),
    /// Monte Carlo meeting time of two opposite strong opinions.
    Meet(MeetArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Star,
    Complete,
    Path,
    Cycle,
    Er,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SweepTopologyArg {
    Star,
    Er,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    X,
    Xprime,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Graph family. `er` draws G(n, p) until the sample is connected.
    #[arg(long, value_enum)]
    topology: TopologyArg,
    /// Number of nodes.
    #[arg(long)]
    n: usize,
    /// Edge probability for `er` [default: 5 ln(n)/n, capped at 1].
    #[arg(long)]
    p: Option<f64>,
    /// Random seed, required for `er`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output edge-list path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Edge-list file to simulate on.
    #[arg(long, conflicts_with_all = ["topology", "n", "p"], required_unless_present = "topology")]
    graph: Option<PathBuf>,
    /// Generate the graph instead of reading it.
    #[arg(long, value_enum, requires = "n")]
    topology: Option<TopologyArg>,
    /// Number of nodes for a generated graph.
    #[arg(long, requires = "topology")]
    n: Option<usize>,
    /// Edge probability for a generated `er` graph [default: 5 ln(n)/n, capped at 1].
    #[arg(long, requires = "topology")]
    p: Option<f64>,
    /// Initial margin |S+| - |S-| of an all-strong start; negative gives a
    /// negative majority. Must have the parity of n.
    #[arg(long, allow_negative_numbers = true)]
    margin: i64,
    /// Random seed for graph generation, initial placement and the run.
    #[arg(long)]
    seed: u64,
    /// Tick cap.
    #[arg(long, default_value_t = DEFAULT_MAX_TICKS)]
    max_ticks: u64,
    /// Write opinion counts over time as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Ticks between trace rows [default: n].
    #[arg(long, requires = "trace")]
    sample_every: Option<u64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Topology family; `er` uses a fresh connected G(n, 5 ln(n)/n) per run.
    #[arg(long, value_enum)]
    topology: SweepTopologyArg,
    /// Smallest network size.
    #[arg(long, default_value_t = 21)]
    n_min: usize,
    /// Largest network size.
    #[arg(long, default_value_t = 201)]
    n_max: usize,
    /// Step between network sizes.
    #[arg(long, default_value_t = 20)]
    n_step: usize,
    /// Use the full grid 21..=481 step 20.
    #[arg(long, conflicts_with_all = ["n_min", "n_max", "n_step"])]
    full: bool,
    /// Runs per network size.
    #[arg(long, default_value_t = 20)]
    runs: usize,
    /// Initial strong margin |S+| - |S-|.
    #[arg(long, default_value_t = 1)]
    margin: usize,
    /// Base seed; every run derives its own seed from it.
    #[arg(long)]
    seed: u64,
    /// Tick cap per run.
    #[arg(long, default_value_t = DEFAULT_MAX_TICKS)]
    max_ticks: u64,
    /// Worker threads [default: all cores]. Output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalyzeArgs {
    /// Edge-list file to analyze.
    #[arg(long)]
    graph: PathBuf,
    /// Emit one JSON object instead of key=value lines.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct MeetArgs {
    /// Edge-list file.
    #[arg(long)]
    graph: PathBuf,
    /// Joint chain variant.
    #[arg(long, value_enum)]
    variant: VariantArg,
    /// Monte Carlo trials per start pair.
    #[arg(long)]
    trials: u64,
    /// Random seed.
    #[arg(long)]
    seed: u64,
    /// Start pair `U,V`.
    #[arg(long, value_parser = parse_pair, conflicts_with = "worst")]
    start: Option<(usize, usize)>,
    /// Maximize over all start pairs (the default when --start is absent).
    #[arg(long)]
    worst: bool,
    /// Worker threads [default: all cores]. Output does not depend on it.
    #[arg(long)]
    jobs: Option<usize>,
}

fn parse_pair(s: &str) -> Result<(usize, usize), String> {
    let (u, v) = s.split_once(',').ok_or_else(|| format!("expected U,V, got `{s}`"))?;
    let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad node `{t}`: {e}"));
    Ok((parse(u)?, parse(v)?))
}

/// A failure with its exit status.
#[derive(Debug)]
enum Failure {
    Invalid(String),
    Runtime(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => EXIT_INVALID,
            Failure::Runtime(_) => EXIT_FAILURE,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Invalid(msg) => write!(f, "error: {msg}"),
            Failure::Runtime(msg) => write!(f, "failure: {msg}"),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::ConnectivityExhausted { .. }
            | Error::JointDistribution { .. }
            | Error::TickCapExceeded { .. }
            | Error::Singular(_)
            | Error::NoHiddenVertex => Failure::Runtime(e.to_string()),
            _ => Failure::Invalid(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(format!("i/o: {e}"))
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit status. Normal output goes to `out`, diagnostics to `err`.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            let line = rendered.lines().find(|l| !l.trim().is_empty()).unwrap_or("error: invalid arguments");
            let _ = writeln!(err, "{line}");
            return EXIT_INVALID;
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::Sweep(a) => sweep(a, out),
        Command::Analyze(a) => analyze(a, out),
        Command::Meet(a) => meet(a, out),
    };
    let code = match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "{f}");
            f.code()
        }
    };
    if out.flush().is_err() && code == EXIT_OK {
        return EXIT_FAILURE;
    }
    code
}

fn read_graph(path: &Path) -> Result<Graph, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Graph::from_edge_list(&text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn require_connected(g: &Graph) -> Result<(), Failure> {
    if g.is_connected() {
        Ok(())
    } else {
        Err(Error::Disconnected.into())
    }
}

fn er_probability(p: Option<f64>, n: usize) -> f64 {
    p.unwrap_or_else(|| TopologyKind::er_default_p(n))
}

/// Builds a deterministic topology, or draws a connected ER graph from `rng`.
fn build_topology(topology: TopologyArg, n: usize, p: Option<f64>, rng: Option<&mut SimRng>) -> Result<Graph, Failure> {
    if p.is_some() && topology != TopologyArg::Er {
        return Err(Failure::Invalid("--p only applies to --topology er".into()));
    }
    let kind = match topology {
        TopologyArg::Star => TopologyKind::Star,
        TopologyArg::Complete => TopologyKind::Complete,
        TopologyArg::Path => TopologyKind::Path,
        TopologyArg::Cycle => TopologyKind::Cycle,
        TopologyArg::Er => {
            let rng = rng.ok_or_else(|| Failure::Invalid("--topology er requires --seed".into()))?;
            if n < 2 {
                return Err(Error::TopologyTooSmall { topology: "erdos_renyi", min: 2, n }.into());
            }
            let p = er_probability(p, n);
            return Ok(erdos_renyi_connected(n, p, rng, DEFAULT_ER_ATTEMPTS)?.graph);
        }
    };
    Ok(make_topology(kind, n)?)
}

fn topology_echo(topology: TopologyArg, n: usize, p: Option<f64>) -> String {
    match topology {
        TopologyArg::Er => format!("topology=er n={n} p={}", er_probability(p, n)),
        other => format!("topology={} n={n}", other.to_possible_value().unwrap().get_name()),
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, Failure> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Failure::Invalid("--jobs must be at least 1".into())),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

fn gen(a: GenArgs, out: &mut dyn Write) -> CmdResult {
    let mut rng = a.seed.map(SimRng::seed_from_u64);
    let g = build_topology(a.topology, a.n, a.p, rng.as_mut())?;
    let mut header = format!("# binvote gen {}", topology_echo(a.topology, a.n, a.p));
    if let Some(seed) = a.seed {
        header.push_str(&format!(" seed={seed}"));
    }
    fs::write(&a.out, format!("{header}\n{}", g.to_edge_list()))
        .map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", a.out.display())))?;
    writeln!(out, "{header}")?;
    writeln!(out, "wrote {} nodes={} edges={}", a.out.display(), g.n(), g.m())?;
    Ok(EXIT_OK)
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CmdResult {
    let mut rng = SimRng::seed_from_u64(a.seed);
    let (g, source) = match (&a.graph, a.topology) {
        (Some(path), _) => (read_graph(path)?, format!("graph={}", path.display())),
        (None, Some(t)) => {
            let n = a.n.expect("clap enforces --n with --topology");
            (build_topology(t, n, a.p, Some(&mut rng))?, topology_echo(t, n, a.p))
        }
        (None, None) => unreachable!("clap enforces a graph source"),
    };
    require_connected(&g)?;
    if a.max_ticks == 0 {
        return Err(Failure::Invalid("--max-ticks must be at least 1".into()));
    }
    if a.sample_every == Some(0) {
        return Err(Failure::Invalid("--sample-every must be at least 1".into()));
    }
    let n = g.n();
    let (major, minor) = strong_split(n, a.margin.unsigned_abs() as usize)?;
    let (pos, neg) = if a.margin >= 0 { (major, minor) } else { (minor, major) };
    let s0 = init_state(n, pos, neg, &mut rng)?;
    let run_seed: u64 = rng.random();
    let sample_every = a.sample_every.unwrap_or(n as u64);
    let (result, rows) = run_traced(&g, &s0, run_seed, a.max_ticks, sample_every);

    writeln!(out, "# binvote simulate {source} nodes={n} edges={}", g.m())?;
    writeln!(
        out,
        "# margin={} strong_pos={pos} strong_neg={neg} seed={} run_seed={run_seed} max_ticks={}",
        a.margin, a.seed, a.max_ticks
    )?;
    writeln!(out, "n,edges,margin,converged,ticks,absolute_time,final_sign")?;
    let sign = result.final_sign.map_or_else(|| "none".to_string(), |s| s.to_string());
    writeln!(
        out,
        "{n},{},{},{},{},{:.6},{sign}",
        g.m(),
        a.margin,
        result.converged,
        result.ticks,
        result.absolute_time()
    )?;
    if let Some(path) = &a.trace {
        let file = File::create(path).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
        let mut w = BufWriter::new(file);
        write_trace_csv(&rows, &mut w)?;
        w.flush()?;
    }
    if !result.converged {
        return Err(Failure::Runtime(format!("no consensus within {} ticks", a.max_ticks)));
    }
    if result.final_sign != Some(a.margin.signum() as i8) {
        return Err(Failure::Runtime(format!("consensus on {sign} against the initial majority")));
    }
    Ok(EXIT_OK)
}

fn sweep(a: SweepArgs, out: &mut dyn Write) -> CmdResult {
    let topology = match a.topology {
        SweepTopologyArg::Star => SweepTopology::star(),
        SweepTopologyArg::Er => SweepTopology::erdos_renyi(),
    };
    let cfg = if a.full {
        SweepConfig {
            runs: a.runs,
            margin: a.margin,
            max_ticks: a.max_ticks,
            ..SweepConfig::full(topology, a.seed)
        }
    } else {
        SweepConfig {
            topology,
            n_min: a.n_min,
            n_max: a.n_max,
            n_step: a.n_step,
            runs: a.runs,
            margin: a.margin,
            base_seed: a.seed,
            max_ticks: a.max_ticks,
        }
    };
    cfg.validate()?;
    let summary = with_pool(a.jobs, || sweep_convergence(&cfg))??;
    let mut csv = Vec::new();
    write_sweep_csv(&summary, &mut csv)?;
    match &a.out {
        Some(path) => {
            fs::write(path, &csv).map_err(|e| Failure::Invalid(format!("cannot write {}: {e}", path.display())))?;
            writeln!(out, "wrote {} rows={}", path.display(), summary.rows.len())?;
        }
        None => out.write_all(&csv)?,
    }
    let failed: usize = summary.rows.iter().map(|r| r.nonconverged).sum();
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} runs did not converge within {} ticks", cfg.max_ticks)));
    }
    let wrong = summary.runs.iter().filter(|r| r.final_sign != Some(1)).count();
    if wrong > 0 {
        return Err(Failure::Runtime(format!("{wrong} runs reached consensus against the majority")));
    }
    Ok(EXIT_OK)
}

fn analyze(a: AnalyzeArgs, out: &mut dyn Write) -> CmdResult {
    let g = read_graph(&a.graph)?;
    require_connected(&g)?;
    if g.n() < 2 {
        return Err(Error::TopologyTooSmall { topology: "analyze", min: 2, n: g.n() }.into());
    }
    let report = bound_report(&g)?;
    let h = biased_hitting_matrix(&g)?;
    let (max_h, max_pair) = h.max();
    let (min_h, min_pair) = h.min_off_diagonal().expect("n >= 2");
    if a.json {
        let mut value = serde_json::to_value(&report).expect("report serializes");
        let obj = value.as_object_mut().expect("report is an object");
        obj.insert("graph".into(), a.graph.display().to_string().into());
        obj.insert("edges".into(), g.m().into());
        obj.insert("max_hitting_pair".into(), serde_json::json!([max_pair.0, max_pair.1]));
        obj.insert("min_hitting".into(), min_h.into());
        obj.insert("min_hitting_pair".into(), serde_json::json!([min_pair.0, min_pair.1]));
        writeln!(out, "{}", serde_json::to_string_pretty(&value).expect("json serializes"))?;
    } else {
        let hidden: Vec<String> = report.hidden_vertices.iter().map(|v| v.to_string()).collect();
        writeln!(out, "# binvote analyze graph={} nodes={} edges={}", a.graph.display(), g.n(), g.m())?;
        writeln!(out, "max_hitting={max_h:.9} pair={},{}", max_pair.0, max_pair.1)?;
        writeln!(out, "min_hitting={min_h:.9} pair={},{}", min_pair.0, min_pair.1)?;
        writeln!(out, "n4_over_2={:.3} hitting_ok={}", report.n4_over_2, report.hitting_ok())?;
        writeln!(out, "min_edge_weight={:.9e} two_over_n2={:.9e} weight_ok={}", report.min_edge_weight, report.two_over_n2, report.weight_ok())?;
        writeln!(out, "max_resistance={:.9} n3_over_2={:.3} resistance_ok={}", report.max_resistance, report.n3_over_2, report.resistance_ok())?;
        writeln!(out, "hidden_vertices={}", hidden.join(","))?;
        writeln!(out, "pass={}", report.pass)?;
    }
    if report.pass {
        Ok(EXIT_OK)
    } else {
        Err(Failure::Runtime("bound certificate does not hold".into()))
    }
}

fn meet(a: MeetArgs, out: &mut dyn Write) -> CmdResult {
    let g = read_graph(&a.graph)?;
    require_connected(&g)?;
    if a.trials == 0 {
        return Err(Failure::Invalid("--trials must be at least 1".into()));
    }
    let variant = match a.variant {
        VariantArg::X => Variant::X,
        VariantArg::Xprime => Variant::XPrime,
    };
    let start = match a.start {
        Some((u, v)) => {
            for node in [u, v] {
                if node >= g.n() {
                    return Err(Error::NodeOutOfRange { node, n: g.n() }.into());
                }
            }
            if u == v {
                return Err(Failure::Invalid("--start needs two distinct nodes".into()));
            }
            Start::Pair(u, v)
        }
        None if g.n() < 2 => return Err(Error::TopologyTooSmall { topology: "meet", min: 2, n: g.n() }.into()),
        None => Start::Worst,
    };
    let est = with_pool(a.jobs, || estimate_meeting_time(&g, variant, start, a.trials, a.seed))??;
    let start_echo = match start {
        Start::Pair(u, v) => format!("{u},{v}"),
        Start::Worst => "worst".into(),
    };
    writeln!(out, "# binvote meet graph={} nodes={} edges={}", a.graph.display(), g.n(), g.m())?;
    writeln!(out, "# variant={variant} trials={} seed={} start={start_echo}", a.trials, a.seed)?;
    writeln!(out, "variant,x,y,trials,mean_ticks,std_error")?;
    writeln!(
        out,
        "{variant},{},{},{},{:.6},{:.6}",
        est.pair.0, est.pair.1, est.trials, est.mean_ticks, est.std_error
    )?;
    Ok(EXIT_OK)
}
