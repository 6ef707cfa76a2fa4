//! `stlu`: monitor flowpipes, calibrate predictors, run the closed-loop
//! simulation and time the monitor.
//!
//! Machine output goes to stdout (or `--out`), diagnostics to stderr.
//! Exit codes: 0 success, 1 internal error, 2 bad input.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use stlu_core::calibration::{select_config, CandidateConfig, LossConfig, RankedConfig};
use stlu_core::monitor::{robustness_window, verdict, RobustInterval};
use stlu_core::signal::{load_samples, load_trace, read_flowpipe_json, samples_to_flowpipe, Bounds, Format};
use stlu_core::simloop::{run_episode, ControllerKind, EpisodeReport, EpisodeTrace, ScenarioConfig};
use stlu_core::{parse, robustness, schema, Flowpipe, Formula, Parallelism, SignalEnv, Trace};

#[derive(Parser)]
#[command(name = "stlu", version, about = "Predictive monitoring with uncertainty-aware STL")]
struct Cli {
    /// Run everything on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Robustness interval of a formula over flowpipes.
    Monitor(MonitorArgs),
    /// Fit a flowpipe to a Monte Carlo sample set.
    Flowpipe(FlowpipeArgs),
    /// Rank candidate predictors by loss against ground-truth traces.
    Calibrate(CalibrateArgs),
    /// Run one closed-loop glucose episode.
    Simulate(SimulateArgs),
    /// Time the monitor over synthetic flowpipes of several lengths (CSV).
    Bench(BenchArgs),
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct SpecSource {
    /// Formula text, e.g. "G[0,3](BG{0.95} > 70)".
    #[arg(long)]
    spec: Option<String>,
    /// File holding the formula text.
    #[arg(long, value_name = "PATH")]
    spec_file: Option<PathBuf>,
}

#[derive(Args)]
struct MonitorArgs {
    #[command(flatten)]
    spec: SpecSource,
    /// Flowpipe JSON file; repeat for several signals.
    #[arg(long, value_name = "PATH")]
    flowpipe: Vec<PathBuf>,
    /// Sample set (CSV or JSON) fitted at every confidence level the formula uses.
    #[arg(long, value_name = "PATH")]
    samples: Vec<PathBuf>,
    /// Channel name for CSV sample sets.
    #[arg(long, default_value = "BG")]
    channel: String,
    /// Evaluation step.
    #[arg(long, default_value_t = 0)]
    at: usize,
    /// Report only the strong/weak verdict from the boolean monitor.
    #[arg(long)]
    boolean: bool,
    /// Read interval bounds in units of this many seconds instead of steps.
    #[arg(long, value_name = "SECONDS")]
    interval_unit: Option<f64>,
}

#[derive(Args)]
struct FlowpipeArgs {
    /// Sample set, CSV (`t,run_1,...`) or JSON.
    #[arg(long, value_name = "PATH")]
    samples: PathBuf,
    /// Channel name for CSV input.
    #[arg(long, default_value = "BG")]
    channel: String,
    /// Confidence level in (0, 1).
    #[arg(long, default_value_t = 0.95)]
    epsilon: f64,
    /// Write here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CalibrateArgs {
    #[command(flatten)]
    spec: SpecSource,
    /// Directory of ground-truth traces (`*.csv` or `*.json`), used in name order.
    #[arg(long, value_name = "DIR")]
    targets: PathBuf,
    /// JSON manifest `{"candidates": [{"label", "flowpipes": [paths]}]}`;
    /// paths are relative to the manifest and line up with the targets.
    #[arg(long, value_name = "PATH")]
    candidates: PathBuf,
    /// Weight of the robustness term in [0, 1].
    #[arg(long, default_value_t = 0.5)]
    beta: f64,
    /// Confidence level the candidate flowpipes were built at.
    #[arg(long, default_value_t = 0.95)]
    epsilon: f64,
    /// Channel name for CSV targets.
    #[arg(long, default_value = "BG")]
    channel: String,
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ControllerArg {
    Baseline,
    Adaptive,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON; omitted fields take their defaults.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override the scenario seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the controller.
    #[arg(long, value_enum)]
    controller: Option<ControllerArg>,
    /// Write the report here instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Also write the per-step trace as JSON.
    #[arg(long, value_name = "PATH")]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    spec: SpecSource,
    /// Comma-separated flowpipe lengths.
    #[arg(long, value_delimiter = ',', default_value = "1000,10000,100000")]
    lengths: Vec<usize>,
    /// Timed repetitions per length; the fastest is reported.
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// Seed for the synthetic flowpipes.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Bad input: exits with 2.
#[derive(Debug)]
struct InputError(String);

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn bad(msg: impl fmt::Display) -> anyhow::Error {
    InputError(msg.to_string()).into()
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("invalid arguments");
            eprintln!("{}", one_line(first));
            return ExitCode::from(2);
        }
    };
    let par = if cli.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::default()
    };
    let res = match cli.command {
        Command::Monitor(a) => monitor(a),
        Command::Flowpipe(a) => flowpipe(a),
        Command::Calibrate(a) => calibrate(a, par),
        Command::Simulate(a) => simulate(a, par),
        Command::Bench(a) => bench(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = match e.downcast_ref::<InputError>() {
                Some(_) => ("input", 2),
                None => ("internal", 1),
            };
            eprintln!("error: {kind}: {}", one_line(&format!("{e:#}")));
            ExitCode::from(code)
        }
    }
}

fn read_spec(src: &SpecSource) -> Result<Formula> {
    let text = match (&src.spec, &src.spec_file) {
        (Some(s), _) => s.clone(),
        (None, Some(p)) => fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))?,
        (None, None) => return Err(bad("one of --spec or --spec-file is required")),
    };
    parse(text.trim()).map_err(|e| bad(format!("formula: {e}")))
}

fn emit<T: Serialize>(body: &T, out: Option<&Path>) -> Result<()> {
    let text = schema::to_json(body).context("serializing output")?;
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn load_flowpipe(path: &Path) -> Result<Flowpipe> {
    read_flowpipe_json(path).map_err(|e| bad(format!("{}: {e}", path.display())))
}

/// Register the inputs a formula needs. A channel supplied at a single
/// confidence level answers for the others, with a warning.
fn build_env(formula: &Formula, args: &MonitorArgs) -> Result<SignalEnv> {
    let mut env = SignalEnv::new();
    let mut by_channel: BTreeMap<String, Vec<Flowpipe>> = BTreeMap::new();
    for p in &args.flowpipe {
        let fp = load_flowpipe(p)?;
        by_channel.entry(fp.channel().to_string()).or_default().push(fp);
    }
    for p in &args.samples {
        let set = load_samples(p, Format::from_path(p), &args.channel)
            .map_err(|e| bad(format!("{}: {e}", p.display())))?;
        for (c, eps) in formula.signals() {
            if c == set.channel() {
                let fp = samples_to_flowpipe(&set, eps).map_err(|e| bad(format!("{}: {e}", p.display())))?;
                by_channel.entry(c).or_default().push(fp);
            }
        }
    }
    for fps in by_channel.values() {
        for fp in fps {
            env.insert(fp.clone());
        }
    }
    for (c, eps) in env.missing(formula) {
        match by_channel.get(&c).map(Vec::as_slice) {
            Some([only]) => {
                eprintln!(
                    "warning: no flowpipe for {c} at {eps}; using the one built at {}",
                    only.epsilon()
                );
                env.insert_for_all_epsilons(only.clone());
            }
            _ => return Err(bad(format!("no flowpipe for signal `{c}` at confidence {eps}"))),
        }
    }
    Ok(env)
}

#[derive(Serialize)]
struct MonitorOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    lower: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    upper: Option<f64>,
    strong: bool,
    weak: bool,
}

fn monitor(args: MonitorArgs) -> Result<()> {
    let mut formula = read_spec(&args.spec)?;
    if args.flowpipe.is_empty() && args.samples.is_empty() {
        return Err(bad("monitor needs at least one --flowpipe or --samples input"));
    }
    let env = build_env(&formula, &args)?;
    if let Some(unit) = args.interval_unit {
        if !(unit > 0.0 && unit.is_finite()) {
            return Err(bad("--interval-unit must be positive"));
        }
        let step = env.channels().next().map(Flowpipe::step_duration).unwrap_or(1.0);
        formula = formula.rescale_intervals(unit, step).map_err(|e| bad(format!("formula: {e}")))?;
    }
    let out = if args.boolean {
        let v = verdict(&formula, &env, args.at).map_err(bad)?;
        MonitorOut {
            lower: None,
            upper: None,
            strong: v.strong,
            weak: v.weak,
        }
    } else {
        let r: RobustInterval = robustness(&formula, &env, args.at).map_err(bad)?;
        MonitorOut {
            lower: Some(r.lower),
            upper: Some(r.upper),
            strong: r.lower > 0.0,
            weak: r.upper > 0.0,
        }
    };
    emit(&out, None)
}

fn flowpipe(args: FlowpipeArgs) -> Result<()> {
    let p = &args.samples;
    let set = load_samples(p, Format::from_path(p), &args.channel)
        .map_err(|e| bad(format!("{}: {e}", p.display())))?;
    let fp = samples_to_flowpipe(&set, args.epsilon).map_err(bad)?;
    emit(&fp.to_json(), args.out.as_deref())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    candidates: Vec<ManifestEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ManifestEntry {
    label: String,
    flowpipes: Vec<PathBuf>,
}

#[derive(Serialize)]
struct CalibrateOut {
    beta: f64,
    epsilon: f64,
    targets: usize,
    ranking: Vec<RankedConfig>,
}

fn load_targets(dir: &Path, channel: &str) -> Result<Vec<Trace>> {
    let entries = fs::read_dir(dir).map_err(|e| bad(format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|x| x.to_str())
                    .is_some_and(|x| x.eq_ignore_ascii_case("csv") || x.eq_ignore_ascii_case("json"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(bad(format!("{}: no .csv or .json traces", dir.display())));
    }
    paths
        .iter()
        .map(|p| load_trace(p, Format::from_path(p), channel).map_err(|e| bad(format!("{}: {e}", p.display()))))
        .collect()
}

fn calibrate(args: CalibrateArgs, par: Parallelism) -> Result<()> {
    let formula = read_spec(&args.spec)?;
    let cfg = LossConfig::new(args.beta, args.epsilon).map_err(bad)?;
    let targets = load_targets(&args.targets, &args.channel)?;
    let text = fs::read_to_string(&args.candidates).map_err(|e| bad(format!("{}: {e}", args.candidates.display())))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", args.candidates.display())))?;
    let base = args.candidates.parent().unwrap_or(Path::new("."));
    let candidates = manifest
        .candidates
        .into_iter()
        .map(|c| {
            let flowpipes = c
                .flowpipes
                .iter()
                .map(|p| load_flowpipe(&base.join(p)))
                .collect::<Result<Vec<_>>>()?;
            Ok(CandidateConfig {
                label: c.label,
                flowpipes,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ranking = select_config(&candidates, &targets, &formula, &cfg, par).map_err(bad)?;
    emit(
        &CalibrateOut {
            beta: cfg.beta,
            epsilon: cfg.epsilon,
            targets: targets.len(),
            ranking,
        },
        args.out.as_deref(),
    )
}

#[derive(Serialize)]
struct TraceOut<'a> {
    seed: u64,
    step_duration_s: f64,
    #[serde(flatten)]
    trace: &'a EpisodeTrace,
}

fn simulate(args: SimulateArgs, par: Parallelism) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| bad(format!("{}: {e}", p.display())))?;
            serde_json::from_str::<ScenarioConfig>(&text).map_err(|e| bad(format!("{}: {e}", p.display())))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(c) = args.controller {
        cfg.controller.kind = match c {
            ControllerArg::Baseline => ControllerKind::Baseline,
            ControllerArg::Adaptive => ControllerKind::Adaptive,
        };
    }
    let ep = run_episode(&cfg, par).map_err(bad)?;
    let report: &EpisodeReport = &ep.report;
    eprintln!(
        "{} hazards, time in range {:.3}",
        report.total_hazards(),
        report.time_in_range
    );
    if let Some(p) = &args.trace_out {
        let body = TraceOut {
            seed: cfg.seed,
            step_duration_s: cfg.step_duration_s,
            trace: &ep.trace,
        };
        emit(&body, Some(p))?;
    }
    emit(report, args.out.as_deref())
}

/// Deterministic pseudo-random flowpipe: a slow sine plus hashed jitter.
fn synthetic_flowpipe(channel: &str, epsilon: f64, len: usize, seed: u64) -> Flowpipe {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    let steps = (0..len)
        .map(|i| {
            h = h.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let u = (h >> 11) as f64 / (1u64 << 53) as f64;
            let mid = 120.0 + 60.0 * (i as f64 * 0.01).sin() + 20.0 * (u - 0.5);
            let half = 5.0 + 10.0 * u;
            Bounds {
                lower: mid - half,
                upper: mid + half,
            }
        })
        .collect();
    Flowpipe::new(channel, epsilon, 1.0, steps).expect("synthetic flowpipe is valid")
}

fn bench(args: BenchArgs) -> Result<()> {
    let formula = read_spec(&args.spec)?;
    if args.lengths.is_empty() || args.lengths.contains(&0) {
        return Err(bad("--lengths must be positive"));
    }
    let repeats = args.repeats.max(1);
    let mut out = std::io::stdout().lock();
    writeln!(out, "length,steps,seconds")?;
    for &len in &args.lengths {
        let mut env = SignalEnv::new();
        for (k, (c, eps)) in formula.signals().into_iter().enumerate() {
            env.insert(synthetic_flowpipe(&c, eps, len, args.seed.wrapping_add(k as u64)));
        }
        // every step whose window fits; unbounded formulas only at 0
        let last = match formula.horizon().finite() {
            Some(h) if h < len => len - 1 - h,
            _ => 0,
        };
        let mut best = f64::INFINITY;
        for _ in 0..repeats {
            let start = Instant::now();
            let r = robustness_window(&formula, &env, 0, last).map_err(|e| bad(format!("length {len}: {e}")))?;
            std::hint::black_box(r);
            best = best.min(start.elapsed().as_secs_f64());
        }
        writeln!(out, "{len},{},{best:.9}", last + 1)?;
    }
    out.flush()?;
    Ok(())
}
