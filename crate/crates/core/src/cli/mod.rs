//! `richardson` command line.
//!
//! Exit codes: 0 success, 1 negative verdict or failed check, 2 usage or
//! configuration error, 3 I/O error.

mod output;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use crate::coupling::{
    check_inclusions, lemma1_precondition, path_transfer_check, run_coupled, CouplingMode,
};
use crate::engine::{reduce_rates, GrowthState, ModelConfig, StopCondition};
use crate::error::Error;
use crate::experiments::{estimate_schedule, sweep, write_csv, SweepSpec};
use crate::lattice::SiteSet;
use crate::par::Parallelism;
use crate::randomness::Realization;
use crate::topology::{verdict, Verdict};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "richardson", version, about = "Two-type Richardson competing growth on Z^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Classify an initial pair as fertile or strangled.
    Fertility(FertilityArgs),
    /// Run one process and write its trace and final snapshot.
    Simulate(SimulateArgs),
    /// Run two processes on coupled randomness and report on the inclusions.
    Couple(CoupleArgs),
    /// Estimate the coexistence probability for one configuration.
    Estimate(ExperimentArgs),
    /// Estimate over a grid of rates, initial pairs and radii.
    Sweep(ExperimentArgs),
}

#[derive(Args, Debug)]
struct FertilityArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Sites as `(x,y);(x,y)`.
    #[arg(long, allow_hyphen_values = true)]
    init1: String,
    #[arg(long, allow_hyphen_values = true)]
    init2: String,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda1: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda2: f64,
    #[arg(long, allow_hyphen_values = true)]
    init1: String,
    #[arg(long, allow_hyphen_values = true, default_value = "")]
    init2: String,
    /// Stop once every initially present type reaches this max-norm.
    #[arg(long)]
    radius: Option<i64>,
    #[arg(long)]
    max_events: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Trace JSON output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Text snapshot of the final state.
    #[arg(long)]
    snapshot: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Shared,
    UntilTau,
}

#[derive(Args, Debug)]
struct CoupleArgs {
    #[arg(long, value_enum, default_value = "shared")]
    mode: ModeArg,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, allow_hyphen_values = true)]
    init1: String,
    #[arg(long, allow_hyphen_values = true)]
    init2: String,
    #[arg(long, allow_hyphen_values = true)]
    init1p: String,
    #[arg(long, allow_hyphen_values = true)]
    init2p: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Events per process.
    #[arg(long, default_value_t = 2000)]
    horizon: u64,
    /// Verify the three inclusions and path transfer (shared mode only).
    #[arg(long)]
    check_lemma1: bool,
    /// Report JSON output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 2)]
    dim: usize,
    #[arg(long, conflicts_with = "lambda_grid")]
    lambda: Option<f64>,
    /// `lo:hi:step`, inclusive.
    #[arg(long)]
    lambda_grid: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "init2", conflicts_with = "pairs")]
    init1: Option<String>,
    #[arg(long, allow_hyphen_values = true, requires = "init1")]
    init2: Option<String>,
    /// JSON array of `{"init1": "...", "init2": "..."}`.
    #[arg(long)]
    pairs: Option<PathBuf>,
    #[arg(long, conflicts_with = "radius_schedule")]
    radius: Option<i64>,
    /// Comma-separated radii, e.g. `10,20,30`.
    #[arg(long)]
    radius_schedule: Option<String>,
    #[arg(long, default_value_t = 1000)]
    reps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 1 runs sequentially, 0 uses every core.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    allow_infertile: bool,
    /// CSV output; stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult = std::result::Result<i32, Failure>;

fn io_err(path: &Path, e: impl std::fmt::Display) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

pub(crate) fn parse_set(s: &str, dim: usize) -> std::result::Result<SiteSet, Error> {
    let set: SiteSet = s.parse()?;
    if let Some(d) = set.dim() {
        if d != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d,
            });
        }
    }
    Ok(set)
}

/// `lo:hi:step` as `lo + k·step` for `k = 0, 1, …` up to `hi`, each rounded to
/// 12 decimals.
pub(crate) fn parse_grid(s: &str) -> std::result::Result<Vec<f64>, Error> {
    let bad = || Error::Parse(format!("expected lo:hi:step, got {s:?}"));
    let parts = s
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let [lo, hi, step] = parts[..] else {
        return Err(bad());
    };
    if !(lo.is_finite() && hi.is_finite() && step > 0.0 && lo <= hi) || (hi - lo) / step > 1e6 {
        return Err(bad());
    }
    let mut out = Vec::new();
    let mut k = 0u32;
    loop {
        let v = lo + f64::from(k) * step;
        if v > hi + 1e-9 {
            break;
        }
        out.push((v * 1e12).round() / 1e12);
        k += 1;
    }
    Ok(out)
}

pub(crate) fn parse_radii(s: &str) -> std::result::Result<Vec<i64>, Error> {
    s.split(',')
        .map(|r| {
            r.trim()
                .parse::<i64>()
                .map_err(|_| Error::Parse(format!("bad radius {r:?}")))
        })
        .collect()
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> std::result::Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, bytes).map_err(|e| io_err(p, e)),
        None => io::stdout()
            .write_all(bytes)
            .map_err(|e| Failure::Io(format!("stdout: {e}"))),
    }
}

fn fertility(a: &FertilityArgs) -> CliResult {
    let xi1 = parse_set(&a.init1, a.dim)?;
    let xi2 = parse_set(&a.init2, a.dim)?;
    if a.dim < 2 {
        return Err(Error::DimensionTooSmall(a.dim).into());
    }
    let v = verdict(&xi1, &xi2)?;
    println!("{}", v.label());
    Ok(if v == Verdict::Fertile { 0 } else { 1 })
}

fn simulate(a: &SimulateArgs) -> CliResult {
    let red = reduce_rates(a.lambda1, a.lambda2)?;
    let xi1 = parse_set(&a.init1, a.dim)?;
    let xi2 = parse_set(&a.init2, a.dim)?;
    let (m1, m2) = red.arrange(xi1.clone(), xi2.clone());
    let config = ModelConfig::new(a.dim, red.lambda, m1, m2)?;
    let stop = StopCondition {
        radius: a.radius,
        max_events: a.max_events,
        stop_on_death: Vec::new(),
    };
    stop.validate()?;
    let trace = GrowthState::init(config, Realization::new(a.seed))?.run(&stop)?;

    let header = json!({
        "artifact": "richardson-trace",
        "version": VERSION,
        "dim": a.dim,
        "lambda1": a.lambda1,
        "lambda2": a.lambda2,
        "init1": xi1.to_string(),
        "init2": xi2.to_string(),
        "radius": a.radius,
        "max_events": a.max_events,
        "seed": a.seed,
        "reduction": red,
        "labels": "reduced",
        "config_digest": trace.config.digest(),
        "outcome": trace.outcome,
        "n_events": trace.events.len(),
    });
    if let Some(p) = &a.trace {
        let text = output::trace_json(&header, &trace.events);
        write_out(Some(p), text.as_bytes())?;
    }
    if let Some(p) = &a.snapshot {
        let text = output::snapshot(&header, &trace);
        write_out(Some(p), text.as_bytes())?;
    }
    eprintln!("{} after {} events", trace.outcome, trace.events.len());
    Ok(0)
}

fn couple(a: &CoupleArgs) -> CliResult {
    let mode = match a.mode {
        ModeArg::Shared => CouplingMode::SharedFromStart,
        ModeArg::UntilTau => CouplingMode::IndependentUntilTau,
    };
    if a.check_lemma1 && mode == CouplingMode::IndependentUntilTau {
        return Err(Failure::Usage(
            "--check-lemma1 needs --mode shared: the inclusions hold only on shared randomness".into(),
        ));
    }
    let sets = [&a.init1, &a.init2, &a.init1p, &a.init2p]
        .into_iter()
        .map(|s| parse_set(s, a.dim))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let ca = ModelConfig::new(a.dim, a.lambda, sets[0].clone(), sets[1].clone())?;
    let cb = ModelConfig::new(a.dim, a.lambda, sets[2].clone(), sets[3].clone())?;
    let precondition = lemma1_precondition(&sets[0], &sets[1], &sets[2], &sets[3])?;

    let stop = StopCondition::events(a.horizon);
    let run = run_coupled(&[ca, cb], a.seed, mode, &stop)?;
    let processes: Vec<_> = run
        .traces
        .iter()
        .map(|t| {
            let (g1, g2) = t.final_sets();
            json!({
                "seed": t.seed,
                "outcome": t.outcome,
                "n_events": t.events.len(),
                "size1": g1.len(),
                "size2": g2.len(),
            })
        })
        .collect();
    let tau = if run.tau.is_finite() {
        json!(run.tau)
    } else {
        json!("never")
    };

    let mut code = 0;
    let lemma1 = if !a.check_lemma1 {
        serde_json::Value::Null
    } else if !precondition {
        code = 2;
        json!({ "precondition": false })
    } else {
        let zeta = sets[0].union(&sets[1]);
        let inc = check_inclusions(&run.traces[0], &run.traces[1], &zeta)?;
        let path = path_transfer_check(&run.traces[0], &run.traces[1], &zeta)?;
        if !(inc.pass && path.pass) {
            code = 1;
        }
        json!({
            "precondition": true,
            "pass": inc.pass && path.pass,
            "inclusions": inc,
            "path_transfer": path,
        })
    };

    let report = json!({
        "artifact": "richardson-coupling",
        "version": VERSION,
        "mode": mode.label(),
        "dim": a.dim,
        "lambda": a.lambda,
        "init1": sets[0].to_string(),
        "init2": sets[1].to_string(),
        "init1p": sets[2].to_string(),
        "init2p": sets[3].to_string(),
        "seed": a.seed,
        "horizon": a.horizon,
        "tau": tau,
        "processes": processes,
        "lemma1": lemma1,
    });
    let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
    text.push('\n');
    write_out(a.out.as_deref(), text.as_bytes())?;
    if code == 2 {
        eprintln!("error: initial pairs do not satisfy the inclusion precondition");
    }
    Ok(code)
}

#[derive(Deserialize)]
struct PairEntry {
    init1: String,
    init2: String,
}

fn experiment(a: &ExperimentArgs, single: bool) -> CliResult {
    let lambdas = match (&a.lambda, &a.lambda_grid) {
        (Some(l), _) => vec![*l],
        (None, Some(g)) => parse_grid(g)?,
        (None, None) => vec![1.0],
    };
    let radii = match (&a.radius, &a.radius_schedule) {
        (Some(r), _) => vec![*r],
        (None, Some(s)) => parse_radii(s)?,
        (None, None) => return Err(Failure::Usage("one of --radius or --radius-schedule is required".into())),
    };
    let pairs = match (&a.init1, &a.init2, &a.pairs) {
        (Some(i1), Some(i2), _) => vec![(parse_set(i1, a.dim)?, parse_set(i2, a.dim)?)],
        (_, _, Some(path)) => {
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            let entries: Vec<PairEntry> = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            entries
                .iter()
                .map(|p| Ok((parse_set(&p.init1, a.dim)?, parse_set(&p.init2, a.dim)?)))
                .collect::<std::result::Result<Vec<_>, Error>>()?
        }
        _ => return Err(Failure::Usage("either --init1/--init2 or --pairs is required".into())),
    };
    if single && (lambdas.len() != 1 || pairs.len() != 1) {
        return Err(Failure::Usage("estimate takes one rate and one pair; use sweep for grids".into()));
    }
    let parallelism = Parallelism::from_threads(a.threads);
    let rows = if single {
        let config = ModelConfig::new(a.dim, lambdas[0], pairs[0].0.clone(), pairs[0].1.clone())?;
        estimate_schedule(&config, &radii, a.reps, a.seed, parallelism, a.allow_infertile)?
    } else {
        sweep(&SweepSpec {
            dim: a.dim,
            pairs,
            lambdas,
            radii,
            n_reps: a.reps,
            master_seed: a.seed,
            parallelism,
            allow_infertile: a.allow_infertile,
        })?
    };
    for r in rows.iter().filter(|r| r.fertility != Verdict::Fertile) {
        eprintln!("note: config {} is {}", r.config_digest, r.fertility.label());
    }
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf)?;
    write_out(a.out.as_deref(), &buf)?;
    Ok(0)
}

/// Runs the command line in `args` (program name first) and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Fertility(a) => fertility(a),
        Command::Simulate(a) => simulate(a),
        Command::Couple(a) => couple(a),
        Command::Estimate(a) => experiment(a, true),
        Command::Sweep(a) => experiment(a, false),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            2
        }
        Err(Failure::Io(m)) => {
            eprintln!("error: {m}");
            3
        }
    }
}

pub fn main() -> i32 {
    run(std::env::args_os())
}
