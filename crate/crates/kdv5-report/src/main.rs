//! Config-driven experiment runner producing deterministic CSV reports.
//!
//! One subcommand per experiment kind runs a single experiment whose
//! parameters are set with repeated `--set key=value` flags; `suite` runs
//! every section of a config file on a bounded worker pool. Each experiment
//! writes `<out-dir>/<id>.csv` and every invocation rewrites
//! `<out-dir>/summary.csv` with one row per gate. Exit status: 0 when all
//! gates pass, 1 when any gate fails or an experiment errors, 2 for usage or
//! config problems.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use kdv5_report::config;
use kdv5_report::experiment::{
    fmt_float, run_experiment, Entry, ExperimentSpec, Outcome, SCHEMA_VERSION,
};
use rayon::prelude::*;
use std::fmt::Write as _;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "kdv5-report", version, about = "Growth, bound, and solver experiments with CSV reports")]
struct Cli {
    /// Directory for CSV output (default: $KDV5_OUT_DIR, else the current directory).
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Seed for randomized experiments; overrides any seed in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for `suite` (default: the number of experiments,
    /// capped at the available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Loosening factor >= 1 applied to every gate bound (1 = pinned bounds).
    #[arg(long, global = true, default_value_t = 1.0)]
    tolerance: f64,

    #[command(subcommand)]
    command: Command,
}

/// Parameters of a single-experiment subcommand.
#[derive(Args)]
struct KindArgs {
    /// Experiment id; names the output CSV.
    #[arg(long, default_value = "run")]
    id: String,

    /// Set one parameter, e.g. `--set t=0.25` (repeatable). Run with an
    /// unknown key to see the kind's accepted keys in the error.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment in a config file.
    Suite {
        /// Config file of `[<kind> <id>]` sections.
        #[arg(long, value_name = "FILE")]
        config: PathBuf,
    },
    /// Integrate the evolution equation and tabulate monitor norms.
    Solve(KindArgs),
    /// Quadratic-response growth sweep over the frequency parameter.
    #[command(name = "a2-growth")]
    A2Growth(KindArgs),
    /// Norm-inflation probe: response floor vs shrinking data norm.
    #[command(name = "a2-inflation")]
    A2Inflation(KindArgs),
    /// Quadratic growth of the three-band family.
    #[command(name = "psi-growth")]
    PsiGrowth(KindArgs),
    /// Cubic-response growth sweep.
    #[command(name = "a3-growth")]
    A3Growth(KindArgs),
    /// Weight-exponent sweep locating a bilinear-bound crossing.
    #[command(name = "be3-sweep")]
    Be3Sweep(KindArgs),
    /// Convolution floor constants and raster cross-check.
    #[command(name = "appendix-conv")]
    AppendixConv(KindArgs),
    /// Random ensemble for the level-set measure bound.
    #[command(name = "measure-check")]
    MeasureCheck(KindArgs),
    /// Random ensemble for multiplier-norm doubling and composition.
    #[command(name = "multiplier-check")]
    MultiplierCheck(KindArgs),
    /// Long conservation run tracking invariant drift.
    Conservation(KindArgs),
    /// Random small-data runs checking the a-priori norm bound.
    Apriori(KindArgs),
    /// Dilation-invariance check of the scale-critical norm.
    Scaling(KindArgs),
}

impl Command {
    fn kind_name(&self) -> Option<&'static str> {
        match self {
            Command::Suite { .. } => None,
            Command::Solve(_) => Some("solve"),
            Command::A2Growth(_) => Some("a2-growth"),
            Command::A2Inflation(_) => Some("a2-inflation"),
            Command::PsiGrowth(_) => Some("psi-growth"),
            Command::A3Growth(_) => Some("a3-growth"),
            Command::Be3Sweep(_) => Some("be3-sweep"),
            Command::AppendixConv(_) => Some("appendix-conv"),
            Command::MeasureCheck(_) => Some("measure-check"),
            Command::MultiplierCheck(_) => Some("multiplier-check"),
            Command::Conservation(_) => Some("conservation"),
            Command::Apriori(_) => Some("apriori"),
            Command::Scaling(_) => Some("scaling"),
        }
    }

    fn kind_args(&self) -> Option<&KindArgs> {
        match self {
            Command::Suite { .. } => None,
            Command::Solve(a)
            | Command::A2Growth(a)
            | Command::A2Inflation(a)
            | Command::PsiGrowth(a)
            | Command::A3Growth(a)
            | Command::Be3Sweep(a)
            | Command::AppendixConv(a)
            | Command::MeasureCheck(a)
            | Command::MultiplierCheck(a)
            | Command::Conservation(a)
            | Command::Apriori(a)
            | Command::Scaling(a) => Some(a),
        }
    }
}

fn set_pairs(args: &KindArgs) -> Result<Vec<(String, Entry)>> {
    args.set
        .iter()
        .map(|pair| {
            let (key, value) = pair
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got {pair:?}"))?;
            Ok((
                key.trim().to_string(),
                Entry { value: value.trim().to_string(), line: None },
            ))
        })
        .collect()
}

fn resolve_out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("KDV5_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."))
}

/// Outcome or the error that aborted the experiment, in input order.
type RunResult = (usize, std::result::Result<Outcome, String>);

fn run_all(specs: &[ExperimentSpec], tol: f64, jobs: Option<usize>) -> Result<Vec<RunResult>> {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let threads = jobs.unwrap_or(available).clamp(1, specs.len().max(1));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("building the worker pool")?;
    let mut results: Vec<RunResult> = pool.install(|| {
        specs
            .par_iter()
            .enumerate()
            .map(|(i, spec)| (i, run_experiment(spec, tol).map_err(|e| format!("{e:#}"))))
            .collect()
    });
    results.sort_by_key(|&(i, _)| i);
    Ok(results)
}

fn summary_table(specs: &[ExperimentSpec], results: &[RunResult]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# kdv5-report {SCHEMA_VERSION} summary");
    let _ = writeln!(out, "id,kind,metric,cmp,value,bound,status");
    for (i, result) in results {
        let spec = &specs[*i];
        match result {
            Ok(outcome) => {
                for g in &outcome.gates {
                    let status = if g.cmp == "info" {
                        "info"
                    } else if g.pass {
                        "pass"
                    } else {
                        "fail"
                    };
                    let bound = if g.bound.is_nan() { String::new() } else { fmt_float(g.bound) };
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{status}",
                        spec.id,
                        spec.kind,
                        g.metric,
                        g.cmp,
                        fmt_float(g.value),
                        bound
                    );
                }
            }
            Err(message) => {
                let note = message.replace([',', '\n'], ";");
                let _ = writeln!(out, "{},{},error,info,,,error: {note}", spec.id, spec.kind);
            }
        }
    }
    out
}

fn print_console_line(spec: &ExperimentSpec, result: &std::result::Result<Outcome, String>) {
    match result {
        Ok(outcome) => {
            let mut parts = Vec::new();
            for g in &outcome.gates {
                if g.cmp == "info" {
                    parts.push(format!("{}={:.6e}", g.metric, g.value));
                } else {
                    parts.push(format!("{}={:.6e} {} {:.6e}", g.metric, g.value, g.cmp, g.bound));
                }
            }
            let verdict = if outcome.pass() { "pass" } else { "FAIL" };
            println!("[{verdict}] {} ({}): {}", spec.id, spec.kind, parts.join("; "));
        }
        Err(message) => {
            println!("[ERROR] {} ({}): {message}", spec.id, spec.kind);
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    if !(cli.tolerance.is_finite() && cli.tolerance > 0.0) {
        bail!("--tolerance must be a positive finite factor, got {}", cli.tolerance);
    }
    let out_dir = resolve_out_dir(cli.out_dir);

    let specs = match &cli.command {
        Command::Suite { config } => {
            let text = std::fs::read_to_string(config)
                .with_context(|| format!("reading config {}", config.display()))?;
            config::load_config(&text, cli.seed)?
        }
        other => {
            let kind = other.kind_name().expect("non-suite command names a kind");
            let args = other.kind_args().expect("non-suite command carries args");
            vec![ExperimentSpec::build(kind, &args.id, set_pairs(args)?, cli.seed)?]
        }
    };
    if specs.is_empty() {
        println!("no experiments configured; nothing to do");
        return Ok(true);
    }

    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating out-dir {}", out_dir.display()))?;
    let results = run_all(&specs, cli.tolerance, cli.jobs)?;

    for (i, result) in &results {
        let spec = &specs[*i];
        if let Ok(outcome) = result {
            let path = out_dir.join(format!("{}.csv", spec.id));
            std::fs::write(&path, &outcome.table)
                .with_context(|| format!("writing {}", path.display()))?;
        }
        print_console_line(spec, result);
    }
    let summary_path = out_dir.join("summary.csv");
    std::fs::write(&summary_path, summary_table(&specs, &results))
        .with_context(|| format!("writing {}", summary_path.display()))?;

    let passed = results
        .iter()
        .filter(|(_, r)| r.as_ref().map(Outcome::pass).unwrap_or(false))
        .count();
    println!(
        "{passed}/{} passed; tables in {}",
        results.len(),
        out_dir.display()
    );
    Ok(passed == results.len())
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::exit(2);
        }
    }
}
