//! Experiment kinds, parameter validation, runners, and report assembly.
//!
//! Every experiment — whether it came from a config section or from
//! command-line `--set` pairs — is built through [`Fields`], so unknown
//! keys, missing seeds, and malformed values produce the same diagnostics
//! either way. Running an experiment yields a CSV table plus a list of
//! [`Gate`]s; the summary and the process exit status are pure functions of
//! those tables.

use anyhow::{anyhow, bail, Context, Result};
use kdv5::counterexamples::ExampleId;
use kdv5::duhamel::Coefficients;
use kdv5::estimates::{necessary_condition_sweep, predicted_crossing};
use kdv5::experiments::{
    appendix_convolution, apriori_ensemble, conservation_run, cubic_growth, inflation_floor,
    measure_ensemble, monitor_rows, multiplier_ensemble, quadratic_growth, scaling_ensemble,
    slow_family_growth, smooth_profile, MeasureFamily,
};
use kdv5::grid::PeriodicGrid;
use kdv5::solver::{evolve, SolverConfig};
use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const SCHEMA_VERSION: &str = "v1";

pub const KIND_NAMES: [&str; 12] = [
    "solve",
    "a2-growth",
    "a2-inflation",
    "psi-growth",
    "a3-growth",
    "be3-sweep",
    "appendix-conv",
    "measure-check",
    "multiplier-check",
    "conservation",
    "apriori",
    "scaling",
];

/// One `key = value` assignment with its provenance for diagnostics.
#[derive(Debug, Clone)]
pub struct Entry {
    pub value: String,
    /// Config line number; `None` for command-line `--set` pairs.
    pub line: Option<usize>,
}

fn at(line: Option<usize>) -> String {
    match line {
        Some(n) => format!(" (line {n})"),
        None => String::new(),
    }
}

/// Key-value bag consumed by a kind builder; leftovers are rejected.
pub struct Fields {
    kind: String,
    map: BTreeMap<String, Entry>,
}

impl Fields {
    pub fn new(kind: &str, entries: impl IntoIterator<Item = (String, Entry)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (key, entry) in entries {
            if let Some(prev) = map.insert(key.clone(), entry) {
                bail!("duplicate key `{key}` for kind `{kind}`{}", at(prev.line));
            }
        }
        Ok(Self { kind: kind.to_string(), map })
    }

    fn take(&mut self, key: &str) -> Option<Entry> {
        self.map.remove(key)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, entry: &Entry, what: &str) -> Result<T> {
        entry.value.trim().parse().map_err(|_| {
            anyhow!(
                "field `{key}` of kind `{}` expects {what}, got {:?}{}",
                self.kind,
                entry.value,
                at(entry.line)
            )
        })
    }

    fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            Some(e) => self.parse(key, &e, "a number"),
            None => Ok(default),
        }
    }

    fn f64_opt(&mut self, key: &str) -> Result<Option<f64>> {
        match self.take(key) {
            Some(e) => Ok(Some(self.parse(key, &e, "a number")?)),
            None => Ok(None),
        }
    }

    fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.take(key) {
            Some(e) => self.parse(key, &e, "a non-negative integer"),
            None => Ok(default),
        }
    }

    fn seed(&mut self, override_seed: Option<u64>) -> Result<u64> {
        let own = match self.take("seed") {
            Some(e) => Some(self.parse("seed", &e, "a non-negative integer")?),
            None => None,
        };
        override_seed.or(own).ok_or_else(|| {
            anyhow!(
                "kind `{}` is randomized and requires `seed` (or a --seed override)",
                self.kind
            )
        })
    }

    fn list<T: std::str::FromStr>(&mut self, key: &str, default: &[T], what: &str) -> Result<Vec<T>>
    where
        T: Copy,
    {
        let Some(e) = self.take(key) else {
            return Ok(default.to_vec());
        };
        let items: Result<Vec<T>> = e
            .value
            .split_whitespace()
            .map(|tok| {
                tok.parse().map_err(|_| {
                    anyhow!(
                        "field `{key}` of kind `{}` expects {what}, got {:?}{}",
                        self.kind,
                        tok,
                        at(e.line)
                    )
                })
            })
            .collect();
        let items = items?;
        if items.is_empty() {
            bail!("field `{key}` of kind `{}` must not be empty{}", self.kind, at(e.line));
        }
        Ok(items)
    }

    fn coefficients(&mut self, d1: f64, d2: f64, d3: f64) -> Result<Coefficients> {
        let c1 = self.f64_or("c1", d1)?;
        let c2 = self.f64_or("c2", d2)?;
        let c3 = self.f64_or("c3", d3)?;
        Coefficients::new(c1, c2, c3)
            .map_err(|e| anyhow!("kind `{}`: {e}", self.kind))
    }

    fn finish(self) -> Result<()> {
        if let Some((key, entry)) = self.map.into_iter().next() {
            bail!("unknown key `{key}` for kind `{}`{}", self.kind, at(entry.line));
        }
        Ok(())
    }
}

/// Validated parameters of one experiment.
#[derive(Debug, Clone)]
pub enum KindSpec {
    Solve {
        n: usize,
        dt: f64,
        t: f64,
        amplitude: f64,
        c: Coefficients,
        alpha: Option<f64>,
        monitor: Option<(f64, f64)>,
    },
    A2Growth { s: f64, t: f64, n: Vec<u32>, c: Coefficients },
    A2Inflation { delta: f64, a: f64, t: f64, n: Vec<u32>, c: Coefficients },
    PsiGrowth { s: f64, a: f64, t: f64, n: Vec<u32>, c: Coefficients },
    A3Growth { s: f64, t: f64, n: Vec<u32>, order: usize, panels: usize, c: Coefficients },
    Be3Sweep { example: ExampleId, s: f64, a: f64, b: Vec<f64>, n: Vec<u32> },
    AppendixConv { n: Vec<u32>, cells: usize },
    MeasureCheck { family: MeasureFamily, trials: usize, resolution: usize, seed: u64 },
    MultiplierCheck { trials: usize, max_n: usize, seed: u64 },
    Conservation { alpha: f64, n: usize, dt: f64, t: f64, amplitude: f64, c: Coefficients },
    Apriori { trials: usize, a: f64, n: usize, dt: f64, t: f64, amplitude: f64, seed: u64 },
    Scaling { trials: usize, s: f64, a: f64, n: usize, lambda: Vec<usize>, seed: u64 },
}

/// A named, validated experiment ready to run.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub id: String,
    pub kind: &'static str,
    pub seed: Option<u64>,
    pub params: KindSpec,
}

impl ExperimentSpec {
    /// Build and validate one experiment from raw key-value entries.
    /// `seed_override` replaces (or supplies) the seed of randomized kinds.
    pub fn build(
        kind: &str,
        id: &str,
        entries: Vec<(String, Entry)>,
        seed_override: Option<u64>,
    ) -> Result<Self> {
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
        {
            bail!("experiment id {id:?} must be non-empty [A-Za-z0-9_-]");
        }
        let canonical = KIND_NAMES
            .iter()
            .find(|&&k| k == kind)
            .copied()
            .ok_or_else(|| {
                anyhow!("unknown kind {kind:?}; expected one of {}", KIND_NAMES.join(", "))
            })?;
        let mut f = Fields::new(canonical, entries)?;
        let mut seed = None;
        let params = match canonical {
            "solve" => {
                let n = f.usize_or("n", 64)?;
                let dt = f.f64_or("dt", 1e-5)?;
                let t = f.f64_or("t", 0.005)?;
                let amplitude = f.f64_or("amplitude", 0.1)?;
                let c = f.coefficients(-10.0, 5.0, 10.0)?;
                let alpha = f.f64_opt("alpha")?;
                let monitor = match (f.f64_opt("s")?, f.f64_opt("a")?) {
                    (Some(s), Some(a)) => Some((s, a)),
                    (None, None) => None,
                    _ => bail!("kind `solve` monitor needs both `s` and `a` or neither"),
                };
                KindSpec::Solve { n, dt, t, amplitude, c, alpha, monitor }
            }
            "a2-growth" => KindSpec::A2Growth {
                s: f.f64_or("s", 0.0)?,
                t: f.f64_or("t", 0.5)?,
                n: f.list("n", &[8, 16, 32, 64], "integers")?,
                c: f.coefficients(0.0, 1.0, 2.0)?,
            },
            "a2-inflation" => KindSpec::A2Inflation {
                delta: f.f64_or("delta", 0.1)?,
                a: f.f64_or("a", -1.0)?,
                t: f.f64_or("t", 0.5)?,
                n: f.list("n", &[8, 16, 32, 64], "integers")?,
                c: f.coefficients(0.0, 1.0, 2.0)?,
            },
            "psi-growth" => KindSpec::PsiGrowth {
                s: f.f64_or("s", -0.5)?,
                a: f.f64_or("a", -1.0)?,
                t: f.f64_or("t", 0.5)?,
                n: f.list("n", &[8, 16, 32, 64], "integers")?,
                c: f.coefficients(0.0, 1.0, 2.0)?,
            },
            "a3-growth" => KindSpec::A3Growth {
                s: f.f64_or("s", -0.5)?,
                t: f.f64_or("t", 0.5)?,
                n: f.list("n", &[8, 16, 32, 64], "integers")?,
                order: f.usize_or("order", 8)?,
                panels: f.usize_or("panels", 6)?,
                c: f.coefficients(1.0, 1.0, 2.0)?,
            },
            "be3-sweep" => {
                let example = match f.take("example") {
                    Some(e) => ExampleId::parse(&e.value)
                        .with_context(|| format!("kind `be3-sweep`{}", at(e.line)))?,
                    None => bail!("kind `be3-sweep` requires `example`"),
                };
                let s = f.f64_or("s", -0.25)?;
                let a = f.f64_or("a", -0.5)?;
                let center = predicted_crossing(example, s, a);
                let default_b: Vec<f64> =
                    (-5..=5).map(|k| center + 0.05 * f64::from(k)).collect();
                KindSpec::Be3Sweep {
                    example,
                    s,
                    a,
                    b: f.list("b", &default_b, "numbers")?,
                    n: f.list("n", &[8, 16, 32, 64], "integers")?,
                }
            }
            "appendix-conv" => KindSpec::AppendixConv {
                n: f.list("n", &[8, 16, 32, 64, 128], "integers")?,
                cells: f.usize_or("cells", 32)?,
            },
            "measure-check" => {
                let family = match f.take("family") {
                    Some(e) => MeasureFamily::parse(&e.value)
                        .map_err(|err| anyhow!("{err}{}", at(e.line)))?,
                    None => MeasureFamily::Primal,
                };
                let s = f.seed(seed_override)?;
                seed = Some(s);
                KindSpec::MeasureCheck {
                    family,
                    trials: f.usize_or("trials", 100)?,
                    resolution: f.usize_or("resolution", 256)?,
                    seed: s,
                }
            }
            "multiplier-check" => {
                let s = f.seed(seed_override)?;
                seed = Some(s);
                KindSpec::MultiplierCheck {
                    trials: f.usize_or("trials", 20)?,
                    max_n: f.usize_or("max_n", 16)?,
                    seed: s,
                }
            }
            "conservation" => {
                let alpha = f.f64_or("alpha", 5.0)?;
                let preset = Coefficients::energy_preset(alpha)
                    .map_err(|e| anyhow!("kind `conservation`: {e}"))?;
                KindSpec::Conservation {
                    alpha,
                    n: f.usize_or("n", 256)?,
                    dt: f.f64_or("dt", 3.125e-7)?,
                    t: f.f64_or("t", 0.01)?,
                    amplitude: f.f64_or("amplitude", 0.01)?,
                    c: f.coefficients(preset.c1, preset.c2, preset.c3)?,
                }
            }
            "apriori" => {
                let s = f.seed(seed_override)?;
                seed = Some(s);
                KindSpec::Apriori {
                    trials: f.usize_or("trials", 10)?,
                    a: f.f64_or("a", -0.5)?,
                    n: f.usize_or("n", 64)?,
                    dt: f.f64_or("dt", 2.5e-6)?,
                    t: f.f64_or("t", 0.01)?,
                    amplitude: f.f64_or("amplitude", 0.3)?,
                    seed: s,
                }
            }
            "scaling" => {
                let s = f.seed(seed_override)?;
                seed = Some(s);
                KindSpec::Scaling {
                    trials: f.usize_or("trials", 10)?,
                    s: f.f64_or("s", 0.0)?,
                    a: f.f64_or("a", -0.5)?,
                    n: f.usize_or("n", 64)?,
                    lambda: f.list("lambda", &[1, 2, 4, 8], "integers")?,
                    seed: s,
                }
            }
            _ => unreachable!("kind list is exhaustive"),
        };
        f.finish()?;
        Ok(Self { id: id.to_string(), kind: canonical, seed, params })
    }
}

/// One pass/fail comparison in the summary; bounds are shown after the
/// tolerance factor has been applied.
#[derive(Debug, Clone)]
pub struct Gate {
    pub metric: &'static str,
    pub cmp: &'static str,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Gate {
    /// Pass when `value <= bound`, with the bound loosened by `tol`.
    fn at_most(metric: &'static str, value: f64, bound: f64, tol: f64) -> Self {
        let eff = if bound >= 0.0 { bound * tol } else { bound / tol };
        Gate { metric, cmp: "<=", value, bound: eff, pass: value <= eff }
    }

    /// Pass when `value >= bound`, with the bound loosened by `tol`.
    fn at_least(metric: &'static str, value: f64, bound: f64, tol: f64) -> Self {
        let eff = if bound >= 0.0 { bound / tol } else { bound * tol };
        Gate { metric, cmp: ">=", value, bound: eff, pass: value >= eff }
    }

    /// Ungated report-only metric.
    fn info(metric: &'static str, value: f64) -> Self {
        Gate { metric, cmp: "info", value, bound: f64::NAN, pass: true }
    }
}

/// The result of running one experiment: the CSV table bytes and the gates
/// derived from them.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub table: String,
    pub gates: Vec<Gate>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        self.gates.iter().all(|g| g.pass)
    }
}

pub fn fmt_float(x: f64) -> String {
    format!("{x:.12e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

struct Table {
    out: String,
}

impl Table {
    fn new(spec: &ExperimentSpec, columns: &str) -> Self {
        let mut out = String::new();
        let _ = writeln!(out, "# kdv5-report {SCHEMA_VERSION}");
        let _ = writeln!(out, "# kind = {}", spec.kind);
        let _ = writeln!(out, "# id = {}", spec.id);
        match spec.seed {
            Some(s) => {
                let _ = writeln!(out, "# seed = {s}");
            }
            None => {
                let _ = writeln!(out, "# seed = -");
            }
        }
        let _ = writeln!(out, "{columns}");
        Table { out }
    }

    fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.out, "{}", cells.join(","));
    }
}

/// Run one experiment. `tol` loosens every gate bound (1 = the pinned
/// defaults). Accuracy failures inside ensembles become failed rows; errors
/// that abort the whole experiment are returned as `Err` and the caller
/// records an error row.
pub fn run_experiment(spec: &ExperimentSpec, tol: f64) -> Result<Outcome> {
    match &spec.params {
        KindSpec::Solve { n, dt, t, amplitude, c, alpha, monitor } => {
            let grid = PeriodicGrid::new(std::f64::consts::TAU, *n)?;
            let u0 = smooth_profile(&grid, *amplitude);
            let mut config = SolverConfig::new(grid, *dt, *t, *c)?;
            if let Some(al) = alpha {
                config = config.with_h1_alpha(*al);
            }
            if let Some((s, a)) = monitor {
                config = config.with_hsa_monitor(*s, *a);
            }
            let traj = evolve(&config, &u0)?;
            let rows = monitor_rows(&traj);
            let mut table = Table::new(spec, "t,l2,h1,hsa");
            let mut bad = 0usize;
            for r in &rows {
                if !r.l2.is_finite()
                    || r.h1.is_some_and(|v| !v.is_finite())
                    || r.hsa.is_some_and(|v| !v.is_finite())
                {
                    bad += 1;
                }
                table.row(&[fmt_float(r.t), fmt_float(r.l2), fmt_opt(r.h1), fmt_opt(r.hsa)]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_most("nonfinite_rows", bad as f64, 0.0, 1.0),
                    Gate::info("l2_drift", traj.l2_drift()),
                ],
            })
        }
        KindSpec::A2Growth { s, t, n, c } => {
            let report = quadratic_growth(*s, c, *t, n)?;
            let mut table = Table::new(spec, "n,value");
            for r in &report.rows {
                table.row(&[r.n.to_string(), fmt_float(r.value)]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_least("slope", report.slope, 0.9, tol),
                    Gate::info("residual", report.residual),
                ],
            })
        }
        KindSpec::A2Inflation { delta, a, t, n, c } => {
            let report = inflation_floor(*delta, *a, c, *t, n)?;
            let mut table = Table::new(spec, "n,response,data_norm");
            for r in &report.rows {
                table.row(&[r.n.to_string(), fmt_float(r.response), fmt_float(r.data_norm)]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_least("response_floor", report.response_floor, 0.25, tol),
                    Gate::at_most("data_slope", report.data_slope, -0.4, tol),
                ],
            })
        }
        KindSpec::PsiGrowth { s, a, t, n, c } => {
            let report = slow_family_growth(*s, *a, c, *t, n)?;
            let mut table = Table::new(spec, "n,value");
            for r in &report.rows {
                table.row(&[r.n.to_string(), fmt_float(r.value)]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_least("slope", report.slope, 0.85, tol),
                    Gate::info("residual", report.residual),
                ],
            })
        }
        KindSpec::A3Growth { s, t, n, order, panels, c } => {
            let report = cubic_growth(*s, c, *t, n, *order, *panels)?;
            let mut table = Table::new(spec, "n,value");
            for r in &report.rows {
                table.row(&[r.n.to_string(), fmt_float(r.value)]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_most("slope_gap", (report.slope - 0.5).abs(), 0.15, tol),
                    Gate::info("slope", report.slope),
                ],
            })
        }
        KindSpec::Be3Sweep { example, s, a, b, n } => {
            let result = necessary_condition_sweep(*example, *s, *a, b, n)?;
            let mut table = Table::new(spec, "b,slope,residual");
            for r in &result.rows {
                table.row(&[fmt_float(r.b), fmt_float(r.slope), fmt_float(r.residual)]);
            }
            let predicted = predicted_crossing(*example, *s, *a);
            let gap = result
                .crossing
                .map(|c| (c - predicted).abs())
                .unwrap_or(f64::NAN);
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_most("crossing_gap", gap, 0.05, tol),
                    Gate::info("crossing", result.crossing.unwrap_or(f64::NAN)),
                    Gate::info("predicted_crossing", predicted),
                ],
            })
        }
        KindSpec::AppendixConv { n, cells } => {
            let report = appendix_convolution(n, *cells)?;
            let mut table = Table::new(spec, "example,n,floor_constant,raster_gap");
            for r in &report.rows {
                table.row(&[
                    r.id.to_string(),
                    r.n.to_string(),
                    fmt_float(r.floor_constant),
                    fmt_float(r.raster_gap),
                ]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_least("floor_min", report.min_constant, 0.5 * (1.0 - 1e-9), tol),
                    Gate::at_most("raster_gap_max", report.max_raster_gap, 0.05, tol),
                ],
            })
        }
        KindSpec::MeasureCheck { family, trials, resolution, seed } => {
            let report = measure_ensemble(*family, *trials, *resolution, *seed)?;
            let mut table =
                Table::new(spec, "index,xi,tau,k1,k2,big_k,ratio,refined_ratio,stable");
            for r in &report.rows {
                table.row(&[
                    r.index.to_string(),
                    fmt_float(r.xi),
                    fmt_float(r.tau),
                    r.k1.to_string(),
                    r.k2.to_string(),
                    fmt_float(r.big_k),
                    fmt_float(r.ratio),
                    fmt_float(r.refined_ratio),
                    r.stable.to_string(),
                ]);
            }
            let drift = (report.refined_constant - report.constant).abs()
                / report.constant.max(f64::MIN_POSITIVE);
            let unstable_fraction = report.unstable as f64 / (*trials).max(1) as f64;
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_most("constant_drift", drift, 0.10, tol),
                    Gate::at_most("unstable_fraction", unstable_fraction, 0.25, tol),
                    Gate::info("constant", report.constant),
                ],
            })
        }
        KindSpec::MultiplierCheck { trials, max_n, seed } => {
            let report = multiplier_ensemble(*trials, *max_n, *seed)?;
            let mut table = Table::new(spec, "index,n,rel_gap,product_norm,factor_bound");
            for r in &report.rows {
                table.row(&[
                    r.index.to_string(),
                    r.n.to_string(),
                    fmt_float(r.rel_gap),
                    fmt_float(r.product_norm),
                    fmt_float(r.factor_bound),
                ]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_most("max_gap", report.max_gap, 0.05, tol),
                    Gate::at_most("violations", report.violations as f64, 0.0, 1.0),
                ],
            })
        }
        KindSpec::Conservation { alpha, n, dt, t, amplitude, c } => {
            let report = conservation_run(c, *alpha, *n, *dt, *t, *amplitude)?;
            let mut table = Table::new(spec, "t,l2,h1");
            for r in &report.rows {
                table.row(&[fmt_float(r.t), fmt_float(r.l2), fmt_opt(r.h1)]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_most("l2_drift", report.l2_drift, 1e-8, tol),
                    Gate::at_most("h1_drift", report.h1_drift, 1e-6, tol),
                    Gate::info("tail_fraction", report.tail_fraction),
                ],
            })
        }
        KindSpec::Apriori { trials, a, n, dt, t, amplitude, seed } => {
            let report = apriori_ensemble(*trials, *a, *n, *dt, *t, *amplitude, *seed)?;
            let mut table = Table::new(spec, "index,ratio,refined_ratio");
            for r in &report.rows {
                table.row(&[
                    r.index.to_string(),
                    fmt_float(r.ratio),
                    fmt_float(r.refined_ratio),
                ]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![
                    Gate::at_most("max_ratio", report.max_ratio, 1.0, tol),
                    Gate::at_most("refinement_drift", report.refinement_drift, 0.10, tol),
                ],
            })
        }
        KindSpec::Scaling { trials, s, a, n, lambda, seed } => {
            let report = scaling_ensemble(*trials, *s, *a, *n, lambda, *seed)?;
            let mut table = Table::new(spec, "index,lambda,scaled_norm,allowed");
            for r in &report.rows {
                table.row(&[
                    r.index.to_string(),
                    r.lambda.to_string(),
                    fmt_float(r.scaled_norm),
                    fmt_float(r.allowed),
                ]);
            }
            Ok(Outcome {
                table: table.out,
                gates: vec![Gate::at_most(
                    "max_quotient",
                    report.max_quotient,
                    1.0 + 1e-10,
                    tol,
                )],
            })
        }
    }
}
