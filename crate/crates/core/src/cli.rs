//! Command-line front end. Every subcommand builds a [`BoundReport`]; the
//! binary prints it as JSON and maps errors to exit codes by class.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::asymptotics::AsymptoticModel;
use crate::bounds::{departure_budget, resolvent_bound, BoundFunction, BudgetStrategy, NonNormalityBudget, DEFAULT_DOSTANIC_C};
use crate::error::{Error, Result};
use crate::linalg::{
    c64, distance_to_set, eigenvalues, gauge_of, operator_norm, read_matrix, resolvent_norm, singular_values,
    OperatorMatrix, C64,
};
use crate::perturbation::{self, CertificateSettings, TrialConfig};
use crate::pseudospectra::{self, Membership, Region};
use crate::report::{complex_list, number, BoundReport, Timings};
use crate::series::SeriesControl;
use crate::weights::{fit_exponential_constants, WeightKind, WeightSpec, DEFAULT_PROBE};

/// Exit code when `--verify` finds an observation above its bound.
pub const VERIFY_FAILED_EXIT: i32 = 1;

#[derive(Debug, Parser)]
#[command(name = "specbound", version, about = "Certified spectral perturbation bounds for matrices in a weighted singular-value class")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Weight sequence, e.g. `sl:p=1`, `exp:a=1,alpha=1`, `explicit:1,0.5,0.25`.
    #[arg(long, global = true, default_value = "sl:p=1")]
    pub weight: String,
    /// Constant of the nilpotent resolvent estimate.
    #[arg(long = "dostanic-c", global = true, default_value_t = DEFAULT_DOSTANIC_C)]
    pub dostanic_c: f64,
    /// Seed for every random draw; echoed in the report.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Append brute-force observations next to each bound.
    #[arg(long, global = true)]
    pub verify: bool,
    /// Also write the JSON report to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Write tabular output (grids, trial records) to this file.
    #[arg(long, global = true, value_name = "PATH")]
    pub csv: Option<PathBuf>,
    /// Relative slack `τ` for `--verify`: pass iff observed ≤ bound + τ(1 + ‖A‖).
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// How Schur forms are chosen for the departure budget.
    #[arg(long, global = true, value_enum, default_value_t = StrategyArg::Search)]
    pub strategy: StrategyArg,
    /// Include wall-clock timings (makes output run-dependent).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StrategyArg {
    /// `2 |A|_w` only.
    TwoGauge,
    /// Eigenvalues in nonincreasing modulus.
    Modulus,
    /// All orderings up to n = 8.
    Search,
}

impl StrategyArg {
    fn strategy(self) -> BudgetStrategy {
        match self {
            StrategyArg::TwoGauge => BudgetStrategy::TwoGauge,
            StrategyArg::Modulus => BudgetStrategy::ModulusDescending,
            StrategyArg::Search => BudgetStrategy::SearchSmall,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceKind {
    /// Symmetric distance of the two spectra.
    Hausdorff,
    /// How far the second spectrum strays from the first.
    Variation,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Singular values against the weight and the resulting gauge.
    Gauge { matrix: PathBuf },
    /// Resolvent norm bound at the given points.
    Resolvent {
        matrix: PathBuf,
        /// Point `re,im` (repeatable).
        #[arg(long = "z", allow_hyphen_values = true)]
        points: Vec<String>,
        /// Lattice `re_min,re_max,im_min,im_max,n`.
        #[arg(long, allow_hyphen_values = true)]
        grid: Option<String>,
    },
    /// Certified bound on the distance between two spectra.
    Distance {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value_t = DistanceKind::Hausdorff)]
        kind: DistanceKind,
    },
    /// Pseudospectrum grid and inclusion disks.
    Pseudo {
        matrix: PathBuf,
        #[arg(long)]
        epsilon: f64,
        /// `re_min,re_max,im_min,im_max`; defaults to a square around the spectrum.
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        #[arg(long, default_value_t = 100)]
        resolution: usize,
    },
    /// Enclosure from the leading k×k section.
    Truncate {
        matrix: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// Growth of the bound function against its closed-form asymptotes.
    Asym {
        /// Arguments `r` (comma separated).
        #[arg(long, value_delimiter = ',', default_values_t = vec![1e-6, 1e-3, 1.0, 10.0, 100.0, 1000.0])]
        r: Vec<f64>,
    },
    /// Randomized check of the distance certificate.
    Trials {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 12)]
        n_max: usize,
        #[arg(long, default_value_t = 1e-4)]
        t_min: f64,
        #[arg(long, default_value_t = 1e-1)]
        t_max: f64,
    },
}

/// What a command produced.
#[derive(Debug)]
pub struct Outcome {
    pub report: BoundReport,
    pub csv: Option<String>,
    /// `Some(false)` when `--verify` saw a violation.
    pub verified: Option<bool>,
}

struct Context {
    g: GlobalArgs,
    weight: WeightSpec,
    bound: BoundFunction,
    timings: Timings,
}

impl Context {
    fn new(g: &GlobalArgs) -> Result<Self> {
        let weight: WeightSpec = g.weight.parse()?;
        let bound = BoundFunction::for_weight(&weight, g.dostanic_c, SeriesControl::default())?;
        if !(g.tolerance >= 0.0 && g.tolerance.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance must be finite and >= 0, got {}", g.tolerance)));
        }
        Ok(Self {
            g: g.clone(),
            weight,
            bound,
            timings: Timings::default(),
        })
    }

    fn settings(&self) -> CertificateSettings<'_> {
        CertificateSettings {
            weight: &self.weight,
            bound: &self.bound,
            strategy: self.g.strategy.strategy(),
            observe: self.g.verify,
        }
    }

    fn slack(&self, norm: f64) -> f64 {
        self.g.tolerance * (1.0 + norm)
    }

    fn header(&self) -> serde_json::Map<String, Value> {
        let mut m = serde_json::Map::new();
        m.insert("weight".into(), json!(self.weight.to_string()));
        m.insert("bound_weight".into(), json!(self.bound.weight().to_string()));
        m.insert("dostanic_c".into(), number(self.g.dostanic_c));
        m
    }

    fn common_warnings(&self, report: &mut BoundReport, n: Option<usize>) {
        if let (Some(len), Some(n)) = (self.weight.support_len(), n) {
            if len < n {
                report.warn(format!("weight has {len} entries and is extended by zeros beyond k = {len}"));
            }
        }
        if self.g.dostanic_c != DEFAULT_DOSTANIC_C {
            report.warn(format!(
                "bounds are valid only if the nilpotent resolvent estimate holds with C = {}",
                self.g.dostanic_c
            ));
        }
    }

    fn load(&mut self, path: &Path) -> Result<OperatorMatrix> {
        let name = format!("read {}", path.display());
        self.timings.record(&name, || read_matrix(path))
    }

    fn finish(mut self, mut report: BoundReport) -> BoundReport {
        if self.g.timings {
            report.timings = Some(std::mem::take(&mut self.timings));
        }
        report
    }
}

fn matrix_info(a: &OperatorMatrix) -> Value {
    json!({"label": a.label(), "rows": a.rows(), "cols": a.cols(), "digest": a.digest()})
}

fn budget_value(b: &NonNormalityBudget) -> Value {
    json!({
        "nu_upper": number(b.nu_upper),
        "source": b.source,
        "gauge": number(b.gauge),
        "schur_gauge": b.schur_gauge.map(number),
        "operator_norm": number(b.operator_norm),
        "normal": b.is_normal(),
    })
}

fn parse_floats(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("bad number {t:?} in {what} {s:?}")))
        })
        .collect()
}

/// Parses `re,im` or a bare real part.
pub fn parse_complex(s: &str) -> Result<C64> {
    match parse_floats(s, "point")?.as_slice() {
        [re] => Ok(c64(*re, 0.0)),
        [re, im] => Ok(c64(*re, *im)),
        _ => Err(Error::InvalidArgument(format!("point must be `re,im`, got {s:?}"))),
    }
}

fn parse_region(s: &str) -> Result<Region> {
    match parse_floats(s, "region")?.as_slice() {
        [a, b, c, d] => Region::new(*a, *b, *c, *d),
        _ => Err(Error::InvalidArgument(format!("region must be `re_min,re_max,im_min,im_max`, got {s:?}"))),
    }
}

/// Runs a parsed command line.
pub fn run(cli: &Cli) -> Result<Outcome> {
    let mut cx = Context::new(&cli.global)?;
    match &cli.command {
        Command::Gauge { matrix } => cmd_gauge(cx, matrix),
        Command::Resolvent { matrix, points, grid } => {
            let mut zs = points.iter().map(|p| parse_complex(p)).collect::<Result<Vec<_>>>()?;
            if let Some(g) = grid {
                let v = parse_floats(g, "grid")?;
                let [x0, x1, y0, y1, n] = v.as_slice() else {
                    return Err(Error::InvalidArgument(format!("grid must be `re_min,re_max,im_min,im_max,n`, got {g:?}")));
                };
                let region = Region::new(*x0, *x1, *y0, *y1)?;
                let n = *n as usize;
                if n < 2 {
                    return Err(Error::InvalidArgument("grid needs at least 2 points per axis".into()));
                }
                let (hx, hy) = ((x1 - x0) / (n - 1) as f64, (y1 - y0) / (n - 1) as f64);
                for iy in 0..n {
                    for ix in 0..n {
                        zs.push(c64(region.re_min + ix as f64 * hx, region.im_min + iy as f64 * hy));
                    }
                }
            }
            if zs.is_empty() {
                return Err(Error::InvalidArgument("give at least one --z or a --grid".into()));
            }
            let a = cx.load(matrix)?;
            cmd_resolvent(cx, &a, &zs)
        }
        Command::Distance { a, b, kind } => {
            let a = cx.load(a)?;
            let b = cx.load(b)?;
            cmd_distance(cx, &a, &b, *kind)
        }
        Command::Pseudo {
            matrix,
            epsilon,
            region,
            resolution,
        } => {
            let region = region.as_deref().map(parse_region).transpose()?;
            let a = cx.load(matrix)?;
            cmd_pseudo(cx, &a, *epsilon, region, *resolution)
        }
        Command::Truncate { matrix, k } => {
            let a = cx.load(matrix)?;
            cmd_truncate(cx, &a, *k)
        }
        Command::Asym { r } => cmd_asym(cx, r),
        Command::Trials {
            count,
            n_min,
            n_max,
            t_min,
            t_max,
        } => {
            let mut cfg = TrialConfig::new(cx.weight.clone(), cx.g.seed);
            cfg.trials = *count;
            cfg.n_min = *n_min;
            cfg.n_max = *n_max;
            cfg.perturbation = (*t_min, *t_max);
            cfg.strategy = cx.g.strategy.strategy();
            cmd_trials(cx, &cfg)
        }
    }
}

fn cmd_gauge(cx: Context, path: &Path) -> Result<Outcome> {
    let mut cx = cx;
    let a = cx.load(path)?;
    let s = cx.timings.record("svd", || singular_values(&a))?;
    let n = s.values().len();
    let w = cx.weight.values(n);
    let ratios: Vec<f64> = s
        .values()
        .iter()
        .zip(&w)
        .map(|(&sk, &wk)| if sk == 0.0 { 0.0 } else if wk == 0.0 { f64::INFINITY } else { sk / wk })
        .collect();
    let gauge = gauge_of(&s, &cx.weight);
    let argmax = ratios.iter().enumerate().max_by(|x, y| x.1.total_cmp(y.1)).map(|(k, _)| k + 1);
    let mut p = cx.header();
    p.insert("matrix".into(), matrix_info(&a));
    p.insert("singular_values".into(), s.values().iter().copied().map(number).collect());
    p.insert("weights".into(), w.iter().copied().map(number).collect());
    p.insert("ratios".into(), ratios.iter().copied().map(number).collect());
    p.insert("gauge".into(), number(gauge));
    p.insert("argmax_k".into(), json!(argmax));
    let mut report = BoundReport::new("gauge", Value::Object(p));
    cx.common_warnings(&mut report, Some(n));
    if gauge.is_infinite() {
        let k = ratios.iter().position(|r| r.is_infinite()).map_or(0, |k| k + 1);
        report.warn(format!("s_{k} > 0 where the weight vanishes: the matrix is outside the weight class"));
    }
    Ok(Outcome {
        report: cx.finish(report),
        csv: None,
        verified: None,
    })
}

fn cmd_resolvent(mut cx: Context, a: &OperatorMatrix, zs: &[C64]) -> Result<Outcome> {
    let n = a.require_square()?;
    let budget = cx.timings.record("budget", || departure_budget(a, &cx.weight, &cx.g.strategy.strategy()))?;
    let spectrum = eigenvalues(a)?.into_values();
    let mut report = BoundReport::new("resolvent", Value::Null);
    let mut rows = Vec::with_capacity(zs.len());
    let mut all_ok = true;
    let slack = cx.slack(budget.operator_norm);
    let mut csv = String::from("re,im,distance,bound");
    if cx.g.verify {
        csv.push_str(",observed");
    }
    csv.push('\n');
    for &z in zs {
        let d = distance_to_set(z, &spectrum);
        let bound = match resolvent_bound(&cx.bound, &spectrum, z, &budget) {
            Ok(b) => b,
            Err(Error::OnSpectrum { .. }) => {
                report.warn(format!("z = {}{:+}i lies on the spectrum; bound reported as inf", z.re, z.im));
                f64::INFINITY
            }
            Err(e) => return Err(e),
        };
        let mut row = json!({"z": [number(z.re), number(z.im)], "distance": number(d), "bound": number(bound)});
        csv.push_str(&format!("{},{},{},{}", z.re, z.im, d, bound));
        if cx.g.verify {
            let obs = resolvent_norm(a, z)?;
            let ok = obs <= bound + slack || bound.is_infinite();
            all_ok &= ok;
            row["observed"] = number(obs);
            row["holds"] = json!(ok);
            csv.push_str(&format!(",{obs}"));
        }
        csv.push('\n');
        rows.push(row);
    }
    let mut p = cx.header();
    p.insert("matrix".into(), matrix_info(a));
    p.insert("spectrum".into(), complex_list(&spectrum));
    p.insert("budget".into(), budget_value(&budget));
    p.insert("points".into(), Value::Array(rows));
    report.payload = Value::Object(p);
    cx.common_warnings(&mut report, Some(n));
    let verified = cx.g.verify.then_some(all_ok);
    Ok(Outcome {
        report: cx.finish(report),
        csv: Some(csv),
        verified,
    })
}

fn cmd_distance(cx: Context, a: &OperatorMatrix, b: &OperatorMatrix, kind: DistanceKind) -> Result<Outcome> {
    let n = a.require_square()?;
    let s = cx.settings();
    let cert = match kind {
        DistanceKind::Hausdorff => perturbation::spectral_distance_bound(a, b, &s)?,
        DistanceKind::Variation => perturbation::spectral_variation_bound(a, b, &s)?,
    };
    let verified = cert.observed.map(|_| cert.holds(cx.slack(operator_norm(a).unwrap_or(0.0))));
    let mut p = cx.header();
    p.insert("a".into(), matrix_info(a));
    p.insert("b".into(), matrix_info(b));
    p.insert("certificate".into(), serde_json::to_value(&cert)?);
    if let Some(ok) = verified {
        p.insert("holds".into(), json!(ok));
    }
    let mut report = BoundReport::new("distance", Value::Object(p));
    cx.common_warnings(&mut report, Some(n));
    Ok(Outcome {
        report: cx.finish(report),
        csv: None,
        verified,
    })
}

fn cmd_pseudo(mut cx: Context, a: &OperatorMatrix, epsilon: f64, region: Option<Region>, resolution: usize) -> Result<Outcome> {
    let n = a.require_square()?;
    let disks = cx.timings.record("disks", || {
        pseudospectra::inclusion_disks(a, &cx.weight, &cx.bound, &cx.g.strategy.strategy(), epsilon)
    })?;
    let region = match region {
        Some(r) => r,
        None => Region::around(&disks.centers, 1.25 * disks.outer_radius.min(1e6))?,
    };
    let grid = cx.timings.record("grid", || pseudospectra::pseudospectrum_grid(a, region, resolution, epsilon))?;
    let count = |m: Membership| (0..grid.values.len()).filter(|&i| grid.membership(i) == m).count();
    let mut p = cx.header();
    p.insert("matrix".into(), matrix_info(a));
    p.insert("epsilon".into(), number(epsilon));
    p.insert(
        "disks".into(),
        json!({
            "centers": complex_list(&disks.centers),
            "inner_radius": number(disks.inner_radius),
            "outer_radius": number(disks.outer_radius),
            "budget": budget_value(&disks.budget),
        }),
    );
    p.insert(
        "grid".into(),
        json!({
            "region": [number(region.re_min), number(region.re_max), number(region.im_min), number(region.im_max)],
            "resolution": resolution,
            "cell_diagonal": number(grid.cell_diagonal()),
            "inside": count(Membership::Inside),
            "outside": count(Membership::Outside),
            "indeterminate": count(Membership::Indeterminate),
        }),
    );
    let mut verified = None;
    if cx.g.verify {
        let sandwich = pseudospectra::check_sandwich(&grid, &disks, grid.cell_diagonal());
        verified = Some(sandwich.holds());
        p.insert("sandwich".into(), serde_json::to_value(&sandwich)?);
    }
    let mut report = BoundReport::new("pseudo", Value::Object(p));
    cx.common_warnings(&mut report, Some(n));
    if disks.outer_radius > 1e3 * (1.0 + disks.budget.operator_norm) {
        report.warn("outer radius is much larger than the matrix norm and carries little information");
    }
    Ok(Outcome {
        report: cx.finish(report),
        csv: Some(grid.to_csv()),
        verified,
    })
}

fn cmd_truncate(cx: Context, a: &OperatorMatrix, k: usize) -> Result<Outcome> {
    let n = a.require_square()?;
    let t = perturbation::truncation_certify(a, k, &cx.settings())?;
    let verified = t.certificate.observed.map(|_| t.certificate.holds(cx.slack(operator_norm(a).unwrap_or(0.0))));
    let mut p = cx.header();
    p.insert("matrix".into(), matrix_info(a));
    p.insert("truncation".into(), serde_json::to_value(&t)?);
    if let Some(ok) = verified {
        p.insert("holds".into(), json!(ok));
    }
    let mut report = BoundReport::new("truncate", Value::Object(p));
    cx.common_warnings(&mut report, Some(n));
    Ok(Outcome {
        report: cx.finish(report),
        csv: None,
        verified,
    })
}

fn cmd_asym(cx: Context, rs: &[f64]) -> Result<Outcome> {
    let model = AsymptoticModel::for_weight(&cx.weight, cx.g.dostanic_c).ok_or_else(|| {
        Error::InvalidArgument("asym needs a closed-form weight (sl:... or exp:...) without transforms".into())
    })?;
    let mut report = BoundReport::new("asym", Value::Null);
    let c_product = match *cx.weight.kind() {
        WeightKind::Exponential { a, alpha } => {
            let fit = fit_exponential_constants(a, alpha, DEFAULT_PROBE)?;
            report.warn(format!(
                "exponential bracket uses a product constant fitted on k <= {}",
                fit.probe
            ));
            Some(fit.c_product)
        }
        _ => None,
    };
    let mut rows = Vec::new();
    for &r in rs {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::InvalidArgument(format!("r must be positive and finite, got {r}")));
        }
        let ln_f = cx.bound.ln_f(r)?;
        let mut row = json!({
            "r": number(r),
            "ln_f": number(ln_f),
            "ln_f_predicted": number(model.predict_ln_f(r)),
            "h": number(cx.bound.h(r)?),
            "h_small_predicted": number(model.predict_h_small(r)),
        });
        let bracket_ok = match model {
            AsymptoticModel::SchattenLorentz { .. } => true,
            AsymptoticModel::Exponential { .. } => r >= 1.0,
        };
        if bracket_ok {
            let (lo, hi) = model.ln_f_bracket(r, c_product)?;
            row["ln_f_bracket"] = json!([number(lo), number(hi)]);
        }
        rows.push(row);
    }
    let mut p = cx.header();
    p.insert("model".into(), serde_json::to_value(model)?);
    p.insert("rows".into(), Value::Array(rows));
    report.payload = Value::Object(p);
    cx.common_warnings(&mut report, None);
    Ok(Outcome {
        report: cx.finish(report),
        csv: None,
        verified: None,
    })
}

fn cmd_trials(mut cx: Context, cfg: &TrialConfig) -> Result<Outcome> {
    let summary = cx.timings.record("trials", || perturbation::run_trials(cfg, &cx.bound))?;
    let mut csv = String::from("index,n,perturbation_norm,certificate,observed,violated\n");
    for r in &summary.records {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.index, r.n, r.perturbation_norm, r.certificate, r.observed, r.violated as u8
        ));
    }
    let mut p = cx.header();
    p.insert("seed".into(), json!(cfg.seed));
    p.insert("trials".into(), json!(cfg.trials));
    p.insert("n_range".into(), json!([cfg.n_min, cfg.n_max]));
    p.insert("perturbation_range".into(), json!([number(cfg.perturbation.0), number(cfg.perturbation.1)]));
    p.insert("strategy".into(), serde_json::to_value(&cfg.strategy)?);
    p.insert("violations".into(), json!(summary.violations));
    p.insert("worst_ratio".into(), number(summary.worst_ratio));
    if cx.g.verify {
        p.insert("records".into(), serde_json::to_value(&summary.records)?);
    }
    let mut report = BoundReport::new("trials", Value::Object(p));
    cx.common_warnings(&mut report, None);
    Ok(Outcome {
        report: cx.finish(report),
        csv: Some(csv),
        verified: Some(summary.violations == 0),
    })
}

/// Parses `args`, runs the command, writes the report to `out` and any error
/// to `err`, and returns the process exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { crate::ErrorClass::Parse.exit_code() } else { 0 };
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return code;
        }
    };
    match run(&cli).and_then(|o| emit(&cli.global, o, out)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.class().exit_code()
        }
    }
}

fn emit(g: &GlobalArgs, o: Outcome, out: &mut dyn Write) -> Result<i32> {
    let text = o.report.to_json();
    writeln!(out, "{text}")?;
    if let Some(path) = &g.json {
        std::fs::write(path, format!("{text}\n"))?;
    }
    if let (Some(path), Some(csv)) = (&g.csv, &o.csv) {
        std::fs::write(path, csv)?;
    }
    Ok(match o.verified {
        Some(false) => VERIFY_FAILED_EXIT,
        _ => 0,
    })
}
