//! Experiment runner: turns an [`ExperimentSpec`] into CSV tables plus a
//! JSON manifest in an output directory.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, AnalyticError};
use crate::params::{ParamError, ParamsConfig, SystemParams};
use crate::planner::{self, PlanError, PlanningRequest, PlanningSolution, SolverPath};
use crate::simulator::{
    monte_carlo, write_estimates_csv, write_traces_jsonl, MonteCarloConfig, MonteCarloEstimate, RateMode, Scheme,
    SchemeParams, SimError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Analytic,
    Simulate,
    Compare,
    Sweep,
    Plan,
}

/// Parameters a sweep may vary. Names follow the config file keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "K")]
    Reuse,
    #[serde(rename = "T_db")]
    ThresholdDb,
    #[serde(rename = "micro_ratio")]
    MicroRatio,
    #[serde(rename = "ue_ratio")]
    UeRatio,
    #[serde(rename = "P_mu_dbm")]
    MicroPowerDbm,
    #[serde(rename = "P_M_dbm")]
    MacroPowerDbm,
    #[serde(rename = "R_T")]
    RateThreshold,
    #[serde(rename = "gamma")]
    Gamma,
    #[serde(rename = "lambda_M")]
    MacroDensity,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            Self::Reuse => "K",
            Self::ThresholdDb => "T_db",
            Self::MicroRatio => "micro_ratio",
            Self::UeRatio => "ue_ratio",
            Self::MicroPowerDbm => "P_mu_dbm",
            Self::MacroPowerDbm => "P_M_dbm",
            Self::RateThreshold => "R_T",
            Self::Gamma => "gamma",
            Self::MacroDensity => "lambda_M",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(name.to_string()))
            .map_err(|_| ExperimentError::Config(format!("unknown sweep variable {name:?}")))
    }

    pub fn apply(self, cfg: &mut ParamsConfig, v: f64) -> Result<()> {
        match self {
            Self::Reuse => {
                if !(v >= 1.0 && v.fract() == 0.0 && v <= f64::from(u32::MAX)) {
                    return Err(ExperimentError::Config(format!("K must be a positive integer, got {v}")));
                }
                cfg.reuse = Some(v as u32);
            }
            Self::ThresholdDb => cfg.sir_threshold_db = Some(v),
            Self::MicroRatio => {
                cfg.lambda_micro = None;
                cfg.micro_ratio = Some(v);
            }
            Self::UeRatio => {
                cfg.lambda_ue = None;
                cfg.ue_ratio = Some(v);
            }
            Self::MicroPowerDbm => cfg.p_micro_dbm = Some(v),
            Self::MacroPowerDbm => cfg.p_macro_dbm = Some(v),
            Self::RateThreshold => cfg.rate_threshold = Some(v),
            Self::Gamma => cfg.gamma = Some(v),
            Self::MacroDensity => cfg.lambda_macro = Some(v),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub variable: SweepVar,
    pub values: Vec<f64>,
}

fn default_schemes() -> Vec<Scheme> {
    vec![Scheme::PrioritizedSir]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimControls {
    /// Run the simulator alongside the closed forms in sweeps.
    pub enabled: bool,
    pub side: f64,
    pub runs: usize,
    pub seed: u64,
    #[serde(default = "default_schemes")]
    pub schemes: Vec<Scheme>,
    pub rate_mode: RateMode,
    pub count_radius: f64,
    pub scheme_params: SchemeParams,
    /// Write per-run JSONL traces in simulate mode.
    pub traces: bool,
}

impl Default for SimControls {
    fn default() -> Self {
        let mc = MonteCarloConfig::default();
        Self {
            enabled: true,
            side: mc.side,
            runs: mc.runs,
            seed: mc.seed,
            schemes: default_schemes(),
            rate_mode: mc.rate_mode,
            count_radius: mc.count_radius,
            scheme_params: mc.scheme_params,
            traces: false,
        }
    }
}

impl SimControls {
    pub fn config(&self, scheme: Scheme) -> MonteCarloConfig {
        MonteCarloConfig {
            side: self.side,
            runs: self.runs,
            seed: self.seed,
            scheme,
            scheme_params: self.scheme_params,
            rate_mode: self.rate_mode,
            count_radius: self.count_radius,
        }
    }
}

fn default_compare_reuse() -> u32 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub mode: Mode,
    #[serde(default)]
    pub params: ParamsConfig,
    #[serde(default)]
    pub sweep: Option<Axis>,
    /// Optional second axis; each value produces its own series of rows.
    #[serde(default)]
    pub series: Option<Axis>,
    #[serde(default)]
    pub sim: SimControls,
    #[serde(default)]
    pub plan: Option<PlanningRequest>,
    /// Reuse factor for the schemes that use reuse in compare mode.
    #[serde(default = "default_compare_reuse")]
    pub compare_reuse: u32,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn new(mode: Mode, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            mode,
            params: ParamsConfig::default(),
            sweep: None,
            series: None,
            sim: SimControls::default(),
            plan: None,
            compare_reuse: default_compare_reuse(),
            output_dir: output_dir.into(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.params.resolve()?;
        if self.sim.runs == 0 {
            return Err(ExperimentError::Config("sim.runs must be at least 1".into()));
        }
        if self.sim.schemes.is_empty() {
            return Err(ExperimentError::Config("sim.schemes is empty".into()));
        }
        if self.mode == Mode::Sweep {
            match &self.sweep {
                None => return Err(ExperimentError::Config("sweep mode needs a sweep axis".into())),
                Some(a) if a.values.is_empty() => {
                    return Err(ExperimentError::Config(format!("sweep over {} has no values", a.variable.name())))
                }
                _ => {}
            }
            if let Some(s) = &self.series {
                if s.values.is_empty() {
                    return Err(ExperimentError::Config(format!("series over {} has no values", s.variable.name())));
                }
            }
        }
        if self.compare_reuse == 0 {
            return Err(ExperimentError::Config("compare_reuse must be at least 1".into()));
        }
        Ok(())
    }
}

/// Files written by a run and what the caller needs for an exit status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutcome {
    pub files: Vec<PathBuf>,
    /// Sweep or compare rows whose simulation failed.
    pub sim_failures: usize,
    pub plan: Option<PlanningSolution>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    mode: Mode,
    params: &'a ParamsConfig,
    resolved: SystemParams,
    seed: u64,
    spec: &'a ExperimentSpec,
    files: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExperimentError + '_ {
    move |source| ExperimentError::Io { path: path.to_path_buf(), source }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(io_err(path))
}

pub fn run(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    spec.validate()?;
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut outcome = match spec.mode {
        Mode::Analytic => run_analytic(spec)?,
        Mode::Simulate => run_simulate(spec)?,
        Mode::Compare => run_compare(spec)?,
        Mode::Sweep => run_sweep(spec)?,
        Mode::Plan => run_plan(spec)?,
    };
    let manifest_path = dir.join("manifest.json");
    let manifest = Manifest {
        tool: "hetnet",
        version: env!("CARGO_PKG_VERSION"),
        mode: spec.mode,
        params: &spec.params,
        resolved: spec.params.resolve()?,
        seed: spec.sim.seed,
        spec,
        files: outcome
            .files
            .iter()
            .map(|p| p.file_name().map_or_else(String::new, |n| n.to_string_lossy().into_owned()))
            .collect(),
    };
    let mut w = create(&manifest_path)?;
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    std::io::Write::flush(&mut w).map_err(io_err(&manifest_path))?;
    outcome.files.push(manifest_path);
    Ok(outcome)
}

/// Closed-form metrics at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticSummary {
    pub coverage: analytic::CoverageReport,
    pub rate: analytic::RateReport,
}

pub fn analytic_summary(p: &SystemParams) -> Result<AnalyticSummary> {
    let coverage = analytic::coverage_report(p)?;
    let rate = if p.noise_power == 0.0 { analytic::rate_report(p)? } else { analytic::rate_coverage(p)? };
    Ok(AnalyticSummary { coverage, rate })
}

fn run_analytic(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let p = spec.params.resolve()?;
    let s = analytic_summary(&p)?;
    let path = spec.output_dir.join("analytic.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record(["metric", "value"])?;
    let c = &s.coverage;
    let r = &s.rate;
    let rows = [
        ("per_band_coverage", Some(c.per_band)),
        ("coverage", Some(c.network)),
        ("outage", Some(c.outage)),
        ("load_micro", Some(c.load_micro)),
        ("load_macro", Some(c.load_macro)),
        ("rho_micro", Some(r.rho_micro)),
        ("rho_macro", Some(r.rho_macro)),
        ("rate_coverage_micro", Some(r.rc_micro)),
        ("rate_coverage_macro", Some(r.rc_macro)),
        ("rate_coverage", Some(r.rc_total)),
        ("mean_rate", r.mean_rate),
    ];
    for (name, v) in rows {
        w.write_record([name.to_string(), v.map_or(String::new(), |v| v.to_string())])?;
    }
    w.write_record(["regime".to_string(), serde_json::to_value(c.regime)?.as_str().unwrap_or("").to_string()])?;
    w.flush().map_err(io_err(&path))?;
    Ok(ExperimentOutcome { files: vec![path], sim_failures: 0, plan: None })
}

fn run_simulate(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let p = spec.params.resolve()?;
    let mut files = Vec::new();
    for &scheme in &spec.sim.schemes {
        let res = monte_carlo(&p, &spec.sim.config(scheme))?;
        let path = spec.output_dir.join(format!("simulate_{}.csv", scheme.name()));
        write_estimates_csv(create(&path)?, &res.estimates())?;
        files.push(path);
        if spec.sim.traces {
            let path = spec.output_dir.join(format!("traces_{}.jsonl", scheme.name()));
            write_traces_jsonl(create(&path)?, &res.records).map_err(io_err(&path))?;
            files.push(path);
        }
    }
    Ok(ExperimentOutcome { files, sim_failures: 0, plan: None })
}

/// One scheme row of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub scheme: Scheme,
    pub reuse: u32,
    /// Closed-form outage, for the schemes it describes.
    pub analytic_outage: Option<f64>,
    pub outage: Option<MonteCarloEstimate>,
    pub rate_coverage: Option<MonteCarloEstimate>,
    pub mean_rate: Option<MonteCarloEstimate>,
    pub note: String,
}

/// Runs every scheme at the comparison settings (λ_M = 1, λ_μ = 5λ_M,
/// P_μ = 26 dBm). Schemes that use reuse get `reuse`, the others K = 1.
pub fn compare_schemes(sim: &SimControls, base: &SystemParams, reuse: u32) -> Vec<CompareRow> {
    Scheme::ALL
        .iter()
        .map(|&scheme| {
            let k = if scheme.uses_reuse() { reuse } else { 1 };
            let p = base.with_reuse(k);
            let analytic_outage = matches!(scheme, Scheme::PrioritizedSir | Scheme::MaxSir)
                .then(|| analytic::outage(&p).ok())
                .flatten();
            let mut cfg = sim.config(scheme);
            let mut note = String::new();
            if cfg.rate_mode == RateMode::AnalyticAverage && scheme != Scheme::PrioritizedSir {
                cfg.rate_mode = RateMode::Off;
                note.push_str("rate needs realized mode for this scheme");
            }
            match monte_carlo(&p, &cfg) {
                Ok(r) => CompareRow {
                    scheme,
                    reuse: k,
                    analytic_outage,
                    outage: Some(r.outage),
                    rate_coverage: r.rate_coverage,
                    mean_rate: r.mean_rate,
                    note,
                },
                Err(e) => CompareRow {
                    scheme,
                    reuse: k,
                    analytic_outage,
                    outage: None,
                    rate_coverage: None,
                    mean_rate: None,
                    note: format!("simulation failed: {e}"),
                },
            }
        })
        .collect()
}

fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |v| v.to_string())
}

fn run_compare(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let base = comparison_params(spec)?;
    let rows = compare_schemes(&spec.sim, &base, spec.compare_reuse);
    let path = spec.output_dir.join("compare.csv");
    let mut w = csv::Writer::from_writer(create(&path)?);
    w.write_record([
        "scheme",
        "K",
        "analytic_outage",
        "outage",
        "outage_stderr",
        "rate_coverage",
        "rate_coverage_stderr",
        "mean_rate",
        "mean_rate_stderr",
        "note",
    ])?;
    let mean = |e: &Option<MonteCarloEstimate>| opt(e.as_ref().map(|e| e.mean));
    let se = |e: &Option<MonteCarloEstimate>| opt(e.as_ref().map(|e| e.stderr));
    let mut failures = 0;
    for r in &rows {
        if r.outage.is_none() {
            failures += 1;
        }
        w.write_record([
            r.scheme.name().to_string(),
            r.reuse.to_string(),
            opt(r.analytic_outage),
            mean(&r.outage),
            se(&r.outage),
            mean(&r.rate_coverage),
            se(&r.rate_coverage),
            mean(&r.mean_rate),
            se(&r.mean_rate),
            r.note.clone(),
        ])?;
    }
    w.flush().map_err(io_err(&path))?;
    Ok(ExperimentOutcome { files: vec![path], sim_failures: failures, plan: None })
}

/// Comparison settings, with any explicitly configured field applied on top.
fn comparison_params(spec: &ExperimentSpec) -> Result<SystemParams> {
    let c = SystemParams::comparison_defaults();
    let explicit = &spec.params;
    let mut cfg = ParamsConfig {
        lambda_macro: Some(c.lambda_macro),
        micro_ratio: Some(c.lambda_micro / c.lambda_macro),
        ue_ratio: Some(c.lambda_ue / c.lambda_macro),
        p_micro_dbm: Some(26.0),
        ..explicit.clone()
    };
    if explicit.lambda_macro.is_some() {
        cfg.lambda_macro = explicit.lambda_macro;
    }
    for (slot, value) in [(&mut cfg.micro_ratio, explicit.micro_ratio), (&mut cfg.ue_ratio, explicit.ue_ratio)] {
        if value.is_some() {
            *slot = value;
        }
    }
    if explicit.p_micro_dbm.is_some() {
        cfg.p_micro_dbm = explicit.p_micro_dbm;
    }
    Ok(cfg.resolve()?)
}

const METRICS: [&str; 4] = ["outage", "load_micro", "rate_coverage", "mean_rate"];

/// One (series, swept value, scheme) point with every metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub series: Option<f64>,
    pub value: f64,
    pub scheme: Scheme,
    /// Indexed like the metric list: outage, load_micro, rate_coverage, mean_rate.
    pub analytic: [Option<f64>; 4],
    pub sim: [Option<(f64, f64)>; 4],
    pub note: String,
    pub sim_failed: bool,
}

fn sweep_point(spec: &ExperimentSpec, series: Option<f64>, value: f64, scheme: Scheme) -> SweepRow {
    let mut row = SweepRow {
        series,
        value,
        scheme,
        analytic: [None; 4],
        sim: [None; 4],
        note: String::new(),
        sim_failed: false,
    };
    let mut notes = Vec::new();
    let mut cfg = spec.params.clone();
    let axis = spec.sweep.as_ref().expect("validated sweep axis");
    let applied = spec
        .series
        .as_ref()
        .zip(series)
        .map_or(Ok(()), |(s, v)| s.variable.apply(&mut cfg, v))
        .and_then(|_| axis.variable.apply(&mut cfg, value));
    let p = match applied.and_then(|_| Ok(cfg.resolve()?)) {
        Ok(p) => p,
        Err(e) => {
            row.note = format!("invalid point: {e}");
            row.sim_failed = spec.sim.enabled;
            return row;
        }
    };
    if matches!(scheme, Scheme::PrioritizedSir | Scheme::MaxSir) {
        match analytic::coverage_report(&p) {
            Ok(c) => {
                row.analytic[0] = Some(c.outage);
                if scheme == Scheme::PrioritizedSir {
                    row.analytic[1] = Some(c.load_micro);
                }
                if c.regime == analytic::Regime::Invalid {
                    notes.push("closed form outside its valid regime".to_string());
                }
            }
            Err(e) => notes.push(format!("analytic: {e}")),
        }
    }
    if scheme == Scheme::PrioritizedSir {
        match analytic::rate_coverage(&p) {
            Ok(r) => row.analytic[2] = Some(r.rc_total),
            Err(e) => notes.push(format!("rate coverage: {e}")),
        }
        if p.noise_power == 0.0 {
            match analytic::mean_rate(&p) {
                Ok(m) => row.analytic[3] = Some(m),
                Err(e) => notes.push(format!("mean rate: {e}")),
            }
        }
    }
    if spec.sim.enabled {
        let mut mc = spec.sim.config(scheme);
        if mc.rate_mode == RateMode::AnalyticAverage && scheme != Scheme::PrioritizedSir {
            mc.rate_mode = RateMode::Off;
        }
        match monte_carlo(&p, &mc) {
            Ok(r) => {
                let pick = |e: Option<&MonteCarloEstimate>| e.map(|e| (e.mean, e.stderr));
                row.sim = [
                    pick(Some(&r.outage)),
                    pick(Some(&r.load_micro)),
                    pick(r.rate_coverage.as_ref()),
                    pick(r.mean_rate.as_ref()),
                ];
            }
            Err(e) => {
                notes.push(format!("simulation failed: {e}"));
                row.sim_failed = true;
            }
        }
    }
    row.note = notes.join("; ");
    row
}

/// Evaluates every sweep point, in parallel, in sweep order. Failures are
/// recorded on their rows.
pub fn sweep_rows(spec: &ExperimentSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let axis = spec.sweep.as_ref().ok_or_else(|| ExperimentError::Config("no sweep axis".into()))?;
    let series: Vec<Option<f64>> = match &spec.series {
        Some(s) => s.values.iter().copied().map(Some).collect(),
        None => vec![None],
    };
    let points: Vec<(Option<f64>, f64, Scheme)> = series
        .iter()
        .flat_map(|&s| axis.values.iter().flat_map(move |&v| spec.sim.schemes.iter().map(move |&sc| (s, v, sc))))
        .collect();
    Ok(points.into_par_iter().map(|(s, v, sc)| sweep_point(spec, s, v, sc)).collect())
}

fn run_sweep(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let rows = sweep_rows(spec)?;
    let axis = spec.sweep.as_ref().expect("validated sweep axis");
    let series_name = spec.series.as_ref().map_or("series", |s| s.variable.name());
    let mut files = Vec::new();
    for (i, metric) in METRICS.iter().enumerate() {
        let path = spec.output_dir.join(format!("sweep_{}_{metric}.csv", axis.variable.name()));
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record([series_name, "scheme", axis.variable.name(), "analytic", "sim_mean", "sim_stderr", "note"])?;
        for r in &rows {
            w.write_record([
                opt(r.series),
                r.scheme.name().to_string(),
                r.value.to_string(),
                opt(r.analytic[i]),
                opt(r.sim[i].map(|s| s.0)),
                opt(r.sim[i].map(|s| s.1)),
                r.note.clone(),
            ])?;
        }
        w.flush().map_err(io_err(&path))?;
        files.push(path);
    }
    let sim_failures = rows.iter().filter(|r| r.sim_failed).count();
    Ok(ExperimentOutcome { files, sim_failures, plan: None })
}

fn run_plan(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let req = spec.plan.unwrap_or_default();
    let solution = planner::solve(&req)?;
    let plan_path = spec.output_dir.join("plan.json");
    let mut w = create(&plan_path)?;
    serde_json::to_writer_pretty(&mut w, &solution)?;
    std::io::Write::flush(&mut w).map_err(io_err(&plan_path))?;

    let (klo, khi) = req.k_bounds;
    let ks: Vec<f64> = (0..=((khi - klo) * 10)).map(|i| f64::from(klo) + 0.1 * f64::from(i)).collect();
    let (lo, hi) = req.ratio_bounds;
    let n = 200;
    let ratios: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * f64::from(i) / f64::from(n)).collect();
    let contour_path = spec.output_dir.join("contour.csv");
    planner::write_contour_csv(create(&contour_path)?, &planner::contour_grid(&req, &ks, &ratios))?;
    Ok(ExperimentOutcome { files: vec![plan_path, contour_path], sim_failures: 0, plan: Some(solution) })
}

/// Outcome of one self-check in [`validate_suite`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

/// Fast self-checks of the closed forms, the planner and a small simulation.
pub fn validate_suite(runs: usize, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let base = SystemParams::default();
    let d = 1.0 - std::f64::consts::FRAC_2_PI;
    for k in 1..=3 {
        let o = analytic::outage(&base.with_reuse(k))?;
        let want = d.powi(k as i32);
        out.push(check(&format!("outage K={k}"), (o - want).abs() < 1e-4, format!("{o:.6} vs {want:.6}")));
    }
    for (k, want) in [(1, 0.388), (3, 0.602)] {
        let a = analytic::tier_loads(&base.with_reuse(k))?.0;
        out.push(check(&format!("micro load K={k}"), (a - want).abs() <= 0.005, format!("{a:.5} vs {want}")));
    }
    for (ratio, want) in [(1.0, 1), (4.0, 2), (8.0, 3)] {
        let p = base.with_density_ratio(ratio);
        let mut best = (0, f64::NEG_INFINITY);
        for k in 1..=8 {
            let rc = analytic::rate_coverage(&p.with_reuse(k))?.rc_total;
            if rc > best.1 {
                best = (k, rc);
            }
        }
        out.push(check(&format!("rate-coverage argmax ratio={ratio}"), best.0 == want, format!("K={}", best.0)));
    }
    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        let p = base.with_reuse(k);
        worst = worst.max((analytic::rate_coverage(&p)?.rc_total - analytic::rate_coverage_expanded(&p)?).abs());
    }
    out.push(check("expanded rate coverage", worst < 1e-10, format!("max diff {worst:e}")));

    let plan = planner::solve(&PlanningRequest::default())?;
    out.push(check(
        "planner reference point",
        plan.d == 2 && plan.k == 3 && (plan.density_ratio - 5.0).abs() <= 0.5 && plan.tag != SolverPath::Infeasible,
        format!("d={} K={} ratio={:.4}", plan.d, plan.k, plan.density_ratio),
    ));

    let p = base.with_reuse(3);
    let cfg = MonteCarloConfig { runs, seed, rate_mode: RateMode::Off, ..Default::default() };
    let prio = monte_carlo(&p, &cfg)?;
    let maxsir = monte_carlo(&p, &MonteCarloConfig { scheme: Scheme::MaxSir, ..cfg })?;
    let same = prio.records.iter().zip(&maxsir.records).all(|(a, b)| a.covered() == b.covered());
    out.push(check("prioritized and max-SIR outage coincide", same, format!("{runs} runs")));
    let o = analytic::outage(&p)?;
    let z = (prio.outage.mean - o) / prio.outage.stderr.max(f64::MIN_POSITIVE);
    out.push(check(
        "simulated outage K=3",
        z.abs() < 4.0,
        format!("{:.5} ± {:.5} vs {o:.5}", prio.outage.mean, prio.outage.stderr),
    ));
    let again = monte_carlo(&p, &cfg)?;
    out.push(check("seeded simulation repeats", again == prio, String::new()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tmp(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("hetnet-exp-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        d
    }

    #[test]
    fn empty_sweep_is_an_error() {
        let dir = tmp("empty");
        let mut spec = ExperimentSpec::new(Mode::Sweep, &dir);
        spec.sweep = Some(Axis { variable: SweepVar::Reuse, values: vec![] });
        assert!(matches!(run(&spec), Err(ExperimentError::Config(_))));
        assert!(!dir.join("sweep_K_outage.csv").exists());
    }

    #[test]
    fn sweep_variable_names() {
        assert_eq!(SweepVar::parse("T_db").unwrap(), SweepVar::ThresholdDb);
        assert!(SweepVar::parse("colour").is_err());
        for v in [SweepVar::Reuse, SweepVar::MicroRatio, SweepVar::MacroDensity] {
            assert_eq!(SweepVar::parse(v.name()).unwrap(), v);
        }
        let mut cfg = ParamsConfig::default();
        assert!(SweepVar::Reuse.apply(&mut cfg, 2.5).is_err());
    }

    #[test]
    fn analytic_sweep_is_reproducible() {
        let dir = tmp("sweep");
        let mut spec = ExperimentSpec::new(Mode::Sweep, &dir);
        spec.sweep = Some(Axis { variable: SweepVar::Reuse, values: (1..=4).map(f64::from).collect() });
        spec.sim.enabled = false;
        let out = run(&spec).unwrap();
        assert_eq!(out.files.len(), 5);
        let first = fs::read(dir.join("sweep_K_outage.csv")).unwrap();
        run(&spec).unwrap();
        assert_eq!(first, fs::read(dir.join("sweep_K_outage.csv")).unwrap());
        let text = String::from_utf8(first).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "series,scheme,K,analytic,sim_mean,sim_stderr,note");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with(",prioritized-sir,1,0.3633"));
        let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.join("manifest.json")).unwrap()).unwrap();
        assert_eq!(manifest["mode"], "sweep");
        assert_eq!(manifest["files"].as_array().unwrap().len(), 4);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn bad_points_are_annotated() {
        let dir = tmp("annot");
        let mut spec = ExperimentSpec::new(Mode::Sweep, &dir);
        spec.sweep = Some(Axis { variable: SweepVar::Gamma, values: vec![1.5, 4.0] });
        spec.sim.runs = 50;
        let out = run(&spec).unwrap();
        assert_eq!(out.sim_failures, 1);
        let text = fs::read_to_string(dir.join("sweep_gamma_outage.csv")).unwrap();
        assert!(text.lines().nth(1).unwrap().contains("invalid point"));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn spec_json() {
        let spec = ExperimentSpec::from_json(
            r#"{"mode":"sweep","output_dir":"out","sweep":{"variable":"T_db","values":[0,5]},
                "series":{"variable":"K","values":[1,2,3]},"sim":{"runs":100,"schemes":["max-sir"]}}"#,
        )
        .unwrap();
        assert_eq!(spec.sim.runs, 100);
        assert_eq!(spec.sim.side, 20.0);
        assert_eq!(spec.sim.schemes, vec![Scheme::MaxSir]);
        assert!(ExperimentSpec::from_json(r#"{"mode":"sweep","output_dir":"o","sweep":{"variable":"x","values":[]}}"#).is_err());
    }

    #[test]
    fn comparison_settings() {
        let spec = ExperimentSpec::new(Mode::Compare, "unused");
        let p = comparison_params(&spec).unwrap();
        assert_eq!((p.lambda_macro, p.lambda_micro, p.lambda_ue), (1.0, 5.0, 100.0));
        assert!((p.p_micro - 10f64.powf(-0.4)).abs() < 1e-12);
    }
}
