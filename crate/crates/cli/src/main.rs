use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hetnet::experiment::{self, Axis, ExperimentError, ExperimentSpec, Mode, SimControls, SweepVar};
use hetnet::planner::{PlanError, PlanningRequest, SolverPath};
use hetnet::simulator::Scheme;
use hetnet::ParamsConfig;
use serde::Deserialize;

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;
const EXIT_SIMULATION: u8 = 4;
const EXIT_OTHER: u8 = 1;

#[derive(Parser, Debug)]
#[command(name = "hetnet", version, about = "Two-tier HetNet coverage, rate and planning experiments")]
struct Cli {
    /// JSON config file; command-line flags override its fields.
    #[arg(long, global = true, env = "HETNET_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory (default: out/<command>).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form coverage, load, rate coverage and mean rate.
    Analytic(ParamFlags),
    /// Monte Carlo estimates for one parameter point.
    Simulate {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        sim: SimFlags,
        /// Write per-run JSONL traces.
        #[arg(long)]
        traces: bool,
    },
    /// Every association scheme at the comparison settings.
    Compare {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        sim: SimFlags,
        /// Reuse factor for the schemes that use reuse (default 3).
        #[arg(long = "reuse")]
        compare_reuse: Option<u32>,
    },
    /// Sweep one parameter, optionally per series of another.
    Sweep {
        #[command(flatten)]
        params: ParamFlags,
        #[command(flatten)]
        sim: SimFlags,
        /// Swept parameter: K, T_db, micro_ratio, ue_ratio, P_mu_dbm, P_M_dbm, R_T, gamma, lambda_M.
        #[arg(long = "var")]
        variable: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Second parameter; one series of rows per value.
        #[arg(long = "series-var")]
        series_variable: Option<String>,
        #[arg(long = "series-values", value_delimiter = ',', allow_hyphen_values = true)]
        series_values: Option<Vec<f64>>,
        /// Closed forms only.
        #[arg(long)]
        no_sim: bool,
    },
    /// Choose K and the micro/macro density ratio.
    Plan {
        /// Planning request JSON; overrides the config file's `plan` section.
        #[arg(long)]
        request: Option<PathBuf>,
        #[arg(long)]
        outage_max: Option<f64>,
        #[arg(long)]
        rate_cov_min: Option<f64>,
    },
    /// Quick self-checks; exits non-zero on any failure.
    Validate {
        #[arg(long, default_value_t = 2000)]
        runs: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args, Debug, Default)]
struct ParamFlags {
    /// Frequency reuse factor.
    #[arg(long = "K")]
    reuse: Option<u32>,
    /// SIR threshold, dB.
    #[arg(long = "T-db", allow_hyphen_values = true)]
    t_db: Option<f64>,
    /// Macro density, per km².
    #[arg(long = "lambda-M")]
    lambda_macro: Option<f64>,
    /// λ_μ/λ_M.
    #[arg(long = "micro-ratio")]
    micro_ratio: Option<f64>,
    /// λ_u/λ_M.
    #[arg(long = "ue-ratio")]
    ue_ratio: Option<f64>,
    /// Micro transmit power, dBm.
    #[arg(long = "P-mu-dbm", allow_hyphen_values = true)]
    p_micro_dbm: Option<f64>,
    /// Macro transmit power, dBm.
    #[arg(long = "P-M-dbm", allow_hyphen_values = true)]
    p_macro_dbm: Option<f64>,
    /// Path-loss exponent.
    #[arg(long)]
    gamma: Option<f64>,
    /// Bandwidth, Hz.
    #[arg(long = "W-hz")]
    bandwidth_hz: Option<f64>,
    /// Rate threshold, bit/s.
    #[arg(long = "R-T")]
    rate_threshold: Option<f64>,
    /// Noise power, dBm.
    #[arg(long = "noise-dbm", allow_hyphen_values = true)]
    noise_dbm: Option<f64>,
}

impl ParamFlags {
    fn apply(&self, cfg: &mut ParamsConfig) {
        macro_rules! set {
            ($($flag:ident => $field:ident),*) => {$(
                if let Some(v) = self.$flag {
                    cfg.$field = Some(v);
                }
            )*};
        }
        set!(reuse => reuse, t_db => sir_threshold_db, lambda_macro => lambda_macro,
             p_micro_dbm => p_micro_dbm, p_macro_dbm => p_macro_dbm, gamma => gamma,
             bandwidth_hz => bandwidth_hz, rate_threshold => rate_threshold, noise_dbm => noise_dbm);
        if let Some(v) = self.micro_ratio {
            cfg.micro_ratio = Some(v);
            cfg.lambda_micro = None;
        }
        if let Some(v) = self.ue_ratio {
            cfg.ue_ratio = Some(v);
            cfg.lambda_ue = None;
        }
    }
}

#[derive(Args, Debug, Default)]
struct SimFlags {
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Side of the simulated square, km.
    #[arg(long)]
    side: Option<f64>,
    /// Association scheme; repeat for several.
    #[arg(long = "scheme")]
    schemes: Vec<String>,
    /// off, realized or analytic-average.
    #[arg(long)]
    rate_mode: Option<String>,
}

impl SimFlags {
    fn apply(&self, sim: &mut SimControls) -> Result<(), String> {
        if let Some(v) = self.runs {
            sim.runs = v;
        }
        if let Some(v) = self.seed {
            sim.seed = v;
        }
        if let Some(v) = self.side {
            sim.side = v;
        }
        if !self.schemes.is_empty() {
            sim.schemes = self
                .schemes
                .iter()
                .map(|s| s.parse::<Scheme>().map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
        }
        if let Some(m) = &self.rate_mode {
            sim.rate_mode = serde_json::from_value(serde_json::Value::String(m.clone()))
                .map_err(|_| format!("unknown rate mode {m:?}"))?;
        }
        Ok(())
    }
}

/// Everything a config file may set; all optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ConfigFile {
    params: ParamsConfig,
    sim: Option<SimControls>,
    sweep: Option<Axis>,
    series: Option<Axis>,
    plan: Option<PlanningRequest>,
    compare_reuse: Option<u32>,
    output_dir: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<ConfigFile, String> {
    let Some(path) = path else { return Ok(ConfigFile::default()) };
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn axis(variable: &str, values: Vec<f64>) -> Result<Axis, String> {
    Ok(Axis { variable: SweepVar::parse(variable).map_err(|e| e.to_string())?, values })
}

enum Failure {
    Config(String),
    Infeasible,
    Simulation(String),
    Other(String),
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Config(_) | ExperimentError::Param(_) | ExperimentError::Json(_) => {
                Failure::Config(e.to_string())
            }
            ExperimentError::Plan(PlanError::Request(_) | PlanError::ApproximationInvalid(_)) => {
                Failure::Config(e.to_string())
            }
            ExperimentError::Sim(_) => Failure::Simulation(e.to_string()),
            _ => Failure::Other(e.to_string()),
        }
    }
}

fn build_spec(cli: &Cli, file: ConfigFile) -> Result<ExperimentSpec, Failure> {
    let mode = match &cli.command {
        Command::Analytic(_) => Mode::Analytic,
        Command::Simulate { .. } => Mode::Simulate,
        Command::Compare { .. } => Mode::Compare,
        Command::Sweep { .. } => Mode::Sweep,
        Command::Plan { .. } => Mode::Plan,
        Command::Validate { .. } => unreachable!("validate has no spec"),
    };
    let name = serde_json::to_value(mode).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
    let out = cli.out.clone().or(file.output_dir).unwrap_or_else(|| PathBuf::from("out").join(name));
    let mut spec = ExperimentSpec::new(mode, out);
    spec.params = file.params;
    spec.sim = file.sim.unwrap_or_default();
    spec.sweep = file.sweep;
    spec.series = file.series;
    spec.plan = file.plan;
    if let Some(k) = file.compare_reuse {
        spec.compare_reuse = k;
    }
    match &cli.command {
        Command::Analytic(p) => p.apply(&mut spec.params),
        Command::Simulate { params, sim, traces } => {
            params.apply(&mut spec.params);
            sim.apply(&mut spec.sim).map_err(Failure::Config)?;
            spec.sim.traces |= traces;
        }
        Command::Compare { params, sim, compare_reuse } => {
            params.apply(&mut spec.params);
            sim.apply(&mut spec.sim).map_err(Failure::Config)?;
            if let Some(k) = compare_reuse {
                spec.compare_reuse = *k;
            }
        }
        Command::Sweep { params, sim, variable, values, series_variable, series_values, no_sim } => {
            params.apply(&mut spec.params);
            sim.apply(&mut spec.sim).map_err(Failure::Config)?;
            if *no_sim {
                spec.sim.enabled = false;
            }
            let var = variable.clone().or_else(|| spec.sweep.as_ref().map(|a| a.variable.name().to_string()));
            if let Some(var) = var {
                let vals = values.clone().or_else(|| spec.sweep.as_ref().map(|a| a.values.clone())).unwrap_or_default();
                spec.sweep = Some(axis(&var, vals).map_err(Failure::Config)?);
            }
            if let Some(var) = series_variable {
                let vals = series_values.clone().unwrap_or_default();
                spec.series = Some(axis(var, vals).map_err(Failure::Config)?);
            }
        }
        Command::Plan { request, outage_max, rate_cov_min } => {
            if let Some(path) = request {
                let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
                spec.plan = Some(
                    PlanningRequest::from_json(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?,
                );
            }
            let mut req = spec.plan.unwrap_or_default();
            if let Some(v) = outage_max {
                req.outage_max = *v;
            }
            if let Some(v) = rate_cov_min {
                req.rate_cov_min = *v;
            }
            spec.plan = Some(req);
        }
        Command::Validate { .. } => {}
    }
    Ok(spec)
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Command::Validate { runs, seed } = cli.command {
        let checks = experiment::validate_suite(runs, seed)?;
        let mut failed = 0;
        for c in &checks {
            println!("[{}] {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            failed += usize::from(!c.passed);
        }
        return if failed == 0 { Ok(()) } else { Err(Failure::Other(format!("{failed} check(s) failed"))) };
    }
    let file = load_config(cli.config.as_deref()).map_err(Failure::Config)?;
    let spec = build_spec(&cli, file)?;
    let outcome = experiment::run(&spec)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    if spec.mode == Mode::Analytic {
        let p = spec.params.resolve().map_err(|e| Failure::Config(e.to_string()))?;
        let summary = experiment::analytic_summary(&p)?;
        println!("{}", serde_json::to_string_pretty(&summary).map_err(|e| Failure::Other(e.to_string()))?);
    }
    if let Some(plan) = &outcome.plan {
        println!("{}", serde_json::to_string_pretty(plan).map_err(|e| Failure::Other(e.to_string()))?);
        if plan.tag == SolverPath::Infeasible {
            return Err(Failure::Infeasible);
        }
    }
    if outcome.sim_failures > 0 {
        return Err(Failure::Simulation(format!("{} simulation point(s) failed", outcome.sim_failures)));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let (code, msg) = match f {
                Failure::Config(m) => (EXIT_CONFIG, format!("config error: {m}")),
                Failure::Infeasible => (EXIT_INFEASIBLE, "no feasible plan within the search bounds".to_string()),
                Failure::Simulation(m) => (EXIT_SIMULATION, format!("simulation failed: {m}")),
                Failure::Other(m) => (EXIT_OTHER, m),
            };
            eprintln!("hetnet: {msg}");
            ExitCode::from(code)
        }
    }
}
