use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::association::{associate, scheme_bandwidth_fraction, Association, AssociationOutcome, Scheme, SchemeParams};
use super::link::draw_links;
use super::realization::{sample_cells, sample_ues, Realization};
use super::SimError;
use crate::analytic::{self, CoverageReport};
use crate::params::SystemParams;

/// How the round-robin population of the serving cell is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RateMode {
    /// Skip rate metrics entirely.
    Off,
    /// Count the sampled UEs that the same scheme attaches to the serving
    /// cell and slice, each with its own fading draws.
    Realized,
    /// Use the mean population A·P_c·λ_u/λ of the closed-form model.
    /// Only defined for the prioritized scheme.
    AnalyticAverage,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    /// Side of the simulated square, km.
    pub side: f64,
    pub runs: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub scheme_params: SchemeParams,
    pub rate_mode: RateMode,
    /// Realized mode only counts UEs within this distance (km) of the
    /// serving cell.
    pub count_radius: f64,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self {
            side: 20.0,
            runs: 10_000,
            seed: 0x5eed,
            scheme: Scheme::PrioritizedSir,
            scheme_params: SchemeParams::default(),
            rate_mode: RateMode::AnalyticAverage,
            count_radius: 3.0,
        }
    }
}

/// One run seen from the reference UE.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: u64,
    pub association: Association,
    /// UEs sharing the serving slice, reference included. Fractional in
    /// analytic-average mode.
    pub population: Option<f64>,
    /// bit/s; zero in outage.
    pub rate: Option<f64>,
}

impl RunRecord {
    pub fn covered(&self) -> bool {
        self.association.outcome != AssociationOutcome::Outage
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub metric: String,
    pub mean: f64,
    /// Sample standard deviation over √N.
    pub stderr: f64,
    pub runs: usize,
    pub seed: u64,
}

impl MonteCarloEstimate {
    fn from_samples(metric: &str, samples: impl Iterator<Item = f64> + Clone, seed: u64) -> Self {
        let (n, sum) = samples.clone().fold((0usize, 0.0), |(n, s), x| (n + 1, s + x));
        let mean = if n == 0 { f64::NAN } else { sum / n as f64 };
        let ss: f64 = samples.map(|x| (x - mean) * (x - mean)).sum();
        let stderr = if n > 1 { (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt() } else { 0.0 };
        Self { metric: metric.to_string(), mean, stderr, runs: n, seed }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloResult {
    pub scheme: Scheme,
    pub outage: MonteCarloEstimate,
    /// Share of covered runs served by the micro tier.
    pub load_micro: MonteCarloEstimate,
    pub rate_coverage: Option<MonteCarloEstimate>,
    pub mean_rate: Option<MonteCarloEstimate>,
    pub records: Vec<RunRecord>,
}

impl MonteCarloResult {
    pub fn estimates(&self) -> Vec<&MonteCarloEstimate> {
        let mut v = vec![&self.outage, &self.load_micro];
        v.extend(self.rate_coverage.iter());
        v.extend(self.mean_rate.iter());
        v
    }
}

/// Independent generator for run `run` of the stream rooted at `seed`.
pub fn run_rng(seed: u64, run: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    rng
}

/// Shannon rate of a served UE under round-robin sharing:
/// W_slice / population · log₂(1 + SIR). Zero in outage.
pub fn reference_rate(
    p: &SystemParams,
    scheme: Scheme,
    sp: &SchemeParams,
    association: &Association,
    population: f64,
) -> f64 {
    let (Some(sir), Some(segment)) = (association.sir, association.segment) else {
        return 0.0;
    };
    if association.outcome == AssociationOutcome::Outage {
        return 0.0;
    }
    let band = p.bandwidth_hz * scheme_bandwidth_fraction(scheme, segment, p.reuse, sp);
    band / population * (1.0 + sir).log2()
}

/// Number of UEs, the reference included, that `scheme` attaches to the same
/// cell and slice as `serving`. Each candidate UE gets fresh fading draws.
pub fn cell_population<R: Rng + ?Sized>(
    r: &Realization,
    p: &SystemParams,
    cfg: &MonteCarloConfig,
    serving: &Association,
    rng: &mut R,
) -> Result<usize, SimError> {
    let Some(key) = serving.serving_key() else {
        return Ok(0);
    };
    let centre = r.enbs[key.0].position;
    let mut count = 1;
    for &ue in &r.ues {
        if (ue.0 - centre.0).hypot(ue.1 - centre.1) > cfg.count_radius {
            continue;
        }
        let links = draw_links(r, ue, p.gamma, rng);
        if links.iter().any(|l| l.distance == 0.0) {
            log::warn!("UE sampled on a cell site, skipped");
            continue;
        }
        let a = associate(r, &links, cfg.scheme, &cfg.scheme_params, p.gamma, p.sir_threshold)?;
        if a.serving_key() == Some(key) {
            count += 1;
        }
    }
    Ok(count)
}

/// Mean serving-cell populations (micro, macro) of the closed-form model.
fn analytic_populations(p: &SystemParams, cov: &CoverageReport) -> (f64, f64) {
    let base = cov.network * p.lambda_ue;
    (cov.load_micro * base / p.lambda_micro, cov.load_macro * base / p.lambda_macro)
}

struct RunContext<'a> {
    params: &'a SystemParams,
    cfg: &'a MonteCarloConfig,
    populations: Option<(f64, f64)>,
}

impl RunContext<'_> {
    fn run(&self, run: u64) -> Result<RunRecord, SimError> {
        let p = self.params;
        let cfg = self.cfg;
        let mut rng = run_rng(cfg.seed, run);
        // UEs come after the reference links so every rate mode sees the
        // same snapshot and fading
        let mut r = sample_cells(p, cfg.side, &mut rng);
        let links = draw_links(&r, (0.0, 0.0), p.gamma, &mut rng);
        if cfg.rate_mode == RateMode::Realized {
            sample_ues(&mut r, p.lambda_ue, &mut rng);
        }
        let association = associate(&r, &links, cfg.scheme, &cfg.scheme_params, p.gamma, p.sir_threshold)?;
        let population = match cfg.rate_mode {
            RateMode::Off => None,
            RateMode::Realized => match association.outcome {
                AssociationOutcome::Outage => None,
                _ => Some(cell_population(&r, p, cfg, &association, &mut rng)? as f64),
            },
            RateMode::AnalyticAverage => {
                let (micro, macro_) = self.populations.expect("populations computed for analytic-average mode");
                match association.outcome {
                    AssociationOutcome::Micro(_) => Some(micro),
                    AssociationOutcome::Macro(_) => Some(macro_),
                    AssociationOutcome::Outage => None,
                }
            }
        };
        let rate = match cfg.rate_mode {
            RateMode::Off => None,
            _ => Some(population.map_or(0.0, |n| reference_rate(p, cfg.scheme, &cfg.scheme_params, &association, n))),
        };
        Ok(RunRecord { run, association, population, rate })
    }
}

/// Single run, as executed inside [`monte_carlo`].
pub fn simulate_run(p: &SystemParams, cfg: &MonteCarloConfig, run: u64) -> Result<RunRecord, SimError> {
    let populations = prepare(p, cfg)?;
    RunContext { params: p, cfg, populations }.run(run)
}

fn prepare(p: &SystemParams, cfg: &MonteCarloConfig) -> Result<Option<(f64, f64)>, SimError> {
    p.validate()?;
    if cfg.runs == 0 {
        return Err(SimError::NoRuns);
    }
    if !(cfg.side > 0.0) {
        return Err(SimError::BadRegion(cfg.side));
    }
    match cfg.rate_mode {
        RateMode::AnalyticAverage if cfg.scheme != Scheme::PrioritizedSir => {
            Err(SimError::UnsupportedRateMode(cfg.scheme))
        }
        RateMode::AnalyticAverage => {
            let cov = analytic::coverage_report(p)?;
            Ok(Some(analytic_populations(p, &cov)))
        }
        _ => Ok(None),
    }
}

/// Runs `cfg.runs` independent snapshots and aggregates outage, micro load,
/// rate coverage and mean rate.
///
/// Run i draws from stream i of a ChaCha8 generator seeded with `cfg.seed`
/// and results are reduced in run order, so the output is bit-identical for
/// any thread count.
pub fn monte_carlo(p: &SystemParams, cfg: &MonteCarloConfig) -> Result<MonteCarloResult, SimError> {
    let populations = prepare(p, cfg)?;
    let ctx = RunContext { params: p, cfg, populations };
    let records = (0..cfg.runs as u64)
        .into_par_iter()
        .map(|run| ctx.run(run))
        .collect::<Result<Vec<_>, _>>()?;

    let seed = cfg.seed;
    let indicator = |b: bool| if b { 1.0 } else { 0.0 };
    let outage = MonteCarloEstimate::from_samples("outage", records.iter().map(|r| indicator(!r.covered())), seed);
    let load_micro = MonteCarloEstimate::from_samples(
        "load_micro",
        records.iter().filter(|r| r.covered()).map(|r| {
            indicator(matches!(r.association.outcome, AssociationOutcome::Micro(_)))
        }),
        seed,
    );
    let (rate_coverage, mean_rate) = if cfg.rate_mode == RateMode::Off {
        (None, None)
    } else {
        let rates = records.iter().map(|r| r.rate.unwrap_or(0.0));
        (
            Some(MonteCarloEstimate::from_samples(
                "rate_coverage",
                rates.clone().map(|x| indicator(x >= p.rate_threshold)),
                seed,
            )),
            Some(MonteCarloEstimate::from_samples("mean_rate", rates, seed)),
        )
    };
    Ok(MonteCarloResult { scheme: cfg.scheme, outage, load_micro, rate_coverage, mean_rate, records })
}

/// CSV rows `metric,mean,stderr,N,seed`.
pub fn write_estimates_csv<W: Write>(out: W, estimates: &[&MonteCarloEstimate]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "mean", "stderr", "N", "seed"])?;
    for e in estimates {
        w.write_record([
            e.metric.clone(),
            e.mean.to_string(),
            e.stderr.to_string(),
            e.runs.to_string(),
            e.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per run.
pub fn write_traces_jsonl<W: Write>(mut out: W, records: &[RunRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
