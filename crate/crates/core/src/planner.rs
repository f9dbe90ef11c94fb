//! Choice of the reuse factor K and the smallest micro/macro density ratio
//! meeting an outage cap and a rate-coverage floor.
//!
//! Everything is normalised to λ_M = 1 and P_μ = 1 W. K is relaxed to a real
//! number while searching and only integerised at the end.

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{self, band_coverage, rate_coverage_at, AnalyticError};
use crate::params::SystemParams;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("invalid planning request: {0}")]
    Request(String),
    #[error("D(γ,T) = {0} ≥ 1: the disjoint-coverage approximation breaks down, refusing to plan")]
    ApproximationInvalid(f64),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

pub type Result<T> = std::result::Result<T, PlanError>;

fn default_outage_max() -> f64 {
    0.10
}
fn default_rate_cov_min() -> f64 {
    0.50
}
fn default_ratio_bounds() -> (f64, f64) {
    (0.1, 30.0)
}
fn default_k_bounds() -> (u32, u32) {
    (1, 12)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanningRequest {
    pub gamma: f64,
    /// SIR threshold, linear.
    #[serde(rename = "T")]
    pub sir_threshold: f64,
    #[serde(rename = "lambda_u_over_lambda_M")]
    pub ue_ratio: f64,
    /// Linear.
    #[serde(rename = "P_M_over_P_mu")]
    pub power_ratio: f64,
    #[serde(rename = "W_hz")]
    pub bandwidth_hz: f64,
    /// bit/s
    #[serde(rename = "R_T")]
    pub rate_threshold: f64,
    #[serde(default = "default_outage_max")]
    pub outage_max: f64,
    #[serde(default = "default_rate_cov_min")]
    pub rate_cov_min: f64,
    /// λ_μ/λ_M search interval.
    #[serde(default = "default_ratio_bounds")]
    pub ratio_bounds: (f64, f64),
    #[serde(default = "default_k_bounds")]
    pub k_bounds: (u32, u32),
}

impl Default for PlanningRequest {
    /// 1 Mbit/s target, 46/30 dBm, λ_u = 100 λ_M, γ = 4, T = 0 dB, 20 MHz.
    fn default() -> Self {
        Self {
            gamma: 4.0,
            sir_threshold: 1.0,
            ue_ratio: 100.0,
            power_ratio: 10f64.powf(1.6),
            bandwidth_hz: 20e6,
            rate_threshold: 1e6,
            outage_max: default_outage_max(),
            rate_cov_min: default_rate_cov_min(),
            ratio_bounds: default_ratio_bounds(),
            k_bounds: default_k_bounds(),
        }
    }
}

impl PlanningRequest {
    pub fn from_json(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(PlanError::Request(msg));
        let (lo, hi) = self.ratio_bounds;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return bad(format!("ratio bounds [{lo}, {hi}] must be positive and non-empty"));
        }
        let (klo, khi) = self.k_bounds;
        if klo == 0 || klo > khi {
            return bad(format!("K bounds [{klo}, {khi}] must be non-empty and start at 1 or above"));
        }
        if !(self.outage_max > 0.0 && self.outage_max < 1.0) {
            return bad(format!("outage_max {} must lie in (0, 1)", self.outage_max));
        }
        if !(0.0..1.0).contains(&self.rate_cov_min) {
            return bad(format!("rate_cov_min {} must lie in [0, 1)", self.rate_cov_min));
        }
        self.params(lo).validate().map_err(AnalyticError::from)?;
        Ok(())
    }

    /// System parameters at density ratio `ratio`. `reuse` is left at 1;
    /// evaluation passes K explicitly.
    pub fn params(&self, ratio: f64) -> SystemParams {
        SystemParams {
            lambda_macro: 1.0,
            lambda_micro: ratio,
            lambda_ue: self.ue_ratio,
            p_macro: self.power_ratio,
            p_micro: 1.0,
            gamma: self.gamma,
            bandwidth_hz: self.bandwidth_hz,
            reuse: 1,
            sir_threshold: self.sir_threshold,
            rate_threshold: self.rate_threshold,
            noise_power: 0.0,
        }
    }

    /// Rate coverage at real-valued K, or `None` where the closed form is
    /// undefined (e.g. ρ overflow).
    pub fn rate_coverage(&self, k: f64, ratio: f64) -> Option<f64> {
        rate_coverage_at(&self.params(ratio), k).ok().map(|r| r.rc_total)
    }

    pub fn outage(&self, k: f64) -> Result<f64> {
        let d = band_coverage(self.gamma, self.sir_threshold)?.value;
        analytic::network_coverage(d.clamp(0.0, 1.0), k).map(|c| 1.0 - c).map_err(Into::into)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverPath {
    StationaryPoint,
    FloorFallback,
    Infeasible,
}

/// One row of the per-K diagnostic sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaPoint {
    pub k: u32,
    pub ratio: Option<f64>,
    pub outage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanningSolution {
    pub k: u32,
    pub density_ratio: f64,
    pub outage: f64,
    pub rate_coverage: f64,
    pub tag: SolverPath,
    /// Largest K violating the outage cap.
    pub d: u32,
    /// Continuous minimiser of the Γ curve, when one was found.
    pub k_star: Option<f64>,
    pub sweep: Vec<GammaPoint>,
}

/// d such that the admissible reuse factors are K ≥ d + 1, i.e. the floor of
/// ln(outage_max) / ln(1 - D(γ,T)).
pub fn feasibility_floor(gamma: f64, threshold: f64, outage_max: f64) -> Result<u32> {
    let d = band_coverage(gamma, threshold)?.value;
    if d >= 1.0 {
        return Err(PlanError::ApproximationInvalid(d));
    }
    let bound = outage_max.ln() / (1.0 - d).ln();
    Ok(if bound.is_finite() { bound.floor().max(0.0) as u32 } else { 0 })
}

const SCAN_POINTS: usize = 64;
const RATIO_REL_TOL: f64 = 1e-4;

/// Smallest density ratio on which rate coverage reaches `rate_cov_min` at
/// reuse `k`, searched inside the ratio bounds. Returns the lower bound when
/// it is already feasible and `None` when no ratio in range is.
pub fn gamma_curve(req: &PlanningRequest, k: f64) -> Option<f64> {
    let (lo, hi) = req.ratio_bounds;
    let level = req.rate_cov_min;
    let ok = |ratio: f64| req.rate_coverage(k, ratio).is_some_and(|rc| rc >= level);
    if ok(lo) {
        return Some(lo);
    }
    let step = (hi / lo).ln() / (SCAN_POINTS - 1) as f64;
    let mut below = lo;
    for i in 1..SCAN_POINTS {
        let x = if i == SCAN_POINTS - 1 { hi } else { lo * (step * i as f64).exp() };
        if ok(x) {
            let mut above = x;
            while above - below > RATIO_REL_TOL * above {
                let mid = 0.5 * (below + above);
                if ok(mid) {
                    above = mid;
                } else {
                    below = mid;
                }
            }
            return Some(above);
        }
        below = x;
    }
    None
}

const DERIV_STEP: f64 = 1e-3;
const K_SCAN_STEP: f64 = 0.25;

/// ∂(rate coverage)/∂K at (K, Γ(K)), by central differences with Γ held.
fn rc_k_slope(req: &PlanningRequest, k: f64) -> Option<f64> {
    let ratio = gamma_curve(req, k)?;
    let up = req.rate_coverage(k + DERIV_STEP, ratio)?;
    let down = req.rate_coverage(k - DERIV_STEP, ratio)?;
    Some((up - down) / (2.0 * DERIV_STEP))
}

/// Continuous K at which the Γ curve is stationary (a minimum): the slope
/// of rate coverage in K changes from positive to non-positive. Among
/// several candidates the one with the smallest Γ wins.
pub fn stationary_k(req: &PlanningRequest) -> Option<f64> {
    let (klo, khi) = req.k_bounds;
    let start = f64::from(klo).max(1.0) + DERIV_STEP;
    let end = f64::from(khi);
    let n = ((end - start) / K_SCAN_STEP).ceil().max(1.0) as usize;
    let grid: Vec<f64> = (0..=n).map(|i| (start + K_SCAN_STEP * i as f64).min(end)).collect();
    let slopes: Vec<Option<f64>> = grid.iter().map(|&k| rc_k_slope(req, k)).collect();

    let mut best: Option<(f64, f64)> = None;
    for i in 1..grid.len() {
        let (Some(s0), Some(s1)) = (slopes[i - 1], slopes[i]) else { continue };
        if !(s0 > 0.0 && s1 <= 0.0) {
            continue;
        }
        let (mut a, mut b) = (grid[i - 1], grid[i]);
        while b - a > 1e-6 {
            let m = 0.5 * (a + b);
            match rc_k_slope(req, m) {
                Some(s) if s > 0.0 => a = m,
                Some(_) => b = m,
                None => break,
            }
        }
        let k = 0.5 * (a + b);
        if let Some(g) = gamma_curve(req, k) {
            if best.is_none_or(|(_, bg)| g < bg) {
                best = Some((k, g));
            }
        }
    }
    best.map(|(k, _)| k)
}

fn verify(req: &PlanningRequest, k: u32, ratio: f64) -> Option<(f64, f64)> {
    let o = req.outage(f64::from(k)).ok()?;
    let rc = req.rate_coverage(f64::from(k), ratio)?;
    (o < req.outage_max && rc >= req.rate_cov_min - 1e-6).then_some((o, rc))
}

/// Stationary-point heuristic with the two-case integer rule, falling back
/// to the best admissible K when the rule's pick does not verify.
pub fn solve(req: &PlanningRequest) -> Result<PlanningSolution> {
    req.validate()?;
    let d = feasibility_floor(req.gamma, req.sir_threshold, req.outage_max)?;
    let (klo, khi) = req.k_bounds;
    let first = (d + 1).max(klo);

    let sweep: Vec<GammaPoint> = (klo..=khi)
        .map(|k| {
            let kf = f64::from(k);
            Ok(GammaPoint { k, ratio: gamma_curve(req, kf), outage: req.outage(kf)? })
        })
        .collect::<Result<_>>()?;
    let gamma_at = |k: u32| sweep.iter().find(|g| g.k == k).and_then(|g| g.ratio);

    let k_star = stationary_k(req);
    let (pick, tag) = match k_star {
        Some(ks) if ks.floor() as u32 >= first => {
            let f = ks.floor() as u32;
            let cands = [f, f + 1];
            let best = cands
                .iter()
                .filter(|&&k| k <= khi)
                .filter_map(|&k| gamma_at(k).map(|g| (k, g)))
                .min_by(|a, b| a.1.total_cmp(&b.1));
            (best, SolverPath::StationaryPoint)
        }
        _ => (gamma_at(first).map(|g| (first, g)), SolverPath::FloorFallback),
    };

    let checked = pick.and_then(|(k, g)| verify(req, k, g).map(|(o, rc)| (k, g, o, rc, tag)));
    let result = checked.or_else(|| {
        (first..=khi)
            .filter_map(|k| gamma_at(k).map(|g| (k, g)))
            .filter_map(|(k, g)| verify(req, k, g).map(|(o, rc)| (k, g, o, rc)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, g, o, rc)| (k, g, o, rc, SolverPath::FloorFallback))
    });

    Ok(match result {
        Some((k, density_ratio, outage, rate_coverage, tag)) => {
            PlanningSolution { k, density_ratio, outage, rate_coverage, tag, d, k_star, sweep }
        }
        None => {
            let k = first.min(khi);
            let ratio = req.ratio_bounds.1;
            PlanningSolution {
                k,
                density_ratio: ratio,
                outage: req.outage(f64::from(k))?,
                rate_coverage: req.rate_coverage(f64::from(k), ratio).unwrap_or(f64::NAN),
                tag: SolverPath::Infeasible,
                d,
                k_star,
                sweep,
            }
        }
    })
}

/// Brute-force reference: every integer K in `ks` and ratios on a uniform
/// grid from the lower bound with step `step`; returns the feasible point
/// with the smallest ratio (smaller K on ties).
pub fn grid_search(req: &PlanningRequest, ks: std::ops::RangeInclusive<u32>, step: f64) -> Option<(u32, f64)> {
    let (lo, hi) = req.ratio_bounds;
    let n = ((hi - lo) / step).floor() as usize;
    let mut best: Option<(u32, f64)> = None;
    for k in ks {
        let kf = f64::from(k);
        if !req.outage(kf).is_ok_and(|o| o < req.outage_max) {
            continue;
        }
        let hit = (0..=n)
            .map(|i| lo + step * i as f64)
            .take_while(|&r| best.is_none_or(|(_, b)| r < b))
            .find(|&r| req.rate_coverage(kf, r).is_some_and(|rc| rc >= req.rate_cov_min));
        if let Some(r) = hit {
            best = Some((k, r));
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub k: f64,
    pub ratio: f64,
    pub rate_coverage: Option<f64>,
}

/// Rate coverage over a (K, ratio) grid for level-curve plots.
pub fn contour_grid(req: &PlanningRequest, ks: &[f64], ratios: &[f64]) -> Vec<ContourPoint> {
    ks.iter()
        .flat_map(|&k| ratios.iter().map(move |&ratio| ContourPoint { k, ratio, rate_coverage: req.rate_coverage(k, ratio) }))
        .collect()
}

/// CSV with columns `K,ratio,rate_coverage`; undefined cells are left empty.
pub fn write_contour_csv<W: Write>(out: W, points: &[ContourPoint]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["K", "ratio", "rate_coverage"])?;
    for p in points {
        w.write_record([p.k.to_string(), p.ratio.to_string(), p.rate_coverage.map_or(String::new(), |v| v.to_string())])?;
    }
    w.flush()?;
    Ok(())
}
