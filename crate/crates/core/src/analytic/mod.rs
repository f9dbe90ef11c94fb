//! Closed-form coverage, outage, tier load, rate coverage and mean bit-rate
//! for random frequency reuse K with micro-first SIR association.
//!
//! Per-band quantities treat the cells of one band as disjoint coverage
//! regions. That is exact for thresholds ≥ 1 and an upper bound below it,
//! which is why [`Regime`] travels with every coverage value.

mod mean_rate;
mod rate;

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::params::{ParamError, SystemParams, TierThresholds};
use crate::quadrature::{self, NoConvergence};

pub use mean_rate::{incomplete_beta_integral, mean_rate};
pub use rate::{
    rate_coverage, rate_coverage_at, rate_coverage_expanded, rate_report, rate_thresholds, RateReport,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("reuse factor must be at least 1, got {0}")]
    InvalidReuse(f64),
    #[error("network coverage is zero; tier loads are undefined")]
    DegenerateCoverage,
    #[error("rate-threshold exponent {0} overflows 2^x")]
    RateThresholdOverflow(f64),
    #[error("incomplete Beta integral diverges for upper limit {0} (need 0 < x < 1)")]
    BetaDomain(f64),
    #[error("closed form requires the noise-free model (noise power {0} W)")]
    NoiseUnsupported(f64),
    #[error(transparent)]
    Quadrature(#[from] NoConvergence),
}

pub type Result<T> = std::result::Result<T, AnalyticError>;

/// C(γ) = 2π² / (γ sin(2π/γ)).
pub fn c_gamma(gamma: f64) -> Result<f64> {
    if !(gamma > 2.0) || !gamma.is_finite() {
        return Err(ParamError::PathLossTooSmall(gamma).into());
    }
    Ok(2.0 * PI * PI / (gamma * (2.0 * PI / gamma).sin()))
}

/// How far the disjoint-coverage approximation can be trusted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// Threshold ≥ 1: same-band coverage regions are disjoint.
    Exact,
    /// Threshold < 1: overlap is neglected, coverage is overestimated.
    Approximate,
    /// The approximation produced a per-band coverage above 1.
    Invalid,
}

impl Regime {
    fn classify(threshold: f64, value: f64) -> Self {
        if value > 1.0 {
            Regime::Invalid
        } else if threshold < 1.0 {
            Regime::Approximate
        } else {
            Regime::Exact
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandCoverage {
    /// Unclamped value; may exceed 1 when `regime` is `Invalid`.
    pub value: f64,
    pub regime: Regime,
}

/// D(γ, T) = π / (C(γ) T^{2/γ}): per-band coverage with a common threshold
/// and no noise. Densities, powers and K all cancel.
pub fn band_coverage(gamma: f64, threshold: f64) -> Result<BandCoverage> {
    if !(threshold > 0.0) {
        return Err(ParamError::NonPositive { field: "T", value: threshold }.into());
    }
    let value = PI / (c_gamma(gamma)? * threshold.powf(2.0 / gamma));
    Ok(BandCoverage { value, regime: Regime::classify(threshold, value) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Macro,
    Micro,
}

impl Tier {
    fn density(self, p: &SystemParams) -> f64 {
        match self {
            Tier::Macro => p.lambda_macro,
            Tier::Micro => p.lambda_micro,
        }
    }

    fn power(self, p: &SystemParams) -> f64 {
        match self {
            Tier::Macro => p.p_macro,
            Tier::Micro => p.p_micro,
        }
    }
}

/// Σ_i λ_i P_i^{2/γ}
fn weighted_density(p: &SystemParams) -> f64 {
    let e = 2.0 / p.gamma;
    p.lambda_macro * p.p_macro.powf(e) + p.lambda_micro * p.p_micro.powf(e)
}

/// q = (λ_M/λ_μ)(P_M/P_μ)^{2/γ}, the macro-to-micro weight of a band.
pub(crate) fn macro_weight(p: &SystemParams) -> f64 {
    (p.lambda_macro / p.lambda_micro) * (p.p_macro / p.p_micro).powf(2.0 / p.gamma)
}

/// Contribution of one tier's cells to the per-band coverage, at reuse `k`
/// (k only matters when noise is present).
fn tier_band_coverage(p: &SystemParams, tier: Tier, threshold: f64, k: f64) -> Result<f64> {
    let e = 2.0 / p.gamma;
    let c = c_gamma(p.gamma)?;
    let (lambda, power) = (tier.density(p), tier.power(p));
    if p.noise_power == 0.0 {
        return Ok(lambda * PI * power.powf(e) * threshold.powf(-e) / (c * weighted_density(p)));
    }
    // (λ_j/K) ∫_{R²} exp(-A r² - B r^γ) dr with the angle integrated out.
    // Rescaling r = s/√A leaves (λ_j/K)(2π/A) ∫ s exp(-s² - B (s²/A)^{γ/2}) ds,
    // and s = u/(1-u) maps the half-line onto [0, 1).
    let a = (threshold / power).powf(e) * c * weighted_density(p) / k;
    let b = threshold * p.noise_power / power;
    let half_gamma = p.gamma / 2.0;
    let integrand = |u: f64| {
        let one_minus = 1.0 - u;
        let s = u / one_minus;
        let s2 = s * s;
        let v = s * (-s2 - b * (s2 / a).powf(half_gamma)).exp() / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let q = quadrature::integrate(integrand, 0.0, 1.0, 1e-8, 1e-300)?;
    Ok((lambda / k) * (2.0 * PI / a) * q.value)
}

/// P_{c,1}(T_M, T_μ): per-band coverage with tier-specific thresholds.
///
/// Noise-free parameters use the closed form; with noise the radial
/// integral is evaluated numerically to 1e-8 relative.
pub fn general_band_coverage(p: &SystemParams, thresholds: TierThresholds) -> Result<f64> {
    general_band_coverage_at(p, thresholds, f64::from(p.reuse))
}

pub(crate) fn general_band_coverage_at(p: &SystemParams, t: TierThresholds, k: f64) -> Result<f64> {
    Ok(tier_band_coverage(p, Tier::Macro, t.macro_tier, k)?
        + tier_band_coverage(p, Tier::Micro, t.micro_tier, k)?)
}

/// P_{c,1,μ}(T_μ): per-band coverage from micro cells only.
pub fn micro_band_coverage(p: &SystemParams, t_micro: f64) -> Result<f64> {
    micro_band_coverage_at(p, t_micro, f64::from(p.reuse))
}

pub(crate) fn micro_band_coverage_at(p: &SystemParams, t_micro: f64, k: f64) -> Result<f64> {
    tier_band_coverage(p, Tier::Micro, t_micro, k)
}

/// 1 - (1 - P_{c,1})^K. K may be fractional for the relaxed planner.
pub fn network_coverage(per_band: f64, k: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&per_band) {
        return Err(AnalyticError::InvalidProbability(per_band));
    }
    if !(k >= 1.0) {
        return Err(AnalyticError::InvalidReuse(k));
    }
    Ok(1.0 - (1.0 - per_band).powf(k))
}

/// Outage (1 - P_{c,1})^K at the common threshold T.
pub fn outage(p: &SystemParams) -> Result<f64> {
    Ok(coverage_report(p)?.outage)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    /// P_{c,1}
    pub per_band: f64,
    /// P_c
    pub network: f64,
    /// O = 1 - P_c
    pub outage: f64,
    /// P_{c,1,μ}
    pub micro_per_band: f64,
    /// A_μ
    pub load_micro: f64,
    /// A_M
    pub load_macro: f64,
    pub regime: Regime,
}

impl CoverageReport {
    /// Copy with every probability forced into [0, 1]. Only changes anything
    /// when `regime` is `Invalid`.
    pub fn clamped(&self) -> Self {
        let c = |x: f64| x.clamp(0.0, 1.0);
        Self {
            per_band: c(self.per_band),
            network: c(self.network),
            outage: c(self.outage),
            micro_per_band: c(self.micro_per_band),
            load_micro: c(self.load_micro),
            load_macro: c(self.load_macro),
            regime: self.regime,
        }
    }
}

/// Coverage, outage and tier loads at the common threshold T.
///
/// When the approximation pushes P_{c,1} above 1 the values are reported
/// unclamped with `Regime::Invalid`.
pub fn coverage_report(p: &SystemParams) -> Result<CoverageReport> {
    let p = p.validate()?;
    coverage_report_at(&p, f64::from(p.reuse))
}

pub(crate) fn coverage_report_at(p: &SystemParams, k: f64) -> Result<CoverageReport> {
    if !(k >= 1.0) {
        return Err(AnalyticError::InvalidReuse(k));
    }
    let t = p.sir_threshold;
    let per_band = general_band_coverage_at(p, TierThresholds::equal(t)?, k)?;
    let micro_per_band = micro_band_coverage_at(p, t, k)?;
    let outage = (1.0 - per_band).powf(k);
    let network = 1.0 - outage;
    let micro_network = 1.0 - (1.0 - micro_per_band).powf(k);
    if !(network > 0.0) {
        return Err(AnalyticError::DegenerateCoverage);
    }
    let load_micro = micro_network / network;
    Ok(CoverageReport {
        per_band,
        network,
        outage,
        micro_per_band,
        load_micro,
        load_macro: 1.0 - load_micro,
        regime: Regime::classify(t, per_band),
    })
}

/// (A_μ, A_M): probability that a covered UE is served by each tier.
pub fn tier_loads(p: &SystemParams) -> Result<(f64, f64)> {
    let r = coverage_report(p)?;
    Ok((r.load_micro, r.load_macro))
}
