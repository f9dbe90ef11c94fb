//! System parameters in canonical linear units.
//!
//! Distances are in km and densities per km². Powers are linear watts and
//! thresholds linear ratios; the dB / dBm forms only exist at the
//! configuration boundary ([`ParamsConfig`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("path-loss exponent must exceed 2, got {0}")]
    PathLossTooSmall(f64),
    #[error("{field} must be finite, got {value}")]
    NonFinite { field: &'static str, value: f64 },
    #[error("{field} must be strictly positive, got {value}")]
    NonPositive { field: &'static str, value: f64 },
    #[error("noise power must be non-negative, got {0}")]
    NegativeNoise(f64),
    #[error("frequency-reuse factor must be at least 1")]
    ZeroReuse,
    #[error("macro power {p_macro} W is below micro power {p_micro} W")]
    PowerOrdering { p_macro: f64, p_micro: f64 },
}

/// Converts a decibel ratio to a linear ratio.
pub fn db_to_linear(x_db: f64) -> Result<f64, ParamError> {
    if !x_db.is_finite() {
        return Err(ParamError::NonFinite { field: "dB value", value: x_db });
    }
    Ok(10f64.powf(x_db / 10.0))
}

pub fn linear_to_db(x: f64) -> Result<f64, ParamError> {
    if !x.is_finite() {
        return Err(ParamError::NonFinite { field: "linear value", value: x });
    }
    if x <= 0.0 {
        return Err(ParamError::NonPositive { field: "linear value", value: x });
    }
    Ok(10.0 * x.log10())
}

pub fn dbm_to_watts(x_dbm: f64) -> Result<f64, ParamError> {
    if !x_dbm.is_finite() {
        return Err(ParamError::NonFinite { field: "dBm value", value: x_dbm });
    }
    Ok(10f64.powf(x_dbm / 10.0) * 1e-3)
}

pub fn watts_to_dbm(watts: f64) -> Result<f64, ParamError> {
    Ok(linear_to_db(watts)? + 30.0)
}

/// All model inputs, linear units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Macro eNB density, per km².
    pub lambda_macro: f64,
    /// Micro eNB density, per km².
    pub lambda_micro: f64,
    /// UE density, per km².
    pub lambda_ue: f64,
    /// Macro transmit power, W.
    pub p_macro: f64,
    /// Micro transmit power, W.
    pub p_micro: f64,
    /// Path-loss exponent.
    pub gamma: f64,
    /// System bandwidth, Hz.
    pub bandwidth_hz: f64,
    /// Frequency-reuse factor K.
    pub reuse: u32,
    /// Minimum SIR threshold T, linear.
    pub sir_threshold: f64,
    /// Rate threshold R_T, bit/s.
    pub rate_threshold: f64,
    /// Noise power, W. Zero gives the interference-limited model.
    pub noise_power: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        let lambda_macro = 0.2;
        Self {
            lambda_macro,
            lambda_micro: 4.0 * lambda_macro,
            lambda_ue: 100.0 * lambda_macro,
            p_macro: 10f64.powf(4.6) * 1e-3,
            p_micro: 1.0,
            gamma: 4.0,
            bandwidth_hz: 20e6,
            reuse: 1,
            sir_threshold: 1.0,
            rate_threshold: 1e6,
            noise_power: 0.0,
        }
    }
}

impl SystemParams {
    /// Checks every invariant and returns the parameters unchanged.
    pub fn validate(self) -> Result<Self, ParamError> {
        let positive = [
            ("lambda_macro", self.lambda_macro),
            ("lambda_micro", self.lambda_micro),
            ("lambda_ue", self.lambda_ue),
            ("p_macro", self.p_macro),
            ("p_micro", self.p_micro),
            ("bandwidth_hz", self.bandwidth_hz),
            ("sir_threshold", self.sir_threshold),
            ("rate_threshold", self.rate_threshold),
        ];
        for (field, value) in positive.into_iter().chain([("gamma", self.gamma), ("noise_power", self.noise_power)]) {
            if !value.is_finite() {
                return Err(ParamError::NonFinite { field, value });
            }
        }
        if self.gamma <= 2.0 {
            return Err(ParamError::PathLossTooSmall(self.gamma));
        }
        for (field, value) in positive {
            if value <= 0.0 {
                return Err(ParamError::NonPositive { field, value });
            }
        }
        if self.noise_power < 0.0 {
            return Err(ParamError::NegativeNoise(self.noise_power));
        }
        if self.reuse == 0 {
            return Err(ParamError::ZeroReuse);
        }
        if self.p_macro < self.p_micro {
            return Err(ParamError::PowerOrdering { p_macro: self.p_macro, p_micro: self.p_micro });
        }
        Ok(self)
    }

    /// λ_μ / λ_M.
    pub fn density_ratio(&self) -> f64 {
        self.lambda_micro / self.lambda_macro
    }

    pub fn with_reuse(mut self, reuse: u32) -> Self {
        self.reuse = reuse;
        self
    }

    /// Sets λ_μ = ratio · λ_M.
    pub fn with_density_ratio(mut self, ratio: f64) -> Self {
        self.lambda_micro = ratio * self.lambda_macro;
        self
    }

    /// Settings of the scheme-comparison study: λ_M = 1/km², λ_μ = 5λ_M,
    /// λ_u = 100λ_M, micro power 26 dBm.
    pub fn comparison_defaults() -> Self {
        Self {
            lambda_macro: 1.0,
            lambda_micro: 5.0,
            lambda_ue: 100.0,
            p_micro: 10f64.powf(2.6) * 1e-3,
            ..Self::default()
        }
    }
}

/// Per-tier SIR thresholds, linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TierThresholds {
    pub macro_tier: f64,
    pub micro_tier: f64,
}

impl TierThresholds {
    pub fn new(macro_tier: f64, micro_tier: f64) -> Result<Self, ParamError> {
        for (field, value) in [("T_M", macro_tier), ("T_mu", micro_tier)] {
            if value.is_nan() || value <= 0.0 {
                return Err(ParamError::NonPositive { field, value });
            }
        }
        Ok(Self { macro_tier, micro_tier })
    }

    pub fn equal(t: f64) -> Result<Self, ParamError> {
        Self::new(t, t)
    }
}

/// External configuration. Powers in dBm, thresholds in dB; every field is
/// optional and falls back to the default parameter set.
///
/// Absent `lambda_mu` / `lambda_u` are derived from `lambda_M` through
/// `micro_ratio` (default 4) and `ue_ratio` (default 100).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsConfig {
    #[serde(rename = "lambda_M", skip_serializing_if = "Option::is_none")]
    pub lambda_macro: Option<f64>,
    #[serde(rename = "lambda_mu", skip_serializing_if = "Option::is_none")]
    pub lambda_micro: Option<f64>,
    #[serde(rename = "lambda_u", skip_serializing_if = "Option::is_none")]
    pub lambda_ue: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub micro_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ue_ratio: Option<f64>,
    #[serde(rename = "P_M_dbm", skip_serializing_if = "Option::is_none")]
    pub p_macro_dbm: Option<f64>,
    #[serde(rename = "P_mu_dbm", skip_serializing_if = "Option::is_none")]
    pub p_micro_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(rename = "W_hz", skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub reuse: Option<u32>,
    #[serde(rename = "T_db", skip_serializing_if = "Option::is_none")]
    pub sir_threshold_db: Option<f64>,
    #[serde(rename = "R_T", skip_serializing_if = "Option::is_none")]
    pub rate_threshold: Option<f64>,
    /// Noise power in dBm; absent means no noise.
    #[serde(rename = "noise_dbm", skip_serializing_if = "Option::is_none")]
    pub noise_dbm: Option<f64>,
}

impl ParamsConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Resolves defaults, converts to linear units and validates.
    pub fn resolve(&self) -> Result<SystemParams, ParamError> {
        let defaults = SystemParams::default();
        let lambda_macro = self.lambda_macro.unwrap_or(defaults.lambda_macro);
        let lambda_micro = self
            .lambda_micro
            .unwrap_or(self.micro_ratio.unwrap_or(4.0) * lambda_macro);
        let lambda_ue = self.lambda_ue.unwrap_or(self.ue_ratio.unwrap_or(100.0) * lambda_macro);
        let p_macro = self.p_macro_dbm.map(dbm_to_watts).transpose()?.unwrap_or(defaults.p_macro);
        let p_micro = self.p_micro_dbm.map(dbm_to_watts).transpose()?.unwrap_or(defaults.p_micro);
        let sir_threshold = self
            .sir_threshold_db
            .map(db_to_linear)
            .transpose()?
            .unwrap_or(defaults.sir_threshold);
        let noise_power = self.noise_dbm.map(dbm_to_watts).transpose()?.unwrap_or(0.0);
        SystemParams {
            lambda_macro,
            lambda_micro,
            lambda_ue,
            p_macro,
            p_micro,
            gamma: self.gamma.unwrap_or(defaults.gamma),
            bandwidth_hz: self.bandwidth_hz.unwrap_or(defaults.bandwidth_hz),
            reuse: self.reuse.unwrap_or(defaults.reuse),
            sir_threshold,
            rate_threshold: self.rate_threshold.unwrap_or(defaults.rate_threshold),
            noise_power,
        }
        .validate()
    }
}
