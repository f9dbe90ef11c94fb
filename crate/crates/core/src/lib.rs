//! Stochastic-geometry model of two-tier heterogeneous cellular networks with
//! random frequency reuse and micro-first SIR-based cell association.
//!
//! * [`params`]: parameter set, unit conversion and validation.
//! * [`analytic`]: closed-form coverage, tier loads, rate coverage, mean rate.
//! * [`simulator`]: Monte Carlo PPP engine with six association schemes.
//! * [`planner`]: choice of reuse factor and micro/macro density ratio.
//! * [`experiment`]: sweeps, scheme comparison and table output.

pub mod analytic;
pub mod experiment;
pub mod params;
pub mod planner;
pub mod quadrature;
pub mod simulator;

pub use params::{ParamError, ParamsConfig, SystemParams, TierThresholds};
