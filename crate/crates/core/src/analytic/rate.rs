use serde::{Deserialize, Serialize};

use super::{
    band_coverage, coverage_report_at, general_band_coverage_at, macro_weight, micro_band_coverage_at,
    AnalyticError, CoverageReport, Result,
};
use crate::params::{SystemParams, TierThresholds};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// ρ_μ: micro SIR that yields R_T under round-robin sharing.
    pub rho_micro: f64,
    /// ρ_M
    pub rho_macro: f64,
    /// max(ρ_μ, T)
    pub t_micro_eff: f64,
    /// max(ρ_M, T)
    pub t_macro_eff: f64,
    /// P(R ≥ R_T, micro-served)
    pub rc_micro: f64,
    /// P(R ≥ R_T, macro-served)
    pub rc_macro: f64,
    /// P(R ≥ R_T)
    pub rc_total: f64,
    /// E[R] in bit/s, filled by [`rate_report`].
    pub mean_rate: Option<f64>,
}

/// 2^x - 1 with an explicit overflow error instead of saturating to ∞.
fn rate_sir(exponent: f64) -> Result<f64> {
    if !(exponent <= 1000.0) {
        return Err(AnalyticError::RateThresholdOverflow(exponent));
    }
    Ok(exponent.exp2() - 1.0)
}

/// a_j = K A_j P_c λ_u / (W λ_j): SIR exponent per bit/s for tier j.
pub(crate) fn rate_slopes(p: &SystemParams, cov: &CoverageReport, k: f64) -> (f64, f64) {
    let common = k * cov.network * p.lambda_ue / p.bandwidth_hz;
    (common * cov.load_micro / p.lambda_micro, common * cov.load_macro / p.lambda_macro)
}

/// (ρ_μ, ρ_M) for the rate threshold in `p`. `coverage` must be computed from
/// the same parameters at the common threshold T.
pub fn rate_thresholds(p: &SystemParams, coverage: &CoverageReport) -> Result<(f64, f64)> {
    rate_thresholds_at(p, coverage, f64::from(p.reuse))
}

fn rate_thresholds_at(p: &SystemParams, cov: &CoverageReport, k: f64) -> Result<(f64, f64)> {
    let (a_mu, a_m) = rate_slopes(p, cov, k);
    Ok((rate_sir(p.rate_threshold * a_mu)?, rate_sir(p.rate_threshold * a_m)?))
}

/// Rate coverage with tier split, without the mean rate.
pub fn rate_coverage(p: &SystemParams) -> Result<RateReport> {
    let p = p.validate()?;
    rate_coverage_at(&p, f64::from(p.reuse))
}

/// [`rate_coverage`] with a real-valued reuse factor (the relaxation used
/// by the planner); `p.reuse` is ignored.
pub fn rate_coverage_at(p: &SystemParams, k: f64) -> Result<RateReport> {
    let cov = coverage_report_at(p, k)?;
    let t = p.sir_threshold;
    let (rho_micro, rho_macro) = rate_thresholds_at(p, &cov, k)?;
    let t_micro_eff = rho_micro.max(t);
    let t_macro_eff = rho_macro.max(t);

    let micro_at_eff = micro_band_coverage_at(p, t_micro_eff, k)?;
    let both = general_band_coverage_at(p, TierThresholds::new(t_macro_eff, t)?, k)?;
    let rc_micro = 1.0 - (1.0 - micro_at_eff).powf(k);
    let rc_macro = (1.0 - cov.micro_per_band).powf(k) - (1.0 - both).powf(k);
    Ok(RateReport {
        rho_micro,
        rho_macro,
        t_micro_eff,
        t_macro_eff,
        rc_micro,
        rc_macro,
        rc_total: rc_micro + rc_macro,
        mean_rate: None,
    })
}

/// Rate coverage with the mean rate filled in.
pub fn rate_report(p: &SystemParams) -> Result<RateReport> {
    let mut r = rate_coverage(p)?;
    r.mean_rate = Some(super::mean_rate(p)?);
    Ok(r)
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// Rate coverage through the binomial expansion in powers of D(γ,T),
/// written out term by term. Agrees with [`rate_coverage`] up to rounding;
/// kept as an independent route. Noise-free model only.
pub fn rate_coverage_expanded(p: &SystemParams) -> Result<f64> {
    let p = p.validate()?;
    if p.noise_power != 0.0 {
        return Err(AnalyticError::NoiseUnsupported(p.noise_power));
    }
    let k_total = p.reuse;
    let t = p.sir_threshold;
    let e = 2.0 / p.gamma;
    let d = band_coverage(p.gamma, t)?.value;
    let q = macro_weight(&p);
    let r = rate_coverage(&p)?;
    let s_micro = (r.t_micro_eff / t).powf(-e);
    let s_macro = q * (r.t_macro_eff / t).powf(-e);

    let mut total = 0.0;
    for k in 1..=k_total {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let inner: f64 = s_micro.powi(k as i32)
            + (1..=k).map(|i| binomial(k, i) * s_macro.powi(i as i32)).sum::<f64>();
        total += sign * binomial(k_total, k) * d.powi(k as i32) * inner / (1.0 + q).powi(k as i32);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::coverage_report;

    fn defaults(k: u32) -> SystemParams {
        SystemParams::default().with_reuse(k)
    }

    #[test]
    fn tiny_rate_threshold_gives_network_coverage() {
        for k in 1..=6 {
            let p = SystemParams { rate_threshold: 1.0, ..defaults(k) };
            let r = rate_coverage(&p).unwrap();
            let cov = coverage_report(&p).unwrap();
            assert!(r.rho_micro.max(r.rho_macro) <= p.sir_threshold);
            assert!((r.rc_total - cov.network).abs() < 1e-14);
        }
    }

    #[test]
    fn rho_vanishes_with_rate() {
        let p = SystemParams { rate_threshold: 1e-30, ..defaults(2) };
        let (mu, m) = rate_thresholds(&p, &coverage_report(&p).unwrap()).unwrap();
        assert!(mu < 1e-30 && m < 1e-30);
    }

    #[test]
    fn doubling_bandwidth_square_roots_one_plus_rho() {
        let p = defaults(2);
        let wide = SystemParams { bandwidth_hz: 2.0 * p.bandwidth_hz, ..p };
        let (mu, m) = rate_thresholds(&p, &coverage_report(&p).unwrap()).unwrap();
        let (mu2, m2) = rate_thresholds(&wide, &coverage_report(&wide).unwrap()).unwrap();
        assert!(((1.0 + mu2) - (1.0 + mu).sqrt()).abs() < 1e-12);
        assert!(((1.0 + m2) - (1.0 + m).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn overflow_is_reported() {
        let p = SystemParams { rate_threshold: 1e12, ..defaults(2) };
        assert!(matches!(rate_coverage(&p), Err(AnalyticError::RateThresholdOverflow(_))));
    }

    #[test]
    fn default_k2_thresholds_chain() {
        // chained by hand: A_μ and P_c at K=2, then the exponent
        let p = defaults(2);
        let cov = coverage_report(&p).unwrap();
        let (mu, m) = rate_thresholds(&p, &cov).unwrap();
        let exp_mu = 1e6 * 2.0 * cov.load_micro * 20.0 * cov.network / (20e6 * 0.8);
        let exp_m = 1e6 * 2.0 * cov.load_macro * 20.0 * cov.network / (20e6 * 0.2);
        assert!((mu - (exp_mu.exp2() - 1.0)).abs() < 1e-12);
        assert!((m - (exp_m.exp2() - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn argmax_over_reuse_tracks_density() {
        for (ratio, best) in [(1.0, 1), (4.0, 2), (8.0, 3)] {
            let rc: Vec<f64> =
                (1..=8).map(|k| rate_coverage(&defaults(k).with_density_ratio(ratio)).unwrap().rc_total).collect();
            let arg = 1 + (0..8).max_by(|&a, &b| rc[a].total_cmp(&rc[b])).unwrap();
            assert_eq!(arg, best, "ratio {ratio}: {rc:?}");
        }
    }

    #[test]
    fn expanded_form_agrees() {
        for k in 1..=8 {
            for ratio in [1.0, 4.0, 12.0] {
                let p = defaults(k).with_density_ratio(ratio);
                let a = rate_coverage(&p).unwrap().rc_total;
                let b = rate_coverage_expanded(&p).unwrap();
                assert!((a - b).abs() < 1e-10, "K={k} ratio={ratio}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn relaxed_reuse_matches_integer() {
        let p = defaults(3);
        assert_eq!(rate_coverage(&p).unwrap(), rate_coverage_at(&p, 3.0).unwrap());
    }
}
