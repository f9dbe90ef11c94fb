use std::f64::consts::LN_2;

use super::rate::{binomial, rate_slopes};
use super::{band_coverage, coverage_report, macro_weight, AnalyticError, Result};
use crate::params::SystemParams;
use crate::quadrature;

/// B_x(b, 1-b) = ∫₀ˣ t^{b-1} (1-t)^{-b} dt for 0 < x < 1, b > 0.
///
/// The second Beta parameter is non-positive for b ≥ 1, outside the domain of
/// the usual regularized-Beta routines, so the integral is evaluated directly.
/// For b < 1 the t^{b-1} endpoint singularity is removed with s = t^b, which
/// turns the integral into (1/b) ∫₀^{x^b} (1 - s^{1/b})^{-b} ds.
pub fn incomplete_beta_integral(x: f64, b: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        if x == 0.0 {
            return Ok(0.0);
        }
        return Err(AnalyticError::BetaDomain(x));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(AnalyticError::InvalidProbability(b));
    }
    let q = if b < 1.0 {
        let inv = 1.0 / b;
        let upper = x.powf(b);
        let r = quadrature::integrate(|s| (1.0 - s.powf(inv)).powf(-b), 0.0, upper, 1e-10, 0.0)?;
        r.value / b
    } else {
        quadrature::integrate(|t| t.powf(b - 1.0) * (1.0 - t).powf(-b), 0.0, x, 1e-10, 0.0)?.value
    };
    Ok(q)
}

/// ∫₀^∞ max(2^{a R} - 1, T)^{-b} dR, split at the kink R* = log₂(1+T)/a.
fn threshold_power_integral(a: f64, b: f64, t: f64) -> Result<f64> {
    let below_kink = (1.0 + t).log2() / (a * t.powf(b));
    let above_kink = incomplete_beta_integral(1.0 / (1.0 + t), b)? / (a * LN_2);
    Ok(below_kink + above_kink)
}

/// E[R] = ∫₀^∞ P(R > R_T) dR_T in bit/s, assembled term by term from the
/// binomial expansion of the rate coverage. Noise-free model only.
pub fn mean_rate(p: &SystemParams) -> Result<f64> {
    let p = p.validate()?;
    if p.noise_power != 0.0 {
        return Err(AnalyticError::NoiseUnsupported(p.noise_power));
    }
    let k_total = p.reuse;
    let t = p.sir_threshold;
    let e = 2.0 / p.gamma;
    let cov = coverage_report(&p)?;
    let (a_micro, a_macro) = rate_slopes(&p, &cov, f64::from(k_total));
    let d = band_coverage(p.gamma, t)?.value;
    let q = macro_weight(&p);

    // macro terms only depend on the inner index, so evaluate each once
    let macro_terms = (1..=k_total)
        .map(|i| {
            let b = e * f64::from(i);
            Ok(q.powi(i as i32) * t.powf(b) * threshold_power_integral(a_macro, b, t)?)
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut total = 0.0;
    for k in 1..=k_total {
        let b = e * f64::from(k);
        let micro = t.powf(b) * threshold_power_integral(a_micro, b, t)?;
        let mixed: f64 = (1..=k).map(|i| binomial(k, i) * macro_terms[i as usize - 1]).sum();
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * binomial(k_total, k) * (d / (1.0 + q)).powi(k as i32) * (micro + mixed);
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn closed_form_cases() {
        assert_relative_eq!(incomplete_beta_integral(0.5, 1.0).unwrap(), LN_2, max_relative = 1e-10);
        assert_relative_eq!(
            incomplete_beta_integral(0.5, 0.5).unwrap(),
            2.0 * 0.5f64.sqrt().asin(),
            max_relative = 1e-10
        );
        assert_relative_eq!(incomplete_beta_integral(0.5, 0.5).unwrap(), PI / 2.0, max_relative = 1e-10);
        // b = 2: ∫ t/(1-t)² dt = 1/(1-x) - 1 + ln(1-x)
        let x = 0.3;
        assert_relative_eq!(
            incomplete_beta_integral(x, 2.0).unwrap(),
            1.0 / (1.0 - x) - 1.0 + (1.0 - x).ln(),
            max_relative = 1e-10
        );
        assert!(incomplete_beta_integral(1e-12, 0.5).unwrap() < 1e-5);
        assert_eq!(incomplete_beta_integral(0.0, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn matches_regularized_beta_where_defined() {
        use statrs::function::beta::{beta, beta_reg};
        for b in [0.1, 0.25, 0.4, 2.0 / 3.0, 0.8, 0.95] {
            for x in [0.05, 0.3, 0.5, 0.75, 0.95] {
                let oracle = beta(b, 1.0 - b) * beta_reg(b, 1.0 - b, x);
                let v = incomplete_beta_integral(x, b).unwrap();
                assert_relative_eq!(v, oracle, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(incomplete_beta_integral(1.0, 0.5), Err(AnalyticError::BetaDomain(_))));
        assert!(matches!(incomplete_beta_integral(1.5, 0.5), Err(AnalyticError::BetaDomain(_))));
        assert!(incomplete_beta_integral(0.5, 0.0).is_err());
    }

    #[test]
    fn noise_is_rejected() {
        let p = SystemParams { noise_power: 1e-9, ..SystemParams::default() };
        assert!(matches!(mean_rate(&p), Err(AnalyticError::NoiseUnsupported(_))));
    }
}
