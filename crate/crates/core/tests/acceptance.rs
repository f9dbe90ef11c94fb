//! Acceptance suite. Prints one PASS/FAIL line per criterion and fails if
//! any criterion fails.

use std::io::Write;
use std::time::Instant;

use hetnet::analytic::{self, coverage_report, general_band_coverage, rate_coverage, rate_coverage_expanded};
use hetnet::params::db_to_linear;
use hetnet::planner::{self, PlanningRequest, SolverPath};
use hetnet::simulator::association::all_band_sirs;
use hetnet::simulator::*;
use hetnet::{SystemParams, TierThresholds};

/// Master seed of every acceptance simulation, fixed up front.
const SEED: u64 = 0x5eed;
const RUNS: usize = 10_000;

type Outcome = Result<String, String>;

fn say(line: &str) {
    // bypass libtest capture so the lines land in the log
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn defaults(k: u32) -> SystemParams {
    SystemParams::default().with_reuse(k)
}

fn mc(p: &SystemParams, cfg: MonteCarloConfig) -> MonteCarloResult {
    monte_carlo(p, &cfg).expect("simulation")
}

fn outage_cfg() -> MonteCarloConfig {
    MonteCarloConfig { runs: RUNS, seed: SEED, rate_mode: RateMode::Off, ..Default::default() }
}

fn closed_form_outage() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    let base = 1.0 - 2.0 / std::f64::consts::PI;
    for (k, quoted) in [(1, 0.36338), (2, 0.13205), (3, 0.04799)] {
        let o = analytic::outage(&defaults(k)).map_err(|e| e.to_string())?;
        ok &= (o - base.powi(k as i32)).abs() < 1e-4 && (o - quoted).abs() < 1e-4;
        detail.push(format!("K={k} O={o:.5}"));
    }
    ensure(ok, detail.join(", "))
}

fn tier_load() -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for (k, want) in [(1, 0.388), (3, 0.602)] {
        let a = analytic::tier_loads(&defaults(k)).map_err(|e| e.to_string())?.0;
        ok &= (a - want).abs() <= 0.005;
        detail.push(format!("K={k} A_mu={a:.5} (target {want} ± 0.005)"));
    }
    ensure(ok, detail.join(", "))
}

fn simulation_agreement() -> Outcome {
    let start = Instant::now();
    let mut ok = true;
    let mut detail = Vec::new();
    for k in 2..=8 {
        let p = defaults(k);
        let r = mc(&p, outage_cfg());
        let o = analytic::outage(&p).map_err(|e| e.to_string())?;
        let gap = (r.outage.mean - o).abs();
        let pass = gap <= 2.0 * r.outage.stderr;
        ok &= pass;
        detail.push(format!(
            "K={k} sim {:.5}±{:.5} vs {o:.5} ({:+.2} SE){}",
            r.outage.mean,
            r.outage.stderr,
            (r.outage.mean - o) / r.outage.stderr,
            if pass { "" } else { " MISS" }
        ));
    }
    let sweep_time = start.elapsed();
    let p = SystemParams { sir_threshold: db_to_linear(-4.0).unwrap(), ..defaults(1) };
    let r = mc(&p, outage_cfg());
    let o = analytic::outage(&p).map_err(|e| e.to_string())?;
    ok &= r.outage.mean > o;
    detail.push(format!("K=1 T=-4dB sim {:.5} > analytic {o:.5}", r.outage.mean));
    ok &= sweep_time.as_secs() < 300;
    detail.push(format!("sweep {:.1}s", sweep_time.as_secs_f64()));
    ensure(ok, detail.join("; "))
}

fn rate_coverage_argmax() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for (ratio, want) in [(1.0, 1), (4.0, 2), (8.0, 3)] {
        let mut best = (0, f64::NEG_INFINITY);
        for k in 1..=10 {
            let rc = rate_coverage(&defaults(k).with_density_ratio(ratio)).map_err(|e| e.to_string())?.rc_total;
            if rc > best.1 {
                best = (k, rc);
            }
        }
        ok &= best.0 == want;
        detail.push(format!("ratio {ratio}: argmax K={} (want {want})", best.0));
    }
    ensure(ok, detail.join(", "))
}

/// ∫₀^∞ P(R ≥ r) dr by the trapezoid rule, split at the rate-coverage kinks.
fn integrated_mean_rate(p: &SystemParams) -> f64 {
    let rc = |r: f64| {
        if r == 0.0 {
            coverage_report(p).unwrap().network
        } else {
            rate_coverage(&SystemParams { rate_threshold: r, ..*p }).unwrap().rc_total
        }
    };
    let cov = coverage_report(p).unwrap();
    let (rho_mu, rho_m) = analytic::rate_thresholds(&SystemParams { rate_threshold: 1.0, ..*p }, &cov).unwrap();
    let slopes = [rho_mu.ln_1p() / std::f64::consts::LN_2, rho_m.ln_1p() / std::f64::consts::LN_2];
    let (a_lo, a_hi) = (slopes[0].min(slopes[1]), slopes[0].max(slopes[1]));
    let knee = (1.0 + p.sir_threshold).log2();
    let cap = 999.0 / a_hi;
    let mut hi = (knee / a_lo).max(1.0 / a_lo).min(cap);
    while hi < cap && rc(hi) > 1e-12 {
        hi = (hi * 1.5).min(cap);
    }
    let mut edges = vec![0.0, knee / a_hi, (knee / a_lo).min(hi), hi];
    edges.sort_by(f64::total_cmp);
    edges
        .windows(2)
        .map(|w| {
            let n = 4000;
            let h = (w[1] - w[0]) / n as f64;
            let inner: f64 = (1..n).map(|i| rc(w[0] + h * i as f64)).sum();
            h * (inner + 0.5 * (rc(w[0]) + rc(w[1])))
        })
        .sum()
}

fn mean_rate_checks() -> Outcome {
    use rand::{Rng, SeedableRng};
    let mut ok = true;
    let mut detail = Vec::new();

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let p = SystemParams {
            reuse: rng.random_range(1..=6),
            gamma: rng.random_range(2.8..5.0),
            sir_threshold: 10f64.powf(rng.random_range(0.0..1.0)),
            lambda_macro: 1.0,
            lambda_micro: rng.random_range(0.5..12.0),
            lambda_ue: rng.random_range(20.0..200.0),
            p_micro: 10f64.powf(rng.random_range(-1.0..0.6)),
            ..SystemParams::default()
        };
        let closed = analytic::mean_rate(&p).map_err(|e| e.to_string())?;
        let numeric = integrated_mean_rate(&p);
        worst = worst.max((closed - numeric).abs() / numeric);
    }
    ok &= worst < 1e-3;
    detail.push(format!("quadrature max rel {worst:.2e}"));

    for k in 1..=3 {
        let p = defaults(k);
        let r = mc(&p, MonteCarloConfig { runs: RUNS, seed: SEED, ..Default::default() });
        let sim = r.mean_rate.unwrap().mean;
        let closed = analytic::mean_rate(&p).map_err(|e| e.to_string())?;
        let rel = (sim - closed) / closed;
        ok &= rel.abs() < 0.05;
        detail.push(format!("K={k} MC {sim:.4e} vs {closed:.4e} ({:+.2}%)", 100.0 * rel));
    }

    let mr = |k: u32, ratio: f64| analytic::mean_rate(&defaults(k).with_density_ratio(ratio)).unwrap();
    let falls_in_k = [4.0, 8.0, 12.0].iter().all(|&r| (1..8).all(|k| mr(k + 1, r) < mr(k, r)));
    let rises_in_ratio = (1..=8).all(|k| mr(k, 4.0) < mr(k, 8.0) && mr(k, 8.0) < mr(k, 12.0));
    ok &= falls_in_k && rises_in_ratio;
    detail.push(format!("decreasing in K: {falls_in_k}, increasing in ratio: {rises_in_ratio}"));
    ensure(ok, detail.join("; "))
}

/// Not a criterion: the outage comparison of criterion 3 on a 60 km window,
/// which separates window-edge bias from estimator error.
fn wide_window_note() -> String {
    (2..=8)
        .map(|k| {
            let p = defaults(k);
            let r = mc(&p, MonteCarloConfig { side: 60.0, ..outage_cfg() });
            let o = analytic::outage(&p).unwrap();
            if r.outage.stderr > 0.0 {
                format!("K={k} {:+.2} SE", (r.outage.mean - o) / r.outage.stderr)
            } else {
                format!("K={k} sim {} vs {o:.5}", r.outage.mean)
            }
        })
        .collect::<Vec<_>>()
        .join(", ")
}

/// Not a criterion: records which simulated rate mode follows the mean-rate
/// trends more closely.
fn rate_mode_note() -> String {
    let runs = 400;
    let mut parts = Vec::new();
    for (k, ratio) in [(1, 4.0), (2, 4.0), (3, 4.0), (1, 8.0)] {
        let p = defaults(k).with_density_ratio(ratio);
        let closed = analytic::mean_rate(&p).unwrap();
        let avg = mc(&p, MonteCarloConfig { runs, seed: SEED, ..Default::default() }).mean_rate.unwrap().mean;
        let real = mc(&p, MonteCarloConfig { runs, seed: SEED, rate_mode: RateMode::Realized, ..Default::default() })
            .mean_rate
            .unwrap()
            .mean;
        parts.push(format!(
            "K={k} ratio={ratio}: closed {closed:.3e}, analytic-average {avg:.3e}, realized {real:.3e}"
        ));
    }
    parts.join("; ")
}

fn planner_reference() -> Outcome {
    let start = Instant::now();
    let req = PlanningRequest::default();
    let s = planner::solve(&req).map_err(|e| e.to_string())?;
    let grid = planner::grid_search(&req, 1..=10, 0.05);
    let elapsed = start.elapsed();
    let grid_ok = grid.is_some_and(|(k, r)| k == s.k && (r - s.density_ratio).abs() <= 0.05);
    ensure(
        s.d == 2
            && s.k == 3
            && (s.density_ratio - 5.0).abs() <= 0.5
            && s.tag != SolverPath::Infeasible
            && grid_ok
            && elapsed.as_secs() < 60,
        format!(
            "d={} K={} ratio={:.4} tag={:?} K*={:?}; grid {:?}; {:.2}s",
            s.d,
            s.k,
            s.density_ratio,
            s.tag,
            s.k_star.map(|k| (k * 1000.0).round() / 1000.0),
            grid,
            elapsed.as_secs_f64()
        ),
    )
}

fn scheme_comparison() -> Outcome {
    let base = SystemParams::comparison_defaults();
    let cfg = outage_cfg();
    let mut outages = Vec::new();
    for scheme in Scheme::ALL {
        let k = if scheme.uses_reuse() { 3 } else { 1 };
        let r = mc(&base.with_reuse(k), MonteCarloConfig { scheme, ..cfg });
        outages.push((scheme, r.outage));
    }
    let get = |s: Scheme| outages.iter().find(|(x, _)| *x == s).unwrap().1.clone();
    let prio = get(Scheme::PrioritizedSir);
    let maxsir = get(Scheme::MaxSir);
    let se = (prio.stderr.powi(2) + maxsir.stderr.powi(2)).sqrt();
    let same = (prio.mean - maxsir.mean).abs() <= 2.0 * se;
    let shared = get(Scheme::MaxRsrpShared).mean;
    let worst = outages.iter().all(|(s, e)| *s == Scheme::MaxRsrpShared || e.mean < shared);
    let table: Vec<String> = outages.iter().map(|(s, e)| format!("{}={:.4}", s.name(), e.mean)).collect();
    ensure(same && worst, format!("{}; prio-vs-maxsir diff {:.5}", table.join(" "), prio.mean - maxsir.mean))
}

fn property_suites() -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();

    let mut worst: f64 = 0.0;
    for k in 1..=8 {
        for ratio in [1.0, 4.0, 8.0] {
            for t_db in [0.0, 3.0, 8.0] {
                let p = SystemParams { sir_threshold: db_to_linear(t_db).unwrap(), ..defaults(k).with_density_ratio(ratio) };
                let a = rate_coverage(&p).map_err(|e| e.to_string())?.rc_total;
                let b = rate_coverage_expanded(&p).map_err(|e| e.to_string())?;
                worst = worst.max((a - b).abs());
            }
        }
    }
    ok &= worst < 1e-10;
    detail.push(format!("expansion {worst:.1e}"));

    let p = defaults(2);
    let t = TierThresholds::equal(p.sir_threshold).unwrap();
    let base = general_band_coverage(&p, t).unwrap();
    let scaled = SystemParams {
        lambda_macro: p.lambda_macro * 7.0,
        lambda_micro: p.lambda_micro * 7.0,
        p_macro: p.p_macro * 0.03,
        p_micro: p.p_micro * 0.03,
        ..p
    };
    let inv = (general_band_coverage(&scaled, t).unwrap() - base).abs();
    ok &= inv < 1e-12;
    detail.push(format!("scaling invariance {inv:.1e}"));

    let mut bounded = true;
    let mut kink_eq = true;
    for k in 1..=8 {
        for r_t in [1e3, 1e5, 1e6, 4e6] {
            let p = SystemParams { rate_threshold: r_t, ..defaults(k) };
            let cov = coverage_report(&p).unwrap();
            let r = rate_coverage(&p).unwrap();
            bounded &= r.rc_total <= cov.network + 1e-12;
            if r.rho_micro <= p.sir_threshold && r.rho_macro <= p.sir_threshold {
                kink_eq &= (r.rc_total - cov.network).abs() < 1e-12;
            }
        }
    }
    ok &= bounded && kink_eq;
    detail.push(format!("rc<=Pc {bounded}, equality below kink {kink_eq}"));

    let mut max_cover = 0;
    for t in [1.0, 3.0] {
        let p = SystemParams { sir_threshold: t, ..defaults(1) };
        for run in 0..2000 {
            let mut rng = run_rng(SEED, run);
            let r = sample_realization(&p, 20.0, &mut rng);
            let links = draw_links(&r, (0.0, 0.0), p.gamma, &mut rng);
            max_cover = max_cover.max(all_band_sirs(&r, &links).iter().filter(|&&s| s >= t).count());
        }
    }
    ok &= max_cover <= 1;
    detail.push(format!("max covering cells at K=1 {max_cover}"));

    let p = defaults(3);
    let cfg = MonteCarloConfig { runs: 1000, seed: SEED, ..Default::default() };
    let results: Vec<_> = [1, 2, 7]
        .iter()
        .map(|&n| {
            rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap().install(|| mc(&p, cfg))
        })
        .collect();
    let bit_exact = results.windows(2).all(|w| w[0] == w[1]);
    ok &= bit_exact;
    detail.push(format!("bit-exact across 1/2/7 threads {bit_exact}"));
    ensure(ok, detail.join(", "))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("1 closed-form outage", closed_form_outage),
        ("2 tier load", tier_load),
        ("3 simulation vs analysis outage", simulation_agreement),
        ("4 rate-coverage argmax over K", rate_coverage_argmax),
        ("5 mean rate", mean_rate_checks),
        ("6 planner reference point", planner_reference),
        ("7 scheme comparison", scheme_comparison),
        ("8 property suites", property_suites),
    ];
    let mut failed = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let (tag, detail) = match std::panic::catch_unwind(f) {
            Ok(Ok(d)) => ("PASS", d),
            Ok(Err(d)) => ("FAIL", d),
            Err(_) => ("FAIL", "panicked".to_string()),
        };
        if tag == "FAIL" {
            failed.push(name);
        }
        say(&format!("[{tag}] {name} ({:.1}s): {detail}", start.elapsed().as_secs_f64()));
    }
    say(&format!("[INFO] criterion 3 repeated on a 60 km window: {}", wide_window_note()));
    say(&format!("[INFO] rate modes: {}", rate_mode_note()));
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
