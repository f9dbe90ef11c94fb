use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::analytic::Tier;
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enb {
    /// km, relative to the reference UE at the origin.
    pub position: (f64, f64),
    pub tier: Tier,
    /// Reuse band in 1..=K.
    pub band: u32,
    /// W
    pub tx_power: f64,
}

impl Enb {
    pub fn distance_to(&self, point: (f64, f64)) -> f64 {
        (self.position.0 - point.0).hypot(self.position.1 - point.1)
    }
}

/// One network snapshot on the square [-L/2, L/2]² around the reference UE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Realization {
    pub enbs: Vec<Enb>,
    /// Positions of the other UEs, km.
    pub ues: Vec<(f64, f64)>,
    pub side: f64,
    pub reuse: u32,
}

fn poisson_count<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    let dist = Poisson::new(mean).expect("finite positive Poisson mean");
    dist.sample(rng) as usize
}

fn uniform_point<R: Rng + ?Sized>(half: f64, rng: &mut R) -> (f64, f64) {
    (rng.random_range(-half..half), rng.random_range(-half..half))
}

/// Samples macro cells, micro cells and UEs as independent homogeneous PPPs:
/// Poisson counts with mean λ·L², then i.i.d. uniform positions and an
/// i.i.d. uniform reuse band per cell.
///
/// A cell drawn exactly on the origin is redrawn.
pub fn sample_realization<R: Rng + ?Sized>(p: &SystemParams, side: f64, rng: &mut R) -> Realization {
    let mut r = sample_cells(p, side, rng);
    sample_ues(&mut r, p.lambda_ue, rng);
    r
}

/// Cells only; `ues` is left empty.
pub fn sample_cells<R: Rng + ?Sized>(p: &SystemParams, side: f64, rng: &mut R) -> Realization {
    let half = side / 2.0;
    let area = side * side;
    let k = p.reuse.max(1);
    let mut enbs = Vec::new();
    for (tier, lambda, power) in [
        (Tier::Macro, p.lambda_macro, p.p_macro),
        (Tier::Micro, p.lambda_micro, p.p_micro),
    ] {
        let n = poisson_count(lambda * area, rng);
        enbs.reserve(n);
        for _ in 0..n {
            let mut position = uniform_point(half, rng);
            while position == (0.0, 0.0) {
                log::warn!("cell sampled on the reference UE, redrawing");
                position = uniform_point(half, rng);
            }
            let band = rng.random_range(1..=k);
            enbs.push(Enb { position, tier, band, tx_power: power });
        }
    }
    Realization { enbs, ues: Vec::new(), side, reuse: k }
}

/// Replaces the UEs of `r` with a fresh PPP of density `lambda_ue`.
pub fn sample_ues<R: Rng + ?Sized>(r: &mut Realization, lambda_ue: f64, rng: &mut R) {
    let half = r.side / 2.0;
    let n = poisson_count(lambda_ue * r.side * r.side, rng);
    r.ues = (0..n).map(|_| uniform_point(half, rng)).collect();
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts_follow_density() {
        let p = SystemParams::default().with_reuse(3);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let runs = 400;
        let mut macros = 0usize;
        for _ in 0..runs {
            let r = sample_realization(&p, 20.0, &mut rng);
            macros += r.enbs.iter().filter(|e| e.tier == Tier::Macro).count();
            for e in &r.enbs {
                assert!(e.position.0.abs() <= 10.0 && e.position.1.abs() <= 10.0);
                assert!((1..=3).contains(&e.band));
            }
            assert!(r.ues.iter().all(|u| u.0.abs() <= 10.0 && u.1.abs() <= 10.0));
        }
        let mean = macros as f64 / runs as f64;
        // mean 80, sd of the mean sqrt(80/400) ≈ 0.45
        assert!((mean - 80.0).abs() < 2.0, "{mean}");
    }

    #[test]
    fn empty_tier() {
        let p = SystemParams { lambda_micro: 0.0, ..SystemParams::default() };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = sample_realization(&p, 20.0, &mut rng);
        assert!(r.enbs.iter().all(|e| e.tier == Tier::Macro));
        assert!(!r.enbs.is_empty());
    }

    #[test]
    fn seeded_sampling_is_repeatable() {
        let p = SystemParams::default().with_reuse(4);
        let a = sample_realization(&p, 20.0, &mut ChaCha8Rng::seed_from_u64(99));
        let b = sample_realization(&p, 20.0, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(a, b);
    }
}
