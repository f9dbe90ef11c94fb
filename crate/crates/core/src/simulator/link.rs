use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::realization::Realization;
use super::SimError;

/// One cell-to-UE link: Rayleigh power gain, distance and received power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSample {
    /// Unit-mean exponential fading gain h.
    pub fading: f64,
    /// km
    pub distance: f64,
    /// P·h·d^{-γ}, W
    pub rx_power: f64,
}

impl LinkSample {
    pub fn new(tx_power: f64, fading: f64, distance: f64, gamma: f64) -> Self {
        Self { fading, distance, rx_power: tx_power * fading * distance.powf(-gamma) }
    }
}

/// Draws fresh fading for every cell towards `point`, in cell order.
pub fn draw_links<R: Rng + ?Sized>(
    realization: &Realization,
    point: (f64, f64),
    gamma: f64,
    rng: &mut R,
) -> Vec<LinkSample> {
    realization
        .enbs
        .iter()
        .map(|e| {
            let h: f64 = Exp1.sample(rng);
            LinkSample::new(e.tx_power, h, e.distance_to(point), gamma)
        })
        .collect()
}

/// SIR at the reference UE from cell `target`: interference is summed over
/// the other cells on the target's band. Returns +∞ when no cell shares the
/// band.
pub fn sir_at_origin(realization: &Realization, links: &[LinkSample], target: usize) -> Result<f64, SimError> {
    let enb = realization.enbs.get(target).ok_or(SimError::UnknownCell(target))?;
    if links.len() != realization.enbs.len() {
        return Err(SimError::LinkCountMismatch { cells: realization.enbs.len(), links: links.len() });
    }
    if links[target].distance == 0.0 {
        return Err(SimError::CoincidentCell(target));
    }
    let interference: f64 = realization
        .enbs
        .iter()
        .zip(links)
        .enumerate()
        .filter(|&(j, (e, _))| j != target && e.band == enb.band)
        .map(|(_, (_, l))| l.rx_power)
        .sum();
    if interference == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(links[target].rx_power / interference)
}
