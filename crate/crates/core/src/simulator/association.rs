//! Cell-association schemes.
//!
//! The SIR-based schemes use the per-band layout of the realization. The
//! RSRP-based schemes pick a cell by fading-free received power P·d^{-γ}
//! under their own spectrum layout, then declare outage if the faded SIR on
//! that layout is below T. Ties go to the lowest cell index.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::link::LinkSample;
use super::realization::Realization;
use super::SimError;
use crate::analytic::Tier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Scheme {
    /// Micro tier first, macro tier as fallback, both on SIR ≥ T.
    #[serde(rename = "prioritized-sir")]
    PrioritizedSir,
    /// Best SIR over both tiers.
    #[serde(rename = "max-sir")]
    MaxSir,
    /// Best RSRP with every cell on the full band.
    #[serde(rename = "max-rsrp-shared")]
    MaxRsrpShared,
    /// Best RSRP with the random reuse-K layout.
    #[serde(rename = "max-rsrp-K")]
    MaxRsrpReuse,
    /// Best RSRP, macro cells on F1 and micro cells on F2.
    #[serde(rename = "max-rsrp-rp1")]
    MaxRsrpRp1,
    /// Biased RSRP; biased UEs are served by micro cells on a dedicated F2.
    #[serde(rename = "biased-rsrp-rp2")]
    BiasedRsrpRp2,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::PrioritizedSir,
        Scheme::MaxSir,
        Scheme::MaxRsrpShared,
        Scheme::MaxRsrpReuse,
        Scheme::MaxRsrpRp1,
        Scheme::BiasedRsrpRp2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::PrioritizedSir => "prioritized-sir",
            Scheme::MaxSir => "max-sir",
            Scheme::MaxRsrpShared => "max-rsrp-shared",
            Scheme::MaxRsrpReuse => "max-rsrp-K",
            Scheme::MaxRsrpRp1 => "max-rsrp-rp1",
            Scheme::BiasedRsrpRp2 => "biased-rsrp-rp2",
        }
    }

    /// Whether the scheme uses the random reuse-K band layout.
    pub fn uses_reuse(self) -> bool {
        matches!(self, Scheme::PrioritizedSir | Scheme::MaxSir | Scheme::MaxRsrpReuse)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| SimError::UnknownScheme(s.to_string()))
    }
}

/// Tunables of the partitioned schemes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeParams {
    /// RP1: fraction of W given to the macro tier (F1).
    pub rp1_macro_fraction: f64,
    /// RP2: micro RSRP bias, linear.
    pub rp2_bias: f64,
    /// RP2: fraction of W reserved for biased UEs (F2).
    pub rp2_biased_fraction: f64,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self { rp1_macro_fraction: 0.5, rp2_bias: 10f64.powf(1.5), rp2_biased_fraction: 0.47 }
    }
}

/// Spectrum slice a UE is served on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Segment {
    /// Reuse band 1..=K.
    Band(u32),
    /// The whole system band.
    Full,
    /// First partition (macro tier in RP1, shared part in RP2).
    F1,
    /// Second partition (micro tier in RP1, biased UEs in RP2).
    F2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AssociationOutcome {
    Macro(usize),
    Micro(usize),
    Outage,
}

impl AssociationOutcome {
    pub fn cell(self) -> Option<usize> {
        match self {
            AssociationOutcome::Macro(i) | AssociationOutcome::Micro(i) => Some(i),
            AssociationOutcome::Outage => None,
        }
    }

    fn serving(tier: Tier, index: usize) -> Self {
        match tier {
            Tier::Macro => AssociationOutcome::Macro(index),
            Tier::Micro => AssociationOutcome::Micro(index),
        }
    }
}

/// Association decision together with the serving link's SIR and slice.
/// `sir` and `segment` describe the chosen cell even on outage, when a cell
/// was selected; both are `None` if no cell was a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Association {
    pub outcome: AssociationOutcome,
    pub sir: Option<f64>,
    pub segment: Option<Segment>,
}

impl Association {
    const NONE: Association = Association { outcome: AssociationOutcome::Outage, sir: None, segment: None };

    /// Key identifying the serving cell and slice; UEs with the same key share
    /// the slice round-robin.
    pub fn serving_key(&self) -> Option<(usize, Segment)> {
        Some((self.outcome.cell()?, self.segment?))
    }
}

/// Fraction of the system bandwidth carried by `segment`.
pub fn bandwidth_fraction(segment: Segment, reuse: u32, sp: &SchemeParams) -> f64 {
    match segment {
        Segment::Band(_) => 1.0 / f64::from(reuse),
        Segment::Full => 1.0,
        Segment::F1 => 1.0 - sp.rp2_biased_fraction,
        Segment::F2 => sp.rp2_biased_fraction,
    }
}

/// Like [`bandwidth_fraction`] but aware that RP1 splits differently.
pub fn scheme_bandwidth_fraction(scheme: Scheme, segment: Segment, reuse: u32, sp: &SchemeParams) -> f64 {
    match (scheme, segment) {
        (Scheme::MaxRsrpRp1, Segment::F1) => sp.rp1_macro_fraction,
        (Scheme::MaxRsrpRp1, Segment::F2) => 1.0 - sp.rp1_macro_fraction,
        _ => bandwidth_fraction(segment, reuse, sp),
    }
}

/// Per-cell channel id and the total received power on each channel.
struct ChannelLoad {
    channel: Vec<u32>,
    totals: Vec<f64>,
}

impl ChannelLoad {
    fn new(links: &[LinkSample], channel: Vec<u32>, n_channels: usize) -> Self {
        let mut totals = vec![0.0; n_channels + 1];
        for (l, &c) in links.iter().zip(&channel) {
            totals[c as usize] += l.rx_power;
        }
        Self { channel, totals }
    }

    fn sir(&self, links: &[LinkSample], i: usize) -> f64 {
        let signal = links[i].rx_power;
        let interference = self.totals[self.channel[i] as usize] - signal;
        if interference <= 0.0 {
            f64::INFINITY
        } else {
            signal / interference
        }
    }
}

fn argmax_by<F: Fn(usize) -> f64>(candidates: impl Iterator<Item = usize>, key: F) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for i in candidates {
        let v = key(i);
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best
}

fn rsrp(r: &Realization, links: &[LinkSample], i: usize, gamma: f64) -> f64 {
    r.enbs[i].tx_power * links[i].distance.powf(-gamma)
}

/// Associates the UE whose links are `links` (cell order) under `scheme`.
pub fn associate(
    r: &Realization,
    links: &[LinkSample],
    scheme: Scheme,
    sp: &SchemeParams,
    gamma: f64,
    threshold: f64,
) -> Result<Association, SimError> {
    if links.len() != r.enbs.len() {
        return Err(SimError::LinkCountMismatch { cells: r.enbs.len(), links: links.len() });
    }
    let n = r.enbs.len();
    let tier_cells = |tier: Tier| (0..n).filter(move |&i| r.enbs[i].tier == tier);
    let by_band = || {
        ChannelLoad::new(links, r.enbs.iter().map(|e| e.band).collect(), r.reuse as usize)
    };
    let covered = |i: usize, sir: f64, segment: Segment| Association {
        outcome: if sir >= threshold { AssociationOutcome::serving(r.enbs[i].tier, i) } else { AssociationOutcome::Outage },
        sir: Some(sir),
        segment: Some(segment),
    };

    let assoc = match scheme {
        Scheme::PrioritizedSir => {
            let load = by_band();
            let best_micro = argmax_by(tier_cells(Tier::Micro), |i| load.sir(links, i));
            let best_macro = argmax_by(tier_cells(Tier::Macro), |i| load.sir(links, i));
            match (best_micro, best_macro) {
                (Some((i, s)), _) if s >= threshold => covered(i, s, Segment::Band(r.enbs[i].band)),
                (_, Some((i, s))) if s >= threshold => covered(i, s, Segment::Band(r.enbs[i].band)),
                _ => Association::NONE,
            }
        }
        Scheme::MaxSir => {
            let load = by_band();
            match argmax_by(0..n, |i| load.sir(links, i)) {
                Some((i, s)) => covered(i, s, Segment::Band(r.enbs[i].band)),
                None => Association::NONE,
            }
        }
        Scheme::MaxRsrpShared | Scheme::MaxRsrpReuse | Scheme::MaxRsrpRp1 => {
            let (load, segment_of): (ChannelLoad, Box<dyn Fn(usize) -> Segment>) = match scheme {
                Scheme::MaxRsrpShared => (ChannelLoad::new(links, vec![1; n], 1), Box::new(|_| Segment::Full)),
                Scheme::MaxRsrpReuse => (by_band(), Box::new(|i| Segment::Band(r.enbs[i].band))),
                _ => {
                    let channel = r.enbs.iter().map(|e| if e.tier == Tier::Macro { 1 } else { 2 }).collect();
                    (
                        ChannelLoad::new(links, channel, 2),
                        Box::new(|i| if r.enbs[i].tier == Tier::Macro { Segment::F1 } else { Segment::F2 }),
                    )
                }
            };
            match argmax_by(0..n, |i| rsrp(r, links, i, gamma)) {
                Some((i, _)) => covered(i, load.sir(links, i), segment_of(i)),
                None => Association::NONE,
            }
        }
        Scheme::BiasedRsrpRp2 => {
            // F1 carries every cell; F2 only micro cells serving biased UEs.
            let shared = ChannelLoad::new(links, vec![1; n], 1);
            let micro_only = ChannelLoad::new(
                links,
                r.enbs.iter().map(|e| if e.tier == Tier::Micro { 1 } else { 0 }).collect(),
                1,
            );
            let best_macro = argmax_by(tier_cells(Tier::Macro), |i| rsrp(r, links, i, gamma));
            let best_micro = argmax_by(tier_cells(Tier::Micro), |i| rsrp(r, links, i, gamma));
            match (best_macro, best_micro) {
                (None, None) => Association::NONE,
                (Some((m, _)), None) => covered(m, shared.sir(links, m), Segment::F1),
                (None, Some((u, _))) => covered(u, shared.sir(links, u), Segment::F1),
                (Some((m, pm)), Some((u, pu))) => {
                    if pu >= pm {
                        covered(u, shared.sir(links, u), Segment::F1)
                    } else if pu * sp.rp2_bias >= pm {
                        covered(u, micro_only.sir(links, u), Segment::F2)
                    } else {
                        covered(m, shared.sir(links, m), Segment::F1)
                    }
                }
            }
        }
    };
    Ok(assoc)
}

/// SIR of every cell on the realization's band layout.
pub fn all_band_sirs(r: &Realization, links: &[LinkSample]) -> Vec<f64> {
    let load = ChannelLoad::new(links, r.enbs.iter().map(|e| e.band).collect(), r.reuse as usize);
    (0..r.enbs.len()).map(|i| load.sir(links, i)).collect()
}
