//! Monte Carlo model of the two-tier network seen from a reference UE at the
//! origin.

pub mod association;
pub mod link;
pub mod monte_carlo;
pub mod realization;

use thiserror::Error;

use crate::analytic::AnalyticError;
use crate::params::ParamError;

pub use association::{associate, Association, AssociationOutcome, Scheme, SchemeParams, Segment};
pub use link::{draw_links, sir_at_origin, LinkSample};
pub use monte_carlo::{
    monte_carlo, reference_rate, run_rng, simulate_run, write_estimates_csv, write_traces_jsonl,
    MonteCarloConfig, MonteCarloEstimate, MonteCarloResult, RateMode, RunRecord,
};
pub use realization::{sample_cells, sample_realization, sample_ues, Enb, Realization};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown association scheme {0:?}")]
    UnknownScheme(String),
    #[error("no cell with index {0}")]
    UnknownCell(usize),
    #[error("{links} link samples for {cells} cells")]
    LinkCountMismatch { cells: usize, links: usize },
    #[error("cell {0} sits on the UE")]
    CoincidentCell(usize),
    #[error("analytic-average rate mode needs the prioritized scheme, got {0}")]
    UnsupportedRateMode(Scheme),
    #[error("at least one run is required")]
    NoRuns,
    #[error("region side must be positive, got {0}")]
    BadRegion(f64),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}
