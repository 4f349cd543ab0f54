//! Exact oracles and Monte Carlo checks for the anticoncentration and
//! concentration inequalities the construction relies on.

mod cases;
mod chernoff;
mod continuous;
mod elo;
mod hyperplane_claims;
mod many_scales;
mod report;

pub use cases::run_case_file;
pub use chernoff::{check_chernoff, chernoff_bound};
pub use continuous::{
    check_continuous_lo, continuous_lo_bound, continuous_lo_exact, continuous_lo_monte_carlo,
    EXACT_INTERVAL_CAP,
};
pub use elo::{check_lo_bound, exact_lo_probability, lo_monte_carlo, LoCase, EXACT_DIMENSION_CAP};
pub use hyperplane_claims::{check_hyperplane_claims, ClaimInstance};
pub use many_scales::{check_many_scales, geometric_vector, many_scales_bound};
pub use report::{EstimateReport, Method, Verdict};

use thiserror::Error;

use crate::scales::ScalesError;
use crate::stats::DEFAULT_CONFIDENCE;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("dimension {got} exceeds the exact-evaluation cap {cap}")]
    OverCap { got: usize, cap: usize },
    #[error(transparent)]
    Scales(#[from] ScalesError),
}

pub(crate) fn precondition(msg: impl Into<String>) -> LabError {
    LabError::Precondition(msg.into())
}

/// Monte Carlo settings shared by the estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            trials: 100_000,
            seed: 0,
            confidence: DEFAULT_CONFIDENCE,
        }
    }
}

impl McConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            ..Self::default()
        }
    }

    pub(crate) fn check(&self) -> Result<(), LabError> {
        if self.trials == 0 {
            return Err(precondition("trials must be positive"));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(precondition("confidence must lie in (0, 1)"));
        }
        Ok(())
    }
}
