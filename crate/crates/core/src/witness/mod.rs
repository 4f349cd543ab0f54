//! Two-stage random point construction, index classification, `μ_p`
//! rounding and the end-to-end search for an unsliced edge.

mod breakdown;
mod classify;
mod gram;
mod params;
mod pipeline;
mod sampler;

use thiserror::Error;

use crate::cube::CubeError;
use crate::decompose::DecomposeError;

pub use breakdown::{close_type_breakdown, BreakdownConfig, BreakdownReport, BreakdownRow};
pub use classify::{classify, IndexClassification, TYPE_COUNT};
pub use gram::{gram_stats, GramStats, DEFAULT_GRAM_CAP};
pub use params::{ParamSpec, SamplerParams, MIN_PAPER_DIMENSION};
pub use pipeline::{
    end_to_end_witness, prepare, AttemptStage, Prepared, StageTally, WitnessConfig,
    WitnessDiagnostics, WitnessResult, WitnessStatus,
};
pub use sampler::{round_mu_p, sample_point, PointSample};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WitnessError {
    #[error("bias vector entry {index} is {value}, outside [-1, 1]")]
    Domain { index: usize, value: f64 },
    #[error("invalid sampler parameters: {0}")]
    Params(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error(transparent)]
    Decompose(#[from] DecomposeError),
    #[error(transparent)]
    Cube(#[from] CubeError),
}
