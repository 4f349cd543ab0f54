pub mod cube;
pub mod decompose;
pub mod gen;
pub mod io;
pub mod lab;
pub mod matrix;
pub mod rational;
pub mod rng;
pub mod scales;
pub mod stats;
pub mod witness;

pub use cube::{
    levels_construction, verify_cover, Collection, CoverOptions, CoverReport, CubeError, EdgeId,
    Hyperplane, HyperplaneSet, NumericMode, Vertex,
};
pub use decompose::{
    decompose, verify_decomposition, ConstantsSpec, DecompConstants, DecompositionResult,
};
pub use lab::{EstimateReport, LabError, McConfig, Verdict};
pub use matrix::Matrix;
pub use scales::{greedy_scales, ScaleCertificate, ScalesError};
pub use witness::{
    close_type_breakdown, end_to_end_witness, BreakdownConfig, BreakdownReport, ParamSpec,
    SamplerParams, WitnessConfig, WitnessError, WitnessResult, WitnessStatus,
};
