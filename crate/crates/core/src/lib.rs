//! Temporal order of paired biosignals: which of two signals leads, by how
//! much, and how steadily, estimated with sliding-window regression (LM) or
//! time-series distances (TD).

pub mod cli;
pub mod engine;
pub mod metrics;
pub mod preprocess;
pub mod scalar;
pub mod synth;
pub mod types;

pub use engine::{
    compute_matrix, compute_matrix_with, extract_causal_vector, run_analysis, run_analysis_with,
    stability_report, AnalysisOutcome, Execution,
};
pub use scalar::Scalar;
pub use types::{
    AnalysisConfig, BivariateRecord, CausalVector, DistanceKind, Method, Scaling, StabilityReport,
    StableRun, TemporalOrderMatrix, TimeSeries, ValidationError,
};

pub type TimeSeriesF64 = TimeSeries<f64>;
pub type TimeSeriesF32 = TimeSeries<f32>;
pub type RecordF64 = BivariateRecord<f64>;
pub type RecordF32 = BivariateRecord<f32>;
pub type MatrixF64 = TemporalOrderMatrix<f64>;
pub type MatrixF32 = TemporalOrderMatrix<f32>;
