//! Raw recordings to analysis-ready signals: R-peak detection, tachogram
//! construction, anti-aliased decimation, per-segment scaling and CSV input.

mod csv_io;
pub mod filter;
mod pan_tompkins;
mod scaling;
mod tachogram;

use thiserror::Error;

use crate::types::ValidationError;

pub use csv_io::{load_bivariate_csv, load_channel_csv, write_bivariate_csv, ColumnSpec};
pub use filter::decimate;
pub use pan_tompkins::{detect_r_peaks, detect_r_peaks_with, PanTompkinsParams};
pub use scaling::{scale_segment, ScaleParams};
pub use tachogram::{build_tachogram, BeatTimes, RrCurve, RR_MAX_S, RR_MIN_S};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("RateTooLow: R-peak detection needs at least 100 Hz, got {0} Hz")]
    RateTooLow(f64),
    #[error("NoBeatsFound: detected {0} R-peaks, need at least 2")]
    NoBeatsFound(usize),
    #[error("TooFewBeats: {0} usable beats, need at least 2")]
    TooFewBeats(usize),
    #[error("beat times must be finite and strictly increasing")]
    BeatsNotIncreasing,
    #[error("BadFactor: decimation factor must be at least 1, got {0}")]
    BadFactor(usize),
    #[error("target rate must be finite and positive, got {0}")]
    BadTargetRate(f64),
    #[error("DegenerateSegment: constant segment cannot be standardized")]
    DegenerateSegment,
    #[error("segment of {0} samples is too short to scale, need at least 2")]
    SegmentTooShort(usize),
    #[error(transparent)]
    Validation(#[from] ValidationError),
    #[error("ParseError at line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("NonUniformSampling: time step at row {row} deviates from the first step")]
    NonUniformSampling { row: usize },
    #[error("MissingColumn: `{0}`")]
    MissingColumn(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
