use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("image buffer holds {actual} samples, expected {expected}")]
    BufferLength { expected: usize, actual: usize },

    #[error("image must be at least 1x1, got {rows}x{cols}")]
    Empty { rows: usize, cols: usize },

    #[error("image is {rows}x{cols}; this operation needs at least 2x2")]
    DegenerateAxis { rows: usize, cols: usize },

    #[error("non-finite sample at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("dimension mismatch: {left_rows}x{left_cols} vs {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("dimensions {rows}x{cols} are not both even")]
    OddDimensions { rows: usize, cols: usize },

    #[error("invalid geometry: {field}: {reason}")]
    InvalidGeometry { field: &'static str, reason: String },

    #[error("invalid configuration: {field}: {reason}")]
    InvalidConfig { field: &'static str, reason: String },

    #[error("LED ({row}, {col}) is outside the {rows}x{cols} array")]
    LedOutOfRange {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },

    #[error("no LEDs are lit")]
    NoLeds,

    #[error("aberration map is {rows}x{cols}, pupil grid is {grid}x{grid}")]
    AberrationShape { rows: usize, cols: usize, grid: usize },

    #[error(
        "sub-spectrum of LED ({row}, {col}) at shift ({shift_row}, {shift_col}) leaves the \
         {hr_size}x{hr_size} high-resolution grid"
    )]
    SubSpectrumOutOfGrid {
        row: usize,
        col: usize,
        shift_row: isize,
        shift_col: isize,
        hr_size: usize,
    },

    #[error("high-resolution size {hr_size} is not a multiple of tile size {lr_size}")]
    GridMismatch { hr_size: usize, lr_size: usize },

    #[error("stack holds no brightfield image near normal incidence")]
    MissingOnAxis,

    #[error("invalid ground truth: {0}")]
    InvalidTruth(&'static str),

    #[error("non-finite value at iteration {iteration}, LED ({row}, {col})")]
    Numerical {
        iteration: usize,
        row: usize,
        col: usize,
    },

    #[error("region is empty")]
    EmptyRegion,

    #[error("region does not fit inside the {rows}x{cols} image")]
    RegionOutOfBounds { rows: usize, cols: usize },
}

pub type Result<T> = core::result::Result<T, Error>;
