use alloc::string::String;

/// Errors shared by all core operations.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("image dimensions must be nonzero")]
    ZeroDimension,
    #[error("unsupported channel count {0}, expected 1 (gray), 3 (RGB) or 4 (RGBA)")]
    UnsupportedChannelCount(u8),
    #[error("connectivity must be 4 or 8, got {0}")]
    InvalidConnectivity(u8),
    #[error("sample buffer holds {actual} values, expected {expected}")]
    SampleCountMismatch { expected: usize, actual: usize },
    #[error("dimension mismatch: expected {expected_width}x{expected_height}, got {found_width}x{found_height}")]
    DimensionMismatch {
        expected_width: u32,
        expected_height: u32,
        found_width: u32,
        found_height: u32,
    },
    #[error("operation requires a non-empty annotation set")]
    EmptySet,
    #[error("operation requires at least 2 annotators, found {found}")]
    TooFewAnnotators { found: usize },
    #[error("duplicate annotator id `{0}`")]
    DuplicateAnnotator(String),
    #[error("threshold {0} is outside [0, 1]")]
    InvalidThreshold(f64),
    #[error("probability `{field}` is {value}, outside [0, 1]")]
    InvalidProbability { field: &'static str, value: f64 },
    #[error("spurious component size must be at least 1")]
    InvalidAddSize,
    #[error("no room to place a spurious component of {add_size} pixels")]
    NoRoomForComponent { add_size: u32 },
    #[error("speckle placement budget exhausted after placing {placed} of {requested} pixels")]
    SpeckleBudgetExhausted { placed: u32, requested: u32 },
    #[error("cohort simulation requires at least one profile")]
    NoProfiles,
    #[error("matrix is not a valid agreement matrix: {0}")]
    MalformedMatrix(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

impl Error {
    pub(crate) fn dimension_mismatch(expected: (u32, u32), found: (u32, u32)) -> Self {
        Error::DimensionMismatch {
            expected_width: expected.0,
            expected_height: expected.1,
            found_width: found.0,
            found_height: found.1,
        }
    }
}
