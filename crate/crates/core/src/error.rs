use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("ragged dimensions: row {row} has dimension {found}, expected {expected}")]
    RaggedDimensions {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("graph is disconnected: no path between nodes {0} and {1}")]
    Disconnected(usize, usize),

    #[error("vector {index} has norm {norm}, expected unit norm within 1e-9")]
    NotUnitNorm { index: usize, norm: f64 },

    #[error("index {index} out of range for space of size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("invalid weight {weight} at position {position}")]
    InvalidWeight { position: usize, weight: f64 },

    #[error("weights sum to {0}, expected 1")]
    WeightSum(f64),

    #[error("invalid distance matrix: {0}")]
    InvalidMatrix(String),

    #[error("objects live on different metric spaces")]
    SpaceMismatch,

    #[error("exponent must satisfy p >= 1, got {0}")]
    InvalidExponent(f64),

    #[error("ambient anchors require a space with coordinates")]
    AmbientWithoutCoords,

    #[error("ambient anchor has dimension {found}, space has dimension {expected}")]
    AnchorDimension { expected: usize, found: usize },

    #[error("operation requires a {required} space, got {found}")]
    UnsupportedSpace {
        required: &'static str,
        found: &'static str,
    },

    #[error("exact solver atom limit exceeded: {atoms} atoms > limit {limit}")]
    AtomLimit { atoms: usize, limit: usize },

    #[error("region {0} contains no nodes")]
    EmptyRegion(&'static str),

    #[error("gave up after {0} consecutive disconnected graphs")]
    TooManyRejections(usize),

    #[error("exact distance is 0 but the estimate is {0}; lower bound violated")]
    LowerBoundViolation(f64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
