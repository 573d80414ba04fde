use thiserror::Error;

pub type Result<T, E = MsgfemError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum MsgfemError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is numerically singular ({0})")]
    SingularMatrix(String),

    #[error("eigensolver did not converge")]
    NotConverged,

    #[error("GMRES stagnated: relative residual {relative_residual:.3e} after {iterations} iterations")]
    Stagnation { iterations: usize, relative_residual: f64 },

    #[error("invalid mesh dimensions nx={nx}, ny={ny}")]
    InvalidDimensions { nx: usize, ny: usize },

    #[error("unsupported polynomial degree {0}; only 1 and 2 are available")]
    UnsupportedDegree(usize),

    #[error("point ({0}, {1}) lies outside the mesh")]
    PointOutsideDomain(f64, f64),

    #[error("coefficient out of bounds: {0}")]
    CoefficientOutOfBounds(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("element region is empty")]
    EmptyRegion,

    #[error("malformed file: {0}")]
    MalformedFile(String),

    #[error("nonpositive velocity {value} at row {row}, column {col}")]
    NonpositiveVelocity { row: usize, col: usize, value: f64 },

    #[error("overlap of {layers} layers makes every subdomain cover the whole domain")]
    OverlapExceedsDomain { layers: usize },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("local matrix of subdomain {subdomain} is singular")]
    SingularLocalMatrix { subdomain: usize },

    #[error("local eigenproblem of subdomain {subdomain} failed: {reason}")]
    EigSolveFailure { subdomain: usize, reason: String },

    #[error("requested {requested} eigenpairs but the harmonic space of subdomain {subdomain} has dimension {available}")]
    TooFewHarmonicDofs { subdomain: usize, requested: usize, available: usize },

    #[error("coarse matrix is singular; the coarse space does not resolve the problem")]
    SingularCoarseMatrix,

    #[error("preconditioner mode {0} is not set up for this operation")]
    NotSetUp(&'static str),

    #[error("iteration diverged: error ratio above one for {consecutive} consecutive steps (last ratio {last_ratio:.3})")]
    Diverged { consecutive: usize, last_ratio: f64 },

    #[error("accuracy criterion not met with up to {max_tried} eigenfunctions per subdomain")]
    CriterionUnreachable { max_tried: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
