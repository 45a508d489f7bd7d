use thiserror::Error;

/// Errors raised by the library. [`Error::kind`] gives a stable identifier
/// suitable for machine-readable reports.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("exponents sum to {sum}, expected -2")]
    GaussBonnetViolation { sum: f64 },
    #[error("vertices {first} and {second} share the position {re}{im:+}i")]
    DuplicateVertex { first: usize, second: usize, re: f64, im: f64 },
    #[error("vertex {index} has exponent {exponent}; exponents must exceed -1")]
    InvalidExponent { index: usize, exponent: f64 },
    #[error("scale must be positive, got {0}")]
    NonpositiveScale(f64),
    #[error("a polyhedral metric needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertex index {index} out of range for {count} vertices")]
    VertexIndexOutOfRange { index: usize, count: usize },
    #[error("point coincides with vertex {0}")]
    EvaluationAtVertex(usize),
    #[error("angle variation of the gauge vertex 0 is not defined")]
    GaugeVertexVariation,
    #[error("quadrature did not reach tolerance: value {value}, error estimate {error_estimate}")]
    ToleranceNotReached { value: f64, error_estimate: f64 },
    #[error("cone angle must be positive, got {0}")]
    NonpositiveAngle(f64),
    #[error("no pole-free contour abscissa found for cone angle {0}")]
    ContourPoleCollision(f64),
    #[error("points coincide; the resolvent kernel is singular on the diagonal")]
    CoincidentPoints,
    #[error("quartic branch points are too close (relative separation {0:e})")]
    DegenerateQuartic(f64),
    #[error("exponent multisets of the two metrics differ")]
    AngleMultisetMismatch,
    #[error("metrics have different scales ({0} vs {1})")]
    ScaleMismatch(f64, f64),
    #[error("finite-difference perturbation leaves the admissible domain: {0}")]
    PerturbationLeavesDomain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    pub fn kind(&self) -> &'static str {
        match self {
            Error::GaussBonnetViolation { .. } => "GaussBonnetViolation",
            Error::DuplicateVertex { .. } => "DuplicateVertex",
            Error::InvalidExponent { .. } => "InvalidExponent",
            Error::NonpositiveScale(_) => "NonpositiveScale",
            Error::TooFewVertices(_) => "TooFewVertices",
            Error::VertexIndexOutOfRange { .. } => "VertexIndexOutOfRange",
            Error::EvaluationAtVertex(_) => "EvaluationAtVertex",
            Error::GaugeVertexVariation => "GaugeVertexVariation",
            Error::ToleranceNotReached { .. } => "ToleranceNotReached",
            Error::NonpositiveAngle(_) => "NonpositiveAngle",
            Error::ContourPoleCollision(_) => "ContourPoleCollision",
            Error::CoincidentPoints => "CoincidentPoints",
            Error::DegenerateQuartic(_) => "DegenerateQuartic",
            Error::AngleMultisetMismatch => "AngleMultisetMismatch",
            Error::ScaleMismatch(..) => "ScaleMismatch",
            Error::PerturbationLeavesDomain(_) => "PerturbationLeavesDomain",
            Error::InvalidConfig(_) => "InvalidConfig",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
