use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("{0} is not an admissible prime (must be prime, odd and below 2^63)")]
    InvalidPrime(u64),
    #[error("runtime modulus already installed as {installed}, cannot switch to {requested}")]
    ModulusMismatch { installed: u64, requested: u64 },
    #[error("cannot parse field element from {0:?}")]
    ParseElement(String),
    #[error("polynomials live in different rings ({left} vs {right} variables)")]
    NvarsMismatch { left: usize, right: usize },
    #[error("arity mismatch: expected {expected}, found {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("at most {max} variables are supported, got {found}", max = crate::poly::MAX_VARS)]
    TooManyVariables { found: usize },
    #[error("total degree {0} exceeds the supported maximum of 255")]
    DegreeOverflow(u32),
    #[error("variable index {index} out of range for {nvars} variables")]
    VariableIndex { index: usize, nvars: usize },
    #[error("polynomial is not homogeneous")]
    NotHomogeneous,
    #[error("forms have unequal degrees")]
    UnequalDegrees,
    #[error("exact division failed: divisor does not divide dividend")]
    NotDivisible,
    #[error("not a gradient: integrability fails at index {index}")]
    NotIntegrable { index: usize },
    #[error("point at infinity is not allowed here")]
    PointAtInfinity,
    #[error("singular curve: discriminant 4a^3 + 27b^2 vanishes")]
    SingularCurve,
    #[error("point is not on the curve")]
    NotOnCurve,
    #[error("points share the x-coordinate")]
    EqualAbscissa,
    #[error("vanishing space did not stabilize after {rounds} rounds (dimensions {dims:?})")]
    NotStabilized { rounds: usize, dims: Vec<usize> },
    #[error("{what}: expected dimension {expected}, found {found}")]
    UnexpectedDimension {
        what: String,
        expected: usize,
        found: usize,
    },
    #[error("sampler exhausted its retry budget: {0}")]
    SamplerExhausted(String),
    #[error("identity check failed: {0}")]
    IdentityFailure(String),
    #[error("inconsistent linear system: {0}")]
    Inconsistent(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed json ({context}): {source}")]
    Json {
        context: String,
        #[source]
        source: serde_json::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
