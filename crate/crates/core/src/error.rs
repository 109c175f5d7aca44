use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Broad failure class, used for CLI exit codes and FFI status codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Parse,
    Physics,
    Numerical,
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mode registry: {0}")]
    InvalidRegistry(String),

    #[error("unknown mode `{0}`")]
    UnknownMode(String),

    #[error("operator registries differ ({left} vs {right})")]
    RegistryMismatch { left: String, right: String },

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("operator is not Hermitian (deviation {deviation:e}, tolerance {tolerance:e}): {context}")]
    NonHermitian {
        context: String,
        deviation: f64,
        tolerance: f64,
    },

    #[error("amplifier parameters invalid: {0}")]
    Amplifier(String),

    #[error("unphysical squeezed bath: |M|^2 = {m_sq:e} exceeds N(N+1) = {bound:e}")]
    UnphysicalBath { m_sq: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Hilbert-space dimension {dim} gives a superoperator of size {size} above the cap {cap}")]
    DimensionOverflow { dim: usize, size: usize, cap: usize },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("minimum eigenvalue {0:e} below the clipping floor")]
    NegativeEigenvalue(f64),

    #[error("step size underflow at t = {t}: h = {h:e}")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),

    #[error("steady state is not unique: kernel dimension {0}")]
    DegenerateKernel(usize),

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("truncation leak on mode `{mode}`: top-level population {population:e} exceeds {threshold:e}")]
    TruncationLeak {
        mode: String,
        population: f64,
        threshold: f64,
    },

    #[error("observable undefined: {0}")]
    Undefined(String),

    #[error("covariance violates the uncertainty bound: det = {0}")]
    Uncertainty(f64),

    /// An error raised while processing the netlist item on `line`.
    #[error("line {line} ({context}): {source}")]
    At {
        line: usize,
        context: String,
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(line: usize, column: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            column,
            message: message.into(),
        }
    }

    /// Attaches a netlist location, leaving parse errors (which carry their
    /// own position) untouched.
    pub fn at(self, line: usize, context: impl Into<String>) -> Self {
        match self {
            Error::Parse { .. } | Error::At { .. } => self,
            other => Error::At {
                line,
                context: context.into(),
                source: Box::new(other),
            },
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::At { source, .. } => source.class(),
            Error::Parse { .. } | Error::UnknownMode(_) => ErrorClass::Parse,
            Error::InvalidRegistry(_)
            | Error::RegistryMismatch { .. }
            | Error::NonHermitian { .. }
            | Error::Amplifier(_)
            | Error::UnphysicalBath { .. }
            | Error::InvalidParameter(_)
            | Error::InvalidState(_)
            | Error::TruncationLeak { .. }
            | Error::Undefined(_)
            | Error::Uncertainty(_) => ErrorClass::Physics,
            Error::DimensionOverflow { .. }
            | Error::NegativeEigenvalue(_)
            | Error::StepUnderflow { .. }
            | Error::TooManySteps(_)
            | Error::DegenerateKernel(_)
            | Error::Solver(_) => ErrorClass::Numerical,
            Error::Io(_) | Error::Json(_) => ErrorClass::Io,
        }
    }
}
