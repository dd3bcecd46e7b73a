use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("singular map: {0}")]
    SingularMap(String),
    #[error("mollifier radius {ell} overlaps its periodic images (period {period})")]
    KernelOverlap { ell: f64, period: f64 },
    #[error("frequency {lambda} fails the Nyquist guard: lambda*spacing = {product} > pi/4")]
    Nyquist { lambda: f64, product: f64 },
    #[error("argument outside domain: {0}")]
    Domain(String),
    #[error("profile range: {0}")]
    ProfileRange(String),
    #[error("profile is not periodically integrable: mean {0}")]
    NotIntegrable(f64),
    #[error("degenerate immersion: {0}")]
    DegenerateImmersion(String),
    #[error("deficit too large: {0}")]
    DeficitTooLarge(String),
    #[error("decomposition failure: {0}")]
    DecompositionFailure(String),
    #[error("amplitude floor: {0}")]
    AmplitudeFloor(String),
    #[error("corrugation range: {0}")]
    CorrugationRange(String),
    #[error("eps out of range: {0}")]
    EpsOutOfRange(String),
    #[error("degenerate exponent: {0}")]
    DegenerateExponent(String),
    #[error("not short: {0}")]
    NotShort(String),
    #[error("strict-mode violation: {0}")]
    StrictViolation(String),
    #[error("snapshot format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{context}: {source}")]
    Context { context: String, source: Box<Error> },
}

/// Coarse failure classes, used by the command line front end for exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    Input,
    Precondition,
    Numeric,
    Strict,
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Error {
        Error::Context { context: context.into(), source: Box::new(self) }
    }

    /// The innermost error, skipping context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn category(&self) -> Category {
        use Error::*;
        match self.root() {
            Io(_) | Format(_) => Category::Input,
            InvalidDimension(_) | DimensionMismatch(_) | Precondition(_) | KernelOverlap { .. }
            | Nyquist { .. } | Domain(_) | EpsOutOfRange(_) | NotShort(_) | DeficitTooLarge(_)
            | NotIntegrable(_) => Category::Precondition,
            StrictViolation(_) => Category::Strict,
            _ => Category::Numeric,
        }
    }
}
