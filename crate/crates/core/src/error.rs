use thiserror::Error;

use crate::torus::TorusPoint;

/// Every failure mode of the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },
    #[error("matrix is singular")]
    Singular,
    #[error("matrix has non-integral entries")]
    NotIntegral,
    #[error("matrix is not unipotent")]
    NotUnipotent,
    #[error("matrix is not semisimple (repeated eigenvalues)")]
    NotSemisimple,
    #[error("system has eigenvalues on the unit circle; operation needs a hyperbolic matrix")]
    NotHyperbolic,
    #[error("|det| must be 1 for a toral automorphism, got {0}")]
    NotAutomorphism(String),
    #[error("polynomial has zero constant term")]
    ZeroConstantTerm,
    #[error("polynomial is constant")]
    ConstantPolynomial,
    #[error("polynomial has a root of unity (divides cyclotomic polynomial of order {order})")]
    RootOfUnity { order: u64 },
    #[error("polynomial is reducible over Q: {0}")]
    Reducible(String),
    #[error("det(A^n - I) = 0 for n = {n}: infinitely many periodic points")]
    InfinitePeriodicSet { n: u64 },
    #[error("subtorus basis is not primitive (does not extend to a basis of Z^d)")]
    NotPrimitive,
    #[error("subtorus is not invariant under the matrix")]
    NotInvariant,
    #[error("coset x + Y is not invariant under A^n")]
    Coset,
    #[error("restriction to the subtorus has M^n - I singular")]
    NonErgodicFiber,
    #[error("closing failed: best candidate has tracing error {error} >= eps {eps}")]
    ClosingFailed {
        best: Box<TorusPoint>,
        error: f64,
        eps: f64,
    },
    #[error("spacing too small: no admissible lattice point for segment {segment} (best cost {cost}, needed < {bound})")]
    SpacingTooSmall {
        segment: usize,
        cost: f64,
        bound: f64,
    },
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("K = {k} shares a factor with the component count m = {m}")]
    Coprimality { k: u64, m: u64 },
    #[error("budget exhausted: {0}")]
    Budget(String),
    #[error("measures live on different spaces: {0}")]
    SpaceMismatch(String),
    #[error("orbit is not periodic with period {0}")]
    NonPeriodic(u64),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("stage {stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at_stage(self, stage: &str) -> Error {
        Error::Stage {
            stage: stage.to_string(),
            source: Box::new(self),
        }
    }

    /// Short machine-readable tag used by the CLI error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Parse(_) => "ParseError",
            Error::DimensionMismatch { .. } => "DimensionMismatch",
            Error::NonSquare { .. } => "NonSquare",
            Error::Singular => "SingularError",
            Error::NotIntegral => "NotIntegral",
            Error::NotUnipotent => "NotUnipotentError",
            Error::NotSemisimple => "NotSemisimpleError",
            Error::NotHyperbolic => "NotHyperbolic",
            Error::NotAutomorphism(_) => "NotAutomorphism",
            Error::ZeroConstantTerm => "ZeroConstantTerm",
            Error::ConstantPolynomial => "ConstantPolynomial",
            Error::RootOfUnity { .. } => "RootOfUnityError",
            Error::Reducible(_) => "Reducible",
            Error::InfinitePeriodicSet { .. } => "InfinitePeriodicSetError",
            Error::NotPrimitive => "NotPrimitive",
            Error::NotInvariant => "NotInvariantError",
            Error::Coset => "CosetError",
            Error::NonErgodicFiber => "NonErgodicFiberError",
            Error::ClosingFailed { .. } => "ClosingFailedError",
            Error::SpacingTooSmall { .. } => "SpacingTooSmallError",
            Error::Precondition(_) => "PreconditionError",
            Error::Coprimality { .. } => "CoprimalityError",
            Error::Budget(_) => "BudgetError",
            Error::SpaceMismatch(_) => "SpaceMismatch",
            Error::NonPeriodic(_) => "NonPeriodic",
            Error::Verification(_) => "VerificationError",
            Error::Stage { source, .. } => source.kind(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
