use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),
    #[error("permutation {0} is reducible")]
    Reducible(String),
    #[error("tie between competing lengths at {0}")]
    Tie(String),
    #[error("Zorich step exceeded {0} Rauzy steps")]
    ZorichOverflow(usize),
    #[error("non-finite value during {0}")]
    NonFinite(String),
    #[error("twist parameter is on the integer lattice")]
    DegenerateTwist,
    #[error("twist parameter does not lie in H(pi): residual {0:e}")]
    NotInSubspace(f64),
    #[error("sigma convention mismatch: kappa {kappa} from cycles, {expected} from kernel")]
    SigmaConvention { kappa: usize, expected: usize },
    #[error("kernel dimension mismatch: expected {expected}, found {found}")]
    KernelDimension { expected: usize, found: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("invalid move {0}")]
    InvalidMove(String),
    #[error("path does not close: ends at {0}")]
    OpenPath(String),
    #[error("matrix is not primitive")]
    NotPrimitive,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
