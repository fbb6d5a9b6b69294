use thiserror::Error;

/// Errors raised across the workbench.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("index {index} out of range for domain of size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    #[error("domain size {0} exceeds the cap of 64")]
    DomainTooLarge(usize),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("not a permutation: {0}")]
    NotAPermutation(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("bound exceeded: {0}")]
    BoundExceeded(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no equivariant selection: subset {0} has no invariant subset of the target size")]
    NoEquivariantSel(String),
    #[error("family too small: {0}")]
    FamilyTooSmall(String),
    #[error("unknown atom {0}")]
    UnknownAtom(u32),
    #[error("not an isomorphism: {0}")]
    NotIsomorphism(String),
    #[error("not realizable at this stage: {0}")]
    NotRealizable(String),
    #[error("malformed: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
