use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Library-wide error type.
#[derive(Error, Debug)]
pub enum Error {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} exceeds the word-size policy (p < 2^26)")]
    ModulusTooLarge(u64),
    #[error("division by zero in the field")]
    DivisionByZero,
    #[error("accumulator capacity {capacity} too small for modulus {p}")]
    CapacityTooSmall { p: u64, capacity: u64 },
    #[error("prime width must be at least 2 bits, got {0}")]
    PrimeBitsTooSmall(u32),
    #[error("residue count {got} does not match basis size {expected}")]
    ResidueCountMismatch { expected: usize, got: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("index out of bounds: {0}")]
    OutOfBounds(String),
    #[error("output matrix may not alias an input operand")]
    Aliasing,
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unsupported field: {0}")]
    UnsupportedField(String),
    #[error("no primitive root of order {order} exists modulo {p}")]
    NoRoot { p: u64, order: u64 },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("need at least {need} measurement points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("degenerate least-squares fit for series '{0}'")]
    DegenerateFit(String),
    #[error("no comparable (operation, size) keys between current data and baseline")]
    NoComparableKeys,
    #[error("all candidate methods failed to produce timings")]
    AllCandidatesFailed,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
