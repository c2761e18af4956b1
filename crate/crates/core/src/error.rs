use thiserror::Error;

use crate::dict::InvalidEncoding;
use crate::oracle::PreconditionViolation;
use crate::sim::Qubit;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An ancilla still carried a set bit in some term when it was released.
    /// This is how a failed uncomputation shows up.
    #[error(
        "released qubits {qubits:?} are not |0> in every term (first offending basis key {key:#x})"
    )]
    NonZeroRelease { qubits: Vec<Qubit>, key: u128 },

    #[error("qubit {0} appears more than once in a single gate")]
    DuplicateQubit(Qubit),

    #[error("qubit {0} is not allocated")]
    UnallocatedQubit(Qubit),

    #[error("qubit pool exhausted: requested {requested}, {available} free")]
    PoolExhausted { requested: usize, available: usize },

    #[error("register width mismatch: {left} vs {right}")]
    WidthMismatch { left: usize, right: usize },

    #[error("value {value} does not fit in {width} bits")]
    ValueTooWide { value: u64, width: usize },

    #[error("states have different qubit layouts")]
    LayoutMismatch,

    #[error("operation requires a single basis state, found {0} terms")]
    NotBasisState(usize),

    #[error("state has no terms with non-zero amplitude")]
    EmptyState,

    #[error("dictionary holds {entries} entries but capacity is {capacity}")]
    CapacityExceeded { entries: usize, capacity: usize },

    #[error("address {0} is reserved for empty slots")]
    ReservedAddress(u64),

    #[error("address {address} needs more than {bits} bits")]
    AddressOutOfRange { address: u64, bits: u32 },

    #[error("value for address {0} is zero; zero means absent")]
    ZeroValue(u64),

    #[error("invalid bounds: {0}")]
    InvalidBounds(String),

    #[error("output register is not zero in every term")]
    NonZeroOutput,

    #[error("invalid dictionary encoding: {0}")]
    InvalidEncoding(InvalidEncoding),

    #[error("precondition violated: {0}")]
    Precondition(PreconditionViolation),

    #[error("instance too large: {0}")]
    TooLarge(String),

    #[error("grid is insufficient for fitting: {0}")]
    InsufficientGrid(String),

    #[error("malformed dictionary literal at `{field}`: {message}")]
    Literal { field: String, message: String },

    #[error("csv: {0}")]
    Csv(String),
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(e.to_string())
    }
}
