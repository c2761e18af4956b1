//! The quantum dictionary: a fixed-capacity list of (address, value) pairs
//! kept sorted by address, with unused slots holding `(MAX_ADDRESS, 0)`.
//!
//! Every mapping has exactly one such list, so the register contents carry
//! no trace of the order in which entries were written. All operations are
//! built from [`extract`] and its structural reverse [`inject`].

mod classical;
mod ops;
mod quantum;

pub use classical::{ClassicalDict, DictBounds, DictLiteral};
pub use ops::{
    add_dict_into_value, add_value_into_dict, apply, extract, inject, swap_value, ExecOptions,
    Fault,
};
pub use quantum::{EncodingViolation, InvalidEncoding, QuantumDict};
