//! Reversible circuits for a fixed-capacity quantum dictionary stored as a
//! sorted list of (address, value) pairs, with a sparse state-vector
//! simulator, a classical reference oracle and gate-count estimation.

pub mod arith;
pub mod dict;
pub mod error;
pub mod oracle;
pub mod resources;
pub mod sim;

pub use arith::UncomputeMode;
pub use dict::{ClassicalDict, DictBounds, ExecOptions, QuantumDict};
pub use error::{Error, Result};
pub use oracle::{OpDescriptor, OpKind};
pub use sim::{RngSeed, Simulator};
