use std::fmt;

use serde::{Deserialize, Serialize};

/// Index of a qubit slot in a [`Simulator`](super::Simulator) pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Qubit(pub(crate) u32);

impl Qubit {
    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub(crate) fn mask(self) -> u128 {
        1u128 << self.0
    }
}

impl fmt::Display for Qubit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// An ordered group of qubits read as a little-endian unsigned integer:
/// qubit `i` carries weight `2^i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Register {
    qubits: Vec<Qubit>,
}

impl Register {
    pub(crate) fn from_qubits(qubits: Vec<Qubit>) -> Self {
        debug_assert!(!qubits.is_empty());
        Self { qubits }
    }

    pub fn width(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubits(&self) -> &[Qubit] {
        &self.qubits
    }

    pub fn qubit(&self, i: usize) -> Qubit {
        self.qubits[i]
    }

    /// Largest value the register can hold.
    pub fn max_value(&self) -> u64 {
        if self.width() >= 64 {
            u64::MAX
        } else {
            (1u64 << self.width()) - 1
        }
    }

    pub(crate) fn mask(&self) -> u128 {
        self.qubits.iter().fold(0, |m, q| m | q.mask())
    }

    /// Reads the register's integer value out of a basis key.
    pub fn read(&self, key: u128) -> u64 {
        self.qubits
            .iter()
            .enumerate()
            .fold(0, |v, (i, q)| v | ((((key >> q.0) & 1) as u64) << i))
    }

    /// Places `value` on the register's qubits; other bits are zero.
    pub fn encode(&self, value: u64) -> u128 {
        self.qubits
            .iter()
            .enumerate()
            .fold(0, |k, (i, q)| k | ((((value >> i) & 1) as u128) << q.0))
    }
}
