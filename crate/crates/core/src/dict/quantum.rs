use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ClassicalDict, DictBounds};
use crate::error::{Error, Result};
use crate::sim::{Register, Simulator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingViolation {
    /// `addrs[i] > addrs[i + 1]`.
    Sorted,
    /// `addrs[i] == addrs[i + 1]` below the sentinel address.
    Distinct,
    /// A zero value at a real address or a non-zero value at the sentinel.
    SentinelPairing,
}

/// First invariant violation found in a basis component, with the slot index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InvalidEncoding {
    pub kind: EncodingViolation,
    pub index: usize,
}

impl fmt::Display for InvalidEncoding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} violated at slot {}", self.kind, self.index)
    }
}

/// `C` address registers and `C` value registers holding a sorted,
/// sentinel-padded pair list in every term.
#[derive(Debug, Clone)]
pub struct QuantumDict {
    bounds: DictBounds,
    addrs: Vec<Register>,
    vals: Vec<Register>,
}

impl QuantumDict {
    /// Allocates the registers in the canonical basis state of `d`.
    pub fn encode(d: &ClassicalDict, sim: &mut Simulator) -> Result<Self> {
        let bounds = d.bounds();
        let mut addrs = Vec::with_capacity(bounds.capacity);
        let mut vals = Vec::with_capacity(bounds.capacity);
        for (a, v) in d.canonical_pairs() {
            addrs.push(sim.alloc(bounds.address_bits, a)?);
            vals.push(sim.alloc(bounds.value_bits, v)?);
        }
        Ok(Self {
            bounds,
            addrs,
            vals,
        })
    }

    pub fn bounds(&self) -> DictBounds {
        self.bounds
    }

    pub fn addrs(&self) -> &[Register] {
        &self.addrs
    }

    pub fn vals(&self) -> &[Register] {
        &self.vals
    }

    /// All registers, address then value per slot.
    pub fn registers(&self) -> Vec<&Register> {
        self.addrs
            .iter()
            .zip(&self.vals)
            .flat_map(|(a, v)| [a, v])
            .collect()
    }

    /// Register values for `d`, in the order of [`registers`](Self::registers).
    pub fn register_values(d: &ClassicalDict) -> Vec<u64> {
        d.canonical_pairs()
            .into_iter()
            .flat_map(|(a, v)| [a, v])
            .collect()
    }

    pub(crate) fn mask(&self) -> u128 {
        self.registers().iter().fold(0, |m, r| m | r.mask())
    }

    /// Classifies the pair list stored in one basis key.
    pub fn decode_key(&self, key: u128) -> std::result::Result<ClassicalDict, InvalidEncoding> {
        let max = self.bounds.max_address();
        let c = self.bounds.capacity;
        let addrs: Vec<u64> = self.addrs.iter().map(|r| r.read(key)).collect();
        let vals: Vec<u64> = self.vals.iter().map(|r| r.read(key)).collect();
        for i in 0..c {
            if (vals[i] == 0) != (addrs[i] == max) {
                return Err(InvalidEncoding {
                    kind: EncodingViolation::SentinelPairing,
                    index: i,
                });
            }
            if i + 1 < c {
                if addrs[i] > addrs[i + 1] {
                    return Err(InvalidEncoding {
                        kind: EncodingViolation::Sorted,
                        index: i,
                    });
                }
                if addrs[i] == addrs[i + 1] && addrs[i] != max {
                    return Err(InvalidEncoding {
                        kind: EncodingViolation::Distinct,
                        index: i,
                    });
                }
            }
        }
        let entries = addrs.into_iter().zip(vals).filter(|&(a, _)| a != max);
        Ok(ClassicalDict::new(self.bounds, entries)
            .expect("checked invariants imply a valid mapping"))
    }

    /// Decodes every term of the simulator state.
    pub fn decode(
        &self,
        sim: &Simulator,
    ) -> Vec<(
        std::result::Result<ClassicalDict, InvalidEncoding>,
        Complex64,
    )> {
        sim.terms()
            .iter()
            .map(|&(k, a)| (self.decode_key(k), a))
            .collect()
    }

    pub(crate) fn check_disjoint(&self, others: &[&Register]) -> Result<()> {
        let mut seen = self.mask();
        for r in others {
            for &q in r.qubits() {
                let m = 1u128 << q.index();
                if seen & m != 0 {
                    return Err(Error::DuplicateQubit(q));
                }
                seen |= m;
            }
        }
        Ok(())
    }
}
