use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Immutable copy of a simulator's superposition, keyed by basis bitstring.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseState {
    pub(crate) terms: BTreeMap<u128, Complex64>,
    pub(crate) allocated: u128,
}

impl SparseState {
    pub fn qubit_count(&self) -> usize {
        self.allocated.count_ones() as usize
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in ascending basis-key order.
    pub fn terms(&self) -> impl Iterator<Item = (u128, Complex64)> + '_ {
        self.terms.iter().map(|(&k, &a)| (k, a))
    }

    pub fn amplitude(&self, key: u128) -> Complex64 {
        self.terms.get(&key).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn allocated_mask(&self) -> u128 {
        self.allocated
    }
}

/// `|<a|b>|^2` for two states over the same qubit layout.
pub fn fidelity(a: &SparseState, b: &SparseState) -> Result<f64> {
    if a.allocated != b.allocated {
        return Err(Error::LayoutMismatch);
    }
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let mut inner = Complex64::default();
    for (k, amp) in small.terms() {
        if let Some(other) = large.terms.get(&k) {
            inner += amp.conj() * other;
        }
    }
    Ok(inner.norm_sqr().min(1.0))
}
