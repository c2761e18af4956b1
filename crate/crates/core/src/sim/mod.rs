//! Sparse state-vector simulator for permutation-plus-phase circuits.
//!
//! The state is a list of `(basis key, amplitude)` pairs where bit `i` of the
//! key is the value of qubit slot `i`. X, CNOT and Toffoli rewrite keys in
//! place, Z-type gates flip signs, and only [`Simulator::measure_x`] ever
//! changes the number of terms.

mod register;
mod state;
mod stats;
mod trace;

use std::collections::HashMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use register::{Qubit, Register};
pub use state::{fidelity, SparseState};
pub use stats::GateStats;
pub use trace::{GateKind, TraceEvent};

use crate::error::{Error, Result};

/// Number of qubit slots a simulator can address.
pub const MAX_QUBITS: usize = 128;

pub const DEFAULT_PRUNE_EPSILON: f64 = 1e-14;

/// Seed for the measurement outcome stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Derives an independent seed for sub-task `index` (trial, shard, case).
    pub fn derive(self, index: u64) -> RngSeed {
        // splitmix64 finalizer
        let mut z = self
            .0
            .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        RngSeed(z ^ (z >> 31))
    }
}

#[derive(Debug, Clone)]
pub struct Simulator {
    terms: Vec<(u128, Complex64)>,
    allocated: u128,
    ancilla_mask: u128,
    stats: GateStats,
    rng: ChaCha8Rng,
    deferred_depth: u32,
    conditional_depth: u32,
    trace: Option<Vec<TraceEvent>>,
    prune_epsilon: f64,
}

impl Simulator {
    pub fn new(seed: RngSeed) -> Self {
        Self {
            terms: vec![(0, Complex64::new(1.0, 0.0))],
            allocated: 0,
            ancilla_mask: 0,
            stats: GateStats::default(),
            rng: ChaCha8Rng::seed_from_u64(seed.0),
            deferred_depth: 0,
            conditional_depth: 0,
            trace: None,
            prune_epsilon: DEFAULT_PRUNE_EPSILON,
        }
    }

    pub fn with_prune_epsilon(mut self, eps: f64) -> Self {
        self.prune_epsilon = eps;
        self
    }

    pub fn qubit_count(&self) -> usize {
        self.allocated.count_ones() as usize
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn stats(&self) -> &GateStats {
        &self.stats
    }

    /// Clears all counters. The ancilla high-water mark restarts from the
    /// number of ancillas currently live.
    pub fn reset_stats(&mut self) {
        self.stats = GateStats {
            ancilla_high_water: self.live_ancillas(),
            ..GateStats::default()
        };
    }

    pub fn live_ancillas(&self) -> usize {
        self.ancilla_mask.count_ones() as usize
    }

    pub fn enable_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn take_trace(&mut self) -> Vec<TraceEvent> {
        self.trace.take().unwrap_or_default()
    }

    pub fn is_allocated(&self, q: Qubit) -> bool {
        self.allocated & q.mask() != 0
    }

    /// Allocates a data register holding `initial` in every term.
    pub fn alloc(&mut self, width: usize, initial: u64) -> Result<Register> {
        self.alloc_inner(width, initial, false)
    }

    /// Allocates scratch qubits. These count toward the ancilla high-water mark.
    pub fn alloc_ancilla(&mut self, width: usize, initial: u64) -> Result<Register> {
        self.alloc_inner(width, initial, true)
    }

    fn alloc_inner(&mut self, width: usize, initial: u64, ancilla: bool) -> Result<Register> {
        assert!(width >= 1, "registers have at least one qubit");
        if width < 64 && initial >> width != 0 {
            return Err(Error::ValueTooWide {
                value: initial,
                width,
            });
        }
        let available = MAX_QUBITS - self.qubit_count();
        if width > available {
            return Err(Error::PoolExhausted {
                requested: width,
                available,
            });
        }
        let qubits: Vec<Qubit> = (0..MAX_QUBITS as u32)
            .map(Qubit)
            .filter(|q| self.allocated & q.mask() == 0)
            .take(width)
            .collect();
        let reg = Register::from_qubits(qubits);
        let mask = reg.mask();
        self.allocated |= mask;
        if ancilla {
            self.ancilla_mask |= mask;
            self.stats.ancilla_high_water = self.stats.ancilla_high_water.max(self.live_ancillas());
        }
        let bits = reg.encode(initial);
        if bits != 0 {
            for (k, _) in &mut self.terms {
                *k |= bits;
            }
        }
        Ok(reg)
    }

    /// Returns the register's qubits to the pool. Every term must have the
    /// register at zero; anything else means an uncomputation went wrong.
    pub fn free(&mut self, reg: Register) -> Result<()> {
        self.check_allocated(reg.qubits())?;
        let mask = reg.mask();
        if let Some(&(key, _)) = self.terms.iter().find(|(k, _)| k & mask != 0) {
            return Err(Error::NonZeroRelease {
                qubits: reg.qubits().to_vec(),
                key,
            });
        }
        self.allocated &= !mask;
        self.ancilla_mask &= !mask;
        Ok(())
    }

    fn check_allocated(&self, qubits: &[Qubit]) -> Result<()> {
        for &q in qubits {
            if !self.is_allocated(q) {
                return Err(Error::UnallocatedQubit(q));
            }
        }
        Ok(())
    }

    fn check_operands(&self, qubits: &[Qubit]) -> Result<()> {
        self.check_allocated(qubits)?;
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(Error::DuplicateQubit(*q));
            }
        }
        Ok(())
    }

    fn record(&mut self, kind: GateKind, qubits: &[Qubit]) {
        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent::Gate {
                kind,
                qubits: qubits.to_vec(),
                conditional: self.conditional_depth > 0,
            });
        }
    }

    fn flip_where(&mut self, controls: u128, target: u128) {
        for (k, _) in &mut self.terms {
            if *k & controls == controls {
                *k ^= target;
            }
        }
    }

    fn negate_where(&mut self, controls: u128) {
        for (k, a) in &mut self.terms {
            if *k & controls == controls {
                *a = -*a;
            }
        }
    }

    pub fn x(&mut self, q: Qubit) -> Result<()> {
        self.check_operands(&[q])?;
        self.flip_where(0, q.mask());
        self.stats.single_qubit += 1;
        self.record(GateKind::X, &[q]);
        Ok(())
    }

    pub fn cnot(&mut self, control: Qubit, target: Qubit) -> Result<()> {
        self.check_operands(&[control, target])?;
        self.flip_where(control.mask(), target.mask());
        self.stats.cnot += 1;
        self.record(GateKind::Cnot, &[control, target]);
        Ok(())
    }

    pub fn toffoli(&mut self, c1: Qubit, c2: Qubit, target: Qubit) -> Result<()> {
        self.check_operands(&[c1, c2, target])?;
        self.flip_where(c1.mask() | c2.mask(), target.mask());
        self.stats.toffoli += 1;
        if self.deferred_depth == 0 {
            self.stats.expected_toffoli_halves += 2;
        }
        self.record(GateKind::Toffoli, &[c1, c2, target]);
        Ok(())
    }

    pub fn z(&mut self, q: Qubit) -> Result<()> {
        self.check_operands(&[q])?;
        self.negate_where(q.mask());
        self.stats.single_qubit += 1;
        self.record(GateKind::Z, &[q]);
        Ok(())
    }

    pub fn cz(&mut self, a: Qubit, b: Qubit) -> Result<()> {
        self.check_operands(&[a, b])?;
        self.negate_where(a.mask() | b.mask());
        self.stats.cz += 1;
        self.record(GateKind::Cz, &[a, b]);
        Ok(())
    }

    /// Negates every term for which `pred` holds on the values of `regs`.
    /// Uncounted: this is the abstract phase oracle, not a gate decomposition.
    pub fn phase_on_predicate(
        &mut self,
        regs: &[&Register],
        pred: impl Fn(&[u64]) -> bool,
    ) -> Result<()> {
        for r in regs {
            self.check_allocated(r.qubits())?;
        }
        let mut vals = vec![0u64; regs.len()];
        for (k, a) in &mut self.terms {
            for (v, r) in vals.iter_mut().zip(regs) {
                *v = r.read(*k);
            }
            if pred(&vals) {
                *a = -*a;
            }
        }
        Ok(())
    }

    /// Measures `q` in the X basis and resets it to |0>.
    ///
    /// Returns `false` for |+> and `true` for |->. After a `true` outcome each
    /// remaining term carries the phase `(-1)^q` it had before measurement.
    pub fn measure_x(&mut self, q: Qubit) -> Result<bool> {
        self.check_operands(&[q])?;
        let mask = q.mask();
        self.stats.single_qubit += 1;
        self.stats.x_measurements += 1;
        let draw: f64 = self.rng.random();

        // (rest key, amplitude with q=0, amplitude with q=1), in first-seen order.
        let mut slots: HashMap<u128, usize> = HashMap::with_capacity(self.terms.len());
        let mut pairs: Vec<(u128, Complex64, Complex64)> = Vec::with_capacity(self.terms.len());
        for &(k, a) in &self.terms {
            let rest = k & !mask;
            let i = *slots.entry(rest).or_insert_with(|| {
                pairs.push((rest, Complex64::default(), Complex64::default()));
                pairs.len() - 1
            });
            if k & mask == 0 {
                pairs[i].1 = a;
            } else {
                pairs[i].2 = a;
            }
        }

        let outcome;
        if pairs.len() == self.terms.len() {
            // q is a function of the other qubits: both outcomes have probability
            // exactly 1/2 and the surviving amplitudes need no rescaling.
            outcome = draw < 0.5;
            let sign = if outcome { -1.0 } else { 1.0 };
            self.terms = pairs
                .into_iter()
                .map(|(rest, a0, a1)| (rest, a0 + a1 * sign))
                .collect();
        } else {
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let p1: f64 = pairs
                .iter()
                .map(|(_, a0, a1)| ((a0 - a1) * h).norm_sqr())
                .sum();
            outcome = draw < p1;
            let (sign, p) = if outcome { (-1.0, p1) } else { (1.0, 1.0 - p1) };
            let scale = h / p.sqrt();
            let eps = self.prune_epsilon;
            self.terms = pairs
                .into_iter()
                .map(|(rest, a0, a1)| (rest, (a0 + a1 * sign) * scale))
                .filter(|(_, a)| a.norm() >= eps)
                .collect();
            self.renormalize();
        }

        if let Some(trace) = &mut self.trace {
            trace.push(TraceEvent::XMeasure { qubit: q, outcome });
        }
        Ok(outcome)
    }

    fn renormalize(&mut self) {
        let n: f64 = self.terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        if (n - 1.0).abs() > 1e-15 && n > 0.0 {
            let s = 1.0 / n.sqrt();
            for (_, a) in &mut self.terms {
                *a *= s;
            }
        }
    }

    /// Marks the start of a measurement-triggered fixup whose Toffolis were
    /// already charged to the expectation at half weight.
    pub(crate) fn begin_deferred(&mut self) {
        self.deferred_depth += 1;
        self.conditional_depth += 1;
    }

    pub(crate) fn end_deferred(&mut self) {
        self.deferred_depth -= 1;
        self.conditional_depth -= 1;
    }

    /// Brackets Clifford fixups that ran because of a measurement outcome.
    pub(crate) fn begin_conditional(&mut self) {
        self.conditional_depth += 1;
    }

    pub(crate) fn end_conditional(&mut self) {
        self.conditional_depth -= 1;
    }

    pub(crate) fn charge_expected_halves(&mut self, halves: u64) {
        self.stats.expected_toffoli_halves += halves;
    }

    /// Raises the high-water mark as if `n` more ancillas were live. Used for
    /// scratch that only some measurement outcomes allocate.
    pub(crate) fn reserve_ancillas(&mut self, n: usize) {
        let peak = self.live_ancillas() + n;
        self.stats.ancilla_high_water = self.stats.ancilla_high_water.max(peak);
    }

    pub(crate) fn note_fixup(&mut self) {
        self.stats.fixups_applied += 1;
    }

    pub fn snapshot(&self) -> SparseState {
        let mut terms = std::collections::BTreeMap::new();
        for &(k, a) in &self.terms {
            *terms.entry(k).or_default() += a;
        }
        SparseState {
            terms,
            allocated: self.allocated,
        }
    }

    /// Raw terms in internal order.
    pub fn terms(&self) -> &[(u128, Complex64)] {
        &self.terms
    }

    /// Per-term values of `regs`, in internal term order.
    pub fn read(&self, regs: &[&Register]) -> Vec<(Vec<u64>, Complex64)> {
        self.terms
            .iter()
            .map(|&(k, a)| (regs.iter().map(|r| r.read(k)).collect(), a))
            .collect()
    }

    /// Replaces a basis state by a superposition over the values of `regs`.
    ///
    /// All qubits outside `regs` keep their current values. Amplitudes are
    /// normalized; rows naming the same values are summed.
    pub fn prepare(&mut self, regs: &[&Register], rows: &[(Vec<u64>, Complex64)]) -> Result<()> {
        if self.terms.len() != 1 {
            return Err(Error::NotBasisState(self.terms.len()));
        }
        for r in regs {
            self.check_allocated(r.qubits())?;
        }
        let clear = regs.iter().fold(0u128, |m, r| m | r.mask());
        let base = self.terms[0].0 & !clear;
        let mut terms: Vec<(u128, Complex64)> = Vec::with_capacity(rows.len());
        let mut index: HashMap<u128, usize> = HashMap::new();
        for (values, amp) in rows {
            assert_eq!(values.len(), regs.len(), "one value per register");
            let mut key = base;
            for (r, &v) in regs.iter().zip(values) {
                if v > r.max_value() {
                    return Err(Error::ValueTooWide {
                        value: v,
                        width: r.width(),
                    });
                }
                key |= r.encode(v);
            }
            match index.get(&key) {
                Some(&i) => terms[i].1 += amp,
                None => {
                    index.insert(key, terms.len());
                    terms.push((key, *amp));
                }
            }
        }
        let eps = self.prune_epsilon;
        terms.retain(|(_, a)| a.norm() >= eps);
        if terms.is_empty() {
            return Err(Error::EmptyState);
        }
        self.terms = terms;
        self.renormalize();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn sim() -> Simulator {
        Simulator::new(RngSeed(7))
    }

    #[test]
    fn alloc_sets_initial_value_little_endian() {
        let mut s = sim();
        let r = s.alloc(3, 7).unwrap();
        assert_eq!(s.read(&[&r]), vec![(vec![7], c(1.0))]);
        let r2 = s.alloc(2, 2).unwrap();
        let key = s.terms()[0].0;
        assert_eq!((key >> r2.qubit(0).index()) & 1, 0);
        assert_eq!((key >> r2.qubit(1).index()) & 1, 1);
        let r1 = s.alloc(1, 0).unwrap();
        assert_eq!(r1.read(key), 0);
        assert!(matches!(s.alloc(2, 4), Err(Error::ValueTooWide { .. })));
    }

    #[test]
    fn free_requires_zero() {
        let mut s = sim();
        let r = s.alloc(1, 0).unwrap();
        s.free(r).unwrap();
        let r = s.alloc(2, 0).unwrap();
        s.x(r.qubit(1)).unwrap();
        let err = s.free(r.clone()).unwrap_err();
        assert!(matches!(err, Error::NonZeroRelease { .. }));
        s.x(r.qubit(1)).unwrap();
        s.free(r.clone()).unwrap();
        assert_eq!(s.x(r.qubit(0)), Err(Error::UnallocatedQubit(r.qubit(0))));
    }

    #[test]
    fn toffoli_truth_table_and_duplicate_check() {
        let mut s = sim();
        let r = s.alloc(3, 0b011).unwrap();
        s.toffoli(r.qubit(0), r.qubit(1), r.qubit(2)).unwrap();
        assert_eq!(s.read(&[&r])[0].0, vec![0b111]);
        assert_eq!(s.stats().toffoli, 1);
        assert_eq!(
            s.toffoli(r.qubit(0), r.qubit(0), r.qubit(2)),
            Err(Error::DuplicateQubit(r.qubit(0)))
        );
        let r2 = s.alloc(2, 0).unwrap();
        s.cnot(r2.qubit(0), r2.qubit(1)).unwrap();
        assert_eq!(s.read(&[&r2])[0].0, vec![0]);
    }

    #[test]
    fn toffoli_acts_per_term() {
        let mut s = sim();
        let r = s.alloc(3, 0).unwrap();
        // bits listed as (q0, q1, q2): |110>, |000>, |100>, |010>
        let rows: Vec<(Vec<u64>, Complex64)> = [0b011, 0b000, 0b001, 0b010]
            .iter()
            .map(|&v| (vec![v], c(0.5)))
            .collect();
        s.prepare(&[&r], &rows).unwrap();
        s.toffoli(r.qubit(0), r.qubit(1), r.qubit(2)).unwrap();
        let mut got: Vec<u64> = s.read(&[&r]).into_iter().map(|(v, _)| v[0]).collect();
        got.sort();
        assert_eq!(got, vec![0b000, 0b001, 0b010, 0b111]);
        assert_eq!(s.term_count(), 4);
    }

    #[test]
    fn z_and_predicate_phase() {
        let mut s = sim();
        let q = s.alloc(1, 1).unwrap();
        s.z(q.qubit(0)).unwrap();
        assert_eq!(s.terms()[0].1, c(-1.0));
        let q0 = s.alloc(1, 0).unwrap();
        s.z(q0.qubit(0)).unwrap();
        assert_eq!(s.terms()[0].1, c(-1.0));

        let mut s = sim();
        let a = s.alloc(2, 0).unwrap();
        let b = s.alloc(2, 0).unwrap();
        s.prepare(&[&a, &b], &[(vec![3, 2], c(1.0)), (vec![2, 2], c(1.0))])
            .unwrap();
        s.phase_on_predicate(&[&a, &b], |v| v[0] > v[1]).unwrap();
        let st = s.snapshot();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((st.amplitude(a.encode(3) | b.encode(2)) - c(-h)).norm() < 1e-15);
        assert!((st.amplitude(a.encode(2) | b.encode(2)) - c(h)).norm() < 1e-15);
        assert_eq!(s.stats().toffoli, 0);
    }

    #[test]
    fn measure_x_eigenstates() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for seed in 0..10 {
            let mut s = Simulator::new(RngSeed(seed));
            let q = s.alloc(1, 0).unwrap();
            s.prepare(&[&q], &[(vec![0], c(h)), (vec![1], c(h))])
                .unwrap();
            assert!(!s.measure_x(q.qubit(0)).unwrap());
            s.free(q).unwrap();

            let q = s.alloc(1, 0).unwrap();
            s.prepare(&[&q], &[(vec![0], c(h)), (vec![1], c(-h))])
                .unwrap();
            assert!(s.measure_x(q.qubit(0)).unwrap());
            s.free(q).unwrap();
            assert!((s.snapshot().norm_sqr() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn measure_x_on_computed_bit_leaves_phase() {
        let mut ones = 0;
        for seed in 0..200 {
            let mut s = Simulator::new(RngSeed(seed));
            let x = s.alloc(2, 0).unwrap();
            let f = s.alloc(1, 0).unwrap();
            let rows: Vec<_> = (0..4).map(|v| (vec![v], c(0.5))).collect();
            s.prepare(&[&x], &rows).unwrap();
            // f = x0 AND x1
            s.toffoli(x.qubit(0), x.qubit(1), f.qubit(0)).unwrap();
            let out = s.measure_x(f.qubit(0)).unwrap();
            s.free(f).unwrap();
            let st = s.snapshot();
            for v in 0..4u64 {
                let sign = if out && v == 3 { -0.5 } else { 0.5 };
                assert_eq!(st.amplitude(x.encode(v)), c(sign));
            }
            ones += u32::from(out);
        }
        assert!((70..130).contains(&ones), "{ones}");
    }

    #[test]
    fn fidelity_examples() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let mut s0 = sim();
        let q = s0.alloc(1, 0).unwrap();
        let zero = s0.snapshot();
        s0.x(q.qubit(0)).unwrap();
        let one = s0.snapshot();
        assert_eq!(fidelity(&zero, &zero).unwrap(), 1.0);
        assert_eq!(fidelity(&zero, &one).unwrap(), 0.0);
        let mut s1 = sim();
        let q = s1.alloc(1, 0).unwrap();
        s1.prepare(&[&q], &[(vec![0], c(h)), (vec![1], c(h))])
            .unwrap();
        assert!((fidelity(&s1.snapshot(), &zero).unwrap() - 0.5).abs() < 1e-15);
        let mut s2 = sim();
        s2.alloc(2, 0).unwrap();
        assert_eq!(fidelity(&s2.snapshot(), &zero), Err(Error::LayoutMismatch));
    }

    #[test]
    fn ancilla_high_water_tracks_scratch_only() {
        let mut s = sim();
        let _data = s.alloc(5, 0).unwrap();
        let a = s.alloc_ancilla(3, 0).unwrap();
        let b = s.alloc_ancilla(2, 0).unwrap();
        s.free(a).unwrap();
        let c = s.alloc_ancilla(1, 0).unwrap();
        assert_eq!(s.stats().ancilla_high_water, 5);
        s.reset_stats();
        assert_eq!(s.stats().ancilla_high_water, 3);
        s.free(b).unwrap();
        s.free(c).unwrap();
        assert_eq!(s.live_ancillas(), 0);
    }

    #[test]
    fn trace_lines() {
        let mut s = sim();
        s.enable_trace();
        let r = s.alloc(3, 0).unwrap();
        s.toffoli(r.qubit(0), r.qubit(1), r.qubit(2)).unwrap();
        s.measure_x(r.qubit(2)).unwrap();
        let lines: Vec<String> = s.take_trace().iter().map(ToString::to_string).collect();
        assert_eq!(lines[0], "GATE TOFFOLI 0 1 2");
        assert!(lines[1] == "XMEAS 2 -> 0" || lines[1] == "XMEAS 2 -> 1");
    }

    #[test]
    fn derived_seeds_differ() {
        let s = RngSeed(1);
        assert_ne!(s.derive(0), s.derive(1));
        assert_eq!(s.derive(3), s.derive(3));
    }
}
