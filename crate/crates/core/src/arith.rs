//! Reversible arithmetic on little-endian registers.
//!
//! Multi-bit ANDs and carry chains are built from temporary logical-AND
//! ancillas: each costs one Toffoli to compute and is released by an
//! X-basis measurement plus a CZ fixup, which costs no Toffolis. The Toffoli
//! count of every routine here is therefore a fixed function of the width.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::{Qubit, Register, Simulator};

/// How a computed predicate bit is returned to |0>.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UncomputeMode {
    /// Recompute the predicate into the bit.
    Clean,
    /// Measure the bit in the X basis; on a |-> outcome, negate the terms
    /// where the predicate holds.
    MeasureFixup,
}

impl fmt::Display for UncomputeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UncomputeMode::Clean => "clean",
            UncomputeMode::MeasureFixup => "measure",
        })
    }
}

impl FromStr for UncomputeMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "clean" => Ok(UncomputeMode::Clean),
            "measure" | "measure_fixup" | "measure-fixup" => Ok(UncomputeMode::MeasureFixup),
            other => Err(format!(
                "unknown mode `{other}` (expected clean or measure)"
            )),
        }
    }
}

/// Exact Toffoli counts of the routines in this module, by operand width.
pub mod cost {
    pub fn multi_and(width: usize) -> u64 {
        width.saturating_sub(1) as u64
    }

    pub fn equals(width: usize) -> u64 {
        multi_and(width)
    }

    pub fn equals_phase(width: usize) -> u64 {
        multi_and(width)
    }

    pub fn is_zero(width: usize) -> u64 {
        multi_and(width)
    }

    pub fn greater_than(width: usize) -> u64 {
        width as u64
    }

    pub fn greater_than_phase(width: usize) -> u64 {
        width as u64
    }

    pub fn add(width: usize) -> u64 {
        width.saturating_sub(1) as u64
    }

    pub fn controlled_swap(width: usize) -> u64 {
        width as u64
    }
}

/// A predicate over register values, used to uncompute a bit that holds it.
#[derive(Debug, Clone, Copy)]
pub enum PredicateSpec<'a> {
    EqualsRegister(&'a Register, &'a Register),
    EqualsConstant(&'a Register, u64),
    GreaterThan(&'a Register, &'a Register),
}

impl PredicateSpec<'_> {
    /// XORs the predicate into `target`.
    pub fn compute_into(&self, sim: &mut Simulator, target: Qubit) -> Result<()> {
        match *self {
            PredicateSpec::EqualsRegister(a, b) => compute_equals(sim, a, b, target),
            PredicateSpec::EqualsConstant(a, k) => compute_equals_constant(sim, a, k, target),
            PredicateSpec::GreaterThan(a, b) => compare_gt_bit(sim, a, b, target),
        }
    }

    /// Negates the amplitude of every term where the predicate holds.
    pub fn apply_phase(&self, sim: &mut Simulator) -> Result<()> {
        match *self {
            PredicateSpec::EqualsRegister(a, b) => phase_equals(sim, a, b),
            PredicateSpec::EqualsConstant(a, k) => phase_equals_constant(sim, a, k),
            PredicateSpec::GreaterThan(a, b) => compare_gt_phase(sim, a, b),
        }
    }

    pub fn compute_cost(&self) -> u64 {
        match *self {
            PredicateSpec::EqualsRegister(a, _) => cost::equals(a.width()),
            PredicateSpec::EqualsConstant(a, _) => cost::equals(a.width()),
            PredicateSpec::GreaterThan(a, _) => cost::greater_than(a.width()),
        }
    }

    pub fn phase_cost(&self) -> u64 {
        match *self {
            PredicateSpec::EqualsRegister(a, _) => cost::equals_phase(a.width()),
            PredicateSpec::EqualsConstant(a, _) => cost::equals_phase(a.width()),
            PredicateSpec::GreaterThan(a, _) => cost::greater_than_phase(a.width()),
        }
    }

    /// Scratch qubits the phase flip allocates.
    pub fn phase_ancillas(&self) -> usize {
        match *self {
            PredicateSpec::EqualsRegister(a, _) | PredicateSpec::EqualsConstant(a, _) => {
                a.width() - 1
            }
            PredicateSpec::GreaterThan(a, _) => a.width(),
        }
    }

    /// Classical value of the predicate on a basis key.
    pub fn eval(&self, key: u128) -> bool {
        match *self {
            PredicateSpec::EqualsRegister(a, b) => a.read(key) == b.read(key),
            PredicateSpec::EqualsConstant(a, k) => a.read(key) == k,
            PredicateSpec::GreaterThan(a, b) => a.read(key) > b.read(key),
        }
    }
}

fn same_width(a: &Register, b: &Register) -> Result<()> {
    if a.width() != b.width() {
        return Err(Error::WidthMismatch {
            left: a.width(),
            right: b.width(),
        });
    }
    Ok(())
}

fn disjoint(regs: &[&Register], extra: &[Qubit]) -> Result<()> {
    let mut seen: u128 = 0;
    let all = regs.iter().flat_map(|r| r.qubits().iter()).chain(extra);
    for q in all {
        let m = 1u128 << q.index();
        if seen & m != 0 {
            return Err(Error::DuplicateQubit(*q));
        }
        seen |= m;
    }
    Ok(())
}

/// Releases a temporary AND `t = a & b` without Toffolis.
fn release_and(sim: &mut Simulator, a: Qubit, b: Qubit, t: Qubit) -> Result<()> {
    if sim.measure_x(t)? {
        sim.begin_conditional();
        let r = sim.cz(a, b);
        sim.end_conditional();
        r?;
    }
    Ok(())
}

/// Computes the AND of `bits` into scratch, hands the qubit holding it to
/// `body`, then releases the scratch. Costs `bits.len() - 1` Toffolis.
fn with_and<F>(sim: &mut Simulator, bits: &[Qubit], body: F) -> Result<()>
where
    F: FnOnce(&mut Simulator, Qubit) -> Result<()>,
{
    let n = bits.len();
    if n == 1 {
        return body(sim, bits[0]);
    }
    let ladder = sim.alloc_ancilla(n - 1, 0)?;
    sim.toffoli(bits[0], bits[1], ladder.qubit(0))?;
    for j in 1..n - 1 {
        sim.toffoli(ladder.qubit(j - 1), bits[j + 1], ladder.qubit(j))?;
    }
    body(sim, ladder.qubit(n - 2))?;
    for j in (1..n - 1).rev() {
        release_and(sim, ladder.qubit(j - 1), bits[j + 1], ladder.qubit(j))?;
    }
    release_and(sim, bits[0], bits[1], ladder.qubit(0))?;
    sim.free(ladder)
}

/// Runs `body` while `b` holds the bitwise XNOR of `a` and `b`.
fn with_xnor<F>(sim: &mut Simulator, a: &Register, b: &Register, body: F) -> Result<()>
where
    F: FnOnce(&mut Simulator) -> Result<()>,
{
    for (&qa, &qb) in a.qubits().iter().zip(b.qubits()) {
        sim.cnot(qa, qb)?;
        sim.x(qb)?;
    }
    body(sim)?;
    for (&qa, &qb) in a.qubits().iter().zip(b.qubits()).rev() {
        sim.x(qb)?;
        sim.cnot(qa, qb)?;
    }
    Ok(())
}

/// Runs `body` while `reg` is flipped so that it is all-ones iff it held `k`.
fn with_matched_constant<F>(sim: &mut Simulator, reg: &Register, k: u64, body: F) -> Result<()>
where
    F: FnOnce(&mut Simulator) -> Result<()>,
{
    let flips: Vec<Qubit> = (0..reg.width())
        .filter(|&i| (k >> i) & 1 == 0)
        .map(|i| reg.qubit(i))
        .collect();
    for &q in &flips {
        sim.x(q)?;
    }
    body(sim)?;
    for &q in flips.iter().rev() {
        sim.x(q)?;
    }
    Ok(())
}

/// `target ^= [a == b]`.
pub fn compute_equals(
    sim: &mut Simulator,
    a: &Register,
    b: &Register,
    target: Qubit,
) -> Result<()> {
    same_width(a, b)?;
    disjoint(&[a, b], &[target])?;
    with_xnor(sim, a, b, |sim| {
        with_and(sim, b.qubits(), |sim, all| sim.cnot(all, target))
    })
}

/// Negates terms with `a == b`.
pub fn phase_equals(sim: &mut Simulator, a: &Register, b: &Register) -> Result<()> {
    same_width(a, b)?;
    disjoint(&[a, b], &[])?;
    with_xnor(sim, a, b, |sim| {
        with_and(sim, b.qubits(), |sim, all| sim.z(all))
    })
}

/// `target ^= [reg == k]`.
pub fn compute_equals_constant(
    sim: &mut Simulator,
    reg: &Register,
    k: u64,
    target: Qubit,
) -> Result<()> {
    if k > reg.max_value() {
        return Err(Error::ValueTooWide {
            value: k,
            width: reg.width(),
        });
    }
    disjoint(&[reg], &[target])?;
    with_matched_constant(sim, reg, k, |sim| {
        with_and(sim, reg.qubits(), |sim, all| sim.cnot(all, target))
    })
}

pub fn phase_equals_constant(sim: &mut Simulator, reg: &Register, k: u64) -> Result<()> {
    if k > reg.max_value() {
        return Err(Error::ValueTooWide {
            value: k,
            width: reg.width(),
        });
    }
    with_matched_constant(sim, reg, k, |sim| {
        with_and(sim, reg.qubits(), |sim, all| sim.z(all))
    })
}

/// `target ^= [reg == 0]`.
pub fn is_zero(sim: &mut Simulator, reg: &Register, target: Qubit) -> Result<()> {
    compute_equals_constant(sim, reg, 0, target)
}

/// Ripples the carries of `a + !b`; the carry out equals `[a > b]`.
/// `body` sees the carry-out qubit. Costs `width` Toffolis.
fn with_greater_than<F>(sim: &mut Simulator, a: &Register, b: &Register, body: F) -> Result<()>
where
    F: FnOnce(&mut Simulator, Qubit) -> Result<()>,
{
    let w = a.width();
    for &q in b.qubits() {
        sim.x(q)?;
    }
    // carries[i] holds the carry into bit i + 1
    let carries = sim.alloc_ancilla(w, 0)?;
    let c = |i: usize| carries.qubit(i);
    sim.toffoli(a.qubit(0), b.qubit(0), c(0))?;
    for i in 1..w {
        sim.cnot(c(i - 1), a.qubit(i))?;
        sim.cnot(c(i - 1), b.qubit(i))?;
        sim.toffoli(a.qubit(i), b.qubit(i), c(i))?;
        sim.cnot(c(i - 1), c(i))?;
    }
    body(sim, c(w - 1))?;
    for i in (1..w).rev() {
        sim.cnot(c(i - 1), c(i))?;
        release_and(sim, a.qubit(i), b.qubit(i), c(i))?;
        sim.cnot(c(i - 1), b.qubit(i))?;
        sim.cnot(c(i - 1), a.qubit(i))?;
    }
    release_and(sim, a.qubit(0), b.qubit(0), c(0))?;
    sim.free(carries)?;
    for &q in b.qubits() {
        sim.x(q)?;
    }
    Ok(())
}

/// `target ^= [a > b]`, unsigned.
pub fn compare_gt_bit(
    sim: &mut Simulator,
    a: &Register,
    b: &Register,
    target: Qubit,
) -> Result<()> {
    same_width(a, b)?;
    disjoint(&[a, b], &[target])?;
    with_greater_than(sim, a, b, |sim, carry| sim.cnot(carry, target))
}

/// Negates terms with `a > b`, by phase kickback off the carry-out.
pub fn compare_gt_phase(sim: &mut Simulator, a: &Register, b: &Register) -> Result<()> {
    same_width(a, b)?;
    disjoint(&[a, b], &[])?;
    with_greater_than(sim, a, b, |sim, carry| sim.z(carry))
}

/// `dst <- (dst + src) mod 2^w`. Costs `w - 1` Toffolis.
pub fn add_into(sim: &mut Simulator, src: &Register, dst: &Register) -> Result<()> {
    same_width(src, dst)?;
    disjoint(&[src, dst], &[])?;
    let w = src.width();
    let (a, b) = (src, dst);
    if w == 1 {
        return sim.cnot(a.qubit(0), b.qubit(0));
    }
    // carries[i - 1] holds the carry into bit i
    let carries = sim.alloc_ancilla(w - 1, 0)?;
    let c = |i: usize| carries.qubit(i - 1);
    sim.toffoli(a.qubit(0), b.qubit(0), c(1))?;
    for i in 1..w - 1 {
        sim.cnot(c(i), a.qubit(i))?;
        sim.cnot(c(i), b.qubit(i))?;
        sim.toffoli(a.qubit(i), b.qubit(i), c(i + 1))?;
        sim.cnot(c(i), c(i + 1))?;
    }
    sim.cnot(a.qubit(w - 1), b.qubit(w - 1))?;
    sim.cnot(c(w - 1), b.qubit(w - 1))?;
    for i in (1..w - 1).rev() {
        sim.cnot(c(i), c(i + 1))?;
        release_and(sim, a.qubit(i), b.qubit(i), c(i + 1))?;
        sim.cnot(c(i), a.qubit(i))?;
        sim.cnot(a.qubit(i), b.qubit(i))?;
    }
    release_and(sim, a.qubit(0), b.qubit(0), c(1))?;
    sim.cnot(a.qubit(0), b.qubit(0))?;
    sim.free(carries)
}

/// Exchanges `a` and `b` where `ctrl` is set: one Fredkin per bit pair.
pub fn controlled_swap_registers(
    sim: &mut Simulator,
    ctrl: Qubit,
    a: &Register,
    b: &Register,
) -> Result<()> {
    same_width(a, b)?;
    disjoint(&[a, b], &[ctrl])?;
    for (&qa, &qb) in a.qubits().iter().zip(b.qubits()) {
        sim.cnot(qb, qa)?;
        sim.toffoli(ctrl, qa, qb)?;
        sim.cnot(qb, qa)?;
    }
    Ok(())
}

/// Swaps two registers with CNOTs.
pub fn swap_registers(sim: &mut Simulator, a: &Register, b: &Register) -> Result<()> {
    same_width(a, b)?;
    disjoint(&[a, b], &[])?;
    for (&qa, &qb) in a.qubits().iter().zip(b.qubits()) {
        sim.cnot(qa, qb)?;
        sim.cnot(qb, qa)?;
        sim.cnot(qa, qb)?;
    }
    Ok(())
}

/// Returns `q` to |0>, given that in every term it currently equals `pred`.
///
/// `Clean` recomputes the predicate. `MeasureFixup` measures `q` in the X
/// basis and, on a |-> outcome, applies the predicate's phase flip. The
/// phase flip's Toffolis are charged to the expectation at half weight up
/// front; the sampled count only includes them when they ran. Its scratch
/// counts toward the ancilla high-water mark either way.
pub fn uncompute_bit(
    sim: &mut Simulator,
    q: Qubit,
    pred: PredicateSpec<'_>,
    mode: UncomputeMode,
) -> Result<()> {
    match mode {
        UncomputeMode::Clean => pred.compute_into(sim, q),
        UncomputeMode::MeasureFixup => {
            sim.charge_expected_halves(pred.phase_cost());
            sim.reserve_ancillas(pred.phase_ancillas());
            if sim.measure_x(q)? {
                sim.begin_deferred();
                sim.note_fixup();
                let r = pred.apply_phase(sim);
                sim.end_deferred();
                r?;
            }
            Ok(())
        }
    }
}
