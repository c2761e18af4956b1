use super::QuantumDict;
use crate::arith::{
    self, compare_gt_bit, compute_equals, is_zero, swap_registers, uncompute_bit, PredicateSpec,
    UncomputeMode,
};
use crate::error::{Error, Result};
use crate::oracle::{self, OpDescriptor, OpKind, PreconditionViolation};
use crate::sim::{Qubit, Register, Simulator};

/// Deliberate circuit defects, for checking that the verifier notices them.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    /// Drop the controlled swap of the value registers in one extraction step.
    SkipValueSwap { iteration: usize },
    /// Drop the controlled swap of the address registers in one extraction step.
    SkipAddressSwap { iteration: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecOptions {
    pub mode: UncomputeMode,
    /// Scan every term for violated preconditions before running.
    pub validate: bool,
    pub fault: Option<Fault>,
}

impl Default for ExecOptions {
    fn default() -> Self {
        Self {
            mode: UncomputeMode::Clean,
            validate: true,
            fault: None,
        }
    }
}

impl ExecOptions {
    pub fn new(mode: UncomputeMode) -> Self {
        Self {
            mode,
            ..Self::default()
        }
    }

    pub fn unchecked(mut self) -> Self {
        self.validate = false;
        self
    }

    pub fn with_fault(mut self, fault: Fault) -> Self {
        self.fault = Some(fault);
        self
    }
}

fn check_widths(dict: &QuantumDict, address: &Register, aux: &Register) -> Result<()> {
    let b = dict.bounds();
    if address.width() != b.address_bits {
        return Err(Error::WidthMismatch {
            left: address.width(),
            right: b.address_bits,
        });
    }
    if aux.width() != b.value_bits {
        return Err(Error::WidthMismatch {
            left: aux.width(),
            right: b.value_bits,
        });
    }
    dict.check_disjoint(&[address, aux])
}

/// Per-term precondition scan against the classical semantics.
fn validate(
    sim: &Simulator,
    kind: OpKind,
    dict: &QuantumDict,
    address: &Register,
    aux: &Register,
) -> Result<()> {
    for &(key, _) in sim.terms() {
        let d = dict.decode_key(key).map_err(Error::InvalidEncoding)?;
        let op = OpDescriptor {
            kind,
            address: address.read(key),
            value: aux.read(key),
        };
        match oracle::check_preconditions(&op, &d) {
            Ok(()) => {}
            Err(PreconditionViolation::OutputNotZero) => return Err(Error::NonZeroOutput),
            Err(v) => return Err(Error::Precondition(v)),
        }
    }
    Ok(())
}

fn cswap(
    sim: &mut Simulator,
    ctrl: Qubit,
    a: &Register,
    b: &Register,
    reversed: bool,
) -> Result<()> {
    if a.width() != b.width() {
        return Err(Error::WidthMismatch {
            left: a.width(),
            right: b.width(),
        });
    }
    let mut pairs: Vec<(Qubit, Qubit)> = a
        .qubits()
        .iter()
        .copied()
        .zip(b.qubits().iter().copied())
        .collect();
    if reversed {
        pairs.reverse();
    }
    for (qa, qb) in pairs {
        sim.cnot(qb, qa)?;
        sim.toffoli(ctrl, qa, qb)?;
        sim.cnot(qb, qa)?;
    }
    Ok(())
}

/// XORs `MAX_ADDRESS` into `extra` where `output == 0` and `address` where it
/// is not. Self-inverse.
fn toggle_extra_address(
    sim: &mut Simulator,
    extra: &Register,
    address: &Register,
    output: &Register,
) -> Result<()> {
    let z = sim.alloc_ancilla(1, 0)?;
    let zq = z.qubit(0);
    is_zero(sim, output, zq)?;
    for &q in extra.qubits() {
        sim.cnot(zq, q)?;
    }
    sim.x(zq)?;
    for (&qa, &qe) in address.qubits().iter().zip(extra.qubits()) {
        sim.toffoli(zq, qa, qe)?;
    }
    sim.x(zq)?;
    is_zero(sim, output, zq)?;
    sim.free(z)
}

pub(crate) fn extract_unchecked(
    sim: &mut Simulator,
    dict: &QuantumDict,
    address: &Register,
    output: &Register,
    mode: UncomputeMode,
    fault: Option<Fault>,
) -> Result<()> {
    let b = dict.bounds();
    let extra = sim.alloc_ancilla(b.address_bits, b.max_address())?;
    let addrs: Vec<&Register> = dict.addrs().iter().chain([&extra]).collect();
    let vals: Vec<&Register> = dict.vals().iter().chain([output]).collect();

    for k in 0..b.capacity {
        let eq = sim.alloc_ancilla(1, 0)?;
        let e = eq.qubit(0);
        compute_equals(sim, address, addrs[k], e)?;
        if fault != Some(Fault::SkipValueSwap { iteration: k }) {
            cswap(sim, e, vals[k], vals[k + 1], false)?;
        }
        if fault != Some(Fault::SkipAddressSwap { iteration: k }) {
            cswap(sim, e, addrs[k], addrs[k + 1], false)?;
        }
        // A swap happened exactly where the pair is now out of order.
        uncompute_bit(
            sim,
            e,
            PredicateSpec::GreaterThan(addrs[k], addrs[k + 1]),
            mode,
        )?;
        sim.free(eq)?;
    }

    toggle_extra_address(sim, &extra, address, output)?;
    sim.free(extra)
}

pub(crate) fn inject_unchecked(
    sim: &mut Simulator,
    dict: &QuantumDict,
    address: &Register,
    value: &Register,
    mode: UncomputeMode,
) -> Result<()> {
    let b = dict.bounds();
    let extra = sim.alloc_ancilla(b.address_bits, 0)?;
    toggle_extra_address(sim, &extra, address, value)?;
    let addrs: Vec<&Register> = dict.addrs().iter().chain([&extra]).collect();
    let vals: Vec<&Register> = dict.vals().iter().chain([value]).collect();

    for k in (0..b.capacity).rev() {
        let eq = sim.alloc_ancilla(1, 0)?;
        let e = eq.qubit(0);
        compare_gt_bit(sim, addrs[k], addrs[k + 1], e)?;
        cswap(sim, e, addrs[k], addrs[k + 1], true)?;
        cswap(sim, e, vals[k], vals[k + 1], true)?;
        uncompute_bit(
            sim,
            e,
            PredicateSpec::EqualsRegister(address, addrs[k]),
            mode,
        )?;
        sim.free(eq)?;
    }

    // the appended slot is back to the empty pair
    for &q in extra.qubits().iter().rev() {
        sim.x(q)?;
    }
    sim.free(extra)
}

/// Moves `dict[address]` into `output` (which must be zero) and removes the
/// entry. Absent addresses leave both untouched.
pub fn extract(
    sim: &mut Simulator,
    dict: &QuantumDict,
    address: &Register,
    output: &Register,
    opts: ExecOptions,
) -> Result<()> {
    check_widths(dict, address, output)?;
    if opts.validate {
        validate(sim, OpKind::Extract, dict, address, output)?;
    }
    extract_unchecked(sim, dict, address, output, opts.mode, opts.fault)
}

/// Moves `value` into the dictionary at `address`, leaving `value` zero.
/// The address must be absent, and a non-zero value needs a free slot.
pub fn inject(
    sim: &mut Simulator,
    dict: &QuantumDict,
    address: &Register,
    value: &Register,
    opts: ExecOptions,
) -> Result<()> {
    check_widths(dict, address, value)?;
    if opts.validate {
        validate(sim, OpKind::Inject, dict, address, value)?;
    }
    inject_unchecked(sim, dict, address, value, opts.mode)
}

/// Exchanges `dict[address]` and `value`.
pub fn swap_value(
    sim: &mut Simulator,
    dict: &QuantumDict,
    address: &Register,
    value: &Register,
    opts: ExecOptions,
) -> Result<()> {
    check_widths(dict, address, value)?;
    if opts.validate {
        validate(sim, OpKind::SwapValue, dict, address, value)?;
    }
    with_temp(sim, dict, address, opts, |sim, temp| {
        swap_registers(sim, value, temp)
    })
}

/// `dict[address] += value (mod 2^V)`; a zero sum removes the entry.
pub fn add_value_into_dict(
    sim: &mut Simulator,
    value: &Register,
    dict: &QuantumDict,
    address: &Register,
    opts: ExecOptions,
) -> Result<()> {
    check_widths(dict, address, value)?;
    if opts.validate {
        validate(sim, OpKind::AddIntoDict, dict, address, value)?;
    }
    with_temp(sim, dict, address, opts, |sim, temp| {
        arith::add_into(sim, value, temp)
    })
}

/// `value += dict[address] (mod 2^V)`; the dictionary is unchanged.
pub fn add_dict_into_value(
    sim: &mut Simulator,
    dict: &QuantumDict,
    address: &Register,
    value: &Register,
    opts: ExecOptions,
) -> Result<()> {
    check_widths(dict, address, value)?;
    if opts.validate {
        validate(sim, OpKind::AddIntoValue, dict, address, value)?;
    }
    with_temp(sim, dict, address, opts, |sim, temp| {
        arith::add_into(sim, temp, value)
    })
}

/// Extracts into a fresh register, runs `body` on it, and injects it back.
fn with_temp<F>(
    sim: &mut Simulator,
    dict: &QuantumDict,
    address: &Register,
    opts: ExecOptions,
    body: F,
) -> Result<()>
where
    F: FnOnce(&mut Simulator, &Register) -> Result<()>,
{
    let temp = sim.alloc_ancilla(dict.bounds().value_bits, 0)?;
    extract_unchecked(sim, dict, address, &temp, opts.mode, opts.fault)?;
    body(sim, &temp)?;
    inject_unchecked(sim, dict, address, &temp, opts.mode)?;
    sim.free(temp)
}

/// Runs the operation named by `kind`; `aux` is the output or value register.
pub fn apply(
    sim: &mut Simulator,
    kind: OpKind,
    dict: &QuantumDict,
    address: &Register,
    aux: &Register,
    opts: ExecOptions,
) -> Result<()> {
    match kind {
        OpKind::Extract => extract(sim, dict, address, aux, opts),
        OpKind::Inject => inject(sim, dict, address, aux, opts),
        OpKind::SwapValue => swap_value(sim, dict, address, aux, opts),
        OpKind::AddIntoDict => add_value_into_dict(sim, aux, dict, address, opts),
        OpKind::AddIntoValue => add_dict_into_value(sim, dict, address, aux, opts),
    }
}
