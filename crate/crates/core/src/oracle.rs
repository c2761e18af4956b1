//! Classical reference semantics for every dictionary operation, exhaustive
//! enumeration of canonical states, and an equivalence checker that runs the
//! circuits against them.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::UncomputeMode;
use crate::dict::{self, ClassicalDict, DictBounds, ExecOptions, Fault, QuantumDict};
use crate::error::{Error, Result};
use crate::sim::{fidelity, RngSeed, Simulator};

/// Largest `C * (A + V)` accepted by [`enumerate_valid_dicts`].
pub const EXHAUSTION_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpKind {
    Extract,
    Inject,
    SwapValue,
    AddIntoDict,
    AddIntoValue,
}

impl OpKind {
    pub const ALL: [OpKind; 5] = [
        OpKind::Extract,
        OpKind::Inject,
        OpKind::SwapValue,
        OpKind::AddIntoDict,
        OpKind::AddIntoValue,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OpKind::Extract => "extract",
            OpKind::Inject => "inject",
            OpKind::SwapValue => "swap_value",
            OpKind::AddIntoDict => "add_into_dict",
            OpKind::AddIntoValue => "add_into_value",
        }
    }
}

impl fmt::Display for OpKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OpKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let norm = s.to_ascii_lowercase().replace('-', "_");
        OpKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| {
                let names: Vec<_> = OpKind::ALL.iter().map(|k| k.name()).collect();
                format!(
                    "unknown operation `{s}`, expected one of {}",
                    names.join(", ")
                )
            })
    }
}

/// One operation with classical operands. `value` is the output register for
/// extraction and the value register otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OpDescriptor {
    pub kind: OpKind,
    pub address: u64,
    pub value: u64,
}

impl fmt::Display for OpDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} address={} value={}",
            self.kind, self.address, self.value
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PreconditionViolation {
    OutputNotZero,
    AddressPresent,
    NoSpace { op: OpKind },
    ReservedAddress(u64),
}

impl fmt::Display for PreconditionViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PreconditionViolation::OutputNotZero => f.write_str("Requires: output == 0"),
            PreconditionViolation::AddressPresent => f.write_str("Requires: dict[address] == 0"),
            PreconditionViolation::NoSpace { op: OpKind::Inject } => {
                f.write_str("Requires: HasSpace(dict) or value == 0")
            }
            PreconditionViolation::NoSpace { .. } => {
                f.write_str("Requires: HasSpace(dict) or dict[address] != 0 or value == 0")
            }
            PreconditionViolation::ReservedAddress(a) => {
                write!(f, "address {a} is reserved for empty slots")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub dict: ClassicalDict,
    pub value: u64,
}

/// Checks the operands against `d` without running anything.
pub fn check_preconditions(
    op: &OpDescriptor,
    d: &ClassicalDict,
) -> std::result::Result<(), PreconditionViolation> {
    if op.kind == OpKind::Extract && op.value != 0 {
        return Err(PreconditionViolation::OutputNotZero);
    }
    if op.address == d.bounds().max_address() {
        return Err(PreconditionViolation::ReservedAddress(op.address));
    }
    let present = d.contains(op.address);
    match op.kind {
        OpKind::Extract | OpKind::AddIntoValue => Ok(()),
        OpKind::Inject if present => Err(PreconditionViolation::AddressPresent),
        OpKind::Inject | OpKind::SwapValue | OpKind::AddIntoDict => {
            // the write only needs a slot if it creates a new entry
            if d.has_space() || present || op.value == 0 {
                Ok(())
            } else {
                Err(PreconditionViolation::NoSpace { op: op.kind })
            }
        }
    }
}

/// Classical state transition of `op` on `d`.
pub fn oracle_apply(
    op: &OpDescriptor,
    d: &ClassicalDict,
) -> std::result::Result<OracleOutcome, PreconditionViolation> {
    check_preconditions(op, d)?;
    let old = d.get(op.address);
    let mask = d.bounds().max_value();
    let (dict, value) = match op.kind {
        OpKind::Extract => (d.with_value(op.address, 0), old),
        OpKind::Inject => (d.with_value(op.address, op.value), 0),
        OpKind::SwapValue => (d.with_value(op.address, op.value), old),
        OpKind::AddIntoDict => (d.with_value(op.address, (old + op.value) & mask), op.value),
        OpKind::AddIntoValue => (d.clone(), (op.value + old) & mask),
    };
    Ok(OracleOutcome { dict, value })
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of valid dictionaries: `sum_k binom(2^A - 1, k) * (2^V - 1)^k`.
pub fn count_valid_dicts(bounds: DictBounds) -> u128 {
    let addrs = bounds.max_address();
    let vals = bounds.max_value() as u128;
    (0..=bounds.capacity as u64)
        .map(|k| binomial(addrs, k) * vals.pow(k as u32))
        .sum()
}

/// Every valid dictionary, ordered by entry count, then addresses, then values.
pub fn enumerate_valid_dicts(bounds: DictBounds) -> Result<Vec<ClassicalDict>> {
    bounds.validate()?;
    if bounds.dict_qubits() > EXHAUSTION_LIMIT {
        return Err(Error::TooLarge(format!(
            "{bounds} needs {} dictionary qubits, exhaustive enumeration allows {EXHAUSTION_LIMIT}",
            bounds.dict_qubits()
        )));
    }
    let n_addr = bounds.max_address();
    let max_v = bounds.max_value();
    let mut out = Vec::new();
    for k in 0..=bounds.capacity.min(n_addr as usize) {
        let mut subset: Vec<u64> = (0..k as u64).collect();
        loop {
            let mut vals = vec![1u64; k];
            loop {
                let entries = subset.iter().copied().zip(vals.iter().copied());
                out.push(ClassicalDict::new(bounds, entries)?);
                // odometer over values, last slot fastest
                let Some(i) = (0..k).rev().find(|&i| vals[i] < max_v) else {
                    break;
                };
                vals[i] += 1;
                vals[i + 1..].iter_mut().for_each(|v| *v = 1);
            }
            // next k-subset in lexicographic order
            let Some(i) = (0..k).rev().find(|&i| subset[i] < n_addr - (k - i) as u64) else {
                break;
            };
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub dict: ClassicalDict,
    pub op: OpDescriptor,
    pub expected: OracleOutcome,
    /// Decoded final terms, or the error the circuit raised.
    pub got: Vec<String>,
    pub trace: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub kind: OpKind,
    pub bounds: DictBounds,
    pub mode: UncomputeMode,
    pub seed: RngSeed,
    /// Cases whose preconditions held and were run.
    pub cases: usize,
    /// Operand assignments skipped for violated preconditions.
    pub excluded: usize,
    pub failures: Vec<Failure>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

struct Run {
    sim: Simulator,
    dict: QuantumDict,
    address: crate::sim::Register,
    aux: crate::sim::Register,
    result: Result<()>,
}

fn run_case(
    d: &ClassicalDict,
    op: &OpDescriptor,
    mode: UncomputeMode,
    seed: RngSeed,
    fault: Option<Fault>,
    trace: bool,
) -> Result<Run> {
    let b = d.bounds();
    let mut sim = Simulator::new(seed);
    let dict = QuantumDict::encode(d, &mut sim)?;
    let address = sim.alloc(b.address_bits, op.address)?;
    let aux = sim.alloc(b.value_bits, op.value)?;
    if trace {
        sim.enable_trace();
    }
    let mut opts = ExecOptions::new(mode).unchecked();
    opts.fault = fault;
    let result = dict::apply(&mut sim, op.kind, &dict, &address, &aux, opts);
    Ok(Run {
        sim,
        dict,
        address,
        aux,
        result,
    })
}

fn describe(run: &Run) -> Vec<String> {
    if let Err(e) = &run.result {
        return vec![format!("error: {e}")];
    }
    let mut lines: Vec<(u128, String)> = run
        .sim
        .terms()
        .iter()
        .map(|&(k, amp)| {
            let d = match run.dict.decode_key(k) {
                Ok(d) => d.to_string(),
                Err(e) => format!("<{e}>"),
            };
            let line = format!(
                "{d} address={} value={} amplitude={}",
                run.address.read(k),
                run.aux.read(k),
                amp
            );
            (k, line)
        })
        .collect();
    lines.sort_by_key(|(k, _)| *k);
    lines.into_iter().map(|(_, l)| l).collect()
}

fn matches(
    run: &Run,
    expected: &OracleOutcome,
    op: &OpDescriptor,
    mode: UncomputeMode,
) -> Result<bool> {
    if run.result.is_err() {
        return Ok(false);
    }
    let terms = run.sim.terms();
    if terms.len() != 1 {
        return Ok(false);
    }
    let (key, amp) = terms[0];
    if run.dict.decode_key(key).as_ref() != Ok(&expected.dict)
        || run.address.read(key) != op.address
        || run.aux.read(key) != expected.value
    {
        return Ok(false);
    }
    Ok(match mode {
        UncomputeMode::Clean => amp == Complex64::new(1.0, 0.0),
        UncomputeMode::MeasureFixup => {
            let mut want = Simulator::new(RngSeed(0));
            QuantumDict::encode(&expected.dict, &mut want)?;
            want.alloc(expected.dict.bounds().address_bits, op.address)?;
            want.alloc(expected.dict.bounds().value_bits, expected.value)?;
            fidelity(&want.snapshot(), &run.sim.snapshot())? >= 1.0 - 1e-12
        }
    })
}

/// Runs `kind` on every valid dictionary and every operand assignment whose
/// preconditions hold, comparing each result with [`oracle_apply`].
pub fn check_permutation(
    kind: OpKind,
    bounds: DictBounds,
    mode: UncomputeMode,
    seed: RngSeed,
    fault: Option<Fault>,
) -> Result<Report> {
    let dicts = enumerate_valid_dicts(bounds)?;
    let mut cases = Vec::new();
    let mut excluded = 0;
    for d in &dicts {
        for address in 0..=bounds.max_address() {
            for value in 0..=bounds.max_value() {
                let op = OpDescriptor {
                    kind,
                    address,
                    value,
                };
                match oracle_apply(&op, d) {
                    Ok(expected) => cases.push((d, op, expected)),
                    Err(_) => excluded += 1,
                }
            }
        }
    }
    let failures: Vec<Option<Failure>> = cases
        .par_iter()
        .enumerate()
        .map(|(i, (d, op, expected))| -> Result<Option<Failure>> {
            let case_seed = seed.derive(i as u64);
            let run = run_case(d, op, mode, case_seed, fault, false)?;
            if matches(&run, expected, op, mode)? {
                return Ok(None);
            }
            let mut traced = run_case(d, op, mode, case_seed, fault, true)?;
            let trace = traced
                .sim
                .take_trace()
                .iter()
                .map(|e| e.to_string())
                .collect();
            Ok(Some(Failure {
                dict: (*d).clone(),
                op: *op,
                expected: expected.clone(),
                got: describe(&run),
                trace,
            }))
        })
        .collect::<Result<_>>()?;
    Ok(Report {
        kind,
        bounds,
        mode,
        seed,
        cases: cases.len(),
        excluded,
        failures: failures.into_iter().flatten().collect(),
    })
}
