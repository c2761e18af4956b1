//! Toffoli and ancilla cost models, measured cost tables, and least-squares
//! fits of the measured counts.

use std::collections::BTreeMap;
use std::io;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arith::{cost, UncomputeMode};
use crate::dict::{self, ClassicalDict, DictBounds, ExecOptions, QuantumDict};
use crate::error::{Error, Result};
use crate::oracle::{self, OpDescriptor, OpKind};
use crate::sim::{RngSeed, Simulator, MAX_QUBITS};

/// Inputs with at most this many valid (dict, operand) cases are measured on
/// their uniform superposition; larger ones on random basis cases.
pub const SUPERPOSITION_LIMIT: usize = 16;

/// A group of measured uncomputations that each run a phase fixup of `cost`
/// Toffolis with probability one half.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixupClass {
    pub count: u64,
    pub cost: u64,
}

/// Predicted Toffoli count: a fixed part plus independent coin-flip fixups.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostPrediction {
    pub fixed: u64,
    pub fixups: Vec<FixupClass>,
}

impl CostPrediction {
    pub fn expected(&self) -> f64 {
        self.fixed as f64
            + self
                .fixups
                .iter()
                .map(|f| (f.count * f.cost) as f64 / 2.0)
                .sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        self.fixups
            .iter()
            .map(|f| f.count as f64 * (f.cost * f.cost) as f64 / 4.0)
            .sum()
    }

    pub fn min(&self) -> u64 {
        self.fixed
    }

    pub fn max(&self) -> u64 {
        self.fixed + self.fixups.iter().map(|f| f.count * f.cost).sum::<u64>()
    }

    fn add(&mut self, other: CostPrediction) {
        self.fixed += other.fixed;
        for f in other.fixups {
            match self.fixups.iter_mut().find(|g| g.cost == f.cost) {
                Some(g) => g.count += f.count,
                None => self.fixups.push(f),
            }
        }
    }
}

/// `c` loop iterations, each costing `body` plus the release of one computed
/// bit: a recompute costing `clean`, or a fixup costing `phase` that runs
/// half the time.
fn loop_cost(c: u64, body: u64, clean: u64, phase: u64, mode: UncomputeMode) -> CostPrediction {
    match mode {
        UncomputeMode::Clean => CostPrediction {
            fixed: c * (body + clean),
            fixups: vec![],
        },
        UncomputeMode::MeasureFixup => CostPrediction {
            fixed: c * body,
            fixups: if phase > 0 {
                vec![FixupClass {
                    count: c,
                    cost: phase,
                }]
            } else {
                vec![]
            },
        },
    }
}

fn extract_cost(b: DictBounds, mode: UncomputeMode) -> CostPrediction {
    let (c, a, v) = (b.capacity as u64, b.address_bits, b.value_bits);
    let body = cost::equals(a) + cost::controlled_swap(v) + cost::controlled_swap(a);
    let mut p = loop_cost(
        c,
        body,
        cost::greater_than(a),
        cost::greater_than_phase(a),
        mode,
    );
    p.fixed += tail_cost(b);
    p
}

fn inject_cost(b: DictBounds, mode: UncomputeMode) -> CostPrediction {
    let (c, a, v) = (b.capacity as u64, b.address_bits, b.value_bits);
    let body = cost::greater_than(a) + cost::controlled_swap(a) + cost::controlled_swap(v);
    let mut p = loop_cost(c, body, cost::equals(a), cost::equals_phase(a), mode);
    p.fixed += tail_cost(b);
    p
}

/// Setting or clearing the appended slot's address.
fn tail_cost(b: DictBounds) -> u64 {
    2 * cost::is_zero(b.value_bits) + b.address_bits as u64
}

/// Toffoli cost of `kind` on a dictionary with bounds `b`.
pub fn predict_cost(kind: OpKind, b: DictBounds, mode: UncomputeMode) -> CostPrediction {
    match kind {
        OpKind::Extract => extract_cost(b, mode),
        OpKind::Inject => inject_cost(b, mode),
        OpKind::SwapValue | OpKind::AddIntoDict | OpKind::AddIntoValue => {
            let mut p = extract_cost(b, mode);
            p.add(inject_cost(b, mode));
            if kind != OpKind::SwapValue {
                p.fixed += cost::add(b.value_bits);
            }
            p
        }
    }
}

/// Leading per-unit-capacity Toffoli coefficient: `3A + V` for a clean
/// extraction or injection, `2.5A + V` measured, and `5A + V` for the
/// read-modify-write operations.
pub fn leading_coefficient(kind: OpKind, a: usize, v: usize, mode: UncomputeMode) -> f64 {
    let (a, v) = (a as f64, v as f64);
    match (kind, mode) {
        (OpKind::Extract | OpKind::Inject, UncomputeMode::Clean) => 3.0 * a + v,
        (OpKind::Extract | OpKind::Inject, UncomputeMode::MeasureFixup) => 2.5 * a + v,
        (_, UncomputeMode::Clean) => 6.0 * a + v,
        (_, UncomputeMode::MeasureFixup) => 5.0 * a + v,
    }
}

/// Peak number of simultaneously live ancillas: the appended slot's address
/// plus the larger of the loop scratch (`A + 1`) and the emptiness test (`V`).
/// Read-modify-write operations also hold a `V`-qubit temporary.
pub fn predict_ancilla_high_water(kind: OpKind, b: DictBounds) -> usize {
    let (a, v) = (b.address_bits, b.value_bits);
    let core = a + (a + 1).max(v);
    match kind {
        OpKind::Extract | OpKind::Inject => core,
        _ => v + core,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostRecord {
    #[serde(rename = "C")]
    pub capacity: usize,
    #[serde(rename = "A")]
    pub address_bits: usize,
    #[serde(rename = "V")]
    pub value_bits: usize,
    pub mode: UncomputeMode,
    pub trials: usize,
    pub toffoli_mean: f64,
    pub toffoli_min: u64,
    pub toffoli_max: u64,
    /// Toffoli count with every measured fixup charged at weight one half.
    pub expected_analytic: f64,
    pub ancilla_high_water: usize,
    /// Seed given to [`measure_costs`]; each grid point derives its own.
    pub seed: u64,
}

impl CostRecord {
    pub fn bounds(&self) -> DictBounds {
        DictBounds {
            capacity: self.capacity,
            address_bits: self.address_bits,
            value_bits: self.value_bits,
        }
    }
}

pub fn write_csv<W: io::Write>(records: &[CostRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::Csv(e.to_string()))
}

pub fn read_csv<R: io::Read>(input: R) -> Result<Vec<CostRecord>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Every (dict, operand) assignment satisfying the preconditions of `kind`.
fn valid_cases(
    kind: OpKind,
    b: DictBounds,
    limit: usize,
) -> Option<Vec<(ClassicalDict, u64, u64)>> {
    if oracle::count_valid_dicts(b) * ((b.max_address() + 1) * (b.max_value() + 1)) as u128
        > (limit as u128) * 64
    {
        return None;
    }
    let mut out = Vec::new();
    for d in oracle::enumerate_valid_dicts(b).ok()? {
        for address in 0..=b.max_address() {
            for value in 0..=b.max_value() {
                let op = OpDescriptor {
                    kind,
                    address,
                    value,
                };
                if oracle::check_preconditions(&op, &d).is_ok() {
                    out.push((d.clone(), address, value));
                    if out.len() > limit {
                        return None;
                    }
                }
            }
        }
    }
    Some(out)
}

/// Draws a dictionary and operands satisfying the preconditions of `kind`.
pub fn random_case<R: Rng>(kind: OpKind, b: DictBounds, rng: &mut R) -> (ClassicalDict, u64, u64) {
    let n_addr = b.max_address();
    loop {
        let k = rng.random_range(0..=b.capacity.min(n_addr as usize));
        let addrs = sample(rng, n_addr as usize, k);
        let entries: Vec<(u64, u64)> = addrs
            .iter()
            .map(|a| (a as u64, rng.random_range(1..=b.max_value())))
            .collect();
        let d = ClassicalDict::new(b, entries).expect("sampled entries are valid");
        // bias toward present addresses so the swaps actually fire
        let address = if !d.is_empty() && rng.random_bool(0.5) {
            *d.entries()
                .keys()
                .nth(rng.random_range(0..d.len()))
                .unwrap()
        } else {
            rng.random_range(0..n_addr)
        };
        let value = if kind == OpKind::Extract {
            0
        } else {
            rng.random_range(0..=b.max_value())
        };
        let op = OpDescriptor {
            kind,
            address,
            value,
        };
        if oracle::check_preconditions(&op, &d).is_ok() {
            return (d, address, value);
        }
    }
}

fn qubits_needed(kind: OpKind, b: DictBounds) -> usize {
    b.dict_qubits() + b.address_bits + b.value_bits + predict_ancilla_high_water(kind, b)
}

/// Runs `kind` `trials` times at each grid point and tallies the Toffolis.
pub fn measure_costs(
    kind: OpKind,
    grid: &[DictBounds],
    mode: UncomputeMode,
    trials: usize,
    seed: RngSeed,
) -> Result<Vec<CostRecord>> {
    if trials == 0 {
        return Err(Error::InvalidBounds("trials must be at least 1".into()));
    }
    grid.iter()
        .enumerate()
        .map(|(gi, &b)| measure_point(kind, b, mode, trials, seed, seed.derive(gi as u64)))
        .collect()
}

struct Trial {
    toffoli: u64,
    expected_halves: u64,
    high_water: usize,
}

fn measure_point(
    kind: OpKind,
    b: DictBounds,
    mode: UncomputeMode,
    trials: usize,
    base_seed: RngSeed,
    seed: RngSeed,
) -> Result<CostRecord> {
    b.validate()?;
    let need = qubits_needed(kind, b);
    if need > MAX_QUBITS {
        return Err(Error::TooLarge(format!(
            "{kind} at {b} needs {need} qubits, the simulator holds {MAX_QUBITS}"
        )));
    }
    let superposed = valid_cases(kind, b, SUPERPOSITION_LIMIT);
    let results: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = seed.derive(t as u64);
            let mut sim = Simulator::new(trial_seed);
            let qd;
            let address;
            let aux;
            match &superposed {
                Some(cases) => {
                    qd = QuantumDict::encode(&ClassicalDict::empty(b), &mut sim)?;
                    address = sim.alloc(b.address_bits, 0)?;
                    aux = sim.alloc(b.value_bits, 0)?;
                    let amp = Complex64::new(1.0 / (cases.len() as f64).sqrt(), 0.0);
                    let rows: Vec<(Vec<u64>, Complex64)> = cases
                        .iter()
                        .map(|(d, a, v)| {
                            let mut row = QuantumDict::register_values(d);
                            row.extend([*a, *v]);
                            (row, amp)
                        })
                        .collect();
                    let mut regs = qd.registers();
                    regs.extend([&address, &aux]);
                    sim.prepare(&regs, &rows)?;
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed.derive(u64::MAX).0);
                    let (d, a, v) = random_case(kind, b, &mut rng);
                    qd = QuantumDict::encode(&d, &mut sim)?;
                    address = sim.alloc(b.address_bits, a)?;
                    aux = sim.alloc(b.value_bits, v)?;
                }
            }
            sim.reset_stats();
            dict::apply(
                &mut sim,
                kind,
                &qd,
                &address,
                &aux,
                ExecOptions::new(mode).unchecked(),
            )?;
            let s = sim.stats();
            Ok(Trial {
                toffoli: s.toffoli,
                expected_halves: s.expected_toffoli_halves,
                high_water: s.ancilla_high_water,
            })
        })
        .collect::<Result<_>>()?;

    let total: u64 = results.iter().map(|t| t.toffoli).sum();
    Ok(CostRecord {
        capacity: b.capacity,
        address_bits: b.address_bits,
        value_bits: b.value_bits,
        mode,
        trials,
        toffoli_mean: total as f64 / trials as f64,
        toffoli_min: results.iter().map(|t| t.toffoli).min().unwrap(),
        toffoli_max: results.iter().map(|t| t.toffoli).max().unwrap(),
        expected_analytic: results[0].expected_halves as f64 / 2.0,
        ancilla_high_water: results.iter().map(|t| t.high_water).max().unwrap(),
        seed: base_seed.0,
    })
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub residual_norm: f64,
}

/// Least-squares plane `z = coef_a * a + coef_v * v + constant`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneFit {
    pub coef_a: f64,
    pub coef_v: f64,
    pub constant: f64,
    pub residual_norm: f64,
}

fn least_squares(rows: Vec<Vec<f64>>, y: &[f64]) -> Option<(Vec<f64>, f64)> {
    let n = rows.len();
    let k = rows.first()?.len();
    let x = DMatrix::from_fn(n, k, |i, j| rows[i][j]);
    let yv = DVector::from_column_slice(y);
    let svd = x.clone().svd(true, true);
    if svd.rank(1e-9) < k {
        return None;
    }
    let beta = svd.solve(&yv, 1e-12).ok()?;
    let residual = (&x * &beta - &yv).norm();
    Some((beta.iter().copied().collect(), residual))
}

pub fn fit_line(points: &[(f64, f64)]) -> Option<LineFit> {
    let rows = points.iter().map(|&(x, _)| vec![x, 1.0]).collect();
    let y: Vec<f64> = points.iter().map(|&(_, y)| y).collect();
    let (b, r) = least_squares(rows, &y)?;
    Some(LineFit {
        slope: b[0],
        intercept: b[1],
        residual_norm: r,
    })
}

/// Needs at least three points not on one line in the (a, v) plane.
pub fn fit_plane(points: &[(f64, f64, f64)]) -> Option<PlaneFit> {
    let rows = points.iter().map(|&(a, v, _)| vec![a, v, 1.0]).collect();
    let z: Vec<f64> = points.iter().map(|&(_, _, z)| z).collect();
    let (b, r) = least_squares(rows, &z)?;
    Some(PlaneFit {
        coef_a: b[0],
        coef_v: b[1],
        constant: b[2],
        residual_norm: r,
    })
}

/// Fit of cost against capacity at one (A, V).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFit {
    pub address_bits: usize,
    pub value_bits: usize,
    pub capacities: Vec<usize>,
    /// Fit of the sampled mean count.
    pub mean: LineFit,
    /// Fit of the half-weight expectation.
    pub analytic: LineFit,
    /// Reference per-capacity coefficient from [`leading_coefficient`].
    pub leading: f64,
    /// `analytic.slope - leading`.
    pub remainder: f64,
    /// `(mean.slope - leading) / leading`.
    pub relative_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub kind: OpKind,
    pub mode: UncomputeMode,
    pub groups: Vec<GroupFit>,
    /// Per-capacity slope as a plane in A and V, when the groups span one.
    pub slope_plane: Option<PlaneFit>,
    /// Whether `remainder` is the same constant in every group.
    pub remainder_constant: bool,
}

/// Fits cost against capacity for each (A, V) in `records`.
pub fn fit_coefficients(kind: OpKind, records: &[CostRecord]) -> Result<FitResult> {
    let Some(first) = records.first() else {
        return Err(Error::InsufficientGrid("no records".into()));
    };
    let mode = first.mode;
    if records.iter().any(|r| r.mode != mode) {
        return Err(Error::InsufficientGrid(
            "records mix uncompute modes".into(),
        ));
    }
    let mut by_av: BTreeMap<(usize, usize), Vec<&CostRecord>> = BTreeMap::new();
    for r in records {
        by_av
            .entry((r.address_bits, r.value_bits))
            .or_default()
            .push(r);
    }
    let mut groups = Vec::new();
    for ((a, v), mut rs) in by_av {
        rs.sort_by_key(|r| r.capacity);
        rs.dedup_by_key(|r| r.capacity);
        if rs.len() < 3 {
            return Err(Error::InsufficientGrid(format!(
                "A={a} V={v} has {} distinct capacities, need 3",
                rs.len()
            )));
        }
        let mean = fit_line(
            &rs.iter()
                .map(|r| (r.capacity as f64, r.toffoli_mean))
                .collect::<Vec<_>>(),
        )
        .expect("three distinct capacities");
        let analytic = fit_line(
            &rs.iter()
                .map(|r| (r.capacity as f64, r.expected_analytic))
                .collect::<Vec<_>>(),
        )
        .expect("three distinct capacities");
        let leading = leading_coefficient(kind, a, v, mode);
        groups.push(GroupFit {
            address_bits: a,
            value_bits: v,
            capacities: rs.iter().map(|r| r.capacity).collect(),
            mean,
            analytic,
            leading,
            remainder: analytic.slope - leading,
            relative_deviation: (mean.slope - leading) / leading,
        });
    }
    let slope_plane = fit_plane(
        &groups
            .iter()
            .map(|g| (g.address_bits as f64, g.value_bits as f64, g.analytic.slope))
            .collect::<Vec<_>>(),
    );
    let r0 = groups[0].remainder;
    let remainder_constant = groups.iter().all(|g| (g.remainder - r0).abs() < 1e-9);
    Ok(FitResult {
        kind,
        mode,
        groups,
        slope_plane,
        remainder_constant,
    })
}
