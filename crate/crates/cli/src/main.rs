use std::fmt;
use std::io::{self, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use qdict::dict::{self, ClassicalDict, DictBounds, ExecOptions, Fault, QuantumDict};
use qdict::oracle::{self, OpKind, Report};
use qdict::resources::{self, CostRecord};
use qdict::sim::{RngSeed, Simulator};
use qdict::{Error, UncomputeMode};

/// Seed used when neither `--seed` nor `QDICT_SEED` is given.
const DEFAULT_SEED: u64 = 1729;

#[derive(Parser)]
#[command(
    name = "qdict",
    version,
    about = "Simulate, verify and cost quantum dictionary circuits"
)]
struct Cli {
    /// Seed for measurement outcomes and sampled inputs.
    #[arg(long, global = true, env = "QDICT_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one operation on a literal dictionary and print the final state.
    Simulate(OpArgs),
    /// Check every operation against the classical oracle on all small dictionaries.
    Verify(VerifyArgs),
    /// Tabulate Toffoli counts over a grid of bounds.
    Estimate(EstimateArgs),
    /// Print the gate log of one operation.
    Trace(OpArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Clean,
    Measure,
}

impl From<ModeArg> for UncomputeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Clean => UncomputeMode::Clean,
            ModeArg::Measure => UncomputeMode::MeasureFixup,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct OpArgs {
    /// extract, inject, swap_value, add_into_dict or add_into_value.
    #[arg(long)]
    op: OpKind,
    /// Dictionary literal: inline JSON or a path to a JSON file.
    #[arg(long)]
    dict: String,
    #[arg(long)]
    address: u64,
    /// Initial output (extract) or value register.
    #[arg(long, default_value_t = 0)]
    value: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Clean)]
    mode: ModeArg,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest C*(A+V) + A + V to sweep.
    #[arg(long, default_value_t = 14)]
    max_qubits: usize,
    /// Operations to check; all of them by default.
    #[arg(long, value_delimiter = ',')]
    ops: Vec<OpKind>,
    /// Only check one uncompute mode.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Number of measurement seeds per case.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    /// Break the extraction circuit on purpose: skip-value-swap:K or skip-address-swap:K.
    #[arg(long)]
    fault: Option<FaultArg>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long, default_value = "extract")]
    op: OpKind,
    /// Capacities, as `N`, `LO..HI` or a comma list.
    #[arg(long = "C", default_value = "1..4")]
    capacity: Range,
    #[arg(long = "A", default_value = "4")]
    address_bits: Range,
    #[arg(long = "V", default_value = "3")]
    value_bits: Range,
    #[arg(long, value_enum, default_value_t = ModeArg::Measure)]
    mode: ModeArg,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Append per-capacity slope fits.
    #[arg(long)]
    fit: bool,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Clone)]
struct FaultArg(Fault);

impl std::str::FromStr for FaultArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, k) = s.split_once(':').unwrap_or((s, "0"));
        let iteration: usize = k.parse().map_err(|_| format!("bad iteration `{k}`"))?;
        match name {
            "skip-value-swap" => Ok(FaultArg(Fault::SkipValueSwap { iteration })),
            "skip-address-swap" => Ok(FaultArg(Fault::SkipAddressSwap { iteration })),
            _ => Err(format!("unknown fault `{name}`")),
        }
    }
}

#[derive(Clone)]
struct Range(Vec<usize>);

impl std::str::FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let num = |t: &str| {
            t.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad number `{t}`"))
        };
        let vals = if let Some((lo, hi)) = s.split_once("..") {
            let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
            if lo > hi {
                return Err(format!("empty range `{s}`"));
            }
            (lo..=hi).collect()
        } else {
            s.split(',').map(num).collect::<Result<Vec<_>, _>>()?
        };
        Ok(Range(vals))
    }
}

/// Exit status plus the message printed to stderr.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl fmt::Display) -> Self {
        Failure {
            code: 1,
            message: message.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Precondition(_) | Error::NonZeroOutput | Error::InvalidEncoding(_) => 2,
            _ => 1,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::input(e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let seed = RngSeed(cli.seed);
    let mut out = io::stdout().lock();
    let result = match &cli.command {
        Command::Simulate(a) => simulate(a, seed, &mut out),
        Command::Trace(a) => trace(a, seed, &mut out),
        Command::Verify(a) => verify(a, seed, &mut out),
        Command::Estimate(a) => estimate(a, seed, &mut out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = out.flush();
            if !f.message.is_empty() {
                eprintln!("error: {}", f.message);
            }
            ExitCode::from(f.code)
        }
    }
}

fn load_dict(arg: &str) -> Result<ClassicalDict, Failure> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        std::fs::read_to_string(Path::new(arg))
            .map_err(|e| Failure::input(format!("cannot read dictionary file `{arg}`: {e}")))?
    };
    ClassicalDict::from_json(&text).map_err(Failure::input)
}

struct Prepared {
    sim: Simulator,
    dict: QuantumDict,
    address: qdict::sim::Register,
    aux: qdict::sim::Register,
}

fn prepare(a: &OpArgs, seed: RngSeed) -> Result<Prepared, Failure> {
    let d = load_dict(&a.dict)?;
    let b = d.bounds();
    if a.address > b.max_address() {
        return Err(Failure::input(format!(
            "invalid `address`: {} does not fit in {} bits",
            a.address, b.address_bits
        )));
    }
    if a.value > b.max_value() {
        return Err(Failure::input(format!(
            "invalid `value`: {} does not fit in {} bits",
            a.value, b.value_bits
        )));
    }
    let mut sim = Simulator::new(seed);
    let dict = QuantumDict::encode(&d, &mut sim)?;
    let address = sim.alloc(b.address_bits, a.address)?;
    let aux = sim.alloc(b.value_bits, a.value)?;
    Ok(Prepared {
        sim,
        dict,
        address,
        aux,
    })
}

fn run(p: &mut Prepared, a: &OpArgs) -> CmdResult {
    dict::apply(
        &mut p.sim,
        a.op,
        &p.dict,
        &p.address,
        &p.aux,
        ExecOptions::new(a.mode.into()),
    )?;
    Ok(())
}

fn simulate(a: &OpArgs, seed: RngSeed, out: &mut impl Write) -> CmdResult {
    let mut p = prepare(a, seed)?;
    p.sim.reset_stats();
    run(&mut p, a)?;
    let mut terms: Vec<_> = p.sim.terms().to_vec();
    terms.sort_by_key(|&(k, _)| k);
    let aux_name = if a.op == OpKind::Extract {
        "output"
    } else {
        "value"
    };
    let stats = p.sim.stats();
    match a.format {
        Format::Json => {
            let rows: Vec<_> = terms
                .iter()
                .map(|&(k, amp)| {
                    let d = p.dict.decode_key(k);
                    json!({
                        "dict": d.as_ref().ok(),
                        "invalid": d.as_ref().err().map(|e| e.to_string()),
                        "address": p.address.read(k),
                        aux_name: p.aux.read(k),
                        "amplitude": [amp.re, amp.im],
                    })
                })
                .collect();
            let doc = json!({ "op": a.op, "mode": UncomputeMode::from(a.mode), "seed": seed.0, "terms": rows, "stats": stats });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
        }
        Format::Text | Format::Csv => {
            for &(k, amp) in &terms {
                let d = match p.dict.decode_key(k) {
                    Ok(d) => d.to_string(),
                    Err(e) => format!("<{e}>"),
                };
                writeln!(
                    out,
                    "dict {d}  address {}  {aux_name} {}  amplitude {}",
                    p.address.read(k),
                    p.aux.read(k),
                    format_amplitude(amp.re, amp.im)
                )?;
            }
            writeln!(
                out,
                "toffoli {}  expected_toffoli {}  cnot {}  cz {}  single_qubit {}  x_measurements {}  fixups {}  ancilla_high_water {}",
                stats.toffoli,
                stats.expected_toffoli(),
                stats.cnot,
                stats.cz,
                stats.single_qubit,
                stats.x_measurements,
                stats.fixups_applied,
                stats.ancilla_high_water
            )?;
        }
    }
    Ok(())
}

fn format_amplitude(re: f64, im: f64) -> String {
    // avoid printing -0.0
    let clean = |x: f64| if x.abs() < 5e-13 { 0.0 } else { x };
    let (re, im) = (clean(re), clean(im));
    if im == 0.0 {
        format!("{re:.6}")
    } else {
        format!("{re:.6}{im:+.6}i")
    }
}

fn trace(a: &OpArgs, seed: RngSeed, out: &mut impl Write) -> CmdResult {
    let mut p = prepare(a, seed)?;
    p.sim.enable_trace();
    run(&mut p, a)?;
    for e in p.sim.take_trace() {
        writeln!(out, "{e}")?;
    }
    Ok(())
}

fn verify(a: &VerifyArgs, seed: RngSeed, out: &mut impl Write) -> CmdResult {
    let ops = if a.ops.is_empty() {
        OpKind::ALL.to_vec()
    } else {
        a.ops.clone()
    };
    let modes: Vec<UncomputeMode> = match a.mode {
        Some(m) => vec![m.into()],
        None => vec![UncomputeMode::Clean, UncomputeMode::MeasureFixup],
    };
    let mut grid = Vec::new();
    for c in 1..=4 {
        for ab in 2..=4 {
            for vb in 1..=3 {
                let b = DictBounds::new(c, ab, vb)?;
                if b.dict_qubits() + ab + vb <= a.max_qubits
                    && b.dict_qubits() <= oracle::EXHAUSTION_LIMIT
                {
                    grid.push(b);
                }
            }
        }
    }
    if grid.is_empty() {
        return Err(Failure::input(format!(
            "no bounds fit in --max-qubits {}",
            a.max_qubits
        )));
    }
    let mut reports: Vec<Report> = Vec::new();
    for &kind in &ops {
        for &b in &grid {
            for &mode in &modes {
                for s in 0..a.seeds.max(1) {
                    let r = oracle::check_permutation(
                        kind,
                        b,
                        mode,
                        seed.derive(s),
                        a.fault.clone().map(|f| f.0),
                    )?;
                    reports.push(r);
                }
            }
        }
    }
    let cases: usize = reports.iter().map(|r| r.cases).sum();
    let failures: usize = reports.iter().map(|r| r.failures.len()).sum();
    match a.format {
        Format::Json => {
            let doc = json!({ "cases": cases, "failures": failures, "reports": reports });
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
        }
        Format::Text | Format::Csv => {
            for r in &reports {
                writeln!(
                    out,
                    "{:<14} {}  {:<7} seed {:<20}  {:>5} cases  {:>5} excluded  {} failures",
                    r.kind.name(),
                    r.bounds,
                    r.mode.to_string(),
                    r.seed.0,
                    r.cases,
                    r.excluded,
                    r.failures.len()
                )?;
                for f in r.failures.iter().take(3) {
                    writeln!(
                        out,
                        "  FAIL {} on {}: expected {} {}, got {}",
                        f.op,
                        f.dict,
                        f.expected.dict,
                        f.expected.value,
                        f.got.join(" | ")
                    )?;
                }
            }
            writeln!(out, "total: {cases} cases, {failures} failures")?;
        }
    }
    if failures > 0 {
        return Err(Failure {
            code: 3,
            message: format!("{failures} cases disagree with the oracle"),
        });
    }
    Ok(())
}

fn estimate(a: &EstimateArgs, seed: RngSeed, out: &mut impl Write) -> CmdResult {
    let mut grid = Vec::new();
    for &ab in &a.address_bits.0 {
        for &vb in &a.value_bits.0 {
            for &c in &a.capacity.0 {
                grid.push(DictBounds::new(c, ab, vb).map_err(Failure::input)?);
            }
        }
    }
    let mode: UncomputeMode = a.mode.into();
    let records: Vec<CostRecord> =
        resources::measure_costs(a.op, &grid, mode, a.trials, seed).map_err(Failure::input)?;
    let fit = if a.fit {
        Some(resources::fit_coefficients(a.op, &records).map_err(Failure::input)?)
    } else {
        None
    };
    match a.format {
        Format::Json => {
            let doc = match &fit {
                Some(f) => json!({ "records": records, "fit": f }),
                None => json!(records),
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&doc).expect("json"))?;
        }
        Format::Csv | Format::Text => {
            resources::write_csv(&records, &mut *out)?;
            if let Some(f) = fit {
                writeln!(out)?;
                writeln!(out, "A,V,mode,capacities,slope_mean,slope_expected,leading,remainder,relative_deviation,residual")?;
                for g in &f.groups {
                    let caps: Vec<String> = g.capacities.iter().map(|c| c.to_string()).collect();
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{:.6},{:.3e}",
                        g.address_bits,
                        g.value_bits,
                        f.mode,
                        caps.join(" "),
                        g.mean.slope,
                        g.analytic.slope,
                        g.leading,
                        g.remainder,
                        g.relative_deviation,
                        g.mean.residual_norm
                    )?;
                }
            }
        }
    }
    Ok(())
}
