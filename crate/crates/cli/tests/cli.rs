use std::process::{Command, Output};

const DICT: &str = r#"{"capacity":3,"address_bits":3,"value_bits":2,"entries":{"2":3,"5":1}}"#;
const FULL: &str = r#"{"capacity":1,"address_bits":3,"value_bits":2,"entries":{"5":1}}"#;
const TINY: &str = r#"{"capacity":1,"address_bits":1,"value_bits":1}"#;

fn qdict(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qdict"))
        .args(args)
        .env_remove("QDICT_SEED")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn simulate_extract_present() {
    let o = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        DICT,
        "--address",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(
        out.contains("dict {2: 3}  address 5  output 1  amplitude 1.000000"),
        "{out}"
    );
}

#[test]
fn simulate_extract_absent() {
    let o = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        DICT,
        "--address",
        "4",
        "--mode",
        "measure",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dict {2: 3, 5: 1}  address 4  output 0"));
}

#[test]
fn simulate_json() {
    let o = qdict(&[
        "simulate",
        "--op",
        "swap_value",
        "--dict",
        DICT,
        "--address",
        "2",
        "--value",
        "1",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["terms"][0]["value"], 3);
    assert_eq!(v["terms"][0]["dict"]["entries"]["2"], 1);
    assert_eq!(v["terms"][0]["amplitude"][0], 1.0);
}

#[test]
fn dictionary_from_file() {
    let path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("dict.json");
    std::fs::write(&path, DICT).unwrap();
    let o = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        path.to_str().unwrap(),
        "--address",
        "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("dict {5: 1}  address 2  output 3"));
}

#[test]
fn precondition_violation_exits_2() {
    let o = qdict(&[
        "simulate",
        "--op",
        "inject",
        "--dict",
        FULL,
        "--address",
        "2",
        "--value",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("Requires: HasSpace(dict) or value == 0"),
        "{}",
        stderr(&o)
    );

    let o = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        DICT,
        "--address",
        "5",
        "--value",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn malformed_input_exits_1_naming_field() {
    let bad = r#"{"capacity":3,"address_bits":3,"value_bits":2,"entries":{"2":0}}"#;
    let o = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        bad,
        "--address",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("entries.2"), "{}", stderr(&o));

    let o = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        r#"{"address_bits":3}"#,
        "--address",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("capacity"), "{}", stderr(&o));

    let o = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        DICT,
        "--address",
        "9",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`address`"));

    let o = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        "/nonexistent/dict.json",
        "--address",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn verify_passes() {
    let o = qdict(&["verify", "--max-qubits", "12"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains(" 0 failures"));
}

#[test]
fn verify_over_seeds_json() {
    let o = qdict(&[
        "verify",
        "--max-qubits",
        "9",
        "--mode",
        "measure",
        "--seeds",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["failures"], 0);
    assert!(v["cases"].as_u64().unwrap() > 0);
}

#[test]
fn verify_with_fault_exits_3() {
    let o = qdict(&[
        "verify",
        "--max-qubits",
        "9",
        "--ops",
        "extract",
        "--fault",
        "skip-address-swap:0",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["failures"].as_u64().unwrap() > 0);
    let failure = v["reports"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|r| r["failures"].as_array().unwrap())
        .next()
        .unwrap();
    assert!(!failure["trace"].as_array().unwrap().is_empty());
}

#[test]
fn estimate_clean_per_capacity_difference() {
    let o = qdict(&[
        "estimate", "--op", "extract", "--C", "1..4", "--A", "4", "--V", "3", "--mode", "clean",
        "--trials", "2",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    let mut lines = out.lines();
    assert_eq!(
        lines.next().unwrap(),
        "C,A,V,mode,trials,toffoli_mean,toffoli_min,toffoli_max,expected_analytic,ancilla_high_water,seed"
    );
    let counts: Vec<u64> = lines
        .take(4)
        .map(|l| l.split(',').nth(6).unwrap().parse().unwrap())
        .collect();
    let diffs: Vec<u64> = counts.windows(2).map(|w| w[1] - w[0]).collect();
    // 3A + V per unit capacity, less the one Toffoli the equality test saves
    assert_eq!(diffs, vec![14, 14, 14]);
}

#[test]
fn estimate_fit_and_json() {
    let o = qdict(&[
        "estimate",
        "--op",
        "add_into_dict",
        "--C",
        "1..3",
        "--A",
        "3",
        "--V",
        "2",
        "--trials",
        "50",
        "--fit",
        "--format",
        "json",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["records"].as_array().unwrap().len(), 3);
    assert_eq!(v["fit"]["groups"][0]["leading"], 17.0);
}

#[test]
fn estimate_errors_exit_1() {
    let o = qdict(&["estimate", "--C", "1..2", "--A", "3", "--V", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let o = qdict(&["estimate", "--C", "1..2", "--A", "3", "--V", "2", "--fit"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("need 3"));
    let o = qdict(&[
        "estimate", "--C", "8", "--A", "12", "--V", "12", "--trials", "1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("too large"));
}

fn toffoli_lines(out: &str) -> usize {
    out.lines()
        .filter(|l| l.starts_with("GATE TOFFOLI"))
        .count()
}

#[test]
fn trace_matches_gate_stats() {
    let o = qdict(&["trace", "--op", "extract", "--dict", TINY, "--address", "0"]);
    assert_eq!(o.status.code(), Some(0));
    let trace = stdout(&o);
    let sim = qdict(&[
        "simulate",
        "--op",
        "extract",
        "--dict",
        TINY,
        "--address",
        "0",
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&sim.stdout).unwrap();
    assert_eq!(
        toffoli_lines(&trace) as u64,
        v["stats"]["toffoli"].as_u64().unwrap()
    );
    assert!(trace
        .lines()
        .all(|l| l.starts_with("GATE ") || l.starts_with("XMEAS ")));
}

#[test]
fn clean_trace_is_input_independent() {
    let one = r#"{"capacity":2,"address_bits":2,"value_bits":1,"entries":{"1":1}}"#;
    let empty = r#"{"capacity":2,"address_bits":2,"value_bits":1}"#;
    let a = stdout(&qdict(&[
        "trace",
        "--op",
        "extract",
        "--dict",
        one,
        "--address",
        "1",
    ]));
    let b = stdout(&qdict(&[
        "trace",
        "--op",
        "extract",
        "--dict",
        empty,
        "--address",
        "0",
    ]));
    // gate lines agree exactly; CZ lines are measurement-conditioned fixups
    let gates = |s: &str| -> Vec<String> {
        s.lines()
            .filter(|l| l.starts_with("GATE ") && !l.starts_with("GATE CZ"))
            .map(String::from)
            .collect()
    };
    assert_eq!(gates(&a), gates(&b));
}

#[test]
fn inject_trace_mirrors_extract() {
    let d = r#"{"capacity":2,"address_bits":2,"value_bits":1}"#;
    let ex = stdout(&qdict(&[
        "trace",
        "--op",
        "extract",
        "--dict",
        d,
        "--address",
        "1",
    ]));
    let inj = stdout(&qdict(&[
        "trace",
        "--op",
        "inject",
        "--dict",
        d,
        "--address",
        "1",
        "--value",
        "1",
    ]));
    assert_eq!(toffoli_lines(&ex), toffoli_lines(&inj));
}

#[test]
fn output_is_deterministic_and_seeded() {
    let args = [
        "estimate", "--C", "1..3", "--A", "3", "--V", "2", "--trials", "20",
    ];
    let a = qdict(&args);
    let b = qdict(&args);
    assert_eq!(a.stdout, b.stdout);

    let c = Command::new(env!("CARGO_BIN_EXE_qdict"))
        .args(args)
        .env("QDICT_SEED", "99")
        .output()
        .unwrap();
    let out = stdout(&c);
    assert!(out.lines().nth(1).unwrap().ends_with(",99"));
    assert!(stdout(&a).lines().nth(1).unwrap().ends_with(",1729"));
}
