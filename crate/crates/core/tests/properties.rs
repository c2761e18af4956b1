use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use qdict::arith::{self, UncomputeMode};
use qdict::dict::{self, ClassicalDict, DictBounds, ExecOptions, QuantumDict};
use qdict::oracle::{self, OpDescriptor, OpKind};
use qdict::resources;
use qdict::sim::{fidelity, RngSeed, Simulator};

fn bounds_strategy() -> impl Strategy<Value = DictBounds> {
    (1usize..=4, 2usize..=4, 1usize..=3).prop_map(|(c, a, v)| DictBounds::new(c, a, v).unwrap())
}

fn mode_strategy() -> impl Strategy<Value = UncomputeMode> {
    prop_oneof![
        Just(UncomputeMode::Clean),
        Just(UncomputeMode::MeasureFixup)
    ]
}

fn kind_strategy() -> impl Strategy<Value = OpKind> {
    proptest::sample::select(OpKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn ops_match_oracle(b in bounds_strategy(), kind in kind_strategy(), mode in mode_strategy(), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, address, value) = resources::random_case(kind, b, &mut rng);
        let op = OpDescriptor { kind, address, value };
        let expected = oracle::oracle_apply(&op, &d).unwrap();

        let mut sim = Simulator::new(RngSeed(seed));
        let qd = QuantumDict::encode(&d, &mut sim).unwrap();
        let a = sim.alloc(b.address_bits, address).unwrap();
        let v = sim.alloc(b.value_bits, value).unwrap();
        dict::apply(&mut sim, kind, &qd, &a, &v, ExecOptions::new(mode)).unwrap();

        prop_assert_eq!(sim.term_count(), 1);
        prop_assert_eq!(sim.live_ancillas(), 0);
        let (key, amp) = sim.terms()[0];
        prop_assert_eq!(qd.decode_key(key), Ok(expected.dict));
        prop_assert_eq!(a.read(key), address);
        prop_assert_eq!(v.read(key), expected.value);
        prop_assert!((amp.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn oracle_outputs_stay_valid(b in bounds_strategy(), kind in kind_strategy(), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, address, value) = resources::random_case(kind, b, &mut rng);
        let out = oracle::oracle_apply(&OpDescriptor { kind, address, value }, &d).unwrap();
        let rebuilt = ClassicalDict::new(b, out.dict.entries().iter().map(|(&a, &v)| (a, v)));
        prop_assert_eq!(rebuilt, Ok(out.dict));
        prop_assert!(out.value <= b.max_value());
    }

    #[test]
    fn extract_then_inject_restores_state(b in bounds_strategy(), mode in mode_strategy(), seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (d, address, _) = resources::random_case(OpKind::Extract, b, &mut rng);
        let mut sim = Simulator::new(RngSeed(seed));
        let qd = QuantumDict::encode(&d, &mut sim).unwrap();
        let a = sim.alloc(b.address_bits, address).unwrap();
        let v = sim.alloc(b.value_bits, 0).unwrap();
        let before = sim.snapshot();
        let opts = ExecOptions::new(mode);
        dict::extract(&mut sim, &qd, &a, &v, opts).unwrap();
        dict::inject(&mut sim, &qd, &a, &v, opts).unwrap();
        prop_assert!(fidelity(&before, &sim.snapshot()).unwrap() >= 1.0 - 1e-12);
    }

    #[test]
    fn clean_toffoli_count_is_input_independent(b in bounds_strategy(), kind in kind_strategy(), s1: u64, s2: u64) {
        let count = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (d, address, value) = resources::random_case(kind, b, &mut rng);
            let mut sim = Simulator::new(RngSeed(seed));
            let qd = QuantumDict::encode(&d, &mut sim).unwrap();
            let a = sim.alloc(b.address_bits, address).unwrap();
            let v = sim.alloc(b.value_bits, value).unwrap();
            dict::apply(&mut sim, kind, &qd, &a, &v, ExecOptions::new(UncomputeMode::Clean)).unwrap();
            sim.stats().toffoli
        };
        let n = count(s1);
        prop_assert_eq!(n, count(s2));
        prop_assert_eq!(n as f64, resources::predict_cost(kind, b, UncomputeMode::Clean).expected());
    }

    #[test]
    fn adder_and_comparator_on_random_widths(w in 1usize..=12, x: u64, y: u64) {
        let m = (1u64 << w) - 1;
        let (x, y) = (x & m, y & m);
        let mut sim = Simulator::new(RngSeed(0));
        let a = sim.alloc(w, x).unwrap();
        let b = sim.alloc(w, y).unwrap();
        let t = sim.alloc(1, 0).unwrap();
        arith::compare_gt_bit(&mut sim, &a, &b, t.qubit(0)).unwrap();
        arith::add_into(&mut sim, &a, &b).unwrap();
        let key = sim.terms()[0].0;
        prop_assert_eq!(t.read(key), (x > y) as u64);
        prop_assert_eq!(b.read(key), (x + y) & m);
        prop_assert_eq!(a.read(key), x);
        prop_assert_eq!(sim.live_ancillas(), 0);
    }
}

#[test]
fn every_operation_passes_exhaustive_check() {
    for kind in OpKind::ALL {
        for b in [(1, 2, 1), (2, 2, 1), (1, 3, 2), (2, 2, 2), (3, 2, 1)] {
            let b = DictBounds::new(b.0, b.1, b.2).unwrap();
            for mode in [UncomputeMode::Clean, UncomputeMode::MeasureFixup] {
                let r = oracle::check_permutation(kind, b, mode, RngSeed(17), None).unwrap();
                assert!(r.cases > 0);
                assert!(r.passed(), "{kind} {b} {mode}: {:?}", r.failures.first());
            }
        }
    }
}

#[test]
fn address_fault_is_detected() {
    let b = DictBounds::new(2, 2, 1).unwrap();
    let r = oracle::check_permutation(
        OpKind::Extract,
        b,
        UncomputeMode::Clean,
        RngSeed(0),
        Some(dict::Fault::SkipAddressSwap { iteration: 1 }),
    )
    .unwrap();
    assert!(!r.passed());
}
