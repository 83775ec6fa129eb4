use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stateprep::formats::*;
use stateprep_core::compile::StaircaseCircuit;
use stateprep_core::linalg::{max_abs_diff, CMat, C64};
use stateprep_core::mps::Mps;
use stateprep_core::rotations::circuit_to_rotations;
use stateprep_core::synthesis::{CliffordTCircuit, CtOp, Gate1};

fn random_mps(n: usize, max_bond: usize, rng: &mut ChaCha8Rng) -> Mps {
    let mut left = 1;
    let tensors = (0..n)
        .map(|k| {
            let right = if k + 1 == n { 1 } else { rng.random_range(1..=max_bond) };
            let mut m = || CMat::from_fn(left, right, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() * 1e-7));
            let t = [m(), m()];
            left = right;
            t
        })
        .collect();
    Mps { tensors, center: None }
}

fn parse_err_line<T: std::fmt::Debug>(r: Result<T, FormatError>) -> usize {
    match r {
        Err(FormatError::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mps_round_trips(seed in 0u64..1000, n in 1usize..7) {
        let s = random_mps(n, 5, &mut ChaCha8Rng::seed_from_u64(seed));
        let back = parse_mps(&write_mps(&s)).unwrap();
        prop_assert_eq!(back.n_sites(), n);
        for (a, b) in s.tensors.iter().zip(&back.tensors) {
            for p in 0..2 {
                prop_assert_eq!(a[p].shape(), b[p].shape());
                prop_assert!(max_abs_diff(&a[p], &b[p]) <= 1e-14);
            }
        }
        prop_assert_eq!(write_mps(&back), write_mps(&s));
    }

    #[test]
    fn staircase_circuits_round_trip(seed in 0u64..1000, n in 2usize..7, layers in 0usize..4, c in 0usize..5) {
        let center = c % (n - 1);
        let circ = StaircaseCircuit::random(n, center, layers, seed).unwrap();
        let back = parse_su4(&write_su4(&circ)).unwrap();
        prop_assert_eq!(back.center_bond, if layers == 0 { (n - 2) / 2 } else { center });
        prop_assert_eq!(back.layers.len(), layers);
        for (la, lb) in circ.layers.iter().zip(&back.layers) {
            for (ga, gb) in la.iter().zip(lb) {
                prop_assert_eq!(ga.0, gb.0);
                prop_assert!(max_abs_diff(&ga.1, &gb.1) <= 1e-14);
            }
        }
    }

    #[test]
    fn rotation_circuits_round_trip(seed in 0u64..1000, n in 2usize..6) {
        let circ = StaircaseCircuit::random(n, (n - 1) / 2, 2, seed).unwrap();
        let (r, _) = circuit_to_rotations(&circ, seed % 2 == 0).unwrap();
        let back = parse_rotations(&write_rotations(&r)).unwrap();
        prop_assert_eq!(back.n_qubits, r.n_qubits);
        prop_assert_eq!(back.ops.len(), r.ops.len());
        prop_assert!(max_abs_diff(&back.to_dense(), &r.to_dense()) <= 1e-12);
        prop_assert_eq!(back, r);
    }

    #[test]
    fn clifford_t_circuits_round_trip(seed in 0u64..1000, n in 1usize..6, len in 0usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gates = [Gate1::H, Gate1::S, Gate1::Sdg, Gate1::T, Gate1::Tdg, Gate1::X, Gate1::Z];
        let ops = (0..len)
            .map(|_| {
                let q = rng.random_range(0..n);
                if n > 1 && rng.random_bool(0.2) {
                    let b = (q + rng.random_range(1..n)) % n;
                    CtOp::Cx(q, b)
                } else {
                    CtOp::Single(gates[rng.random_range(0..gates.len())], q)
                }
            })
            .collect();
        let c = CliffordTCircuit { n_qubits: n, ops };
        prop_assert_eq!(parse_clifford_t(&write_clifford_t(&c)).unwrap(), c);
    }
}

#[test]
fn clifford_t_text_layout() {
    let c = CliffordTCircuit {
        n_qubits: 2,
        ops: vec![CtOp::Single(Gate1::H, 0), CtOp::Single(Gate1::T, 1), CtOp::Cx(0, 1), CtOp::Single(Gate1::Sdg, 1)],
    };
    assert_eq!(write_clifford_t(&c), "CTQ1 2 1\nH 0\nT 1\nCX 0 1\nSDG 1\n");
}

#[test]
fn malformed_files_report_the_line() {
    assert_eq!(parse_err_line(parse_clifford_t("CTQ1 2 0\nH 0\n\nFOO 1\n")), 4);
    assert_eq!(parse_err_line(parse_clifford_t("CTQ1 2 0\nH 5\n")), 2);
    assert_eq!(parse_err_line(parse_clifford_t("CTQ1 1 2\nT 0\n")), 1);
    assert_eq!(parse_err_line(parse_mps("MPS1 1\nT 1 3 1\n")), 2);
    assert_eq!(parse_err_line(parse_mps("MPS1 2\nT 1 2 2\n1 0\n0 0\n0 0\n0 0\nT 1 2 1\n")), 7);
    assert_eq!(parse_err_line(parse_mps("MPS1 1\nT 1 2 1\n1 0\nx 0\n")), 4);
    assert_eq!(parse_err_line(parse_rotations("ROTC1 2\nH 0\nRY 1 0.5\nPHASE 1 0\n")), 3);
    assert_eq!(parse_err_line(parse_rotations("ROTC1 2\nH 0\n")), 2);
    assert!(parse_mps("").is_err());
    assert!(parse_su4("SU4C1 3 1\nG 0 0 1\n").is_err());
}

#[test]
fn staircase_files_must_follow_the_layer_order() {
    let c = StaircaseCircuit::random(4, 1, 1, 3).unwrap();
    let text = write_su4(&c);
    // swap the two arms of the layer
    let blocks: Vec<&str> = text.split("G ").collect();
    let swapped = format!("{}G {}G {}G {}", blocks[0], blocks[1], blocks[3], blocks[2]);
    assert!(parse_su4(&swapped).is_err());
    assert!(parse_su4(&text).is_ok());
}
