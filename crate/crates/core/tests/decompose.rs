use std::f64::consts::{FRAC_PI_4, PI};

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use stateprep_core::compile::StaircaseCircuit;
use stateprep_core::kak::*;
use stateprep_core::linalg::{self, gates, random_unitary, CMat, C64};
use stateprep_core::rotations::*;

fn circuit_unitary(c: &StaircaseCircuit) -> CMat {
    let n = c.n_qubits;
    let mut u = linalg::identity(1 << n);
    for layer in &c.layers {
        for ((i, _), g) in layer {
            let full = linalg::identity(1 << i).kronecker(g).kronecker(&linalg::identity(1 << (n - i - 2)));
            u = full * u;
        }
    }
    u
}

// Local-equivalence invariants of a two-qubit gate: G1 and G2 from the
// symmetric matrix in the Bell basis.
fn makhlin(u: &CMat) -> (C64, f64) {
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let i = C64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
    let z = C64::new(0.0, 0.0);
    let q = linalg::from_rows(4, &[r, z, z, i, z, i, r, z, z, i, -r, z, r, z, z, -i]);
    let ub = q.adjoint() * u * &q;
    let m = ub.transpose() * &ub;
    let det = u.determinant();
    let tr = m.trace();
    let g1 = tr * tr / (det * 16.0);
    let g2 = (tr * tr - (&m * &m).trace()) / (det * 4.0);
    (g1, g2.re)
}

fn in_chamber((a, b, c): (f64, f64, f64)) -> bool {
    FRAC_PI_4 + 1e-12 >= a && a >= b - 1e-12 && b >= c.abs() - 1e-12
}

#[test]
fn thousand_random_gates_reconstruct() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let u = random_unitary(4, &mut rng);
        let k = kak_decompose(&u).unwrap();
        worst = worst.max(linalg::phase_optimal_operator_distance(&k.reconstruct(), &u));
        assert!(in_chamber(k.canonical_angles), "{:?}", k.canonical_angles);
        for m in [&k.pre_a, &k.pre_b, &k.post_a, &k.post_b] {
            assert!(linalg::is_unitary(m, 1e-10));
        }
        // same nonlocal content as the canonical core
        let (a, b, c) = k.canonical_angles;
        let (g1, g2) = makhlin(&u);
        let (h1, h2) = makhlin(&canonical_gate(a, b, c));
        assert!((g1 - h1).norm() < 1e-8 && (g2 - h2).abs() < 1e-8);
    }
    assert!(worst < 1e-9, "{worst}");
}

#[test]
fn swap_sits_at_the_chamber_corner() {
    let k = kak_decompose(&gates::swap()).unwrap();
    let (a, b, c) = k.canonical_angles;
    assert!((a - FRAC_PI_4).abs() < 1e-10 && (b - FRAC_PI_4).abs() < 1e-10 && (c - FRAC_PI_4).abs() < 1e-10);
    // magic-basis spectrum of SWAP vs the corner gate
    let corner = canonical_gate(FRAC_PI_4, FRAC_PI_4, FRAC_PI_4);
    let phase = (corner.adjoint() * gates::swap()).trace() / 4.0;
    assert!((phase.norm() - 1.0).abs() < 1e-12);
    assert!(linalg::max_abs_diff(&(corner * phase), &gates::swap()) < 1e-12);
}

#[test]
fn clifford_and_degenerate_gates_decompose() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_unitary(2, &mut rng);
    let b = random_unitary(2, &mut rng);
    let cases = [
        gates::cx(),
        gates::cz(),
        gates::swap(),
        linalg::identity(4),
        linalg::kron(&a, &b),
        gates::cx() * gates::swap(),
        canonical_gate(0.3, 0.3, 0.0),
        canonical_gate(FRAC_PI_4, 0.2, -0.2),
    ];
    for u in cases {
        let k = kak_decompose(&u).unwrap();
        assert!(linalg::phase_optimal_operator_distance(&k.reconstruct(), &u) < 1e-9);
        assert!(in_chamber(k.canonical_angles), "{:?}", k.canonical_angles);
    }
    let k = kak_decompose(&gates::cx()).unwrap();
    let (x, y, z) = k.canonical_angles;
    assert!((x - FRAC_PI_4).abs() < 1e-10 && y.abs() < 1e-10 && z.abs() < 1e-10);
}

#[test]
fn non_unitary_is_rejected() {
    let m = linalg::identity(4) * C64::new(1.1, 0.0);
    assert!(matches!(kak_decompose(&m), Err(KakError::NonUnitary(..))));
}

#[test]
fn zyz_reconstructs_random_gates() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..500 {
        let u = random_unitary(2, &mut rng);
        let (a, b, g, ph) = zyz(&u);
        assert!((0.0..=PI).contains(&b));
        assert!(a > -PI && a <= PI && g > -PI && g <= PI);
        assert!(linalg::max_abs_diff(&zyz_matrix(a, b, g, ph), &u) < 1e-10);
    }
    // beta = pi puts everything in alpha
    let u = gates::x();
    let (a, b, g, ph) = zyz(&u);
    assert!((b - PI).abs() < 1e-14 && g == 0.0);
    assert!(linalg::max_abs_diff(&zyz_matrix(a, b, g, ph), &u) < 1e-12);
}

#[test]
fn single_gate_needs_at_most_fifteen_rotations() {
    let c = StaircaseCircuit::random(2, 0, 1, 3).unwrap();
    let (r, rep) = circuit_to_rotations(&c, false).unwrap();
    assert!(rep.rz_total <= 15);
    assert_eq!(rep.rz_per_gate, vec![rep.rz_total]);
    assert!(linalg::phase_optimal_operator_distance(&r.to_dense(), &circuit_unitary(&c)) < 1e-9);
    assert!(r.ops.iter().all(|o| match o {
        Op::Rz(_, t) => *t > -PI && *t <= PI,
        _ => true,
    }));
}

#[test]
fn merged_two_layer_circuit_on_four_qubits() {
    let c = StaircaseCircuit::random(4, 1, 2, 9).unwrap();
    let (raw, raw_rep) = circuit_to_rotations(&c, false).unwrap();
    let (merged, rep) = circuit_to_rotations(&c, true).unwrap();
    assert!(rep.rz_total <= 9 * 3 + 15 * 3, "{}", rep.rz_total);
    assert!(rep.rz_total <= raw_rep.rz_total);
    assert!(rep.rz_per_gate[..3].iter().all(|&k| k <= 9), "{:?}", rep.rz_per_gate);
    assert!(rep.rz_per_gate[3..].iter().all(|&k| k <= 15));
    assert_eq!(rep.rz_per_gate.iter().sum::<usize>(), rep.rz_total);
    assert!(rep.merged_blocks > 0);
    let u = circuit_unitary(&c);
    assert!(linalg::phase_optimal_operator_distance(&merged.to_dense(), &u) < 1e-9);
    assert!(linalg::phase_optimal_operator_distance(&raw.to_dense(), &u) < 1e-9);
    // exact global phase is tracked too
    assert!((merged.to_dense() - &u).norm() < 1e-8);
}

#[test]
fn identity_circuit_elides_to_nothing() {
    let c = StaircaseCircuit::identity(5, 2, 2).unwrap();
    let (r, rep) = circuit_to_rotations(&c, true).unwrap();
    assert_eq!(rep.rz_nontrivial, 0);
    let e = elide_trivial_rotations(&r, DEFAULT_ANGLE_TOL);
    assert_eq!(e.rz_count(), 0);
    assert!(linalg::phase_optimal_operator_distance(&e.to_dense(), &linalg::identity(32)) < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn locally_equivalent_gates_share_angles(seed in 0u64..10_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(4, &mut rng);
        let l = linalg::kron(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng));
        let r = linalg::kron(&random_unitary(2, &mut rng), &random_unitary(2, &mut rng));
        let a = kak_decompose(&u).unwrap().canonical_angles;
        let b = kak_decompose(&(l * &u * r)).unwrap().canonical_angles;
        prop_assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9 && (a.2 - b.2).abs() < 1e-9);
    }

    #[test]
    fn lowering_preserves_the_unitary(seed in 0u64..10_000, n in 2usize..6, layers in 1usize..3, merge: bool) {
        let center = (seed as usize) % (n - 1);
        let c = StaircaseCircuit::random(n, center, layers, seed).unwrap();
        let (r, rep) = circuit_to_rotations(&c, merge).unwrap();
        prop_assert_eq!(rep.rz_total, r.rz_count());
        let u = circuit_unitary(&c);
        prop_assert!(linalg::phase_optimal_operator_distance(&r.to_dense(), &u) < 1e-9);
        let e = elide_trivial_rotations(&r, 1e-10);
        prop_assert!(linalg::phase_optimal_operator_distance(&e.to_dense(), &u) < 1e-9);
        let (_, raw) = circuit_to_rotations(&c, false).unwrap();
        prop_assert!(rep.rz_total <= raw.rz_total);
    }
}
