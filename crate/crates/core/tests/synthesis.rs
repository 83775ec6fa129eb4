use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stateprep_core::compile::StaircaseCircuit;
use stateprep_core::linalg::{self, gates, random_unitary, CMat, C64};
use stateprep_core::rotations::{circuit_to_rotations, Clifford, Op, RotationCircuit};
use stateprep_core::synthesis::*;

type Key = [i64; 8];

// Phase-fixed rounding of a 2x2 unitary: first entry of largest modulus made real positive.
fn key(m: &CMat) -> Key {
    let mut best = C64::new(0.0, 0.0);
    for x in m.iter() {
        if x.norm() > best.norm() + 1e-9 {
            best = *x;
        }
    }
    let ph = best.conj() / best.norm();
    let mut k = [0i64; 8];
    for (i, x) in m.iter().enumerate() {
        let y = x * ph;
        k[2 * i] = (y.re * 1e8).round() as i64;
        k[2 * i + 1] = (y.im * 1e8).round() as i64;
    }
    k
}

// Exhaustive 0-1 BFS over the group generated by H, S (free) and T (cost 1):
// every operator with T-count <= max_t and its minimal T-count.
fn bfs_oracle(max_t: usize) -> Vec<(CMat, usize)> {
    let mut best: BTreeMap<Key, usize> = BTreeMap::new();
    let mut out = Vec::new();
    let mut dq: VecDeque<(CMat, usize)> = VecDeque::new();
    dq.push_back((linalg::identity(2), 0));
    while let Some((m, t)) = dq.pop_front() {
        let k = key(&m);
        if best.get(&k).is_some_and(|&b| b <= t) {
            continue;
        }
        if best.contains_key(&k) {
            continue;
        }
        best.insert(k, t);
        out.push((m.clone(), t));
        for (g, cost) in [(gates::h(), 0), (gates::s(), 0), (gates::t(), 1)] {
            let next = &g * &m;
            let nt = t + cost;
            if nt > max_t || best.contains_key(&key(&next)) {
                continue;
            }
            if cost == 0 {
                dq.push_front((next, nt));
            } else {
                dq.push_back((next, nt));
            }
        }
    }
    out
}

fn oracle_min_t(oracle: &[(CMat, usize)], target: &CMat, eps: f64) -> Option<usize> {
    oracle
        .iter()
        .filter(|(m, _)| linalg::phase_invariant_distance(target, m) <= eps)
        .map(|(_, t)| *t)
        .min()
}

#[test]
fn database_matches_exhaustive_search_up_to_six() {
    let oracle = bfs_oracle(6);
    let db = build_database(6).unwrap();
    assert_eq!(oracle.len(), db.len());
    let min_t: BTreeMap<Key, usize> = oracle.iter().map(|(m, t)| (key(m), *t)).collect();
    let mut seen = BTreeMap::new();
    for (t, g) in db.sequences() {
        let k = key(&sequence_matrix(&g));
        assert_eq!(min_t.get(&k), Some(&t), "{g:?}");
        assert_eq!(g.iter().filter(|x| x.is_t()).count(), t);
        assert!(seen.insert(k, ()).is_none(), "duplicate operator {g:?}");
    }
    for t in 0..=6 {
        assert_eq!(oracle.iter().filter(|o| o.1 == t).count(), db.level_len(t));
    }
}

#[test]
fn small_budgets() {
    let db = build_database(0).unwrap();
    assert_eq!(db.len(), 24);
    let db = build_database(1).unwrap();
    let seqs: Vec<_> = db.sequences().collect();
    assert!(seqs.contains(&(0, vec![])));
    assert!(seqs.contains(&(1, vec![Gate1::T])));
    assert!(matches!(build_database(MAX_HALF_BUDGET + 1), Err(SynthError::BudgetTooLarge(_))));
    assert!(matches!(build_database_with_limit(8, 1000), Err(SynthError::MemoryBudget { .. })));
    for t in 2..8 {
        assert_eq!(entry_count(t), 2 * entry_count(t - 1) + 48);
    }
}

#[test]
fn clifford_t_angles_are_exact() {
    let db = build_database(4).unwrap();
    for k in -8..=8 {
        let theta = k as f64 * PI / 4.0;
        let s = synth_rz(theta, 1e-3, &db).unwrap();
        assert!(s.achieved_error < 1e-12, "{k} {}", s.achieved_error);
        assert_eq!(s.t_count, (k as i64).rem_euclid(2) as usize);
    }
    assert_eq!(synth_rz(PI / 2.0, 1e-3, &db).unwrap().gates, vec![Gate1::S]);
    assert_eq!(synth_rz(PI / 4.0, 1e-3, &db).unwrap().gates, vec![Gate1::T]);
    assert_eq!(synth_u3(&gates::h(), 1e-3, &db).unwrap().gates, vec![Gate1::H]);
    assert!(synth_u3(&linalg::identity(2), 1e-3, &db).unwrap().gates.is_empty());
}

#[test]
fn random_rz_targets_match_the_oracle() {
    let oracle = bfs_oracle(6);
    let db = build_database(12).unwrap();
    let mut syn = Synthesizer::new(&db);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut failures = 0;
    for _ in 0..200 {
        let theta = rng.random_range(-PI..PI);
        let eps = 10f64.powf(-rng.random_range(1.0..2.0));
        match syn.synth_rz(theta, eps) {
            Ok(s) => {
                let target = gates::rz(theta);
                let err = linalg::phase_invariant_distance(&target, &sequence_matrix(&s.gates));
                assert!(err <= eps, "{theta} {eps} {err}");
                assert!((err - s.achieved_error).abs() < 1e-12);
                if s.t_count <= 6 {
                    assert_eq!(Some(s.t_count), oracle_min_t(&oracle, &target, eps), "{theta} {eps}");
                } else {
                    assert_eq!(oracle_min_t(&oracle, &target, eps), None);
                }
            }
            Err(_) => failures += 1,
        }
    }
    assert_eq!(failures, 0);
}

#[test]
fn tighter_eps_never_costs_fewer_t() {
    let db = build_database(12).unwrap();
    let mut syn = Synthesizer::new(&db);
    for theta in [0.1, 0.7, -2.3] {
        let mut prev = 0;
        for eps in [1e-1, 10f64.powf(-1.5), 10f64.powf(-1.75), 1e-2] {
            let t = syn.synth_rz(theta, eps).unwrap().t_count;
            assert!(t >= prev);
            prev = t;
        }
    }
}

#[test]
fn beyond_budget_uses_the_split_search() {
    let small = build_database(5).unwrap();
    let big = build_database(10).unwrap();
    let mut syn = Synthesizer::new(&small);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut split = 0;
    for _ in 0..40 {
        let u = random_unitary(2, &mut rng);
        let s = syn.synth_u3(&u, 0.08).unwrap();
        // the split search is exhaustive up to twice the budget
        assert_eq!(s.t_count, synth_u3(&u, 0.08, &big).unwrap().t_count);
        assert!(s.achieved_error <= 0.08);
        split += usize::from(s.t_count > 5);
    }
    assert!(split > 0);
    let u = random_unitary(2, &mut rng);
    let err = synth_u3(&u, 1e-6, &small).unwrap_err();
    assert!(matches!(err, SynthError::Unreachable { .. }));
}

#[test]
fn direct_unitary_synthesis_versus_three_rotations() {
    let db = build_database(12).unwrap();
    let mut syn = Synthesizer::new(&db);
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let (mut direct, mut three) = (0, 0);
    for _ in 0..50 {
        let u = random_unitary(2, &mut rng);
        let (a, b, g, _) = stateprep_core::kak::zyz(&u);
        three += [a, b, g].iter().map(|&x| syn.synth_rz(x, 0.1).unwrap().t_count).sum::<usize>();
        direct += syn.synth_u3(&u, 0.1).unwrap().t_count;
    }
    // per target the three looser approximations can win; in aggregate they do not
    assert!(direct <= three, "{direct} > {three}");
    eprintln!("direct/three T ratio {:.3}", direct as f64 / three as f64);
}

fn block(rng: &mut ChaCha8Rng) -> RotationCircuit {
    let mut r = RotationCircuit::new(1);
    let mut a = || rng.random_range(-PI..PI);
    r.ops = vec![
        Op::Rz(0, a()),
        Op::Clifford(Clifford::Sdg, vec![0]),
        Op::Clifford(Clifford::H, vec![0]),
        Op::Rz(0, a()),
        Op::Clifford(Clifford::H, vec![0]),
        Op::Clifford(Clifford::S, vec![0]),
        Op::Rz(0, a()),
    ];
    r
}

#[test]
fn hybrid_never_costs_more_on_three_rotation_blocks() {
    let db = build_database(10).unwrap();
    let mut syn = Synthesizer::new(&db);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let eps = 10f64.powf(-1.5);
    for _ in 0..20 {
        let r = block(&mut rng);
        let (_, hybrid, he) = syn.synth_circuit(&r, eps, SynthesisStrategy::Hybrid).unwrap();
        let (_, rz, re) = syn.synth_circuit(&r, eps, SynthesisStrategy::RzOnly).unwrap();
        assert!(hybrid <= rz, "{hybrid} > {rz}");
        assert!(he.len() == 1 || he.len() == 3);
        assert_eq!(re.len(), 3);
    }
}

#[test]
fn circuit_synthesis_examples() {
    let db = build_database(8).unwrap();
    let mut r = RotationCircuit::new(1);
    r.ops = vec![Op::Rz(0, PI / 4.0)];
    for s in [SynthesisStrategy::RzOnly, SynthesisStrategy::Hybrid] {
        assert_eq!(synth_circuit(&r, 0.01, s, &db).unwrap().1, 1);
    }
    let mut r = RotationCircuit::new(2);
    r.ops = vec![
        Op::Clifford(Clifford::H, vec![0]),
        Op::Clifford(Clifford::Cz, vec![0, 1]),
        Op::Clifford(Clifford::S, vec![1]),
    ];
    let (c, t, errs) = synth_circuit(&r, 0.01, SynthesisStrategy::Hybrid, &db).unwrap();
    assert_eq!(t, 0);
    assert!(errs.is_empty());
    assert!(linalg::phase_optimal_operator_distance(&c.to_dense(), &r.to_dense()) < 1e-12);
}

#[test]
fn circuit_error_is_bounded_by_the_sum_of_gate_errors() {
    let db = build_database(9).unwrap();
    let mut syn = Synthesizer::new(&db);
    let c = StaircaseCircuit::random(3, 1, 1, 6).unwrap();
    let (r, _) = circuit_to_rotations(&c, true).unwrap();
    for s in [SynthesisStrategy::RzOnly, SynthesisStrategy::Hybrid] {
        let (out, t, errs) = syn.synth_circuit(&r, 0.05, s).unwrap();
        assert_eq!(t, out.t_count());
        let dist = linalg::phase_optimal_operator_distance(&out.to_dense(), &r.to_dense());
        // operator-norm distance of a 2x2 pair is sqrt 2 times the trace-based one
        let bound: f64 = errs.iter().map(|e| 2f64.sqrt() * e).sum();
        assert!(dist <= bound + 1e-9, "{dist} > {bound}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn results_reproduce_their_target(seed in 0u64..100_000, e in 1.0f64..2.0) {
        let db = build_database(7).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(2, &mut rng);
        let eps = 10f64.powf(-e);
        if let Ok(s) = synth_u3(&u, eps, &db) {
            let m = sequence_matrix(&s.gates);
            prop_assert!(linalg::phase_invariant_distance(&u, &m) <= eps);
            prop_assert!(linalg::max_abs_diff(&(m * s.global_phase), &u) < 2.0 * eps + 1e-9);
            prop_assert_eq!(s.t_count, s.gates.iter().filter(|g| g.is_t()).count());
        }
    }
}

#[test]
fn small_angle_matches_brute_force_up_to_eight() {
    let oracle = bfs_oracle(8);
    let db = build_database(8).unwrap();
    let eps = 10f64.powf(-1.5);
    let s = synth_rz(0.1, eps, &db).unwrap();
    assert!(s.achieved_error <= eps);
    let best = oracle_min_t(&oracle, &gates::rz(0.1), eps);
    assert!(best.is_none_or(|b| b == s.t_count));
    assert!(best.is_some() || s.t_count > 8);
}

#[test]
fn database_round_trips_through_quaternions() {
    let db = build_database(6).unwrap();
    let qs: Vec<[f64; 4]> = db.quaternions().collect();
    let back = SynthesisDatabase::from_quaternions(6, &qs).unwrap();
    assert_eq!(back.sequences().collect::<Vec<_>>(), db.sequences().collect::<Vec<_>>());
    assert!(SynthesisDatabase::from_quaternions(5, &qs).is_err());
    let mut bad = qs.clone();
    bad[0] = [0.0, 1.0, 0.0, 0.0];
    assert!(matches!(SynthesisDatabase::from_quaternions(6, &bad), Err(SynthError::BadContents { .. })));
}

#[test]
fn circuit_state_matches_dense_product() {
    let db = build_database(8).unwrap();
    let c = StaircaseCircuit::random(4, 1, 2, 17).unwrap();
    let (r, _) = circuit_to_rotations(&c, true).unwrap();
    let (ct, _, _) = synth_circuit(&r, 0.05, SynthesisStrategy::Hybrid, &db).unwrap();
    let dense = ct.to_dense();
    let v = ct.to_mps(64).unwrap().to_dense();
    for (i, x) in v.iter().enumerate() {
        assert!((x - dense[(i, 0)]).norm() < 1e-10);
    }
    let bad = CliffordTCircuit { n_qubits: 3, ops: vec![CtOp::Cx(0, 2)] };
    assert!(matches!(bad.to_mps(4), Err(SynthError::NonAdjacent(0, 2))));
}
