use stateprep_core::dmrg::{excited_states, reverse_sweep_series, DmrgConfig, DmrgError, SectorGuard};
use stateprep_core::hamiltonian::{build_mpo, default_ordering, dense_hamiltonian, eigh, SymmetrySector};
use stateprep_core::mps::{overlap, random_sector_mps};
use stateprep_core::toy::toy_hamiltonian;

fn setup() -> (stateprep_core::mpo::Mpo, DmrgConfig, stateprep_core::mps::Mps, Vec<f64>) {
    let h = toy_hamiltonian(3);
    let m = default_ordering(&h);
    let mpo = build_mpo(&h, &m).unwrap();
    let sector = SymmetrySector::new(2, 2);
    let (vals, _) = eigh(&dense_hamiltonian(&h, &m, Some(sector)).unwrap().matrix);
    let init = random_sector_mps(m.n_sites(), sector, &m, 8, 5).unwrap();
    let cfg = DmrgConfig {
        chi_max: 48,
        sector: Some(SectorGuard::new(&m, sector, false, 20.0)),
        ..Default::default()
    };
    (mpo, cfg, init, vals)
}

#[test]
fn three_lowest_states_match_dense_spectrum() {
    let (mpo, cfg, init, vals) = setup();
    let res = excited_states(&mpo, 3, &cfg, &init).unwrap();
    for (r, v) in res.iter().zip(&vals) {
        assert!(((r.energy - v) / v).abs() < 1e-6, "{} vs {}", r.energy, v);
        assert!(r.leakage.unwrap().abs() < 1e-8);
    }
    for i in 0..3 {
        for j in i + 1..3 {
            assert!(overlap(&res[i].state, &res[j].state).unwrap().norm() < 1e-4);
        }
    }
}

#[test]
fn weak_penalty_collapses_and_is_reported() {
    let (mpo, cfg, init, vals) = setup();
    let gap = vals[1] - vals[0];
    let weak = DmrgConfig {
        penalty_weight_mev: gap * 0.05,
        ..cfg
    };
    match excited_states(&mpo, 2, &weak, &init) {
        Err(DmrgError::NonOrthogonal { i: 0, j: 1, overlap }) => assert!(overlap > 1e-4),
        other => panic!("expected collapse, got {:?}", other.map(|r| r.len())),
    }
}

#[test]
fn reverse_series_energies_rise_as_bonds_shrink() {
    let (mpo, cfg, init, vals) = setup();
    let res = reverse_sweep_series(&mpo, &[32, 16, 8, 4, 2], &cfg, &init).unwrap();
    assert!(((res[0].energy - vals[0]) / vals[0]).abs() < 1e-6);
    for w in res.windows(2) {
        assert!(w[1].energy >= w[0].energy - 1e-9, "{} then {}", w[0].energy, w[1].energy);
        assert!(w[1].state.max_bond() <= w[0].state.max_bond());
    }
    assert!(matches!(
        reverse_sweep_series(&mpo, &[4, 8], &cfg, &init),
        Err(DmrgError::IncreasingSeries(8, 4))
    ));
}
