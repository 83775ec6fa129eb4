//! Small deterministic shell-model instances for tests and demos.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::hamiltonian::{Orbital, ShellModelHamiltonian, TermKey};

const G_PAIR: f64 = 0.6;

/// 12 orbitals: a d3/2 and an s1/2 shell for each species, with pairing
/// inside each species and seeded jz-conserving proton-neutron couplings.
pub fn toy_hamiltonian(seed: u64) -> ShellModelHamiltonian {
    let mut orbitals = Vec::new();
    // (tz2, n, l, j2, energy)
    let shells = [(1, 0, 2, 3, 1.2), (1, 1, 0, 1, -2.8), (-1, 0, 2, 3, 0.9), (-1, 1, 0, 1, -3.1)];
    for &(tz2, n, l, j2, energy) in &shells {
        let mut jz = j2;
        while jz >= -j2 {
            orbitals.push(Orbital {
                index: orbitals.len(),
                tz2,
                n,
                l,
                j2,
                jz2: jz,
                energy,
            });
            jz -= 2;
        }
    }
    let mut terms: BTreeMap<TermKey, f64> = BTreeMap::new();
    let partner = |o: &Orbital| {
        orbitals
            .iter()
            .position(|p| p.tz2 == o.tz2 && p.n == o.n && p.l == o.l && p.j2 == o.j2 && p.jz2 == -o.jz2)
            .expect("time-reversed partner")
    };
    // -G sum P+_i P_j with P+_i = a+_i a+_ibar over jz > 0
    for tz2 in [1, -1] {
        let heads: Vec<usize> = orbitals.iter().filter(|o| o.tz2 == tz2 && o.jz2 > 0).map(|o| o.index).collect();
        for &i in &heads {
            for &j in &heads {
                let (ib, jb) = (partner(&orbitals[i]), partner(&orbitals[j]));
                terms.insert((i, ib, jb, j), -2.0 * G_PAIR);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protons: Vec<usize> = orbitals.iter().filter(|o| o.tz2 == 1).map(|o| o.index).collect();
    let neutrons: Vec<usize> = orbitals.iter().filter(|o| o.tz2 == -1).map(|o| o.index).collect();
    let mut added = 0;
    while added < 24 {
        let (p1, n1) = (protons[rng.random_range(0..protons.len())], neutrons[rng.random_range(0..neutrons.len())]);
        let (p2, n2) = (protons[rng.random_range(0..protons.len())], neutrons[rng.random_range(0..neutrons.len())]);
        let m = |a: usize, b: usize| orbitals[a].jz2 + orbitals[b].jz2;
        if m(p1, n1) != m(p2, n2) {
            continue;
        }
        let v: f64 = rng.random_range(-1.2..0.4);
        let key = (p1, n1, n2, p2);
        let conj = (p2, n2, n1, p1);
        if terms.contains_key(&key) {
            continue;
        }
        terms.insert(key, v);
        terms.insert(conj, v);
        added += 1;
    }
    ShellModelHamiltonian::new(orbitals, terms).expect("toy Hamiltonian is valid")
}

/// Random Hermitian, species-conserving Hamiltonian on `n_p + n_n` orbitals
/// with `n_terms` two-body terms plus their conjugates.
pub fn random_hamiltonian(n_p: usize, n_n: usize, n_terms: usize, seed: u64) -> ShellModelHamiltonian {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = n_p + n_n;
    let orbitals: Vec<Orbital> = (0..n)
        .map(|i| {
            let j2 = 2 * rng.random_range(0..3) + 1;
            let jz2 = j2 - 2 * rng.random_range(0..=j2 as usize) as i32;
            Orbital {
                index: i,
                tz2: if i < n_p { 1 } else { -1 },
                n: 0,
                l: rng.random_range(0..4),
                j2,
                jz2,
                energy: rng.random_range(-3.0..3.0),
            }
        })
        .collect();
    let mut terms: BTreeMap<TermKey, f64> = BTreeMap::new();
    let same = |a: usize, b: usize| (a < n_p) == (b < n_p);
    let mut tries = 0;
    while terms.len() < 2 * n_terms && tries < 100 * n_terms + 100 && n >= 2 {
        tries += 1;
        let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
        let (k, l) = (rng.random_range(0..n), rng.random_range(0..n));
        if i == j || k == l {
            continue;
        }
        // species multiset of (i, j) must match (k, l)
        let ok = (same(i, k) && same(j, l)) || (same(i, l) && same(j, k));
        if !ok {
            continue;
        }
        let key = (i, j, k, l);
        let conj = (l, k, j, i);
        if terms.contains_key(&key) || terms.contains_key(&conj) {
            continue;
        }
        let v: f64 = rng.random_range(-2.0..2.0);
        terms.insert(key, v);
        terms.insert(conj, v);
    }
    ShellModelHamiltonian::new(orbitals, terms).expect("random Hamiltonian is valid")
}
