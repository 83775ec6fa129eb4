//! m-scheme shell-model Hamiltonians and their qubit images.
//!
//! The operator is
//!
//! ```text
//! H = sum_i e_i a+_i a_i + 1/2 sum_{ijkl} V_ijkl a+_i a+_j a_k a_l
//! ```
//!
//! taken literally: each stored `(i, j, k, l)` entry contributes exactly once,
//! with the 1/2 prefactor and the operator order shown. No antisymmetrization
//! of the input table is performed, so files that list only one member of an
//! antisymmetric family must be expanded beforehand.
//!
//! Fermions are mapped to qubits with Jordan-Wigner along the MPS site order:
//! `a_p = Z_0 ... Z_{p-1} |0><1|_p`, qubit `|1>` meaning "occupied".
//! Orbitals with `tz2 = +1` are protons, `tz2 = -1` neutrons.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use thiserror::Error;

use crate::linalg::{self, c, CMat, C64, ONE, ZERO};
use crate::mpo::Mpo;

pub type TermKey = (usize, usize, usize, usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HamiltonianError {
    #[error("orbital index {0} appears more than once")]
    DuplicateOrbital(usize),
    #[error("orbital indices must be contiguous from 0 (missing {0})")]
    MissingOrbital(usize),
    #[error("orbital {index}: {reason}")]
    InvalidOrbital { index: usize, reason: &'static str },
    #[error("two-body term {0:?} references unknown orbital {1}")]
    UnknownOrbital(TermKey, usize),
    #[error("two-body term {0:?}: repeated creation index")]
    RepeatedCreationIndex(TermKey),
    #[error("two-body term {0:?}: repeated annihilation index")]
    RepeatedAnnihilationIndex(TermKey),
    #[error("two-body term {0:?} listed twice")]
    DuplicateTerm(TermKey),
    #[error("two-body term {0:?} changes the proton or neutron number")]
    ChargeNonConserving(TermKey),
    #[error("two-body table is not Hermitian: coefficient of {0:?} differs from its conjugate partner")]
    NonHermitian(TermKey),
    #[error("mapping covers {mapping} sites but the Hamiltonian has {orbitals} orbitals")]
    MappingMismatch { mapping: usize, orbitals: usize },
    #[error("sector ({n_protons}, {n_neutrons}) does not fit {proton_sites} proton and {neutron_sites} neutron sites")]
    InfeasibleSector {
        n_protons: usize,
        n_neutrons: usize,
        proton_sites: usize,
        neutron_sites: usize,
    },
    #[error("dense matrix of dimension {0} exceeds the limit {1}")]
    TooLarge(usize, usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Species {
    Proton,
    Neutron,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Orbital {
    pub index: usize,
    pub tz2: i32,
    pub n: i32,
    pub l: i32,
    pub j2: i32,
    pub jz2: i32,
    /// Single-particle energy in MeV.
    pub energy: f64,
}

impl Orbital {
    pub fn species(&self) -> Species {
        if self.tz2 > 0 {
            Species::Proton
        } else {
            Species::Neutron
        }
    }
}

#[derive(Clone, Debug)]
pub struct ShellModelHamiltonian {
    orbitals: Vec<Orbital>,
    two_body: BTreeMap<TermKey, f64>,
}

impl ShellModelHamiltonian {
    /// Validates the orbital table and the two-body terms.
    ///
    /// Besides the per-term checks, the assembled two-body operator must be
    /// Hermitian and conserve proton and neutron numbers separately.
    pub fn new(
        mut orbitals: Vec<Orbital>,
        terms: impl IntoIterator<Item = (TermKey, f64)>,
    ) -> Result<Self, HamiltonianError> {
        orbitals.sort_by_key(|o| o.index);
        for w in orbitals.windows(2) {
            if w[0].index == w[1].index {
                return Err(HamiltonianError::DuplicateOrbital(w[0].index));
            }
        }
        for (pos, o) in orbitals.iter().enumerate() {
            if o.index != pos {
                return Err(HamiltonianError::MissingOrbital(pos));
            }
            if o.tz2 != 1 && o.tz2 != -1 {
                return Err(HamiltonianError::InvalidOrbital {
                    index: o.index,
                    reason: "tz2 must be +1 (proton) or -1 (neutron)",
                });
            }
            if o.j2 <= 0 || o.j2 % 2 == 0 {
                return Err(HamiltonianError::InvalidOrbital {
                    index: o.index,
                    reason: "j2 must be a positive odd integer",
                });
            }
            if o.jz2.abs() > o.j2 || (o.jz2 - o.j2) % 2 != 0 {
                return Err(HamiltonianError::InvalidOrbital {
                    index: o.index,
                    reason: "jz2 must satisfy |jz2| <= j2 with the parity of j2",
                });
            }
            if !o.energy.is_finite() {
                return Err(HamiltonianError::InvalidOrbital {
                    index: o.index,
                    reason: "energy must be finite",
                });
            }
        }
        let n = orbitals.len();
        let mut two_body = BTreeMap::new();
        for (key, value) in terms {
            let (i, j, k, l) = key;
            for idx in [i, j, k, l] {
                if idx >= n {
                    return Err(HamiltonianError::UnknownOrbital(key, idx));
                }
            }
            if i == j {
                return Err(HamiltonianError::RepeatedCreationIndex(key));
            }
            if k == l {
                return Err(HamiltonianError::RepeatedAnnihilationIndex(key));
            }
            let mut created = [orbitals[i].species(), orbitals[j].species()];
            let mut destroyed = [orbitals[k].species(), orbitals[l].species()];
            created.sort();
            destroyed.sort();
            if created != destroyed {
                return Err(HamiltonianError::ChargeNonConserving(key));
            }
            if two_body.insert(key, value).is_some() {
                return Err(HamiltonianError::DuplicateTerm(key));
            }
        }
        let h = ShellModelHamiltonian { orbitals, two_body };
        h.check_hermitian()?;
        Ok(h)
    }

    /// Collects the table onto normal-ordered pairs `(i<j, k<l)`; the operator is
    /// Hermitian iff that matrix is symmetric (all coefficients are real).
    fn check_hermitian(&self) -> Result<(), HamiltonianError> {
        let mut canon: BTreeMap<((usize, usize), (usize, usize)), (f64, TermKey)> = BTreeMap::new();
        for (&key, &v) in &self.two_body {
            let (i, j, k, l) = key;
            let mut sign = 1.0;
            let cre = if i < j { (i, j) } else { sign = -sign; (j, i) };
            let ann = if k < l { (k, l) } else { sign = -sign; (l, k) };
            canon.entry((cre, ann)).or_insert((0.0, key)).0 += sign * v;
        }
        for (&(p, q), &(v, key)) in &canon {
            let partner = canon.get(&(q, p)).map(|x| x.0).unwrap_or(0.0);
            let scale = v.abs().max(partner.abs()).max(1.0);
            if (v - partner).abs() > 1e-10 * scale {
                return Err(HamiltonianError::NonHermitian(key));
            }
        }
        Ok(())
    }

    pub fn orbitals(&self) -> &[Orbital] {
        &self.orbitals
    }

    pub fn two_body(&self) -> &BTreeMap<TermKey, f64> {
        &self.two_body
    }

    pub fn n_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn count(&self, species: Species) -> usize {
        self.orbitals.iter().filter(|o| o.species() == species).count()
    }
}

/// Orbital-to-site permutation plus the species carried by each site.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QubitMapping {
    site_of_orbital: Vec<usize>,
    orbital_of_site: Vec<usize>,
    site_species: Vec<Species>,
}

impl QubitMapping {
    /// `site_of_orbital[o]` is the MPS site of orbital `o`; must be a permutation.
    pub fn new(h: &ShellModelHamiltonian, site_of_orbital: Vec<usize>) -> Result<Self, HamiltonianError> {
        let n = h.n_orbitals();
        if site_of_orbital.len() != n {
            return Err(HamiltonianError::MappingMismatch {
                mapping: site_of_orbital.len(),
                orbitals: n,
            });
        }
        let mut orbital_of_site = alloc::vec![usize::MAX; n];
        for (o, &s) in site_of_orbital.iter().enumerate() {
            if s >= n || orbital_of_site[s] != usize::MAX {
                return Err(HamiltonianError::MappingMismatch {
                    mapping: site_of_orbital.len(),
                    orbitals: n,
                });
            }
            orbital_of_site[s] = o;
        }
        let site_species = orbital_of_site.iter().map(|&o| h.orbitals[o].species()).collect();
        Ok(QubitMapping {
            site_of_orbital,
            orbital_of_site,
            site_species,
        })
    }

    pub fn identity(h: &ShellModelHamiltonian) -> Self {
        Self::new(h, (0..h.n_orbitals()).collect()).expect("identity permutation")
    }

    pub fn n_sites(&self) -> usize {
        self.site_of_orbital.len()
    }

    pub fn site_of_orbital(&self) -> &[usize] {
        &self.site_of_orbital
    }

    pub fn orbital_of_site(&self) -> &[usize] {
        &self.orbital_of_site
    }

    pub fn site_species(&self) -> &[Species] {
        &self.site_species
    }

    /// Index of the last proton site, i.e. the bond separating the species when
    /// protons occupy the left half. `None` if either species is absent.
    pub fn species_boundary(&self) -> Option<usize> {
        let p = self.site_species.iter().filter(|&&s| s == Species::Proton).count();
        if p == 0 || p == self.n_sites() {
            None
        } else {
            Some(p - 1)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SymmetrySector {
    pub n_protons: usize,
    pub n_neutrons: usize,
}

impl SymmetrySector {
    pub fn new(n_protons: usize, n_neutrons: usize) -> Self {
        SymmetrySector { n_protons, n_neutrons }
    }

    pub fn check(&self, species: &[Species]) -> Result<(), HamiltonianError> {
        let p = species.iter().filter(|&&s| s == Species::Proton).count();
        let nn = species.len() - p;
        if self.n_protons > p || self.n_neutrons > nn {
            return Err(HamiltonianError::InfeasibleSector {
                n_protons: self.n_protons,
                n_neutrons: self.n_neutrons,
                proton_sites: p,
                neutron_sites: nn,
            });
        }
        Ok(())
    }
}

/// Site order used throughout: protons on the left half, neutrons on the right;
/// inside each species the (n, l, j) shells by increasing energy; inside a
/// shell by decreasing |jz| with `+jz` immediately followed by `-jz`.
pub fn default_ordering(h: &ShellModelHamiltonian) -> QubitMapping {
    let mut keys: Vec<(usize, (Species, f64, usize, i32, i32, usize))> = Vec::new();
    // Shell energy = lowest member energy, shell tie-break = lowest member index.
    let mut shells: BTreeMap<(Species, i32, i32, i32), (f64, usize)> = BTreeMap::new();
    for o in h.orbitals() {
        let e = shells
            .entry((o.species(), o.n, o.l, o.j2))
            .or_insert((o.energy, o.index));
        if o.energy < e.0 {
            e.0 = o.energy;
        }
        e.1 = e.1.min(o.index);
    }
    for o in h.orbitals() {
        let (energy, first) = shells[&(o.species(), o.n, o.l, o.j2)];
        keys.push((
            o.index,
            (o.species(), energy, first, -o.jz2.abs(), -o.jz2.signum(), o.index),
        ));
    }
    keys.sort_by(|a, b| {
        let (x, y) = (&a.1, &b.1);
        x.0.cmp(&y.0)
            .then(x.1.partial_cmp(&y.1).unwrap_or(core::cmp::Ordering::Equal))
            .then(x.2.cmp(&y.2))
            .then(x.3.cmp(&y.3))
            .then(x.4.cmp(&y.4))
            .then(x.5.cmp(&y.5))
    });
    let mut site_of_orbital = alloc::vec![0; h.n_orbitals()];
    for (site, (orb, _)) in keys.iter().enumerate() {
        site_of_orbital[*orb] = site;
    }
    QubitMapping::new(h, site_of_orbital).expect("sorted order is a permutation")
}

#[derive(Clone, Copy)]
enum Ladder {
    Create,
    Annihilate,
}

fn jw_factor(n: usize, site: usize, kind: Ladder) -> Vec<CMat> {
    let local = match kind {
        Ladder::Create => linalg::from_rows(2, &[ZERO, ZERO, ONE, ZERO]),
        Ladder::Annihilate => linalg::from_rows(2, &[ZERO, ONE, ZERO, ZERO]),
    };
    (0..n)
        .map(|t| {
            if t < site {
                linalg::gates::z()
            } else if t == site {
                local.clone()
            } else {
                linalg::identity(2)
            }
        })
        .collect()
}

/// Local operators of the product of Jordan-Wigner images, in operator order.
fn jw_string(n: usize, factors: &[(usize, Ladder)]) -> Vec<CMat> {
    let mut ops = alloc::vec![linalg::identity(2); n];
    for &(site, kind) in factors {
        let f = jw_factor(n, site, kind);
        for t in 0..n {
            ops[t] = &ops[t] * &f[t];
        }
    }
    ops
}

/// Number of terms summed before each intermediate compression.
const MPO_CHUNK: usize = 24;
const MPO_TOL: f64 = 1e-12;

/// Jordan-Wigner MPO of the Hamiltonian under `m`, compressed by successive SVD
/// truncation at relative tolerance 1e-12.
pub fn build_mpo(h: &ShellModelHamiltonian, m: &QubitMapping) -> Result<Mpo, HamiltonianError> {
    let n = h.n_orbitals();
    if m.n_sites() != n {
        return Err(HamiltonianError::MappingMismatch {
            mapping: m.n_sites(),
            orbitals: n,
        });
    }
    let site = |o: usize| m.site_of_orbital[o];
    let onebody: Vec<(usize, C64, CMat)> = h
        .orbitals()
        .iter()
        .filter(|o| o.energy != 0.0)
        .map(|o| {
            (
                site(o.index),
                c(o.energy, 0.0),
                linalg::from_rows(2, &[ZERO, ZERO, ZERO, ONE]),
            )
        })
        .collect();
    let mut total = Mpo::local_sum(n, &onebody);
    let mut chunk: Option<Mpo> = None;
    let mut in_chunk = 0;
    for (&(i, j, k, l), &v) in h.two_body() {
        if v == 0.0 {
            continue;
        }
        let ops = jw_string(
            n,
            &[
                (site(i), Ladder::Create),
                (site(j), Ladder::Create),
                (site(k), Ladder::Annihilate),
                (site(l), Ladder::Annihilate),
            ],
        );
        let term = Mpo::product(c(0.5 * v, 0.0), &ops);
        chunk = Some(match chunk {
            None => term,
            Some(acc) => acc.add(&term),
        });
        in_chunk += 1;
        if in_chunk == MPO_CHUNK {
            total = total.add(&chunk.take().expect("chunk")).compress(MPO_TOL);
            in_chunk = 0;
        }
    }
    if let Some(acc) = chunk {
        total = total.add(&acc);
    }
    Ok(total.compress(MPO_TOL))
}

/// Proton- or neutron-number operator as an MPO.
pub fn number_mpo(m: &QubitMapping, species: Species) -> Mpo {
    let nop = linalg::from_rows(2, &[ZERO, ZERO, ZERO, ONE]);
    let terms: Vec<_> = m
        .site_species()
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == species)
        .map(|(site, _)| (site, ONE, nop.clone()))
        .collect();
    Mpo::local_sum(m.n_sites(), &terms)
}

/// Dense operator with the basis states it is expressed in.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    pub matrix: CMat,
    /// Full-space basis index of every row/column (site 0 = most significant bit).
    pub basis: Vec<usize>,
    pub n_sites: usize,
}

impl DenseOperator {
    /// Embeds a sector vector into the full `2^n` space.
    pub fn embed(&self, v: &nalgebra::DVector<C64>) -> nalgebra::DVector<C64> {
        let mut out = nalgebra::DVector::zeros(1usize << self.n_sites);
        for (k, &b) in self.basis.iter().enumerate() {
            out[b] = v[k];
        }
        out
    }
}

/// Largest dense dimension this crate will materialize.
pub const DENSE_LIMIT: usize = 1 << 12;

/// Full-space basis states with the requested particle numbers.
pub fn sector_basis(species: &[Species], sector: SymmetrySector) -> Result<Vec<usize>, HamiltonianError> {
    sector.check(species)?;
    let n = species.len();
    let mut out = Vec::new();
    for b in 0..(1usize << n) {
        let (mut p, mut q) = (0, 0);
        for (s, sp) in species.iter().enumerate() {
            if b >> (n - 1 - s) & 1 == 1 {
                match sp {
                    Species::Proton => p += 1,
                    Species::Neutron => q += 1,
                }
            }
        }
        if p == sector.n_protons && q == sector.n_neutrons {
            out.push(b);
        }
    }
    Ok(out)
}

/// Applies `a_site` (or `a+_site`) to a bit string, returning the new string
/// and the Jordan-Wigner sign, or `None` if the result vanishes.
fn apply_ladder(state: usize, n: usize, site: usize, kind: Ladder) -> Option<(usize, f64)> {
    let bit = 1usize << (n - 1 - site);
    let occupied = state & bit != 0;
    match (kind, occupied) {
        (Ladder::Create, true) | (Ladder::Annihilate, false) => None,
        _ => {
            // sites 0..site are the bits above `bit`
            let before = (state >> (n - site)).count_ones();
            let sign = if before % 2 == 0 { 1.0 } else { -1.0 };
            Some((state ^ bit, sign))
        }
    }
}

/// Dense matrix of `H` built by acting with the second-quantized operators on
/// occupation bit strings. Independent of the MPO path.
pub fn dense_hamiltonian(
    h: &ShellModelHamiltonian,
    m: &QubitMapping,
    sector: Option<SymmetrySector>,
) -> Result<DenseOperator, HamiltonianError> {
    let n = h.n_orbitals();
    if m.n_sites() != n {
        return Err(HamiltonianError::MappingMismatch {
            mapping: m.n_sites(),
            orbitals: n,
        });
    }
    let basis: Vec<usize> = match sector {
        Some(s) => {
            if n >= usize::BITS as usize - 1 {
                return Err(HamiltonianError::TooLarge(usize::MAX, DENSE_LIMIT));
            }
            sector_basis(m.site_species(), s)?
        }
        None => {
            if n > 12 {
                return Err(HamiltonianError::TooLarge(1usize << n.min(60), DENSE_LIMIT));
            }
            (0..(1usize << n)).collect()
        }
    };
    let dim = basis.len();
    if dim > DENSE_LIMIT {
        return Err(HamiltonianError::TooLarge(dim, DENSE_LIMIT));
    }
    let index: BTreeMap<usize, usize> = basis.iter().enumerate().map(|(k, &b)| (b, k)).collect();
    let site = |o: usize| m.site_of_orbital[o];
    let mut mat = CMat::zeros(dim, dim);
    for (col, &b) in basis.iter().enumerate() {
        for o in h.orbitals() {
            if b >> (n - 1 - site(o.index)) & 1 == 1 {
                mat[(col, col)] += c(o.energy, 0.0);
            }
        }
        'terms: for (&(i, j, k, l), &v) in h.two_body() {
            let mut state = b;
            let mut sign = 1.0;
            // rightmost operator acts first
            for (s, kind) in [
                (site(l), Ladder::Annihilate),
                (site(k), Ladder::Annihilate),
                (site(j), Ladder::Create),
                (site(i), Ladder::Create),
            ] {
                match apply_ladder(state, n, s, kind) {
                    Some((next, sg)) => {
                        state = next;
                        sign *= sg;
                    }
                    None => continue 'terms,
                }
            }
            if let Some(&row) = index.get(&state) {
                mat[(row, col)] += c(0.5 * v * sign, 0.0);
            }
        }
    }
    Ok(DenseOperator {
        matrix: mat,
        basis,
        n_sites: n,
    })
}

/// Eigenvalues (ascending) and eigenvectors of a dense Hermitian matrix.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let mut order: Vec<usize> = (0..m.nrows()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vecs = CMat::zeros(m.nrows(), m.ncols());
    for (dst, &src) in order.iter().enumerate() {
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orb(index: usize, tz2: i32, j2: i32, jz2: i32, energy: f64) -> Orbital {
        Orbital { index, tz2, n: 0, l: 2, j2, jz2, energy }
    }

    #[test]
    fn rejects_repeated_indices_and_unknown_orbitals() {
        let orbs = || alloc::vec![orb(0, 1, 1, 1, 0.0), orb(1, 1, 1, -1, 0.0), orb(2, 1, 3, 1, 0.0)];
        let err = ShellModelHamiltonian::new(orbs(), [((0, 0, 1, 2), 0.3)]).unwrap_err();
        assert_eq!(err, HamiltonianError::RepeatedCreationIndex((0, 0, 1, 2)));
        let err = ShellModelHamiltonian::new(orbs(), [((0, 1, 2, 2), 0.3)]).unwrap_err();
        assert_eq!(err, HamiltonianError::RepeatedAnnihilationIndex((0, 1, 2, 2)));
        let err = ShellModelHamiltonian::new(orbs(), [((0, 1, 0, 7), 0.3)]).unwrap_err();
        assert_eq!(err, HamiltonianError::UnknownOrbital((0, 1, 0, 7), 7));
        let err = ShellModelHamiltonian::new(orbs(), [((0, 1, 1, 2), 0.3)]).unwrap_err();
        assert_eq!(err, HamiltonianError::NonHermitian((0, 1, 1, 2)));
        assert!(ShellModelHamiltonian::new(orbs(), [((0, 1, 1, 2), 0.3), ((2, 1, 1, 0), 0.3)]).is_ok());
        let mixed = alloc::vec![orb(0, 1, 1, 1, 0.0), orb(1, -1, 1, 1, 0.0), orb(2, 1, 1, -1, 0.0)];
        let err = ShellModelHamiltonian::new(mixed, [((0, 2, 0, 1), 0.3)]).unwrap_err();
        assert_eq!(err, HamiltonianError::ChargeNonConserving((0, 2, 0, 1)));
    }

    #[test]
    fn ordering_pairs_time_reversed_partners() {
        let h = ShellModelHamiltonian::new(
            alloc::vec![orb(0, 1, 3, 1, 0.0), orb(1, 1, 3, -3, 0.0), orb(2, 1, 3, -1, 0.0), orb(3, 1, 3, 3, 0.0)],
            [],
        )
        .unwrap();
        let m = default_ordering(&h);
        let jz: Vec<i32> = m.orbital_of_site().iter().map(|&o| h.orbitals()[o].jz2).collect();
        assert_eq!(jz, [3, -3, 1, -1]);
    }

    #[test]
    fn ordering_separates_species_and_sorts_shells() {
        let h = ShellModelHamiltonian::new(
            alloc::vec![
                orb(0, -1, 1, 1, 0.0),
                orb(1, 1, 1, 1, 2.0),
                orb(2, -1, 1, -1, 0.0),
                Orbital { index: 3, tz2: 1, n: 1, l: 0, j2: 1, jz2: -1, energy: -1.0 },
            ],
            [],
        )
        .unwrap();
        let m = default_ordering(&h);
        assert_eq!(m.orbital_of_site(), &[3, 1, 0, 2]);
        assert_eq!(m.species_boundary(), Some(1));
        let single = ShellModelHamiltonian::new(alloc::vec![orb(0, 1, 1, 1, 1.0)], []).unwrap();
        assert_eq!(default_ordering(&single).site_of_orbital(), &[0]);
    }

    #[test]
    fn single_orbital_operator() {
        let h = ShellModelHamiltonian::new(alloc::vec![orb(0, 1, 1, 1, 2.0)], []).unwrap();
        let m = default_ordering(&h);
        let dense = build_mpo(&h, &m).unwrap().to_dense();
        assert!((dense[(1, 1)] - c(2.0, 0.0)).norm() < 1e-15);
        assert!(dense[(0, 0)].norm() < 1e-15);
        let oracle = dense_hamiltonian(&h, &m, None).unwrap();
        assert_eq!(oracle.matrix, CMat::from_diagonal(&nalgebra::DVector::from_vec(alloc::vec![ZERO, c(2.0, 0.0)])));
    }

    #[test]
    fn zero_hamiltonian_gives_zero_operator() {
        let h = ShellModelHamiltonian::new(
            alloc::vec![orb(0, 1, 1, 1, 0.0), orb(1, 1, 1, -1, 0.0), orb(2, -1, 1, 1, 0.0)],
            [],
        )
        .unwrap();
        let d = build_mpo(&h, &default_ordering(&h)).unwrap().to_dense();
        assert!(d.iter().all(|x| x.norm() < 1e-15));
    }

    #[test]
    fn pair_interaction_sign() {
        // a+_0 a+_1 a_0 a_1 = -n_0 n_1, so V = -1.5 gives +0.75 on |11>.
        let h = ShellModelHamiltonian::new(
            alloc::vec![orb(0, 1, 1, 1, 0.0), orb(1, 1, 1, -1, 0.0)],
            [((0, 1, 0, 1), -1.5)],
        )
        .unwrap();
        let m = QubitMapping::identity(&h);
        let d = dense_hamiltonian(&h, &m, None).unwrap().matrix;
        assert!((d[(3, 3)] - c(0.75, 0.0)).norm() < 1e-15);
        let mpo = build_mpo(&h, &m).unwrap().to_dense();
        assert!(linalg::max_abs_diff(&mpo, &d) < 1e-14);
    }
}
