//! Exact particle-number block structure for MPS bond bases.
//!
//! Every bond basis vector carries the proton and neutron counts of the part
//! of the chain on one side of the bond. Decompositions are done block by
//! block so the counts stay exact instead of drifting through rounding.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::hamiltonian::{Species, SymmetrySector};
use crate::linalg::{self, CMat, Svd};
use crate::mps::{self, Mps, MpsError};

pub(crate) type Counts = [i32; 2];

pub(crate) fn unit(species: Species) -> Counts {
    match species {
        Species::Proton => [1, 0],
        Species::Neutron => [0, 1],
    }
}

pub(crate) fn target(sector: SymmetrySector) -> Counts {
    [sector.n_protons as i32, sector.n_neutrons as i32]
}

pub(crate) fn shifted(c: Counts, u: Counts, s: usize) -> Counts {
    [c[0] + u[0] * s as i32, c[1] + u[1] * s as i32]
}

/// Counts of a new basis vector: the parent block holding most of its weight.
fn dominant(weights: impl Iterator<Item = (f64, Counts)>) -> Counts {
    let mut acc: BTreeMap<Counts, f64> = BTreeMap::new();
    for (w, c) in weights {
        *acc.entry(c).or_insert(0.0) += w;
    }
    acc.into_iter()
        .fold(([0, 0], -1.0), |best, (c, w)| if w > best.1 { (c, w) } else { best })
        .0
}

/// Left-part counts for the right bond of `a`, given counts on its left bond.
pub(crate) fn left_step(prev: &[Counts], a: &mps::Site, species: Species) -> Vec<Counts> {
    let u = unit(species);
    (0..a[0].ncols())
        .map(|j| {
            dominant((0..2).flat_map(|s| (0..a[s].nrows()).map(move |l| (a[s][(l, j)].norm_sqr(), shifted(prev[l], u, s)))))
        })
        .collect()
}

/// Right-part counts for the left bond of `b`, given counts on its right bond.
pub(crate) fn right_step(next: &[Counts], b: &mps::Site, species: Species) -> Vec<Counts> {
    let u = unit(species);
    (0..b[0].nrows())
        .map(|j| {
            dominant((0..2).flat_map(|s| (0..b[s].ncols()).map(move |r| (b[s][(j, r)].norm_sqr(), shifted(next[r], u, s)))))
        })
        .collect()
}

/// SVD of the blocks pairing row counts `a` with column counts `total - a`.
/// Entries outside those blocks are dropped. With `cols = None` every column
/// joins every row block. Returns the decomposition, sorted by singular
/// value, and the row counts of each singular triplet.
pub(crate) fn block_svd(m: &CMat, rows: &[Counts], cols: Option<&[Counts]>, total: Counts) -> (Svd, Vec<Counts>) {
    let mut groups: BTreeMap<Counts, Vec<usize>> = BTreeMap::new();
    for (r, c) in rows.iter().enumerate() {
        groups.entry(*c).or_default().push(r);
    }
    let mut parts = Vec::new();
    for (a, ridx) in groups {
        let cidx: Vec<usize> = match cols {
            Some(cl) => (0..m.ncols()).filter(|&j| cl[j] == [total[0] - a[0], total[1] - a[1]]).collect(),
            None => (0..m.ncols()).collect(),
        };
        if cidx.is_empty() {
            continue;
        }
        let sub = CMat::from_fn(ridx.len(), cidx.len(), |i, j| m[(ridx[i], cidx[j])]);
        parts.push((a, ridx, cidx, linalg::svd(&sub)));
    }
    let mut order: Vec<(f64, usize, usize)> = Vec::new();
    for (p, (_, _, _, d)) in parts.iter().enumerate() {
        for (q, &s) in d.s.iter().enumerate() {
            order.push((s, p, q));
        }
    }
    order.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(core::cmp::Ordering::Equal));
    let k = order.len();
    let mut u = CMat::zeros(m.nrows(), k);
    let mut v_t = CMat::zeros(k, m.ncols());
    let mut s = Vec::with_capacity(k);
    let mut labels = Vec::with_capacity(k);
    for (dst, &(sv, p, q)) in order.iter().enumerate() {
        let (a, ridx, cidx, d) = &parts[p];
        for (i, &r) in ridx.iter().enumerate() {
            u[(r, dst)] = d.u[(i, q)];
        }
        for (j, &col) in cidx.iter().enumerate() {
            v_t[(dst, col)] = d.v_t[(q, j)];
        }
        s.push(sv);
        labels.push(*a);
    }
    (Svd { u, s, v_t }, labels)
}

/// Projects `psi` onto `sector` and rewrites it so every bond basis vector
/// has definite counts. Truncates to `chi_max` and `sv_tol` on the way.
/// The result is normalized with its center on site 0.
pub fn project(psi: &Mps, species: &[Species], sector: SymmetrySector, chi_max: usize, sv_tol: f64) -> Result<Mps, MpsError> {
    let n = psi.n_sites();
    if species.len() != n {
        return Err(MpsError::SiteCountMismatch(species.len(), n));
    }
    let total = target(sector);
    let mut t = psi.tensors.clone();
    let mut lefts: Vec<Vec<Counts>> = alloc::vec![alloc::vec![[0, 0]]];
    for k in 0..n {
        let u = unit(species[k]);
        let cl = t[k][0].nrows();
        let rows: Vec<Counts> = (0..2 * cl).map(|r| shifted(lefts[k][r % cl], u, r / cl)).collect();
        if k + 1 == n {
            for s in 0..2 {
                for l in 0..cl {
                    if rows[s * cl + l] != total {
                        t[k][s].row_mut(l).fill(linalg::ZERO);
                    }
                }
            }
            break;
        }
        let (mut dec, mut labels) = block_svd(&mps::group_left(&t[k]), &rows, None, total);
        dec.truncate(usize::MAX, 0.0);
        labels.truncate(dec.s.len());
        t[k] = mps::ungroup_left(&dec.u, cl);
        let rem = mps::scale_rows(&dec.v_t, &dec.s);
        t[k + 1] = [&rem * &t[k + 1][0], &rem * &t[k + 1][1]];
        lefts.push(labels);
    }
    let mut right: Vec<Counts> = alloc::vec![[0, 0]];
    for k in (1..n).rev() {
        let u = unit(species[k]);
        let cr = t[k][0].ncols();
        let cols: Vec<Counts> = (0..2 * cr).map(|col| shifted(right[col % cr], u, col / cr)).collect();
        let (mut dec, mut labels) = block_svd(&mps::group_right(&t[k]), &lefts[k], Some(&cols), total);
        if dec.s.is_empty() {
            return Err(MpsError::ZeroNorm);
        }
        dec.truncate(chi_max, sv_tol);
        labels.truncate(dec.s.len());
        t[k] = mps::ungroup_right(&dec.v_t, cr);
        let us = mps::scale_cols(&dec.u, &dec.s);
        t[k - 1] = [&t[k - 1][0] * &us, &t[k - 1][1] * &us];
        right = labels.iter().map(|a| [total[0] - a[0], total[1] - a[1]]).collect();
    }
    if n == 1 {
        let rows: Vec<Counts> = (0..2).map(|s| shifted([0, 0], unit(species[0]), s)).collect();
        for s in 0..2 {
            if rows[s] != total {
                t[0][s].fill(linalg::ZERO);
            }
        }
    }
    Mps {
        tensors: t,
        center: Some(0),
    }
    .normalized()
}
