//! Matrix product operators over qubit sites.
//!
//! Site `i` holds four `w_{i-1} x w_i` matrices `w[out][in]`; the operator is
//! `sum_{out,in} prod_i W_i[out_i][in_i] |out><in|`, boundary bonds have size 1.

use alloc::vec::Vec;

use crate::linalg::{self, CMat, C64, ONE, ZERO};

#[derive(Clone, Debug)]
pub struct MpoSite {
    pub w: [[CMat; 2]; 2],
}

impl MpoSite {
    pub fn left_dim(&self) -> usize {
        self.w[0][0].nrows()
    }

    pub fn right_dim(&self) -> usize {
        self.w[0][0].ncols()
    }

    fn from_local(op: &CMat, coef: C64) -> Self {
        let e = |o: usize, i: usize| CMat::from_element(1, 1, op[(o, i)] * coef);
        MpoSite {
            w: [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Mpo {
    pub sites: Vec<MpoSite>,
}

impl Mpo {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.sites.iter().map(|s| s.right_dim()).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.sites.iter().map(MpoSite::right_dim).max().unwrap_or(1)
    }

    pub fn identity(n: usize) -> Self {
        Self::product(ONE, &alloc::vec![linalg::identity(2); n])
    }

    pub fn zero(n: usize) -> Self {
        Self::product(ZERO, &alloc::vec![linalg::identity(2); n])
    }

    /// `coef * (ops[0] (x) ops[1] (x) ...)`, bond dimension 1.
    pub fn product(coef: C64, ops: &[CMat]) -> Self {
        assert!(!ops.is_empty());
        let sites = ops
            .iter()
            .enumerate()
            .map(|(k, op)| MpoSite::from_local(op, if k == 0 { coef } else { ONE }))
            .collect();
        Mpo { sites }
    }

    /// `sum_k coef_k * op_k` acting on single sites, built with bond dimension 2.
    pub fn local_sum(n: usize, terms: &[(usize, C64, CMat)]) -> Self {
        let id = linalg::identity(2);
        let mut sites = Vec::with_capacity(n);
        for s in 0..n {
            let mut local = CMat::zeros(2, 2);
            for (site, coef, op) in terms {
                if *site == s {
                    local += op * *coef;
                }
            }
            let (wl, wr) = (if s == 0 { 1 } else { 2 }, if s + 1 == n { 1 } else { 2 });
            let mut w: [[CMat; 2]; 2] = core::array::from_fn(|_| {
                core::array::from_fn(|_| CMat::zeros(wl, wr))
            });
            for o in 0..2 {
                for i in 0..2 {
                    // State 0 = "nothing placed yet", state 1 = "term already placed".
                    let m = &mut w[o][i];
                    match (wl, wr) {
                        (1, 1) => m[(0, 0)] = local[(o, i)],
                        (1, 2) => {
                            m[(0, 0)] = id[(o, i)];
                            m[(0, 1)] = local[(o, i)];
                        }
                        (2, 1) => {
                            m[(0, 0)] = local[(o, i)];
                            m[(1, 0)] = id[(o, i)];
                        }
                        _ => {
                            m[(0, 0)] = id[(o, i)];
                            m[(0, 1)] = local[(o, i)];
                            m[(1, 1)] = id[(o, i)];
                        }
                    }
                }
            }
            sites.push(MpoSite { w });
        }
        Mpo { sites }
    }

    pub fn scale(mut self, coef: C64) -> Self {
        for row in self.sites[0].w.iter_mut() {
            for m in row.iter_mut() {
                *m *= coef;
            }
        }
        self
    }

    /// Operator sum; bond dimensions add.
    pub fn add(&self, other: &Mpo) -> Mpo {
        assert_eq!(self.n_sites(), other.n_sites());
        let n = self.n_sites();
        let sites = (0..n)
            .map(|s| {
                let (a, b) = (&self.sites[s], &other.sites[s]);
                let w = core::array::from_fn(|o| {
                    core::array::from_fn(|i| {
                        let (ma, mb) = (&a.w[o][i], &b.w[o][i]);
                        if n == 1 {
                            ma + mb
                        } else if s == 0 {
                            hstack(ma, mb)
                        } else if s + 1 == n {
                            vstack(ma, mb)
                        } else {
                            block_diag(ma, mb)
                        }
                    })
                });
                MpoSite { w }
            })
            .collect();
        Mpo { sites }
    }

    /// Operator product `self * other`; bond dimensions multiply.
    pub fn mul(&self, other: &Mpo) -> Mpo {
        assert_eq!(self.n_sites(), other.n_sites());
        let sites = self
            .sites
            .iter()
            .zip(&other.sites)
            .map(|(a, b)| {
                let w = core::array::from_fn(|o| {
                    core::array::from_fn(|i| {
                        linalg::kron(&a.w[o][0], &b.w[0][i]) + linalg::kron(&a.w[o][1], &b.w[1][i])
                    })
                });
                MpoSite { w }
            })
            .collect();
        Mpo { sites }
    }

    /// Hermitian conjugate.
    pub fn adjoint(&self) -> Mpo {
        let sites = self
            .sites
            .iter()
            .map(|s| MpoSite {
                w: core::array::from_fn(|o| core::array::from_fn(|i| s.w[i][o].map(|x| x.conj()))),
            })
            .collect();
        Mpo { sites }
    }

    /// Bond compression: left-orthogonalize with QR, then sweep back with SVD
    /// dropping singular values below `rel_tol * s_max` on each bond.
    /// The weights move left with the sweep so every cut sees orthonormal
    /// environments on both sides.
    pub fn compress(mut self, rel_tol: f64) -> Mpo {
        let n = self.n_sites();
        if n < 2 {
            return self;
        }
        for s in 0..n - 1 {
            let m = group_left(&self.sites[s]);
            let qr = m.qr();
            let (q, r) = (qr.q(), qr.r());
            self.sites[s] = ungroup_left(&q, self.sites[s].left_dim());
            for row in self.sites[s + 1].w.iter_mut() {
                for x in row.iter_mut() {
                    *x = &r * &*x;
                }
            }
        }
        for s in (1..n).rev() {
            let m = group_right(&self.sites[s]);
            let dec = linalg::svd(&m);
            let smax = dec.s.first().copied().unwrap_or(0.0);
            let keep = dec
                .s
                .iter()
                .take_while(|&&x| x > rel_tol * smax)
                .count()
                .max(1);
            let us = CMat::from_fn(dec.u.nrows(), keep, |r, col| dec.u[(r, col)] * dec.s[col]);
            let vt = dec.v_t.rows(0, keep).into_owned();
            self.sites[s] = ungroup_right(&vt, self.sites[s].right_dim());
            for row in self.sites[s - 1].w.iter_mut() {
                for x in row.iter_mut() {
                    *x = &*x * &us;
                }
            }
        }
        self
    }

    /// Dense `2^n x 2^n` matrix; site 0 is the most significant bit.
    pub fn to_dense(&self) -> CMat {
        let n = self.n_sites();
        let dim = 1usize << n;
        // rows: (out prefix, in prefix) pairs flattened, values: bond row vectors
        let mut partial: Vec<(usize, usize, CMat)> = alloc::vec![(0, 0, CMat::identity(1, 1))];
        for site in &self.sites {
            let mut next = Vec::with_capacity(partial.len() * 4);
            for (o_pre, i_pre, v) in &partial {
                for o in 0..2 {
                    for i in 0..2 {
                        let w = &site.w[o][i];
                        if w.iter().all(|x| *x == ZERO) {
                            continue;
                        }
                        let nv = v * w;
                        next.push(((o_pre << 1) | o, (i_pre << 1) | i, nv));
                    }
                }
            }
            partial = next;
        }
        let mut out = CMat::zeros(dim, dim);
        for (o, i, v) in partial {
            out[(o, i)] += v[(0, 0)];
        }
        out
    }
}

fn hstack(a: &CMat, b: &CMat) -> CMat {
    let mut m = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

fn vstack(a: &CMat, b: &CMat) -> CMat {
    let mut m = CMat::zeros(a.nrows() + b.nrows(), a.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
    m
}

fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut m = CMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    m
}

// Physical pair (o, i) maps to block p = 2 * o + i.
fn group_left(site: &MpoSite) -> CMat {
    let (wl, wr) = (site.left_dim(), site.right_dim());
    let mut m = CMat::zeros(4 * wl, wr);
    for p in 0..4 {
        m.view_mut((p * wl, 0), (wl, wr)).copy_from(&site.w[p / 2][p % 2]);
    }
    m
}

fn ungroup_left(m: &CMat, wl: usize) -> MpoSite {
    let wr = m.ncols();
    MpoSite {
        w: core::array::from_fn(|o| {
            core::array::from_fn(|i| m.view(((2 * o + i) * wl, 0), (wl, wr)).into_owned())
        }),
    }
}

fn group_right(site: &MpoSite) -> CMat {
    let (wl, wr) = (site.left_dim(), site.right_dim());
    let mut m = CMat::zeros(wl, 4 * wr);
    for p in 0..4 {
        m.view_mut((0, p * wr), (wl, wr)).copy_from(&site.w[p / 2][p % 2]);
    }
    m
}

fn ungroup_right(m: &CMat, wr: usize) -> MpoSite {
    let wl = m.nrows();
    MpoSite {
        w: core::array::from_fn(|o| {
            core::array::from_fn(|i| m.view((0, (2 * o + i) * wr), (wl, wr)).into_owned())
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, gates, max_abs_diff};

    #[test]
    fn local_sum_matches_dense_sum() {
        let n = 4;
        let terms: Vec<_> = (0..n)
            .map(|s| (s, c(0.5 + s as f64, 0.0), gates::z()))
            .collect();
        let mpo = Mpo::local_sum(n, &terms);
        let mut dense = CMat::zeros(16, 16);
        for (s, coef, op) in &terms {
            let mut ops = alloc::vec![linalg::identity(2); n];
            ops[*s] = op.clone();
            dense += Mpo::product(*coef, &ops).to_dense();
        }
        assert!(max_abs_diff(&mpo.to_dense(), &dense) < 1e-14);
    }

    #[test]
    fn add_mul_compress_are_consistent() {
        
        let a = Mpo::product(c(0.3, 0.0), &[gates::x(), gates::z(), gates::h()]);
        let b = Mpo::product(c(-1.2, 0.5), &[gates::s(), gates::y(), gates::x()]);
        let sum = a.add(&b).add(&a);
        let da = a.to_dense();
        let db = b.to_dense();
        assert!(max_abs_diff(&sum.to_dense(), &(&da * c(2.0, 0.0) + &db)) < 1e-13);
        let compressed = sum.clone().compress(1e-12);
        assert!(compressed.max_bond() <= 2);
        assert!(max_abs_diff(&compressed.to_dense(), &sum.to_dense()) < 1e-12);
        assert!(max_abs_diff(&a.mul(&b).to_dense(), &(&da * &db)) < 1e-13);
        assert!(max_abs_diff(&b.adjoint().to_dense(), &db.adjoint()) < 1e-14);
    }

    #[test]
    fn compressed_square_of_shifted_number_is_exact() {
        let n = 8;
        let z = (0..n).map(|s| (s, c(0.5, 0.0), linalg::identity(2) - gates::z())).collect::<Vec<_>>();
        let d = Mpo::local_sum(n, &z).add(&Mpo::identity(n).scale(c(-3.0, 0.0)));
        let sq = d.mul(&d);
        let compressed = sq.clone().compress(1e-12);
        assert!(compressed.max_bond() <= 3);
        assert!(max_abs_diff(&compressed.to_dense(), &sq.to_dense()) < 1e-10);
    }
}
