//! Open-boundary matrix product states of qubits.
//!
//! Site `i` stores two matrices `A_i[s]` of shape `chi_{i-1} x chi_i`, and the
//! amplitude of `|s_0 s_1 ... >` is the 1x1 product `A_0[s_0] A_1[s_1] ...`.

use alloc::collections::BTreeSet;
use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hamiltonian::{HamiltonianError, QubitMapping, Species, SymmetrySector};
use crate::linalg::{self, c, CMat, Svd, C64, ONE, ZERO};
use crate::mpo::Mpo;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MpsError {
    #[error("site count mismatch: {0} vs {1}")]
    SiteCountMismatch(usize, usize),
    #[error("site {site} out of range for {n} sites")]
    SiteOutOfRange { site: usize, n: usize },
    #[error("gate is not unitary (deviation {0:.3e})")]
    NonUnitary(f64),
    #[error("expectation value has imaginary part {0:.3e}; operator is not Hermitian")]
    ComplexExpectation(f64),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error(transparent)]
    Sector(#[from] HamiltonianError),
}

pub type Site = [CMat; 2];

#[derive(Clone, Debug)]
pub struct Mps {
    pub tensors: Vec<Site>,
    /// Orthogonality center, if the state is known to be in mixed-canonical form.
    pub center: Option<usize>,
}

impl Mps {
    pub fn n_sites(&self) -> usize {
        self.tensors.len()
    }

    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors[..self.n_sites() - 1].iter().map(|t| t[0].ncols()).collect()
    }

    pub fn max_bond(&self) -> usize {
        self.tensors.iter().map(|t| t[0].ncols().max(t[0].nrows())).max().unwrap_or(1)
    }

    /// Computational basis state, `bits[i]` on site `i`.
    pub fn product_state(bits: &[u8]) -> Mps {
        let tensors = bits
            .iter()
            .map(|&b| {
                let mut t = [CMat::zeros(1, 1), CMat::zeros(1, 1)];
                t[(b & 1) as usize][(0, 0)] = ONE;
                t
            })
            .collect();
        Mps {
            tensors,
            center: Some(0),
        }
    }

    pub fn zero_state(n: usize) -> Mps {
        Self::product_state(&alloc::vec![0; n])
    }

    /// Exact (up to `sv_tol`) MPS of a dense `2^n` vector, left-canonical with
    /// the norm on the last site.
    pub fn from_dense(v: &[C64], n: usize, chi_max: usize, sv_tol: f64) -> Mps {
        assert_eq!(v.len(), 1usize << n);
        let mut tensors = Vec::with_capacity(n);
        // rest: chi x 2^(n-k) with column index = remaining bits
        let mut rest = CMat::from_row_slice(1, v.len(), v);
        for k in 0..n {
            let chi = rest.nrows();
            let cols = rest.ncols() / 2;
            // group (l, s) -> row s * chi + l
            let mut m = CMat::zeros(2 * chi, cols);
            for s in 0..2 {
                m.view_mut((s * chi, 0), (chi, cols))
                    .copy_from(&rest.columns(s * cols, cols));
            }
            if k + 1 == n {
                tensors.push(ungroup_left(&m, chi));
                break;
            }
            let mut dec = linalg::svd(&m);
            dec.truncate(chi_max, sv_tol);
            tensors.push(ungroup_left(&dec.u, chi));
            rest = scale_rows(&dec.v_t, &dec.s);
        }
        Mps {
            tensors,
            center: Some(n - 1),
        }
    }

    /// Dense amplitudes, site 0 the most significant bit.
    pub fn to_dense(&self) -> Vec<C64> {
        let mut rows: Vec<CMat> = alloc::vec![CMat::identity(1, 1)];
        for t in &self.tensors {
            let mut next = Vec::with_capacity(rows.len() * 2);
            for r in &rows {
                next.push(r * &t[0]);
                next.push(r * &t[1]);
            }
            rows = next;
        }
        rows.iter().map(|r| r[(0, 0)]).collect()
    }

    pub fn norm(&self) -> f64 {
        overlap_unchecked(self, self).re.max(0.0).sqrt()
    }

    pub fn scale(mut self, f: C64) -> Mps {
        let k = self.center.unwrap_or(0);
        for m in self.tensors[k].iter_mut() {
            *m *= f;
        }
        self
    }

    pub fn normalized(self) -> Result<Mps, MpsError> {
        let s = self.canonicalize(0);
        let nrm = s.norm();
        if !(nrm > 0.0) {
            return Err(MpsError::ZeroNorm);
        }
        Ok(s.scale(c(1.0 / nrm, 0.0)))
    }

    /// Brings the state into mixed-canonical form around `center` using QR.
    pub fn canonicalize(mut self, center: usize) -> Mps {
        let n = self.n_sites();
        assert!(center < n);
        let (lo, hi) = match self.center {
            Some(cur) => (cur.min(center), cur.max(center)),
            None => (0, n - 1),
        };
        let start_left = if self.center.is_some() { lo } else { 0 };
        for k in start_left..center {
            self.shift_right(k);
        }
        let start_right = if self.center.is_some() { hi } else { n - 1 };
        for k in ((center + 1)..=start_right).rev() {
            self.shift_left(k);
        }
        self.center = Some(center);
        self
    }

    /// QR of site `k`; the triangular factor is pushed into site `k + 1`.
    fn shift_right(&mut self, k: usize) {
        let chi_l = self.tensors[k][0].nrows();
        let qr = group_left(&self.tensors[k]).qr();
        let (q, r) = (qr.q(), qr.r());
        self.tensors[k] = ungroup_left(&q, chi_l);
        for m in self.tensors[k + 1].iter_mut() {
            *m = &r * &*m;
        }
    }

    /// LQ of site `k`; the triangular factor is pushed into site `k - 1`.
    fn shift_left(&mut self, k: usize) {
        let chi_r = self.tensors[k][0].ncols();
        let qr = group_right(&self.tensors[k]).adjoint().qr();
        let (q, r) = (qr.q(), qr.r());
        self.tensors[k] = ungroup_right(&q.adjoint(), chi_r);
        let ra = r.adjoint();
        for m in self.tensors[k - 1].iter_mut() {
            *m = &*m * &ra;
        }
    }

    /// `sum_s A[s]^dagger A[s]` deviation from identity.
    pub fn left_orthonormality_error(&self, k: usize) -> f64 {
        let t = &self.tensors[k];
        let g = t[0].adjoint() * &t[0] + t[1].adjoint() * &t[1];
        linalg::max_abs_diff(&g, &linalg::identity(g.nrows()))
    }

    pub fn right_orthonormality_error(&self, k: usize) -> f64 {
        let t = &self.tensors[k];
        let g = &t[0] * t[0].adjoint() + &t[1] * t[1].adjoint();
        linalg::max_abs_diff(&g, &linalg::identity(g.nrows()))
    }

    /// Superposition `self + other`; bond dimensions add.
    pub fn add(&self, other: &Mps) -> Result<Mps, MpsError> {
        let n = self.n_sites();
        if n != other.n_sites() {
            return Err(MpsError::SiteCountMismatch(n, other.n_sites()));
        }
        let tensors = (0..n)
            .map(|k| {
                core::array::from_fn(|s| {
                    let (a, b) = (&self.tensors[k][s], &other.tensors[k][s]);
                    if n == 1 {
                        a + b
                    } else if k == 0 {
                        let mut m = CMat::zeros(1, a.ncols() + b.ncols());
                        m.view_mut((0, 0), a.shape()).copy_from(a);
                        m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
                        m
                    } else if k + 1 == n {
                        let mut m = CMat::zeros(a.nrows() + b.nrows(), 1);
                        m.view_mut((0, 0), a.shape()).copy_from(a);
                        m.view_mut((a.nrows(), 0), b.shape()).copy_from(b);
                        m
                    } else {
                        let mut m = CMat::zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
                        m.view_mut((0, 0), a.shape()).copy_from(a);
                        m.view_mut(a.shape(), b.shape()).copy_from(b);
                        m
                    }
                })
            })
            .collect();
        Ok(Mps {
            tensors,
            center: None,
        })
    }

    /// Sequential SVD truncation from the left after right-canonicalization.
    /// Keeps at most `chi_max` values per bond and drops those below
    /// `sv_tol` relative to the bond spectrum. Returns the summed discarded weight.
    pub fn truncate(self, chi_max: usize, sv_tol: f64) -> (Mps, f64) {
        let n = self.n_sites();
        let mut s = self.canonicalize(0);
        let mut discarded = 0.0;
        for k in 0..n.saturating_sub(1) {
            let chi_l = s.tensors[k][0].nrows();
            let mut dec = linalg::svd(&group_left(&s.tensors[k]));
            discarded += dec.truncate(chi_max, sv_tol);
            s.tensors[k] = ungroup_left(&dec.u, chi_l);
            let sv = scale_rows(&dec.v_t, &dec.s);
            for m in s.tensors[k + 1].iter_mut() {
                *m = &sv * &*m;
            }
        }
        s.center = Some(n - 1);
        (s, discarded)
    }
}

pub(crate) fn scale_rows(m: &CMat, s: &[f64]) -> CMat {
    CMat::from_fn(s.len(), m.ncols(), |r, col| m[(r, col)] * s[r])
}

pub(crate) fn scale_cols(m: &CMat, s: &[f64]) -> CMat {
    CMat::from_fn(m.nrows(), s.len(), |r, col| m[(r, col)] * s[col])
}

/// Stack `A[0]` over `A[1]`: row `s * chi_l + l`.
pub(crate) fn group_left(t: &Site) -> CMat {
    let (l, r) = t[0].shape();
    let mut m = CMat::zeros(2 * l, r);
    m.view_mut((0, 0), (l, r)).copy_from(&t[0]);
    m.view_mut((l, 0), (l, r)).copy_from(&t[1]);
    m
}

pub(crate) fn ungroup_left(m: &CMat, chi_l: usize) -> Site {
    let r = m.ncols();
    [
        m.view((0, 0), (chi_l, r)).into_owned(),
        m.view((chi_l, 0), (chi_l, r)).into_owned(),
    ]
}

/// `[A[0] A[1]]`: column `s * chi_r + r`.
pub(crate) fn group_right(t: &Site) -> CMat {
    let (l, r) = t[0].shape();
    let mut m = CMat::zeros(l, 2 * r);
    m.view_mut((0, 0), (l, r)).copy_from(&t[0]);
    m.view_mut((0, r), (l, r)).copy_from(&t[1]);
    m
}

pub(crate) fn ungroup_right(m: &CMat, chi_r: usize) -> Site {
    let l = m.nrows();
    [
        m.view((0, 0), (l, chi_r)).into_owned(),
        m.view((0, chi_r), (l, chi_r)).into_owned(),
    ]
}

/// Two-site block `Theta[(s1, l), (s2, r)] = (A[s1] B[s2])[l, r]`.
pub(crate) fn two_site(a: &Site, b: &Site) -> CMat {
    let (l, r) = (a[0].nrows(), b[0].ncols());
    let mut m = CMat::zeros(2 * l, 2 * r);
    for s1 in 0..2 {
        for s2 in 0..2 {
            m.view_mut((s1 * l, s2 * r), (l, r)).copy_from(&(&a[s1] * &b[s2]));
        }
    }
    m
}

/// Splits a two-site block. With `left_canonical` the singular values go to
/// the right tensor, otherwise to the left one. Returns the discarded weight
/// and the kept singular values.
pub(crate) fn split_two_site(
    theta: &CMat,
    chi_l: usize,
    chi_max: usize,
    sv_tol: f64,
    left_canonical: bool,
) -> (Site, Site, f64, Vec<f64>) {
    let mut dec: Svd = linalg::svd(theta);
    let w = dec.truncate(chi_max, sv_tol);
    let (a, b) = split_from_svd(&dec, chi_l, theta.ncols() / 2, left_canonical);
    (a, b, w, dec.s)
}

/// Site pair from a (truncated) SVD of a two-site block; the weights go to
/// the right site when `left_canonical`, else to the left one.
pub(crate) fn split_from_svd(dec: &Svd, chi_l: usize, chi_r: usize, left_canonical: bool) -> (Site, Site) {
    let (u, vt) = if left_canonical {
        (dec.u.clone(), scale_rows(&dec.v_t, &dec.s))
    } else {
        (scale_cols(&dec.u, &dec.s), dec.v_t.clone())
    };
    (ungroup_left(&u, chi_l), ungroup_right(&vt, chi_r))
}

fn overlap_unchecked(a: &Mps, b: &Mps) -> C64 {
    let mut e = CMat::identity(1, 1);
    for (x, y) in a.tensors.iter().zip(&b.tensors) {
        e = overlap_left_step(&e, x, y);
    }
    e[(0, 0)]
}

/// `E' = sum_s A[s]^dagger E B[s]` (bra `a`, ket `b`).
pub(crate) fn overlap_left_step(e: &CMat, a: &Site, b: &Site) -> CMat {
    a[0].adjoint() * e * &b[0] + a[1].adjoint() * e * &b[1]
}

/// `E' = sum_s B[s] E A[s]^dagger`, shape `chi_ket x chi_bra`.
pub(crate) fn overlap_right_step(e: &CMat, a: &Site, b: &Site) -> CMat {
    &b[0] * e * a[0].adjoint() + &b[1] * e * a[1].adjoint()
}

/// `<a|b>` without normalization.
pub fn overlap(a: &Mps, b: &Mps) -> Result<C64, MpsError> {
    if a.n_sites() != b.n_sites() {
        return Err(MpsError::SiteCountMismatch(a.n_sites(), b.n_sites()));
    }
    Ok(overlap_unchecked(a, b))
}

/// One MPO left-environment step. `env[b]` is `chi_bra x chi_ket`.
pub(crate) fn mpo_left_step(env: &[CMat], a: &Site, w: &crate::mpo::MpoSite, b: &Site) -> Vec<CMat> {
    let (wl, wr) = (w.left_dim(), w.right_dim());
    let t: Vec<[CMat; 2]> = env.iter().map(|e| [e * &b[0], e * &b[1]]).collect();
    let (cb, ck) = (a[0].ncols(), b[0].ncols());
    let mut out = alloc::vec![CMat::zeros(cb, ck); wr];
    for o in 0..2 {
        let ad = a[o].adjoint();
        for bp in 0..wr {
            let mut x: Option<CMat> = None;
            for i in 0..2 {
                let wm = &w.w[o][i];
                for bb in 0..wl {
                    let coef = wm[(bb, bp)];
                    if coef == ZERO {
                        continue;
                    }
                    match &mut x {
                        Some(acc) => *acc += &t[bb][i] * coef,
                        None => x = Some(&t[bb][i] * coef),
                    }
                }
            }
            if let Some(x) = x {
                out[bp] += &ad * x;
            }
        }
    }
    out
}

/// One MPO right-environment step. `env[b]` is `chi_ket x chi_bra`.
pub(crate) fn mpo_right_step(env: &[CMat], a: &Site, w: &crate::mpo::MpoSite, b: &Site) -> Vec<CMat> {
    let (wl, wr) = (w.left_dim(), w.right_dim());
    let t: Vec<[CMat; 2]> = env
        .iter()
        .map(|e| [e * a[0].adjoint(), e * a[1].adjoint()])
        .collect();
    let (ck, cb) = (b[0].nrows(), a[0].nrows());
    let mut out = alloc::vec![CMat::zeros(ck, cb); wl];
    for i in 0..2 {
        for bb in 0..wl {
            let mut x: Option<CMat> = None;
            for o in 0..2 {
                let wm = &w.w[o][i];
                for bp in 0..wr {
                    let coef = wm[(bb, bp)];
                    if coef == ZERO {
                        continue;
                    }
                    match &mut x {
                        Some(acc) => *acc += &t[bp][o] * coef,
                        None => x = Some(&t[bp][o] * coef),
                    }
                }
            }
            if let Some(x) = x {
                out[bb] += &b[i] * x;
            }
        }
    }
    out
}

/// `<a|op|b>`.
pub fn matrix_element(a: &Mps, op: &Mpo, b: &Mps) -> Result<C64, MpsError> {
    let n = a.n_sites();
    if n != b.n_sites() {
        return Err(MpsError::SiteCountMismatch(n, b.n_sites()));
    }
    if n != op.n_sites() {
        return Err(MpsError::SiteCountMismatch(n, op.n_sites()));
    }
    let mut env = alloc::vec![CMat::identity(1, 1)];
    for k in 0..n {
        env = mpo_left_step(&env, &a.tensors[k], &op.sites[k], &b.tensors[k]);
    }
    Ok(env[0][(0, 0)])
}

/// Rayleigh quotient `<s|op|s> / <s|s>`.
pub fn expectation(op: &Mpo, s: &Mps) -> Result<f64, MpsError> {
    let num = matrix_element(s, op, s)?;
    let den = overlap_unchecked(s, s).re;
    if !(den > 0.0) {
        return Err(MpsError::ZeroNorm);
    }
    let v = num / den;
    if v.im.abs() > 1e-10 * v.re.abs().max(1.0) {
        return Err(MpsError::ComplexExpectation(v.im));
    }
    Ok(v.re)
}

/// Variational compression; see [`compress_with_history`].
pub fn compress(target: &Mps, chi_max: usize, n_sweeps: usize) -> Mps {
    compress_with_history(target, chi_max, n_sweeps).0
}

/// Unit-norm approximation of `target` with bonds at most `chi_max`.
///
/// Starts from the SVD truncation of `target` and runs `n_sweeps` two-site
/// sweeps, each replacing a bond pair by the best rank-`chi_max` fit of the
/// projected target. Also returns `|<result|target>| / ||target||` after
/// initialization and after every sweep.
pub fn compress_with_history(target: &Mps, chi_max: usize, n_sweeps: usize) -> (Mps, Vec<f64>) {
    let chi_max = chi_max.max(1);
    let n = target.n_sites();
    let tnorm = target.norm();
    let (init, _) = target.clone().truncate(chi_max, 0.0);
    let mut psi = match init.normalized() {
        Ok(p) => p,
        Err(_) => return (Mps::zero_state(n), alloc::vec![0.0]),
    };
    let fidelity = |p: &Mps| overlap_unchecked(p, target).norm() / tnorm;
    let mut history = alloc::vec![fidelity(&psi)];
    if n < 2 {
        return (psi, history);
    }
    // psi is right-canonical with center 0.
    let mut left: Vec<CMat> = alloc::vec![CMat::identity(1, 1); n + 1];
    let mut right: Vec<CMat> = alloc::vec![CMat::identity(1, 1); n + 1];
    // right[k] holds sites k.. ; shape chi_t x chi_psi
    for k in (1..n).rev() {
        right[k] = overlap_right_step(&right[k + 1], &psi.tensors[k], &target.tensors[k]);
    }
    for _ in 0..n_sweeps {
        for k in 0..n - 1 {
            let m = sandwich(&left[k], &two_site(&target.tensors[k], &target.tensors[k + 1]), &right[k + 2]);
            let (a, b, _, _) = split_normalized(&m, psi.tensors[k][0].nrows(), chi_max, true);
            psi.tensors[k] = a;
            psi.tensors[k + 1] = b;
            left[k + 1] = overlap_left_step(&left[k], &psi.tensors[k], &target.tensors[k]);
        }
        for k in (0..n - 1).rev() {
            let m = sandwich(&left[k], &two_site(&target.tensors[k], &target.tensors[k + 1]), &right[k + 2]);
            let (a, b, _, _) = split_normalized(&m, psi.tensors[k][0].nrows(), chi_max, false);
            psi.tensors[k] = a;
            psi.tensors[k + 1] = b;
            right[k + 1] = overlap_right_step(&right[k + 2], &psi.tensors[k + 1], &target.tensors[k + 1]);
        }
        psi.center = Some(0);
        history.push(fidelity(&psi));
    }
    (psi, history)
}

/// Blockwise `L Theta[s1, s2] R` for a two-site block.
pub(crate) fn sandwich(l: &CMat, theta: &CMat, r: &CMat) -> CMat {
    let (ct_l, ct_r) = (l.ncols(), r.nrows());
    let (cp_l, cp_r) = (l.nrows(), r.ncols());
    let mut out = CMat::zeros(2 * cp_l, 2 * cp_r);
    for s1 in 0..2 {
        for s2 in 0..2 {
            let block = l * theta.view((s1 * ct_l, s2 * ct_r), (ct_l, ct_r)) * r;
            out.view_mut((s1 * cp_l, s2 * cp_r), (cp_l, cp_r)).copy_from(&block);
        }
    }
    out
}

fn split_normalized(m: &CMat, chi_l: usize, chi_max: usize, left_canonical: bool) -> (Site, Site, f64, Vec<f64>) {
    let (mut a, mut b, w, s) = split_two_site(m, chi_l, chi_max, 0.0, left_canonical);
    let nrm: f64 = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nrm > 0.0 {
        let f = c(1.0 / nrm, 0.0);
        let t = if left_canonical { &mut b } else { &mut a };
        for x in t.iter_mut() {
            *x *= f;
        }
    }
    (a, b, w, s)
}

/// Applies a two-qubit gate to sites `(site, site + 1)`, indexed `2 s_site + s_{site+1}`.
///
/// The block is re-split keeping at most `chi_max` singular values and
/// dropping those below `sv_tol` relative to the block norm. The state is not
/// renormalized. Returns the new state and the discarded weight.
pub fn apply_gate(s: &Mps, g: &CMat, site: usize, chi_max: usize, sv_tol: f64) -> Result<Mps, MpsError> {
    apply_gate_with_weight(s, g, site, chi_max, sv_tol).map(|x| x.0)
}

pub fn apply_gate_with_weight(
    s: &Mps,
    g: &CMat,
    site: usize,
    chi_max: usize,
    sv_tol: f64,
) -> Result<(Mps, f64), MpsError> {
    let n = s.n_sites();
    if site + 1 >= n {
        return Err(MpsError::SiteOutOfRange { site: site + 1, n });
    }
    let dev = linalg::max_abs_diff(&(g.adjoint() * g), &linalg::identity(4));
    if g.shape() != (4, 4) || dev > 1e-10 {
        return Err(MpsError::NonUnitary(dev));
    }
    let (target_center, left_canonical) = match s.center {
        Some(cur) if cur > site + 1 => (site + 1, false),
        Some(cur) if cur > site => (site + 1, true),
        _ => (site, true),
    };
    let st = s.clone().canonicalize(target_center);
    Ok(apply_gate_canonical(st, g, site, chi_max, sv_tol, left_canonical))
}

/// Gate application assuming the center already sits on `site` or `site + 1`.
pub(crate) fn apply_gate_canonical(
    mut st: Mps,
    g: &CMat,
    site: usize,
    chi_max: usize,
    sv_tol: f64,
    left_canonical: bool,
) -> (Mps, f64) {
    let chi_l = st.tensors[site][0].nrows();
    let theta = two_site(&st.tensors[site], &st.tensors[site + 1]);
    let theta = apply_to_block(g, &theta, chi_l);
    let (a, b, w, _) = split_two_site(&theta, chi_l, chi_max, sv_tol, left_canonical);
    st.tensors[site] = a;
    st.tensors[site + 1] = b;
    st.center = Some(if left_canonical { site + 1 } else { site });
    (st, w)
}

/// `Theta'[(s1', l), (s2', r)] = sum g[2 s1' + s2', 2 s1 + s2] Theta[(s1, l), (s2, r)]`.
pub(crate) fn apply_to_block(g: &CMat, theta: &CMat, chi_l: usize) -> CMat {
    let chi_r = theta.ncols() / 2;
    let blocks: [[CMat; 2]; 2] = core::array::from_fn(|s1| {
        core::array::from_fn(|s2| theta.view((s1 * chi_l, s2 * chi_r), (chi_l, chi_r)).into_owned())
    });
    let mut out = CMat::zeros(2 * chi_l, 2 * chi_r);
    for p in 0..4 {
        let mut acc = CMat::zeros(chi_l, chi_r);
        for q in 0..4 {
            let coef = g[(p, q)];
            if coef != ZERO {
                acc += &blocks[q / 2][q % 2] * coef;
            }
        }
        out.view_mut(((p / 2) * chi_l, (p % 2) * chi_r), (chi_l, chi_r)).copy_from(&acc);
    }
    out
}

/// Normalized random state with exactly `n_p` occupied proton sites and `n_n`
/// occupied neutron sites: a random complex superposition of distinct in-sector
/// occupation patterns, SVD-truncated to bond dimension `chi`.
pub fn random_sector_mps(
    n_sites: usize,
    sector: SymmetrySector,
    mapping: &QubitMapping,
    chi: usize,
    seed: u64,
) -> Result<Mps, MpsError> {
    if mapping.n_sites() != n_sites {
        return Err(MpsError::SiteCountMismatch(mapping.n_sites(), n_sites));
    }
    let species = mapping.site_species();
    sector.check(species)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let protons: Vec<usize> = (0..n_sites).filter(|&k| species[k] == Species::Proton).collect();
    let neutrons: Vec<usize> = (0..n_sites).filter(|&k| species[k] == Species::Neutron).collect();
    let total = binomial(protons.len(), sector.n_protons).saturating_mul(binomial(neutrons.len(), sector.n_neutrons));
    // Enough patterns to touch every conserved-quantum-number block that the
    // Hamiltonian might not connect (total jz, say); truncation brings it back to chi.
    let want = (4 * chi.max(1)).max(32).min(total);
    let mut patterns: BTreeSet<Vec<u8>> = BTreeSet::new();
    let mut ordered: Vec<Vec<u8>> = Vec::new();
    let mut attempts = 0;
    while ordered.len() < want && attempts < 64 * want + 64 {
        attempts += 1;
        let mut bits = alloc::vec![0u8; n_sites];
        let (mut p, mut q) = (protons.clone(), neutrons.clone());
        p.shuffle(&mut rng);
        q.shuffle(&mut rng);
        for &k in p.iter().take(sector.n_protons).chain(q.iter().take(sector.n_neutrons)) {
            bits[k] = 1;
        }
        if patterns.insert(bits.clone()) {
            ordered.push(bits);
        }
    }
    let mut acc: Option<Mps> = None;
    for bits in &ordered {
        let (a, b) = linalg::gaussian_pair(&mut rng);
        let term = Mps::product_state(bits).scale(c(a, b));
        acc = Some(match acc {
            None => term,
            Some(x) => x.add(&term)?,
        });
    }
    let state = acc.expect("at least one pattern");
    let (state, _) = state.truncate(chi.max(1), 1e-14);
    state.normalized()
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..k.min(n - k) {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}
