//! Small dense complex linear-algebra helpers shared by the tensor-network and
//! gate-synthesis code.
//!
//! Matrices are `nalgebra` column-major `DMatrix<C64>`. Multi-qubit operators use
//! the convention that the lowest-numbered qubit is the most significant bit of
//! the basis index, so a gate on `(i, i + 1)` is indexed as `2 * s_i + s_{i+1}`.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, Dyn, Matrix, RawStorage, Schur};
use num_complex::Complex64;
#[allow(unused_imports)] // std inherent float methods shadow it when std is linked
use num_traits::Float;


pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn from_rows(n: usize, rows: &[C64]) -> CMat {
    DMatrix::from_row_slice(n, n, rows)
}

pub fn identity(n: usize) -> CMat {
    DMatrix::identity(n, n)
}

/// Dense product through a blocked kernel; nalgebra's generic complex
/// product is several times slower on the sizes the sweeps produce.
pub fn matmul<SA, SB>(a: &Matrix<C64, Dyn, Dyn, SA>, b: &Matrix<C64, Dyn, Dyn, SB>) -> CMat
where
    SA: RawStorage<C64, Dyn, Dyn>,
    SB: RawStorage<C64, Dyn, Dyn>,
{
    assert_eq!(a.ncols(), b.nrows(), "matmul shape mismatch");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut out = CMat::zeros(m, n);
    if m == 0 || n == 0 || k == 0 {
        return out;
    }
    let (rsa, csa) = a.strides();
    let (rsb, csb) = b.strides();
    // Complex64 is repr(C) {re, im}, the same layout as [f64; 2].
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            rsa as isize,
            csa as isize,
            b.as_ptr() as *const [f64; 2],
            rsb as isize,
            csb as isize,
            [0.0, 0.0],
            out.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    out
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Largest absolute entry-wise difference.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

pub fn is_unitary(u: &CMat, tol: f64) -> bool {
    if u.nrows() != u.ncols() {
        return false;
    }
    let n = u.nrows();
    max_abs_diff(&(u.adjoint() * u), &identity(n)) <= tol
}

const SV_FLOOR: f64 = 1e-14;

/// Thin SVD with singular values sorted in descending order.
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub v_t: CMat,
}

pub fn svd(m: &CMat) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            u: CMat::zeros(rows, 0),
            s: Vec::new(),
            v_t: CMat::zeros(0, cols),
        };
    }
    let dec = m.clone().svd(true, true);
    let (mut u, mut s, mut v_t) = (dec.u.expect("svd u"), dec.singular_values.as_slice().to_vec(), dec.v_t.expect("svd v_t"));
    // nalgebra's complex SVD occasionally loses several digits; check the
    // factorization and redo it by Jacobi rotations when it is off.
    let scale = s.iter().copied().fold(0.0, f64::max);
    let us = CMat::from_fn(rows, k, |r, c| u[(r, c)] * s[c]);
    if max_abs_diff(&matmul(&us, &v_t), m) > 1e-14 * scale.max(f64::MIN_POSITIVE) * (k as f64).sqrt() {
        (u, s, v_t) = if rows >= cols {
            jacobi_svd(m)
        } else {
            let (u2, s2, v2) = jacobi_svd(&m.adjoint());
            (v2.adjoint(), s2, u2.adjoint())
        };
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(core::cmp::Ordering::Equal));
    let mut su = CMat::zeros(rows, k);
    let mut sv = CMat::zeros(k, cols);
    let mut sorted = Vec::with_capacity(k);
    for (dst, &src) in order.iter().enumerate() {
        su.set_column(dst, &u.column(src));
        sv.set_row(dst, &v_t.row(src));
        sorted.push(s[src]);
    }
    Svd { u: su, s: sorted, v_t: sv }
}

/// One-sided Jacobi SVD of a tall matrix, unsorted: `(u, s, v_t)`.
fn jacobi_svd(m: &CMat) -> (CMat, Vec<f64>, CMat) {
    let (rows, n) = m.shape();
    // unit scale, so products of column norms neither underflow nor overflow
    let big = m.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if big == 0.0 {
        return (CMat::identity(rows, n), alloc::vec![0.0; n], identity(n));
    }
    let mut a = m / C64::new(big, 0.0);
    let mut v = identity(n);
    for _ in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g <= f64::EPSILON * alpha.sqrt() * beta.sqrt() || g < 1e-200 {
                    continue;
                }
                rotated = true;
                let e = gamma / g;
                let e = e / e.norm();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = cs * t;
                for mat in [&mut a, &mut v] {
                    for r in 0..mat.nrows() {
                        let x = mat[(r, p)];
                        let y = mat[(r, q)] * e.conj();
                        mat[(r, p)] = x * cs - y * sn;
                        mat[(r, q)] = (x * sn + y * cs) * e;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s: Vec<f64> = (0..n).map(|c| a.column(c).norm()).collect();
    let smax = s.iter().copied().fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| s[y].partial_cmp(&s[x]).unwrap_or(core::cmp::Ordering::Equal));
    // Gram-Schmidt in descending order: columns of tiny values are noise, and
    // whatever does not survive projection is replaced by a basis vector
    let mut u = CMat::zeros(rows, n);
    let mut done: Vec<usize> = Vec::new();
    let mut basis = 0;
    for c in order {
        let mut x = if s[c] > 1e-10 * smax { a.column(c) / C64::new(s[c], 0.0) } else { nalgebra::DVector::zeros(rows) };
        loop {
            for _ in 0..2 {
                for &j in &done {
                    let proj = u.column(j).dotc(&x);
                    x -= u.column(j) * proj;
                }
            }
            let norm = x.norm();
            if norm > 0.5 {
                u.set_column(c, &(x / C64::new(norm, 0.0)));
                break;
            }
            x = nalgebra::DVector::zeros(rows);
            x[basis] = ONE;
            basis += 1;
        }
        done.push(c);
    }
    (u, s.iter().map(|x| x * big).collect(), v.adjoint())
}

impl Svd {
    /// Keep at most `max_rank` values and drop those below `rel_tol` times the
    /// 2-norm of the spectrum. Values under `1e-14` of the norm are rounding
    /// noise whose vectors are arbitrary and are always dropped. At least one
    /// value is always kept.
    /// Returns the discarded weight `sum(s_dropped^2) / sum(s^2)`.
    pub fn truncate(&mut self, max_rank: usize, rel_tol: f64) -> f64 {
        let total: f64 = self.s.iter().map(|x| x * x).sum();
        let norm = total.sqrt();
        let mut keep = self
            .s
            .iter()
            .take_while(|&&x| x >= rel_tol.max(SV_FLOOR) * norm && x > 0.0)
            .count()
            .min(max_rank.max(1));
        keep = keep.max(1).min(self.s.len());
        let dropped: f64 = self.s[keep..].iter().map(|x| x * x).sum();
        self.s.truncate(keep);
        self.u = self.u.columns(0, keep).into_owned();
        self.v_t = self.v_t.rows(0, keep).into_owned();
        if total > 0.0 {
            dropped / total
        } else {
            0.0
        }
    }
}

/// Unitary `g` maximizing `|tr(g e)|`, or `None` when `e` vanishes.
///
/// With `e = W S V^dagger` the maximizer is `V W^dagger` and `tr(g e) = sum(S)`.
pub fn polar_maximizer(e: &CMat) -> Option<CMat> {
    let dec = svd(e);
    let scale = dec.s.first().copied().unwrap_or(0.0);
    if !(scale > 1e-300) {
        return None;
    }
    Some(dec.v_t.adjoint() * dec.u.adjoint())
}

/// Phase-invariant distance `sqrt(1 - |tr(U^dagger V)| / N)`.
///
/// Evaluated as `||U - e^{i phi} V||_F / sqrt(2N)` with `phi = arg tr(V^dagger U)`,
/// which is algebraically identical but keeps full relative precision near zero.
pub fn phase_invariant_distance(u: &CMat, v: &CMat) -> f64 {
    let n = u.nrows() as f64;
    let t = (v.adjoint() * u).trace();
    let phase = if t.norm() > 0.0 { t / t.norm() } else { ONE };
    let diff = u - v * phase;
    (diff.norm_squared() / (2.0 * n)).sqrt()
}

/// Operator-norm distance minimized over a global phase:
/// `min_phi ||U - e^{i phi} V||_2` for unitaries `U`, `V`.
///
/// Computed from the eigenphases of `V^dagger U`: if the smallest arc holding
/// every eigenphase has length `A`, the optimum is `2 sin(A / 4)`.
pub fn phase_optimal_operator_distance(u: &CMat, v: &CMat) -> f64 {
    let w = v.adjoint() * u;
    let n = w.nrows();
    let mut phases: Vec<f64> = match Schur::try_new(w.clone(), 1e-15, 10_000) {
        Some(schur) => {
            let (_, t) = schur.unpack();
            (0..n).map(|k| t[(k, k)].arg()).collect()
        }
        None => return fallback_operator_distance(&w),
    };
    phases.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    // Largest gap between consecutive phases on the circle; the covering arc is
    // its complement.
    let mut largest_gap = phases[0] + 2.0 * PI - phases[n - 1];
    for k in 1..n {
        largest_gap = largest_gap.max(phases[k] - phases[k - 1]);
    }
    let arc = (2.0 * PI - largest_gap).max(0.0);
    2.0 * (arc / 4.0).sin()
}

fn fallback_operator_distance(w: &CMat) -> f64 {
    let t = w.trace();
    let phase = if t.norm() > 0.0 { t / t.norm() } else { ONE };
    let n = w.nrows();
    let d = w - identity(n) * phase;
    svd(&d).s.first().copied().unwrap_or(0.0)
}

/// Removes a global phase so that the largest-magnitude entry of the first
/// nonzero column is real and positive. Used to compare unitaries up to phase.
pub fn strip_phase(u: &CMat) -> CMat {
    let mut best = ZERO;
    for x in u.iter() {
        if x.norm() > best.norm() + 1e-12 {
            best = *x;
        }
    }
    if best.norm() == 0.0 {
        return u.clone();
    }
    u * (best.conj() / best.norm())
}

pub mod gates {
    //! Fixed one- and two-qubit matrices.
    use super::*;

    pub fn x() -> CMat {
        from_rows(2, &[ZERO, ONE, ONE, ZERO])
    }
    pub fn y() -> CMat {
        from_rows(2, &[ZERO, -I, I, ZERO])
    }
    pub fn z() -> CMat {
        from_rows(2, &[ONE, ZERO, ZERO, -ONE])
    }
    pub fn h() -> CMat {
        let r = c(FRAC_1_SQRT_2, 0.0);
        from_rows(2, &[r, r, r, -r])
    }
    pub fn s() -> CMat {
        from_rows(2, &[ONE, ZERO, ZERO, I])
    }
    pub fn sdg() -> CMat {
        from_rows(2, &[ONE, ZERO, ZERO, -I])
    }
    pub fn t() -> CMat {
        from_rows(2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, PI / 4.0)])
    }
    pub fn tdg() -> CMat {
        from_rows(2, &[ONE, ZERO, ZERO, C64::from_polar(1.0, -PI / 4.0)])
    }
    /// `exp(-i theta Z / 2)`.
    pub fn rz(theta: f64) -> CMat {
        from_rows(
            2,
            &[
                C64::from_polar(1.0, -theta / 2.0),
                ZERO,
                ZERO,
                C64::from_polar(1.0, theta / 2.0),
            ],
        )
    }
    /// `exp(-i theta Y / 2)`.
    pub fn ry(theta: f64) -> CMat {
        let (s, co) = (theta / 2.0).sin_cos();
        from_rows(2, &[c(co, 0.0), c(-s, 0.0), c(s, 0.0), c(co, 0.0)])
    }
    /// Controlled-X with the first (more significant) qubit as control.
    pub fn cx() -> CMat {
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 1)] = ONE;
        m[(2, 3)] = ONE;
        m[(3, 2)] = ONE;
        m
    }
    pub fn cz() -> CMat {
        let mut m = identity(4);
        m[(3, 3)] = -ONE;
        m
    }
    pub fn swap() -> CMat {
        let mut m = CMat::zeros(4, 4);
        m[(0, 0)] = ONE;
        m[(1, 2)] = ONE;
        m[(2, 1)] = ONE;
        m[(3, 3)] = ONE;
        m
    }
}

/// Haar-random `n x n` unitary from the QR decomposition of a complex
/// Gaussian matrix with the phase correction of Mezzadri.
pub fn random_unitary<R: rand::Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(n, n, |_, _| {
        let (a, b) = gaussian_pair(rng);
        c(a, b) * FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut out = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { ONE };
        for i in 0..n {
            out[(i, j)] = q[(i, j)] * ph;
        }
    }
    out
}

/// Two independent standard normal samples (Box-Muller).
pub fn gaussian_pair<R: rand::Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let u1: f64 = loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            break u;
        }
    };
    let u2: f64 = rng.random();
    let r = (-2.0 * u1.ln()).sqrt();
    let (s, co) = (2.0 * PI * u2).sin_cos();
    (r * co, r * s)
}
