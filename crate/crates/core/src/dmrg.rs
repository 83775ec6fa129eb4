//! Two-site DMRG with Lanczos local solves and penalty-method excited states.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hamiltonian::{self, QubitMapping, Species, SymmetrySector};
use crate::linalg::{self, c, CMat, C64, ZERO};
use crate::mpo::{Mpo, MpoSite};
use crate::mps::{self, Mps, MpsError};
use crate::sector::{self, Counts};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DmrgError {
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("Lanczos broke down repeatedly at bond {0}")]
    LanczosBreakdown(usize),
    #[error("states {i} and {j} overlap by {overlap:.3e}; the penalty weight is probably below the gap")]
    NonOrthogonal { i: usize, j: usize, overlap: f64 },
    #[error("bond dimensions must not increase along the series ({0} after {1})")]
    IncreasingSeries(usize, usize),
}

/// Particle-number bookkeeping that keeps the sweep inside the target sector.
///
/// Bond basis states carry exact proton and neutron counts, local blocks are
/// masked to the sector and splits are done block by block, so nothing
/// outside the sector can be amplified by the local solver. The deviation operator is
/// used to report leakage and, optionally, as an energy penalty.
#[derive(Clone, Debug)]
pub struct SectorGuard {
    pub sector: SymmetrySector,
    pub species: Vec<Species>,
    /// `(N_p - n_p)^2 + (N_n - n_n)^2` as an MPO.
    pub deviation: Mpo,
    /// Adds `kappa * deviation` to the optimized operator when set.
    pub kappa: Option<f64>,
}

impl SectorGuard {
    pub fn new(mapping: &QubitMapping, sector: SymmetrySector, penalize: bool, penalty_weight: f64) -> Self {
        let n = mapping.n_sites();
        let dev = |species: Species, target: usize| {
            let d = hamiltonian::number_mpo(mapping, species).add(&Mpo::identity(n).scale(c(-(target as f64), 0.0)));
            d.mul(&d).compress(1e-12)
        };
        let deviation = dev(Species::Proton, sector.n_protons)
            .add(&dev(Species::Neutron, sector.n_neutrons))
            .compress(1e-12);
        SectorGuard {
            sector,
            species: mapping.site_species().to_vec(),
            deviation,
            kappa: penalize.then_some(10.0 * penalty_weight),
        }
    }
}

#[derive(Clone, Debug)]
pub struct DmrgConfig {
    pub chi_max: usize,
    pub sv_tol: f64,
    pub max_sweeps: usize,
    pub energy_rtol: f64,
    /// Excited-state penalty weight `w` in MeV. Must exceed the gaps of interest.
    pub penalty_weight_mev: f64,
    pub lanczos_dim: usize,
    pub seed: u64,
    pub sector: Option<SectorGuard>,
    /// Zero-weight in-sector directions added to each bond after its update,
    /// so particle-number sectors dropped by truncation can come back.
    /// Only active with a sector guard.
    pub expansion_pad: usize,
}

impl Default for DmrgConfig {
    fn default() -> Self {
        DmrgConfig {
            chi_max: 64,
            sv_tol: 1e-8,
            max_sweeps: 30,
            energy_rtol: 1e-8,
            penalty_weight_mev: 20.0,
            lanczos_dim: 20,
            seed: 0,
            sector: None,
            expansion_pad: 4,
        }
    }
}

impl DmrgConfig {
    fn validate(&self) -> Result<(), DmrgError> {
        if self.chi_max < 1 {
            return Err(DmrgError::InvalidConfig("chi_max must be at least 1"));
        }
        if !(self.sv_tol >= 0.0) {
            return Err(DmrgError::InvalidConfig("sv_tol must be non-negative"));
        }
        if !(self.penalty_weight_mev > 0.0) {
            return Err(DmrgError::InvalidConfig("penalty weight must be positive"));
        }
        if self.lanczos_dim < 2 {
            return Err(DmrgError::InvalidConfig("lanczos_dim must be at least 2"));
        }
        if self.max_sweeps < 1 {
            return Err(DmrgError::InvalidConfig("max_sweeps must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRecord {
    pub sweep: usize,
    pub energy: f64,
    pub max_bond: usize,
    pub truncation_error_sum: f64,
}

#[derive(Clone, Debug)]
pub struct EigenResult {
    pub state: Mps,
    /// `<H>` of the returned state, MeV.
    pub energy: f64,
    /// Minimized objective after each sweep: `<H>` plus active penalties.
    pub sweep_energies: Vec<f64>,
    pub converged: bool,
    pub log: Vec<SweepRecord>,
    /// Sector deviation `<(N_p - n_p)^2 + (N_n - n_n)^2>` after the last sweep.
    pub leakage: Option<f64>,
}

/// Penalty against a previously found state: cached overlap environments.
struct Penalty<'a> {
    state: &'a Mps,
    left: Vec<CMat>,
    right: Vec<CMat>,
}

struct Workspace<'a> {
    h: &'a Mpo,
    left: Vec<Vec<CMat>>,
    right: Vec<Vec<CMat>>,
    penalties: Vec<Penalty<'a>>,
    weight: f64,
    guard: Option<&'a SectorGuard>,
    labels_left: Vec<Vec<Counts>>,
    labels_right: Vec<Vec<Counts>>,
}

impl Workspace<'_> {
    fn heff(&self, k: usize, theta: &CMat) -> CMat {
        heff_apply(&self.left[k], &self.h.sites[k], &self.h.sites[k + 1], &self.right[k + 2], theta)
    }

    /// Counts of the two-site rows `(s1, l)` and columns `(s2, r)` at bond `k`.
    fn block_counts(&self, k: usize) -> Option<(Vec<Counts>, Vec<Counts>, Counts)> {
        let g = self.guard?;
        let (ll, lr) = (&self.labels_left[k], &self.labels_right[k + 2]);
        let (u1, u2) = (sector::unit(g.species[k]), sector::unit(g.species[k + 1]));
        let rows = (0..2 * ll.len()).map(|r| sector::shifted(ll[r % ll.len()], u1, r / ll.len())).collect();
        let cols = (0..2 * lr.len()).map(|c| sector::shifted(lr[c % lr.len()], u2, c / lr.len())).collect();
        Some((rows, cols, sector::target(g.sector)))
    }

    fn projections(&self, k: usize) -> Vec<CMat> {
        self.penalties
            .iter()
            .map(|p| {
                let t = mps::two_site(&p.state.tensors[k], &p.state.tensors[k + 1]);
                mps::sandwich(&p.left[k], &t, &p.right[k + 2])
            })
            .collect()
    }
}

/// `sum W1 W2 L Theta R` staged through the MPO bonds.
fn heff_apply(l: &[CMat], w1: &MpoSite, w2: &MpoSite, r: &[CMat], theta: &CMat) -> CMat {
    let (cl, cr) = (l[0].ncols(), r[0].nrows());
    let (ol, or) = (l[0].nrows(), r[0].ncols());
    let (w0, w1d, w2d) = (w1.left_dim(), w1.right_dim(), w2.right_dim());
    let blk = |s1: usize, s2: usize| theta.view((s1 * cl, s2 * cr), (cl, cr));
    let len = ol * cr;
    // xm[i2]: column (i1, b0) holds vec(L[b0] Theta[i1][i2])
    let xm: [CMat; 2] = core::array::from_fn(|i2| {
        let mut m = CMat::zeros(len, 2 * w0);
        for i1 in 0..2 {
            let t = blk(i1, i2);
            for (b0, lb) in l.iter().enumerate() {
                let x = linalg::matmul(lb, &t);
                m.column_mut(i1 * w0 + b0).copy_from_slice(x.as_slice());
            }
        }
        m
    });
    let m1 = CMat::from_fn(2 * w0, 2 * w1d, |row, col| w1.w[col / w1d][row / w0][(row % w0, col % w1d)]);
    let m2 = CMat::from_fn(2 * w1d, 2 * w2d, |row, col| w2.w[col / w2d][row / w1d][(row % w1d, col % w2d)]);
    // ym[i2]: column (o1, b1)
    let ym: [CMat; 2] = core::array::from_fn(|i2| linalg::matmul(&xm[i2], &m1));
    let mut rcat = CMat::zeros(w2d * cr, or);
    for (b2, rb) in r.iter().enumerate() {
        rcat.view_mut((b2 * cr, 0), (cr, or)).copy_from(rb);
    }
    let mut out = CMat::zeros(2 * ol, 2 * or);
    for o1 in 0..2 {
        let mut yo = CMat::zeros(len, 2 * w1d);
        for i2 in 0..2 {
            yo.columns_mut(i2 * w1d, w1d).copy_from(&ym[i2].columns(o1 * w1d, w1d));
        }
        // column (o2, b2) of z holds vec(Z[o1][o2][b2])
        let z = linalg::matmul(&yo, &m2);
        for o2 in 0..2 {
            let start = o2 * w2d * len;
            let zcat = CMat::from_column_slice(ol, w2d * cr, &z.as_slice()[start..start + w2d * len]);
            out.view_mut((o1 * ol, o2 * or), (ol, or)).copy_from(&linalg::matmul(&zcat, &rcat));
        }
    }
    out
}

fn inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Lowest eigenpair of a Hermitian operator by restarted Lanczos with full
/// reorthogonalization.
fn lanczos<F: Fn(&CMat) -> CMat>(
    op: F,
    start: &CMat,
    dim: usize,
    mask: Option<&CMat>,
    rng: &mut ChaCha8Rng,
) -> Option<(f64, CMat)> {
    let size = mask.map_or(start.len(), |m| m.iter().filter(|x| x.re != 0.0).count().max(1));
    let random = |rng: &mut ChaCha8Rng| {
        let v = CMat::from_fn(start.nrows(), start.ncols(), |_, _| {
            let (a, b) = linalg::gaussian_pair(rng);
            c(a, b)
        });
        match mask {
            Some(m) => v.component_mul(m),
            None => v,
        }
    };
    let mut v = start.clone();
    let mut failures = 0;
    let mut best: Option<(f64, CMat)> = None;
    for _ in 0..12 {
        let nrm = v.norm();
        if !(nrm.is_finite() && nrm > 1e-300) {
            failures += 1;
            if failures > 3 {
                return None;
            }
            v = random(rng);
            continue;
        }
        let mut basis: Vec<CMat> = alloc::vec![&v / c(nrm, 0.0)];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        let kmax = dim.min(size);
        loop {
            let j = basis.len() - 1;
            let mut w = op(&basis[j]);
            alpha.push(inner(&basis[j], &w).re);
            for _ in 0..2 {
                for q in &basis {
                    let p = inner(q, &w);
                    w.zip_apply(q, |a, b| *a -= p * b);
                }
            }
            let b = w.norm();
            let scale = alpha.iter().map(|a| a.abs()).fold(1e-300, f64::max);
            if basis.len() == kmax {
                break;
            }
            if !(b > 1e-12 * scale) {
                // Invariant subspace: an eigenvector of it need not be the
                // lowest one, so continue from a fresh direction.
                let mut r = random(rng);
                for _ in 0..2 {
                    for q in &basis {
                        let p = inner(q, &r);
                        r.zip_apply(q, |a, b| *a -= p * b);
                    }
                }
                let rn = r.norm();
                if !(rn > 1e-10) {
                    break;
                }
                beta.push(0.0);
                basis.push(r / c(rn, 0.0));
                continue;
            }
            // Ritz residual estimate |b y_last|
            if alpha.len() >= 4 {
                let (lam, y) = tridiagonal_lowest(&alpha, &beta);
                if (b * y[y.len() - 1]).abs() <= 1e-10 * lam.abs().max(1.0) {
                    break;
                }
            }
            beta.push(b);
            basis.push(w / c(b, 0.0));
        }
        let (lowest, y) = tridiagonal_lowest(&alpha, &beta);
        if !lowest.is_finite() {
            failures += 1;
            if failures > 3 {
                return None;
            }
            v = random(rng);
            continue;
        }
        let mut x = CMat::zeros(start.nrows(), start.ncols());
        for (q, yk) in basis.iter().zip(y.iter()) {
            x += q * c(*yk, 0.0);
        }
        let xn = x.norm();
        x /= c(xn, 0.0);
        let res = (op(&x) - &x * c(lowest, 0.0)).norm();
        let done = res <= 1e-9 * lowest.abs().max(1.0) || alpha.len() == size;
        best = Some((lowest, x.clone()));
        if done {
            break;
        }
        v = x;
    }
    best
}

fn tridiagonal_lowest(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let t = nalgebra::DMatrix::<f64>::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = nalgebra::SymmetricEigen::new(t);
    let (mut idx, mut lowest) = (0, f64::INFINITY);
    for (k, &e) in eig.eigenvalues.iter().enumerate() {
        if e < lowest {
            lowest = e;
            idx = k;
        }
    }
    (lowest, eig.eigenvectors.column(idx).iter().copied().collect())
}

/// Ground state of `h` starting from `init`.
pub fn ground_state(h: &Mpo, cfg: &DmrgConfig, init: &Mps) -> Result<EigenResult, DmrgError> {
    run(h, cfg, init, &[])
}

/// Lowest `k` states using `H + w sum_{i<lambda} |psi_i><psi_i|`.
///
/// Each state starts from `init`. The weight `cfg.penalty_weight_mev` must
/// exceed the gaps between the requested states; otherwise later states
/// collapse onto earlier ones and [`DmrgError::NonOrthogonal`] is returned.
pub fn excited_states(h: &Mpo, k: usize, cfg: &DmrgConfig, init: &Mps) -> Result<Vec<EigenResult>, DmrgError> {
    if k < 1 {
        return Err(DmrgError::InvalidConfig("need at least one state"));
    }
    let mut found: Vec<EigenResult> = Vec::with_capacity(k);
    for _ in 0..k {
        let previous: Vec<&Mps> = found.iter().map(|r| &r.state).collect();
        let start = orthogonalized(init, &previous, cfg.chi_max, cfg.sv_tol)?;
        let res = run(h, cfg, &start, &previous)?;
        found.push(res);
    }
    for i in 0..k {
        for j in i + 1..k {
            let ov = mps::overlap(&found[i].state, &found[j].state)?.norm();
            if ov >= 1e-4 {
                return Err(DmrgError::NonOrthogonal { i, j, overlap: ov });
            }
        }
    }
    found.sort_by(|a, b| a.energy.partial_cmp(&b.energy).unwrap_or(core::cmp::Ordering::Equal));
    Ok(found)
}

/// `init` with its components along `previous` removed, when that leaves a
/// non-negligible remainder.
fn orthogonalized(init: &Mps, previous: &[&Mps], chi_max: usize, sv_tol: f64) -> Result<Mps, DmrgError> {
    let mut acc = init.clone();
    for p in previous {
        let ov = mps::overlap(p, init)?;
        acc = acc.add(&(*p).clone().scale(-ov))?;
    }
    let (t, _) = acc.truncate(chi_max.max(init.max_bond()), sv_tol.max(1e-10));
    match t.normalized() {
        Ok(s) if s.norm() > 0.0 && mps::overlap(&s, init)?.norm() > 1e-6 => Ok(s),
        _ => Ok(init.clone()),
    }
}

/// Ground states at each bond dimension in `chis`, each run started from the
/// truncation of the previous result.
pub fn reverse_sweep_series(h: &Mpo, chis: &[usize], cfg: &DmrgConfig, init: &Mps) -> Result<Vec<EigenResult>, DmrgError> {
    for w in chis.windows(2) {
        if w[1] > w[0] {
            return Err(DmrgError::IncreasingSeries(w[1], w[0]));
        }
    }
    let mut out: Vec<EigenResult> = Vec::with_capacity(chis.len());
    for &chi in chis {
        let start = match out.last() {
            Some(prev) => prev.state.clone().truncate(chi, 0.0).0.normalized()?,
            None => init.clone(),
        };
        let step = DmrgConfig {
            chi_max: chi,
            ..cfg.clone()
        };
        out.push(ground_state(h, &step, &start)?);
    }
    Ok(out)
}

fn run(h: &Mpo, cfg: &DmrgConfig, init: &Mps, previous: &[&Mps]) -> Result<EigenResult, DmrgError> {
    cfg.validate()?;
    let n = h.n_sites();
    if init.n_sites() != n {
        return Err(MpsError::SiteCountMismatch(init.n_sites(), n).into());
    }
    for p in previous {
        if p.n_sites() != n {
            return Err(MpsError::SiteCountMismatch(p.n_sites(), n).into());
        }
    }
    let optimized: Mpo = match cfg.sector.as_ref().and_then(|g| g.kappa.map(|k| (g, k))) {
        Some((g, kappa)) => h.add(&g.deviation.clone().scale(c(kappa, 0.0))).compress(1e-12),
        None => h.clone(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut psi = match &cfg.sector {
        Some(g) => sector::project(init, &g.species, g.sector, cfg.chi_max, cfg.sv_tol)?,
        None => init.clone().truncate(cfg.chi_max, cfg.sv_tol).0.normalized()?,
    };

    if n == 1 {
        return single_site(h, &optimized, cfg, psi, previous);
    }

    let one = || alloc::vec![CMat::identity(1, 1)];
    let mut ws = Workspace {
        h: &optimized,
        left: (0..=n).map(|_| one()).collect(),
        right: (0..=n).map(|_| one()).collect(),
        penalties: previous
            .iter()
            .map(|s| Penalty {
                state: s,
                left: alloc::vec![CMat::identity(1, 1); n + 1],
                right: alloc::vec![CMat::identity(1, 1); n + 1],
            })
            .collect(),
        weight: cfg.penalty_weight_mev,
        guard: cfg.sector.as_ref(),
        labels_left: alloc::vec![alloc::vec![[0, 0]]; n + 1],
        labels_right: alloc::vec![alloc::vec![[0, 0]]; n + 1],
    };
    for k in (1..n).rev() {
        update_right(&mut ws, &psi, k);
    }

    let mut sweep_energies = Vec::new();
    let mut log = Vec::new();
    let mut converged = false;
    let min_sweeps = 2.min(cfg.max_sweeps);
    for sweep in 0..cfg.max_sweeps {
        let mut trunc = 0.0;
        let mut objective = 0.0;
        for k in 0..n - 1 {
            let (w, _) = optimize_bond(&mut ws, &mut psi, k, cfg, true, &mut rng)?;
            trunc += w;
            update_left(&mut ws, &psi, k);
        }
        for k in (0..n - 1).rev() {
            let (w, e) = optimize_bond(&mut ws, &mut psi, k, cfg, false, &mut rng)?;
            trunc += w;
            objective = e;
            update_right(&mut ws, &psi, k + 1);
        }
        psi.center = Some(0);
        log.push(SweepRecord {
            sweep: sweep + 1,
            energy: objective,
            max_bond: psi.max_bond(),
            truncation_error_sum: trunc,
        });
        let prev = sweep_energies.last().copied();
        sweep_energies.push(objective);
        if let Some(p) = prev {
            let scale = objective.abs().max(1e-12);
            if sweep + 1 >= min_sweeps && (objective - p).abs() < cfg.energy_rtol * scale {
                converged = true;
                break;
            }
        }
    }
    if let Some(g) = &cfg.sector {
        // drops the zero-weight padding
        psi = sector::project(&psi, &g.species, g.sector, cfg.chi_max, cfg.sv_tol)?;
    }
    let energy = mps::expectation(h, &psi)?;
    let leakage = match &cfg.sector {
        Some(g) => Some(mps::expectation(&g.deviation, &psi)?),
        None => None,
    };
    Ok(EigenResult {
        state: psi,
        energy,
        sweep_energies,
        converged,
        log,
        leakage,
    })
}

fn single_site(h: &Mpo, optimized: &Mpo, cfg: &DmrgConfig, psi: Mps, previous: &[&Mps]) -> Result<EigenResult, DmrgError> {
    let mut m = optimized.to_dense();
    for p in previous {
        let v = nalgebra::DVector::from_vec(p.to_dense());
        m += &v * v.adjoint() * c(cfg.penalty_weight_mev, 0.0);
    }
    let (vals, vecs) = hamiltonian::eigh(&m);
    let _ = psi;
    let col: Vec<C64> = vecs.column(0).iter().copied().collect();
    let state = Mps::from_dense(&col, 1, 1, 0.0).normalized()?;
    let energy = mps::expectation(h, &state)?;
    Ok(EigenResult {
        state,
        energy,
        sweep_energies: alloc::vec![vals[0]],
        converged: true,
        log: alloc::vec![SweepRecord {
            sweep: 1,
            energy,
            max_bond: 1,
            truncation_error_sum: 0.0,
        }],
        leakage: None,
    })
}

fn update_left(ws: &mut Workspace, psi: &Mps, k: usize) {
    let t = &psi.tensors[k];
    if let Some(g) = ws.guard {
        ws.labels_left[k + 1] = sector::left_step(&ws.labels_left[k], t, g.species[k]);
    }
    ws.left[k + 1] = mps::mpo_left_step(&ws.left[k], t, &ws.h.sites[k], t);
    for p in ws.penalties.iter_mut() {
        p.left[k + 1] = mps::overlap_left_step(&p.left[k], t, &p.state.tensors[k]);
    }
}

fn update_right(ws: &mut Workspace, psi: &Mps, k: usize) {
    let t = &psi.tensors[k];
    if let Some(g) = ws.guard {
        ws.labels_right[k] = sector::right_step(&ws.labels_right[k + 1], t, g.species[k]);
    }
    ws.right[k] = mps::mpo_right_step(&ws.right[k + 1], t, &ws.h.sites[k], t);
    for p in ws.penalties.iter_mut() {
        p.right[k] = mps::overlap_right_step(&p.right[k + 1], t, &p.state.tensors[k]);
    }
}

/// Adds up to `pad` in-sector random directions, with zero weight, to the
/// canonical side of a freshly split bond. The state is unchanged; the larger
/// basis lets later local solves reach blocks the current bases miss.
fn expand_bond(
    theta: &CMat,
    (a, b): (mps::Site, mps::Site),
    noise: &CMat,
    blocks: &(Vec<Counts>, Vec<Counts>, Counts),
    chi_max: usize,
    pad: usize,
    moving_right: bool,
) -> (mps::Site, mps::Site) {
    let (rows, cols, total) = blocks;
    let chi_l = a[0].nrows();
    let chi_r = b[0].ncols();
    // Measured against the noise itself: when the basis already spans the
    // block, the remainder is rounding and must not be used.
    let floor = 1e-8 * noise.norm();
    let fresh = |rest: &CMat, room: usize| {
        let (dec, _) = sector::block_svd(rest, rows, Some(cols), *total);
        let extra = dec.s.iter().take(room).take_while(|&&x| x > floor).count();
        (dec, extra)
    };
    if moving_right {
        let u = mps::group_left(&a);
        let room = chi_max.saturating_sub(u.ncols()).min(u.nrows() - u.ncols()).min(pad);
        if room == 0 {
            return (a, b);
        }
        let (dec, extra) = fresh(&(noise - &u * (u.adjoint() * noise)), room);
        if extra == 0 {
            return (a, b);
        }
        let mut ext = CMat::zeros(u.nrows(), u.ncols() + extra);
        ext.columns_mut(0, u.ncols()).copy_from(&u);
        ext.columns_mut(u.ncols(), extra).copy_from(&dec.u.columns(0, extra));
        let right = ext.adjoint() * theta;
        (mps::ungroup_left(&ext, chi_l), mps::ungroup_right(&right, chi_r))
    } else {
        let vt = mps::group_right(&b);
        let room = chi_max.saturating_sub(vt.nrows()).min(vt.ncols() - vt.nrows()).min(pad);
        if room == 0 {
            return (a, b);
        }
        let (dec, extra) = fresh(&(noise - (noise * vt.adjoint()) * &vt), room);
        if extra == 0 {
            return (a, b);
        }
        let mut ext = CMat::zeros(vt.nrows() + extra, vt.ncols());
        ext.rows_mut(0, vt.nrows()).copy_from(&vt);
        ext.rows_mut(vt.nrows(), extra).copy_from(&dec.v_t.rows(0, extra));
        let left = theta * ext.adjoint();
        (mps::ungroup_left(&left, chi_l), mps::ungroup_right(&ext, chi_r))
    }
}

/// Solves the two-site problem on `(k, k + 1)` and writes the truncated split
/// back. Returns the discarded weight and the objective of the kept block.
fn optimize_bond(
    ws: &mut Workspace,
    psi: &mut Mps,
    k: usize,
    cfg: &DmrgConfig,
    moving_right: bool,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, f64), DmrgError> {
    let chi_l = psi.tensors[k][0].nrows();
    let chi_r = psi.tensors[k + 1][0].ncols();
    let theta = mps::two_site(&psi.tensors[k], &psi.tensors[k + 1]);
    let proj = ws.projections(k);
    let weight = ws.weight;
    let blocks = ws.block_counts(k);
    let mask = blocks.as_ref().map(|(rows, cols, total)| {
        CMat::from_fn(rows.len(), cols.len(), |r, col| {
            if [rows[r][0] + cols[col][0], rows[r][1] + cols[col][1]] == *total {
                C64::new(1.0, 0.0)
            } else {
                ZERO
            }
        })
    });
    let apply = |x: &CMat| {
        let mut y = ws.heff(k, x);
        for p in &proj {
            let ov = inner(p, x) * weight;
            y.zip_apply(p, |a, b| *a += ov * b);
        }
        match &mask {
            Some(m) => y.component_mul(m),
            None => y,
        }
    };
    let start = match &mask {
        Some(m) => theta.component_mul(m),
        None => theta,
    };
    let (_, vec) = lanczos(&apply, &start, cfg.lanczos_dim, mask.as_ref(), rng).ok_or(DmrgError::LanczosBreakdown(k))?;
    let (mut a, mut b, w, s) = match &blocks {
        Some((rows, cols, total)) => {
            let (mut dec, _) = sector::block_svd(&vec, rows, Some(cols), *total);
            let w = dec.truncate(cfg.chi_max, cfg.sv_tol);
            let (a, b) = mps::split_from_svd(&dec, chi_l, chi_r, moving_right);
            (a, b, w, dec.s)
        }
        None => mps::split_two_site(&vec, chi_l, cfg.chi_max, cfg.sv_tol, moving_right),
    };
    if let (Some(m), Some(bl)) = (&mask, &blocks) {
        if cfg.expansion_pad > 0 {
            let noise = CMat::from_fn(vec.nrows(), vec.ncols(), |_, _| {
                let (x, y) = linalg::gaussian_pair(rng);
                c(x, y)
            })
            .component_mul(m);
            (a, b) = expand_bond(&vec, (a, b), &noise, bl, cfg.chi_max, cfg.expansion_pad, moving_right);
        }
    }
    let nrm: f64 = s.iter().map(|x| x * x).sum::<f64>().sqrt();
    let f = c(1.0 / nrm, 0.0);
    for x in if moving_right { b.iter_mut() } else { a.iter_mut() } {
        *x *= f;
    }
    let kept = mps::two_site(&a, &b);
    let objective = inner(&kept, &apply(&kept)).re;
    psi.tensors[k] = a;
    psi.tensors[k + 1] = b;
    Ok((w, objective))
}
