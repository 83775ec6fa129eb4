//! Post-processing: the triangle-inequality overlap bound, overlap
//! extrapolation from a bond-dimension series, and Pareto fronts.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("record {index}: chi_small {chi_small} must be below chi_large {chi_large}")]
    BadRecord { index: usize, chi_small: usize, chi_large: usize },
    #[error("{stage} fit needs {needed} distinct points, got {got}")]
    Underdetermined { stage: &'static str, needed: usize, got: usize },
    #[error("{stage} fit at chi {chi}: data are not strictly monotone")]
    NonMonotone { stage: &'static str, chi: usize },
    #[error("{stage} fit at chi {chi}: log argument {value} is not positive")]
    NonPositive { stage: &'static str, chi: usize, value: f64 },
}

/// Lower bound on `|<A|C>|` from `|<A|B>|` and `|<B|C>|`, via the triangle
/// inequality for the angle `arccos |<x|y>|`. Clamped at zero.
pub fn wootters_bound(ab: f64, bc: f64) -> Result<f64, AnalysisError> {
    for (name, value) in [("ab", ab), ("bc", bc)] {
        if !(0.0..=1.0).contains(&value) {
            return Err(AnalysisError::OutOfRange { name, value });
        }
    }
    let b = ab * bc - (1.0 - ab * ab).sqrt() * (1.0 - bc * bc).sqrt();
    Ok(b.clamp(0.0, 1.0))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OverlapRecord {
    pub chi_small: usize,
    pub chi_large: usize,
    /// `|<Phi(chi_small)|Phi(chi_large)>|^2`
    pub overlap_sq: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct OverlapDataset {
    pub records: Vec<OverlapRecord>,
}

impl OverlapDataset {
    pub fn new(records: Vec<OverlapRecord>) -> Result<Self, AnalysisError> {
        for (index, r) in records.iter().enumerate() {
            if r.chi_small >= r.chi_large || r.chi_small == 0 {
                return Err(AnalysisError::BadRecord { index, chi_small: r.chi_small, chi_large: r.chi_large });
            }
            if !(0.0..=1.0).contains(&r.overlap_sq) {
                return Err(AnalysisError::OutOfRange { name: "overlap_sq", value: r.overlap_sq });
            }
        }
        Ok(OverlapDataset { records })
    }
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LineFit {
    pub intercept: f64,
    pub slope: f64,
    /// Root mean square residual.
    pub rms: f64,
}

impl LineFit {
    pub fn eval(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

fn line_fit(xs: &[f64], ys: &[f64]) -> LineFit {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let ss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    LineFit { intercept, slope, rms: (ss / n).sqrt() }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitDiagnostics {
    /// `(chi_small, |<Phi(chi_small)|Phi(inf)>|^2)` from the first stage.
    pub asymptotes: Vec<(usize, f64)>,
    /// `log(F - c)` against `(log chi_large)^2`, one per `chi_small`.
    pub stage1: Vec<LineFit>,
    /// `log(1 - c)` against `(log chi_small)^2`.
    pub stage2: LineFit,
}

/// Data this close to one count as already exact.
const EXACT_TOL: f64 = 1e-12;

/// Estimates `|<Phi(chi_query)|Phi(inf)>|^2`. For each `chi_small` the
/// asymptote `c` is found by fitting `log(F - c)` linearly in
/// `(log chi_large)^2`; `log(1 - c)` is then fitted linearly in
/// `(log chi_small)^2` and evaluated at `chi_query`. Only records whose
/// bond dimensions are in the given sets are used.
pub fn extrapolate_overlap(
    data: &OverlapDataset,
    chi_small_set: &[usize],
    chi_large_set: &[usize],
    chi_query: usize,
) -> Result<(f64, FitDiagnostics), AnalysisError> {
    let mut groups: BTreeMap<usize, BTreeMap<usize, f64>> = BTreeMap::new();
    for r in &data.records {
        if chi_small_set.contains(&r.chi_small) && chi_large_set.contains(&r.chi_large) {
            groups.entry(r.chi_small).or_default().insert(r.chi_large, r.overlap_sq);
        }
    }
    if groups.len() < 3 {
        return Err(AnalysisError::Underdetermined { stage: "chi_small", needed: 3, got: groups.len() });
    }
    let mut diag = FitDiagnostics::default();
    for (&chi, g) in &groups {
        if g.len() < 3 {
            return Err(AnalysisError::Underdetermined { stage: "chi_large", needed: 3, got: g.len() });
        }
        let xs: Vec<f64> = g.keys().map(|&k| (k as f64).ln().powi(2)).collect();
        let fs: Vec<f64> = g.values().copied().collect();
        let (c, fit) = if fs.iter().all(|&f| f >= 1.0 - EXACT_TOL) {
            (1.0, LineFit::default())
        } else {
            if fs.windows(2).any(|w| w[1] >= w[0]) {
                return Err(AnalysisError::NonMonotone { stage: "chi_large", chi });
            }
            asymptote(&xs, &fs)
        };
        diag.asymptotes.push((chi, c));
        diag.stage1.push(fit);
    }
    if diag.asymptotes.iter().all(|&(_, c)| c >= 1.0 - EXACT_TOL) {
        return Ok((1.0, diag));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(chi, c) in &diag.asymptotes {
        let gap = 1.0 - c;
        if gap <= 0.0 {
            return Err(AnalysisError::NonPositive { stage: "chi_small", chi, value: gap });
        }
        xs.push((chi as f64).ln().powi(2));
        ys.push(gap.ln());
    }
    if ys.windows(2).any(|w| w[1] >= w[0]) {
        return Err(AnalysisError::NonMonotone { stage: "chi_small", chi: diag.asymptotes[0].0 });
    }
    diag.stage2 = line_fit(&xs, &ys);
    let q = (chi_query.max(1) as f64).ln().powi(2);
    Ok((1.0 - diag.stage2.eval(q).exp(), diag))
}

/// Residual of the straight-line fit of `log(F - c)` where `c = min F - e^u`.
fn asymptote_residual(xs: &[f64], fs: &[f64], fmin: f64, u: f64) -> (f64, LineFit) {
    let c = fmin - u.exp();
    let ys: Vec<f64> = fs.iter().map(|f| (f - c).ln()).collect();
    let fit = line_fit(xs, &ys);
    (fit.rms, fit)
}

/// Solves for the asymptote over the log of the gap `min F - c`, with `c`
/// restricted to `[0, min F)`: a scan, then golden-section refinement of
/// every local minimum it finds. The valley around the true asymptote can be
/// much narrower than the shallow one near `c = 0`.
fn asymptote(xs: &[f64], fs: &[f64]) -> (f64, LineFit) {
    let fmin = fs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = fmin.ln();
    let lo = hi - 40.0;
    let steps = 4000;
    let at = |k: usize| lo + (hi - lo) * k as f64 / steps as f64;
    let r: Vec<f64> = (0..=steps).map(|k| asymptote_residual(xs, fs, fmin, at(k)).0).collect();
    let mut best = (f64::INFINITY, hi);
    for k in 0..=steps {
        let left = if k == 0 { f64::INFINITY } else { r[k - 1] };
        let right = if k == steps { f64::INFINITY } else { r[k + 1] };
        if r[k] <= left && r[k] <= right {
            let u = golden(|u| asymptote_residual(xs, fs, fmin, u).0, at(k.saturating_sub(1)), at((k + 1).min(steps)));
            let v = asymptote_residual(xs, fs, fmin, u).0;
            if v < best.0 {
                best = (v, u);
            }
        }
    }
    let (_, fit) = asymptote_residual(xs, fs, fmin, best.1);
    ((fmin - best.1.exp()).max(0.0), fit)
}

fn golden(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if b - a < 1e-14 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2);
        }
    }
    (a + b) / 2.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParetoPoint {
    pub t_count: usize,
    pub infidelity: f64,
    pub circuit_id: String,
    pub eps: f64,
    pub layers: usize,
}

fn dominates(q: &ParetoPoint, p: &ParetoPoint) -> bool {
    (q.t_count <= p.t_count && q.infidelity < p.infidelity) || (q.t_count < p.t_count && q.infidelity <= p.infidelity)
}

/// Points no other point dominates, by T-count then circuit id.
pub fn pareto_front(points: &[ParetoPoint]) -> Vec<ParetoPoint> {
    let mut out: Vec<ParetoPoint> =
        points.iter().filter(|p| !points.iter().any(|q| dominates(q, p))).cloned().collect();
    out.sort_by(|a, b| {
        a.t_count
            .cmp(&b.t_count)
            .then_with(|| a.circuit_id.cmp(&b.circuit_id))
            .then_with(|| a.infidelity.partial_cmp(&b.infidelity).unwrap_or(Ordering::Equal))
    });
    out
}

/// One row of the resource report.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub circuit_id: String,
    pub layers: usize,
    pub eps: f64,
    pub strategy: String,
    pub rz_total: usize,
    pub t_count: usize,
    /// `|<Phi(chi)|psi>|` for the synthesized circuit.
    pub overlap_to_target: f64,
    /// [`wootters_bound`] of the above with the target's overlap to the exact state.
    pub bound_to_exact: f64,
}

impl ReportRow {
    pub fn pareto_point(&self) -> ParetoPoint {
        ParetoPoint {
            t_count: self.t_count,
            infidelity: (1.0 - self.bound_to_exact * self.bound_to_exact).clamp(0.0, 1.0),
            circuit_id: self.circuit_id.clone(),
            eps: self.eps,
            layers: self.layers,
        }
    }
}
