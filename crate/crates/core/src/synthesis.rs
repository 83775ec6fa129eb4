//! Single-qubit Clifford+T approximation by search.
//!
//! The database holds every single-qubit Clifford+T operator of T-count up to
//! a budget, one per Matsumoto-Amano normal form `[T](HT|SHT)* C`. Targets
//! are first matched against it level by level, which gives the minimal
//! T-count exactly. Past the budget a meet-in-the-middle search splits the
//! target as `P V` with `P` a normal-form prefix and `V` a database entry.
//!
//! Gate lists are in time order (`gates[0]` acts first). Distances are
//! `sqrt(1 - |tr(U^dagger V)| / 2)`, which for SU(2) representatives `p`,
//! `q` in quaternion form equals `min(|p - q|, |p + q|) / sqrt 2`.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use nalgebra::Matrix2;
#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::linalg::{self, gates, CMat, C64, ONE};
use crate::mps::{self, Mps, MpsError};
use crate::rotations::{self, Clifford, Op, RotationCircuit};

/// Largest half budget [`build_database`] accepts.
pub const MAX_HALF_BUDGET: usize = 14;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("T budget {0} exceeds the cap of {MAX_HALF_BUDGET}")]
    BudgetTooLarge(usize),
    #[error("database would exceed {limit} entries (reached {reached})")]
    MemoryBudget { limit: usize, reached: usize },
    #[error("eps must be positive")]
    BadEps,
    #[error("target is not unitary")]
    NonUnitary,
    #[error("no sequence within eps; best error {best_error:.3e} at T-count {best_t_count}")]
    Unreachable { best_error: f64, best_t_count: usize },
    #[error("synthesis of op {index} failed: {source}")]
    Gate { index: usize, source: alloc::boxed::Box<SynthError> },
    #[error("CX on non-adjacent qubits {0} and {1}")]
    NonAdjacent(usize, usize),
    #[error("database contents do not match budget {t_budget}: {reason}")]
    BadContents { t_budget: usize, reason: &'static str },
    #[error(transparent)]
    Mps(#[from] MpsError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Gate1 {
    H,
    S,
    Sdg,
    T,
    Tdg,
    X,
    Z,
}

impl Gate1 {
    pub fn name(self) -> &'static str {
        match self {
            Gate1::H => "H",
            Gate1::S => "S",
            Gate1::Sdg => "SDG",
            Gate1::T => "T",
            Gate1::Tdg => "TDG",
            Gate1::X => "X",
            Gate1::Z => "Z",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s.to_ascii_uppercase().as_str() {
            "H" => Gate1::H,
            "S" => Gate1::S,
            "SDG" => Gate1::Sdg,
            "T" => Gate1::T,
            "TDG" => Gate1::Tdg,
            "X" => Gate1::X,
            "Z" => Gate1::Z,
            _ => return None,
        })
    }

    pub fn is_t(self) -> bool {
        matches!(self, Gate1::T | Gate1::Tdg)
    }

    pub fn matrix(self) -> CMat {
        match self {
            Gate1::H => gates::h(),
            Gate1::S => gates::s(),
            Gate1::Sdg => gates::sdg(),
            Gate1::T => gates::t(),
            Gate1::Tdg => gates::tdg(),
            Gate1::X => gates::x(),
            Gate1::Z => gates::z(),
        }
    }

    fn m2(self) -> M2 {
        to_m2(&self.matrix())
    }
}

type M2 = Matrix2<C64>;

fn to_m2(m: &CMat) -> M2 {
    M2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

fn from_m2(m: &M2) -> CMat {
    linalg::from_rows(2, &[m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]])
}

/// Product of a time-ordered gate list.
pub fn sequence_matrix(gates: &[Gate1]) -> CMat {
    from_m2(&word_m2(gates))
}

fn word_m2(gates: &[Gate1]) -> M2 {
    gates.iter().fold(M2::identity(), |acc, g| g.m2() * acc)
}

/// SU(2) representative as `(Re a, Im a, Re c, Im c)` of `[[a, -c*], [c, a*]]`.
fn quaternion(m: &M2) -> [f64; 4] {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    let s = C64::from_polar(1.0, -det.arg() / 2.0);
    let a = m[(0, 0)] * s;
    let cc = m[(1, 0)] * s;
    [a.re, a.im, cc.re, cc.im]
}

/// Representative of `{q, -q}` with a non-negative first component.
fn canon(q: &[f64; 4]) -> [f64; 4] {
    if q[0] < 0.0 {
        q.map(|x| -x)
    } else {
        *q
    }
}

fn qdot(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    p[0] * q[0] + p[1] * q[1] + p[2] * q[2] + p[3] * q[3]
}

/// Phase-invariant distance between the operators behind two quaternions.
fn qdist(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    let s = if qdot(p, q) >= 0.0 { 1.0 } else { -1.0 };
    let d2: f64 = (0..4).map(|i| (p[i] - s * q[i]) * (p[i] - s * q[i])).sum();
    (d2 / 2.0).sqrt()
}

#[derive(Clone, Copy, Debug)]
struct Prefix {
    /// Bit `j` set: syllable `j` (from the left) is SHT, else HT.
    syl: u32,
    len: u8,
    lead_t: bool,
    t: u8,
}

impl Prefix {
    /// Time-ordered gates of the operator `[T] syl_0 ... syl_{len-1}`.
    fn gates(&self) -> Vec<Gate1> {
        let mut out = Vec::with_capacity(3 * self.len as usize + 1);
        for j in (0..self.len as u32).rev() {
            out.push(Gate1::T);
            out.push(Gate1::H);
            if self.syl >> j & 1 == 1 {
                out.push(Gate1::S);
            }
        }
        if self.lead_t {
            out.push(Gate1::T);
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    q: [f64; 4],
    prefix: u32,
    clifford: u8,
}

/// One entry per normal form of T-count at most `t_budget`.
#[derive(Clone, Debug)]
pub struct SynthesisDatabase {
    pub t_budget: usize,
    cliffords: Vec<(M2, Vec<Gate1>)>,
    prefixes: Vec<Prefix>,
    prefix_m: Vec<M2>,
    prefix_level: Vec<usize>,
    entries: Vec<Entry>,
    entry_level: Vec<usize>,
}

/// The 24 single-qubit Cliffords modulo phase, each with a shortest word.
fn clifford_group() -> Vec<(M2, Vec<Gate1>)> {
    let gens = [Gate1::H, Gate1::S, Gate1::Sdg, Gate1::X, Gate1::Z];
    let key = |m: &M2| {
        let mut q = quaternion(m);
        if let Some(&x) = q.iter().find(|x| x.abs() > 1e-9) {
            if x < 0.0 {
                q = q.map(|v| -v);
            }
        }
        q.map(|v| (v * 1e6).round() as i64)
    };
    let mut seen: BTreeMap<[i64; 4], ()> = BTreeMap::new();
    let mut out: Vec<(M2, Vec<Gate1>)> = alloc::vec![(M2::identity(), Vec::new())];
    seen.insert(key(&M2::identity()), ());
    let mut head = 0;
    while head < out.len() {
        let (m, w) = out[head].clone();
        head += 1;
        for g in gens {
            let next = g.m2() * m;
            if seen.insert(key(&next), ()).is_none() {
                let mut nw = w.clone();
                nw.push(g);
                out.push((next, nw));
            }
        }
    }
    out
}

/// Entries at a given budget: `24 (1 + 3 (2^t - 1))`.
pub fn entry_count(t_budget: usize) -> usize {
    24 * (1 + 3 * ((1usize << t_budget) - 1))
}

pub fn build_database(t_budget: usize) -> Result<SynthesisDatabase, SynthError> {
    build_database_with_limit(t_budget, usize::MAX)
}

pub fn build_database_with_limit(t_budget: usize, max_entries: usize) -> Result<SynthesisDatabase, SynthError> {
    let mut db = skeleton(t_budget, max_entries)?;
    let mut entries = Vec::with_capacity(db.prefixes.len() * db.cliffords.len());
    for pm in &db.prefix_m {
        for (ci, (cm, _)) in db.cliffords.iter().enumerate() {
            entries.push(Entry { q: quaternion(&(pm * cm)), prefix: (entries.len() / 24) as u32, clifford: ci as u8 });
        }
    }
    db.entries = entries;
    Ok(db)
}

/// Everything but the entries. Entry `i` is prefix `i / 24` times Clifford
/// `i % 24`, and prefixes are sorted by T-count.
fn skeleton(t_budget: usize, max_entries: usize) -> Result<SynthesisDatabase, SynthError> {
    if t_budget > MAX_HALF_BUDGET {
        return Err(SynthError::BudgetTooLarge(t_budget));
    }
    let cliffords = clifford_group();
    let t = Gate1::T.m2();
    let syl = [Gate1::H.m2() * t, Gate1::S.m2() * Gate1::H.m2() * t];
    let mut prefixes = alloc::vec![Prefix { syl: 0, len: 0, lead_t: false, t: 0 }];
    let mut prefix_m = alloc::vec![M2::identity()];
    let mut prefix_level = alloc::vec![0, 1];
    // no-lead prefixes of the previous level
    let mut frontier: Vec<usize> = alloc::vec![0];
    for level in 1..=t_budget {
        if prefix_m.len() * cliffords.len() > max_entries {
            return Err(SynthError::MemoryBudget { limit: max_entries, reached: prefix_m.len() * cliffords.len() });
        }
        let mut next = Vec::with_capacity(2 * frontier.len());
        for &i in &frontier {
            let p = prefixes[i];
            for (b, s) in syl.iter().enumerate() {
                prefixes.push(Prefix { syl: p.syl | (b as u32) << p.len, len: p.len + 1, lead_t: false, t: level as u8 });
                prefix_m.push(prefix_m[i] * s);
                next.push(prefixes.len() - 1);
            }
        }
        for &i in &frontier {
            let p = prefixes[i];
            prefixes.push(Prefix { lead_t: true, t: level as u8, ..p });
            prefix_m.push(t * prefix_m[i]);
        }
        prefix_level.push(prefixes.len());
        frontier = next;
    }
    let total = prefixes.len() * cliffords.len();
    if total > max_entries {
        return Err(SynthError::MemoryBudget { limit: max_entries, reached: total });
    }
    let entry_level = prefix_level.iter().map(|p| p * cliffords.len()).collect();
    Ok(SynthesisDatabase { t_budget, cliffords, prefixes, prefix_m, prefix_level, entries: Vec::new(), entry_level })
}

impl SynthesisDatabase {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of entries with exactly T-count `t`.
    pub fn level_len(&self, t: usize) -> usize {
        if t > self.t_budget {
            0
        } else {
            self.entry_level[t + 1] - self.entry_level[t]
        }
    }

    fn entry_t(&self, idx: usize) -> usize {
        self.prefixes[self.entries[idx].prefix as usize].t as usize
    }

    fn entry_gates(&self, idx: usize) -> Vec<Gate1> {
        let e = &self.entries[idx];
        let mut g = self.cliffords[e.clifford as usize].1.clone();
        g.extend(self.prefixes[e.prefix as usize].gates());
        g
    }

    /// Stored SU(2) representatives `(Re a, Im a, Re c, Im c)` of
    /// `[[a, -c*], [c, a*]]`, in entry order.
    pub fn quaternions(&self) -> impl Iterator<Item = [f64; 4]> + '_ {
        self.entries.iter().map(|e| e.q)
    }

    /// Rebuilds a database from [`Self::quaternions`] output without
    /// recomputing the products. A sample of entries is checked against
    /// their gate words.
    pub fn from_quaternions(t_budget: usize, qs: &[[f64; 4]]) -> Result<Self, SynthError> {
        let mut db = skeleton(t_budget, usize::MAX)?;
        if qs.len() != db.prefixes.len() * db.cliffords.len() {
            return Err(SynthError::BadContents { t_budget, reason: "entry count" });
        }
        db.entries = qs
            .iter()
            .enumerate()
            .map(|(i, q)| Entry { q: *q, prefix: (i / 24) as u32, clifford: (i % 24) as u8 })
            .collect();
        let step = (qs.len() / 97).max(1);
        for i in (0..qs.len()).step_by(step).chain(core::iter::once(qs.len() - 1)) {
            let m = word_m2(&db.entry_gates(i));
            if qdist(&quaternion(&m), &qs[i]) > 1e-9 {
                return Err(SynthError::BadContents { t_budget, reason: "entry does not match its word" });
            }
        }
        Ok(db)
    }

    /// Every entry as `(t_count, time-ordered gates)`, grouped by T-count.
    pub fn sequences(&self) -> impl Iterator<Item = (usize, Vec<Gate1>)> + '_ {
        (0..self.entries.len()).map(|i| (self.entry_t(i), self.entry_gates(i)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliffordTSequence {
    pub gates: Vec<Gate1>,
    pub t_count: usize,
    pub achieved_error: f64,
    /// `target = global_phase * product(gates)`, up to `achieved_error`.
    pub global_phase: C64,
}

impl CliffordTSequence {
    fn finish(gates: Vec<Gate1>, target: &CMat) -> Self {
        let m = sequence_matrix(&gates);
        let tr = (m.adjoint() * target).trace();
        let global_phase = if tr.norm() > 0.0 { tr / tr.norm() } else { ONE };
        CliffordTSequence {
            t_count: gates.iter().filter(|g| g.is_t()).count(),
            achieved_error: linalg::phase_invariant_distance(target, &m),
            global_phase,
            gates,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SynthesisStrategy {
    RzOnly,
    Hybrid,
}

/// Quaternion grid over the database with cell side at least twice the search
/// radius, so a ball of that radius touches at most two cells per axis.
/// Cells are found through an open-addressing table on packed cell keys.
#[derive(Clone, Debug)]
struct GridIndex {
    cell: f64,
    /// Entry indices grouped by cell.
    order: Vec<u32>,
    /// `(packed key, start in order, count)`; `EMPTY` marks a free slot.
    slots: Vec<(u64, u32, u32)>,
    shift: u32,
}

const EMPTY: u64 = u64::MAX;

impl GridIndex {
    fn new(db: &SynthesisDatabase, cell: f64) -> Self {
        let mut keyed: Vec<(u64, u32)> = db.entries.iter().enumerate().map(|(i, e)| (Self::pack(&canon(&e.q), cell), i as u32)).collect();
        keyed.sort_unstable();
        let cells = keyed.chunk_by(|a, b| a.0 == b.0).count();
        let bits = (2 * cells).next_power_of_two().trailing_zeros().max(4);
        let mut grid = GridIndex { cell, order: Vec::with_capacity(keyed.len()), slots: alloc::vec![(EMPTY, 0, 0); 1 << bits], shift: 64 - bits };
        for run in keyed.chunk_by(|a, b| a.0 == b.0) {
            let start = grid.order.len() as u32;
            grid.order.extend(run.iter().map(|r| r.1));
            let mut h = grid.hash(run[0].0);
            while grid.slots[h].0 != EMPTY {
                h = (h + 1) & (grid.slots.len() - 1);
            }
            grid.slots[h] = (run[0].0, start, run.len() as u32);
        }
        grid
    }

    fn coord(x: f64, cell: f64) -> i64 {
        (x / cell).floor() as i64
    }

    fn pack_coords(c: [i64; 4]) -> u64 {
        c.iter().fold(0u64, |acc, &x| acc << 16 | ((x + 32768) as u64 & 0xffff))
    }

    fn pack(q: &[f64; 4], cell: f64) -> u64 {
        Self::pack_coords(q.map(|x| Self::coord(x, cell)))
    }

    fn hash(&self, key: u64) -> usize {
        (key.wrapping_mul(0x9E37_79B9_7F4A_7C15) >> self.shift) as usize
    }

    fn lookup(&self, key: u64) -> &[u32] {
        let mut h = self.hash(key);
        loop {
            let (k, start, len) = self.slots[h];
            if k == key {
                return &self.order[start as usize..(start + len) as usize];
            }
            if k == EMPTY {
                return &[];
            }
            h = (h + 1) & (self.slots.len() - 1);
        }
    }

    /// Calls `f` with every entry in a cell within `radius` of `q` or `-q`.
    /// Cells hold canonical representatives, so `-q` only matters when `q`
    /// is within `radius` of the `q[0] = 0` plane.
    fn probe(&self, q: &[f64; 4], radius: f64, mut f: impl FnMut(usize)) {
        let q = &canon(q);
        let signs: &[f64] = if q[0] < radius { &[1.0, -1.0] } else { &[1.0] };
        for &sign in signs {
            let mut choices = [[0i64; 2]; 4];
            let mut counts = [1usize; 4];
            for d in 0..4 {
                let p = sign * q[d];
                let c0 = Self::coord(p, self.cell);
                let off = p - c0 as f64 * self.cell;
                choices[d][0] = c0;
                if off < radius {
                    choices[d][1] = c0 - 1;
                    counts[d] = 2;
                } else if self.cell - off < radius {
                    choices[d][1] = c0 + 1;
                    counts[d] = 2;
                }
            }
            for a in 0..counts[0] {
                for b in 0..counts[1] {
                    for c in 0..counts[2] {
                        for d in 0..counts[3] {
                            let key = Self::pack_coords([choices[0][a], choices[1][b], choices[2][c], choices[3][d]]);
                            for &i in self.lookup(key) {
                                f(i as usize);
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Search state; caches meet-in-the-middle indices by power-of-two cell size.
pub struct Synthesizer<'a> {
    db: &'a SynthesisDatabase,
    grids: BTreeMap<i32, GridIndex>,
}

impl<'a> Synthesizer<'a> {
    pub fn new(db: &'a SynthesisDatabase) -> Self {
        Synthesizer { db, grids: BTreeMap::new() }
    }

    pub fn database(&self) -> &SynthesisDatabase {
        self.db
    }

    /// Minimal-T-count sequence within `eps` of `target`, searched up to
    /// twice the database budget.
    pub fn synth_u3(&mut self, target: &CMat, eps: f64) -> Result<CliffordTSequence, SynthError> {
        if !(eps > 0.0) {
            return Err(SynthError::BadEps);
        }
        if target.shape() != (2, 2) || !linalg::is_unitary(target, 1e-10) {
            return Err(SynthError::NonUnitary);
        }
        let qt = quaternion(&to_m2(target));
        let db = self.db;
        let mut best = (f64::INFINITY, 0usize);
        for level in 0..=db.t_budget {
            let mut hit: Option<(f64, usize)> = None;
            for i in db.entry_level[level]..db.entry_level[level + 1] {
                let e = &db.entries[i];
                let loose = 1.0 - qdot(&e.q, &qt).abs();
                if loose > eps * eps + 1e-9 && loose > best.0 * best.0 + 1e-9 {
                    continue;
                }
                let d = qdist(&e.q, &qt);
                if d < best.0 {
                    best = (d, level);
                }
                if d <= eps && hit.is_none_or(|h| d < h.0) {
                    hit = Some((d, i));
                }
            }
            if let Some((_, i)) = hit {
                return Ok(CliffordTSequence::finish(db.entry_gates(i), target));
            }
        }
        if let Some(gates) = self.meet_in_the_middle(target, eps) {
            return Ok(CliffordTSequence::finish(gates, target));
        }
        Err(SynthError::Unreachable { best_error: best.0, best_t_count: best.1 })
    }

    /// Any normal form with T-count in `(b, 2b]` splits as a level-`b`
    /// prefix times an entry, so only level-`b` prefixes are probed.
    fn meet_in_the_middle(&mut self, target: &CMat, eps: f64) -> Option<Vec<Gate1>> {
        let db = self.db;
        let b = db.t_budget;
        if b == 0 {
            return None;
        }
        let radius = SQRT_2 * eps;
        // power-of-two cells of 2-4 radii, at most 2^14 per axis so keys pack
        let exp = (2.0 * radius).max(1.0 / 16384.0).log2().ceil() as i32;
        let grid = self.grids.entry(exp).or_insert_with(|| GridIndex::new(db, 2f64.powi(exp)));
        let tm = to_m2(target);
        // (entry T-count, error, prefix, entry)
        let mut best: Option<(usize, f64, usize, usize)> = None;
        for pi in db.prefix_level[b]..db.prefix_level[b + 1] {
            let rest = quaternion(&(db.prefix_m[pi].adjoint() * tm));
            grid.probe(&rest, radius, |i| {
                let t = db.entry_t(i);
                if t == 0 || best.is_some_and(|x| t > x.0) {
                    return;
                }
                let d = qdist(&db.entries[i].q, &rest);
                if d <= eps && best.is_none_or(|x| t < x.0 || d < x.1) {
                    best = Some((t, d, pi, i));
                }
            });
        }
        best.map(|(_, _, pi, i)| {
            let mut g = db.entry_gates(i);
            g.extend(db.prefixes[pi].gates());
            g
        })
    }

    pub fn synth_rz(&mut self, theta: f64, eps: f64) -> Result<CliffordTSequence, SynthError> {
        self.synth_u3(&gates::rz(theta), eps)
    }

    /// Replaces every Rz, or with [`SynthesisStrategy::Hybrid`] every run of
    /// single-qubit ops on one wire holding two or more Rz, by a Clifford+T
    /// sequence. A hybrid run keeps its separate Rz syntheses when those use
    /// fewer T gates. Returns the circuit, its T-count and the error of each
    /// synthesized unit in order.
    pub fn synth_circuit(
        &mut self,
        r: &RotationCircuit,
        eps: f64,
        strategy: SynthesisStrategy,
    ) -> Result<(CliffordTCircuit, usize, Vec<f64>), SynthError> {
        r.validate().map_err(|_| SynthError::NonUnitary)?;
        let n = r.n_qubits;
        let mut out = CliffordTCircuit { n_qubits: n, ops: Vec::new() };
        let mut errors = Vec::new();
        // open single-qubit runs per wire: op indices
        let mut runs: Vec<Vec<usize>> = alloc::vec![Vec::new(); n];
        for (idx, op) in r.ops.iter().enumerate() {
            match op {
                Op::Clifford(g, qs) if g.arity() == 2 => {
                    for &q in qs {
                        let run = core::mem::take(&mut runs[q]);
                        self.flush(r, &run, q, eps, strategy, &mut out, &mut errors)?;
                    }
                    match g {
                        Clifford::Cx => out.ops.push(CtOp::Cx(qs[0], qs[1])),
                        _ => {
                            out.ops.push(CtOp::Single(Gate1::H, qs[1]));
                            out.ops.push(CtOp::Cx(qs[0], qs[1]));
                            out.ops.push(CtOp::Single(Gate1::H, qs[1]));
                        }
                    }
                }
                Op::Clifford(_, qs) => runs[qs[0]].push(idx),
                Op::Rz(q, _) => runs[*q].push(idx),
            }
        }
        for q in 0..n {
            let run = core::mem::take(&mut runs[q]);
            self.flush(r, &run, q, eps, strategy, &mut out, &mut errors)?;
        }
        let t = out.t_count();
        Ok((out, t, errors))
    }

    #[allow(clippy::too_many_arguments)]
    fn flush(
        &mut self,
        r: &RotationCircuit,
        run: &[usize],
        q: usize,
        eps: f64,
        strategy: SynthesisStrategy,
        out: &mut CliffordTCircuit,
        errors: &mut Vec<f64>,
    ) -> Result<(), SynthError> {
        let n_rz = run.iter().filter(|&&i| matches!(r.ops[i], Op::Rz(..))).count();
        let wrap = |index: usize| move |e: SynthError| SynthError::Gate { index, source: alloc::boxed::Box::new(e) };
        let direct = if strategy == SynthesisStrategy::Hybrid && n_rz >= 2 {
            let mut u = linalg::identity(2);
            for &i in run {
                u = single_matrix(&r.ops[i]) * u;
            }
            Some(self.synth_u3(&u, eps).map_err(wrap(run[0])))
        } else {
            None
        };
        let mut ops = Vec::new();
        let mut errs = Vec::new();
        let mut per_rz = Ok(());
        for &i in run {
            match &r.ops[i] {
                Op::Rz(_, theta) => match self.synth_rz(*theta, eps) {
                    Ok(seq) => {
                        errs.push(seq.achieved_error);
                        ops.extend(seq.gates.iter().map(|&g| CtOp::Single(g, q)));
                    }
                    Err(e) => {
                        per_rz = Err(wrap(i)(e));
                        break;
                    }
                },
                Op::Clifford(g, _) => ops.push(CtOp::Single(clifford_gate(*g), q)),
            }
        }
        // the collapsed run wins unless the separate rotations are strictly cheaper
        if let Some(direct) = direct {
            let separate = ops.iter().filter(|o| matches!(o, CtOp::Single(g, _) if g.is_t())).count();
            match (direct, &per_rz) {
                (Ok(seq), Err(_)) => {
                    errors.push(seq.achieved_error);
                    out.ops.extend(seq.gates.iter().map(|&g| CtOp::Single(g, q)));
                    return Ok(());
                }
                (Ok(seq), Ok(())) if seq.t_count <= separate => {
                    errors.push(seq.achieved_error);
                    out.ops.extend(seq.gates.iter().map(|&g| CtOp::Single(g, q)));
                    return Ok(());
                }
                (Err(e), Err(_)) => return Err(e),
                _ => {}
            }
        }
        per_rz?;
        errors.extend(errs);
        out.ops.extend(ops);
        Ok(())
    }
}

fn clifford_gate(g: Clifford) -> Gate1 {
    match g {
        Clifford::H => Gate1::H,
        Clifford::S => Gate1::S,
        Clifford::Sdg => Gate1::Sdg,
        Clifford::X => Gate1::X,
        Clifford::Z => Gate1::Z,
        Clifford::Cx | Clifford::Cz => unreachable!("two-qubit Clifford in a single-qubit run"),
    }
}

fn single_matrix(op: &Op) -> CMat {
    match op {
        Op::Rz(_, t) => gates::rz(*t),
        Op::Clifford(g, _) => g.matrix(),
    }
}

pub fn synth_rz(theta: f64, eps: f64, db: &SynthesisDatabase) -> Result<CliffordTSequence, SynthError> {
    Synthesizer::new(db).synth_rz(theta, eps)
}

pub fn synth_u3(u: &CMat, eps: f64, db: &SynthesisDatabase) -> Result<CliffordTSequence, SynthError> {
    Synthesizer::new(db).synth_u3(u, eps)
}

pub fn synth_circuit(
    r: &RotationCircuit,
    eps: f64,
    strategy: SynthesisStrategy,
    db: &SynthesisDatabase,
) -> Result<(CliffordTCircuit, usize, Vec<f64>), SynthError> {
    Synthesizer::new(db).synth_circuit(r, eps, strategy)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CtOp {
    Single(Gate1, usize),
    Cx(usize, usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CliffordTCircuit {
    pub n_qubits: usize,
    /// Time order.
    pub ops: Vec<CtOp>,
}

impl CliffordTCircuit {
    pub fn t_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, CtOp::Single(g, _) if g.is_t())).count()
    }

    pub fn to_dense(&self) -> CMat {
        let dim = 1usize << self.n_qubits;
        let mut u = linalg::identity(dim);
        for op in &self.ops {
            u = match op {
                CtOp::Single(g, q) => rotations::embed(&g.matrix(), &[*q], self.n_qubits),
                CtOp::Cx(a, b) => rotations::embed(&gates::cx(), &[*a, *b], self.n_qubits),
            } * u;
        }
        u
    }

    /// `C |0...0>` as an MPS. CX gates must act on neighbours.
    pub fn to_mps(&self, chi_max: usize) -> Result<Mps, SynthError> {
        let mut s = Mps::zero_state(self.n_qubits);
        let reversed = gates::swap() * gates::cx() * gates::swap();
        for op in &self.ops {
            match *op {
                CtOp::Single(g, q) => {
                    let m = g.matrix();
                    let t = &s.tensors[q];
                    let new = [&t[0] * m[(0, 0)] + &t[1] * m[(0, 1)], &t[0] * m[(1, 0)] + &t[1] * m[(1, 1)]];
                    s.tensors[q] = new;
                }
                CtOp::Cx(a, b) if b == a + 1 => s = mps::apply_gate(&s, &gates::cx(), a, chi_max, 0.0)?,
                CtOp::Cx(a, b) if a == b + 1 => s = mps::apply_gate(&s, &reversed, b, chi_max, 0.0)?,
                CtOp::Cx(a, b) => return Err(SynthError::NonAdjacent(a, b)),
            }
        }
        Ok(s)
    }

    pub fn gate_names(&self) -> Vec<String> {
        self.ops
            .iter()
            .map(|o| match o {
                CtOp::Single(g, q) => alloc::format!("{} {}", g.name(), q),
                CtOp::Cx(a, b) => alloc::format!("CX {} {}", a, b),
            })
            .collect()
    }
}
