//! Lowering staircase circuits to Clifford + Rz, with merging of the
//! single-qubit rotations that meet between consecutive two-qubit blocks.

use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

#[allow(unused_imports)]
use num_traits::Float;
use thiserror::Error;

use crate::compile::StaircaseCircuit;
use crate::kak::{self, KakError};
use crate::linalg::{self, gates, CMat, C64, ONE};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RotationError {
    #[error("gate {index} of layer {layer}: {source}")]
    Kak { layer: usize, index: usize, source: KakError },
    #[error("unknown Clifford gate {0:?}")]
    UnknownClifford(String),
    #[error("qubit {0} out of range")]
    QubitOutOfRange(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Clifford {
    H,
    S,
    Sdg,
    X,
    Z,
    Cx,
    Cz,
}

impl Clifford {
    pub fn name(self) -> &'static str {
        match self {
            Clifford::H => "H",
            Clifford::S => "S",
            Clifford::Sdg => "SDG",
            Clifford::X => "X",
            Clifford::Z => "Z",
            Clifford::Cx => "CX",
            Clifford::Cz => "CZ",
        }
    }

    pub fn from_name(s: &str) -> Result<Self, RotationError> {
        Ok(match s.to_ascii_uppercase().as_str() {
            "H" => Clifford::H,
            "S" => Clifford::S,
            "SDG" => Clifford::Sdg,
            "X" => Clifford::X,
            "Z" => Clifford::Z,
            "CX" => Clifford::Cx,
            "CZ" => Clifford::Cz,
            _ => return Err(RotationError::UnknownClifford(s.into())),
        })
    }

    pub fn arity(self) -> usize {
        match self {
            Clifford::Cx | Clifford::Cz => 2,
            _ => 1,
        }
    }

    pub fn matrix(self) -> CMat {
        match self {
            Clifford::H => gates::h(),
            Clifford::S => gates::s(),
            Clifford::Sdg => gates::sdg(),
            Clifford::X => gates::x(),
            Clifford::Z => gates::z(),
            Clifford::Cx => gates::cx(),
            Clifford::Cz => gates::cz(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Op {
    /// Qubits in gate order; for CX the first is the control.
    Clifford(Clifford, Vec<usize>),
    Rz(usize, f64),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RotationCircuit {
    pub n_qubits: usize,
    /// Time order: `ops[0]` acts first.
    pub ops: Vec<Op>,
    pub global_phase: C64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct RotationCountReport {
    pub rz_total: usize,
    /// Rz ops with an angle above the elision tolerance.
    pub rz_nontrivial: usize,
    /// Rz ops charged to each two-qubit gate, layer-major.
    pub rz_per_gate: Vec<usize>,
    /// Wire segments where two or more single-qubit unitaries were fused.
    pub merged_blocks: usize,
}

pub const DEFAULT_ANGLE_TOL: f64 = 1e-10;

fn wrap_angle(t: f64) -> f64 {
    let mut t = t % (2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    } else if t <= -PI {
        t += 2.0 * PI;
    }
    t
}

impl RotationCircuit {
    pub fn new(n_qubits: usize) -> Self {
        RotationCircuit { n_qubits, ops: Vec::new(), global_phase: ONE }
    }

    fn cl(&mut self, g: Clifford, q: &[usize]) {
        self.ops.push(Op::Clifford(g, q.to_vec()));
    }

    /// Rz with the angle reduced to `(-π, π]`; `Rz(θ + 2π) = -Rz(θ)` goes into the phase.
    fn rz(&mut self, q: usize, theta: f64) {
        let w = wrap_angle(theta);
        let turns = ((theta - w) / (2.0 * PI)).round() as i64;
        if turns.rem_euclid(2) == 1 {
            self.global_phase = -self.global_phase;
        }
        self.ops.push(Op::Rz(q, w));
    }

    /// `phase * Rz(α) Ry(β) Rz(γ)` as three Rz ops, with `Ry(β) = (S H) Rz(β) (S H)†`.
    fn single(&mut self, q: usize, u: &CMat) {
        let (a, b, g, ph) = kak::zyz(u);
        self.global_phase *= ph;
        self.rz(q, g);
        self.cl(Clifford::Sdg, &[q]);
        self.cl(Clifford::H, &[q]);
        self.rz(q, b);
        self.cl(Clifford::H, &[q]);
        self.cl(Clifford::S, &[q]);
        self.rz(q, a);
    }

    /// `exp(i θ P⊗P)` for `P = X, Y, Z` (k = 0, 1, 2), as `Rzz(-2θ)` between basis changes.
    fn pauli_pair(&mut self, k: usize, q0: usize, q1: usize, theta: f64) {
        let pre: &[Clifford] = match k {
            0 => &[Clifford::H],
            1 => &[Clifford::Sdg, Clifford::H],
            _ => &[],
        };
        for &g in pre {
            self.cl(g, &[q0]);
            self.cl(g, &[q1]);
        }
        self.cl(Clifford::Cx, &[q0, q1]);
        self.rz(q1, -2.0 * theta);
        self.cl(Clifford::Cx, &[q0, q1]);
        for &g in pre.iter().rev() {
            let inv = match g {
                Clifford::Sdg => Clifford::S,
                other => other,
            };
            self.cl(inv, &[q0]);
            self.cl(inv, &[q1]);
        }
    }

    pub fn rz_count(&self) -> usize {
        self.ops.iter().filter(|o| matches!(o, Op::Rz(..))).count()
    }

    /// Dense unitary including the global phase; qubit 0 is the most
    /// significant bit. Meant for checks on small registers.
    pub fn to_dense(&self) -> CMat {
        let dim = 1usize << self.n_qubits;
        let mut u = linalg::identity(dim) * self.global_phase;
        for op in &self.ops {
            let (g, qs): (CMat, &[usize]) = match op {
                Op::Clifford(c, q) => (c.matrix(), q.as_slice()),
                Op::Rz(q, t) => (gates::rz(*t), core::slice::from_ref(q)),
            };
            u = embed(&g, qs, self.n_qubits) * u;
        }
        u
    }

    pub fn validate(&self) -> Result<(), RotationError> {
        for op in &self.ops {
            let qs: &[usize] = match op {
                Op::Clifford(_, q) => q,
                Op::Rz(q, _) => core::slice::from_ref(q),
            };
            if let Some(&q) = qs.iter().find(|&&q| q >= self.n_qubits) {
                return Err(RotationError::QubitOutOfRange(q));
            }
        }
        Ok(())
    }
}

/// `g` acting on `qubits` of an `n`-qubit register.
pub fn embed(g: &CMat, qubits: &[usize], n: usize) -> CMat {
    let dim = 1usize << n;
    let k = qubits.len();
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    CMat::from_fn(dim, dim, |r, col| {
        let mut rest_equal = true;
        for q in 0..n {
            if !qubits.contains(&q) && bit(r, q) != bit(col, q) {
                rest_equal = false;
                break;
            }
        }
        if !rest_equal {
            return linalg::ZERO;
        }
        let (mut gr, mut gc) = (0, 0);
        for (j, &q) in qubits.iter().enumerate() {
            gr |= bit(r, q) << (k - 1 - j);
            gc |= bit(col, q) << (k - 1 - j);
        }
        g[(gr, gc)]
    })
}

/// Lowers every SU(4) through KAK: four single-qubit unitaries of three Rz
/// each around one Rz per Pauli pair, 15 in all. With `merge` the
/// single-qubit unitaries that meet on a wire between two-qubit blocks are
/// multiplied first, so only the leading ones and those left at the end are
/// emitted.
pub fn circuit_to_rotations(c: &StaircaseCircuit, merge: bool) -> Result<(RotationCircuit, RotationCountReport), RotationError> {
    let n = c.n_qubits;
    let mut out = RotationCircuit::new(n);
    let mut report = RotationCountReport::default();
    // pending single-qubit unitary per wire, how many factors it holds, and
    // the gate its eventual Rz ops are charged to
    let mut pending: Vec<(CMat, usize, usize)> = (0..n).map(|_| (linalg::identity(2), 0, 0)).collect();
    let mut gate_id = 0;
    for (l, layer) in c.layers.iter().enumerate() {
        for (idx, ((q0, q1), u)) in layer.iter().enumerate() {
            let k = kak::kak_decompose(u).map_err(|source| RotationError::Kak { layer: l, index: idx, source })?;
            report.rz_per_gate.push(0);
            let before = out.rz_count();
            out.global_phase *= k.global_phase;
            if merge {
                for (q, pre) in [(*q0, &k.pre_a), (*q1, &k.pre_b)] {
                    let p = &mut pending[q];
                    p.0 = pre * &p.0;
                    p.1 += 1;
                    if p.1 > 1 {
                        report.merged_blocks += 1;
                    }
                    let m = p.0.clone();
                    out.single(q, &m);
                }
            } else {
                out.single(*q0, &k.pre_a);
                out.single(*q1, &k.pre_b);
            }
            let (a, b, cc) = k.canonical_angles;
            out.pauli_pair(0, *q0, *q1, a);
            out.pauli_pair(1, *q0, *q1, b);
            out.pauli_pair(2, *q0, *q1, cc);
            if merge {
                pending[*q0] = (k.post_a.clone(), 1, gate_id);
                pending[*q1] = (k.post_b.clone(), 1, gate_id);
            } else {
                out.single(*q0, &k.post_a);
                out.single(*q1, &k.post_b);
            }
            report.rz_per_gate[gate_id] += out.rz_count() - before;
            gate_id += 1;
        }
    }
    if merge {
        for q in 0..n {
            let (m, count, owner) = pending[q].clone();
            if count > 0 {
                let before = out.rz_count();
                out.single(q, &m);
                report.rz_per_gate[owner] += out.rz_count() - before;
            }
        }
    }
    report.rz_total = out.rz_count();
    report.rz_nontrivial = out
        .ops
        .iter()
        .filter(|o| matches!(o, Op::Rz(_, t) if t.abs() > DEFAULT_ANGLE_TOL))
        .count();
    Ok((out, report))
}

/// Drops Rz ops within `angle_tol` of zero and replaces those within
/// `angle_tol` of a nonzero multiple of π/2 by Z, S or Sdg.
pub fn elide_trivial_rotations(r: &RotationCircuit, angle_tol: f64) -> RotationCircuit {
    let mut out = RotationCircuit { n_qubits: r.n_qubits, ops: Vec::with_capacity(r.ops.len()), global_phase: r.global_phase };
    for op in &r.ops {
        let Op::Rz(q, t) = op else {
            out.ops.push(op.clone());
            continue;
        };
        let k = (t / FRAC_PI_2).round();
        if (t - k * FRAC_PI_2).abs() > angle_tol {
            out.ops.push(op.clone());
            continue;
        }
        // Rz(kπ/2) = e^{-ikπ/4} S^k
        out.global_phase *= C64::from_polar(1.0, -k * FRAC_PI_4);
        match (k as i64).rem_euclid(4) {
            0 => {}
            1 => out.cl(Clifford::S, &[*q]),
            2 => out.cl(Clifford::Z, &[*q]),
            _ => out.cl(Clifford::Sdg, &[*q]),
        }
    }
    out
}
