//! Variational compilation of an MPS into layers of V-shaped two-qubit
//! staircases.
//!
//! Layers are stored in application order: `layers[0]` acts on `|0...0>`
//! first. Inside a layer the gates act in the listed order.

use alloc::vec::Vec;
use core::ops::Range;

#[allow(unused_imports)]
use num_traits::Float;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::linalg::{self, c, CMat};
use crate::mps::{self, Mps, MpsError, Site};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("center bond {center} out of range for {n} qubits")]
    CenterOutOfRange { center: usize, n: usize },
    #[error("gate {index} of layer {layer} is invalid: {reason}")]
    InvalidGate { layer: usize, index: usize, reason: &'static str },
    #[error("target has {0} sites but the circuit has {1} qubits")]
    SizeMismatch(usize, usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Mps(#[from] MpsError),
}

pub type Pair = (usize, usize);

#[derive(Clone, Debug, PartialEq)]
pub struct StaircaseCircuit {
    pub n_qubits: usize,
    pub center_bond: usize,
    pub layers: Vec<Vec<(Pair, CMat)>>,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct CompileReport {
    pub overlaps_per_layer: Vec<f64>,
    pub sweeps_per_stage: Vec<usize>,
    /// Overlap after every sweep, grouped by stage.
    pub sweep_overlaps: Vec<Vec<f64>>,
    pub final_overlap: f64,
}

/// Gate order of one layer: the center bond, then the arm towards site 0,
/// then the arm towards the last site.
pub fn vshape_layer_order(n_qubits: usize, center_bond: usize) -> Result<Vec<Pair>, CompileError> {
    if n_qubits < 2 || center_bond + 1 >= n_qubits {
        return Err(CompileError::CenterOutOfRange { center: center_bond, n: n_qubits });
    }
    let mut out = alloc::vec![(center_bond, center_bond + 1)];
    out.extend((0..center_bond).rev().map(|i| (i, i + 1)));
    out.extend((center_bond + 1..n_qubits - 1).map(|i| (i, i + 1)));
    Ok(out)
}

impl StaircaseCircuit {
    pub fn empty(n_qubits: usize, center_bond: usize) -> Result<Self, CompileError> {
        vshape_layer_order(n_qubits, center_bond)?;
        Ok(StaircaseCircuit { n_qubits, center_bond, layers: Vec::new() })
    }

    pub fn identity(n_qubits: usize, center_bond: usize, n_layers: usize) -> Result<Self, CompileError> {
        let order = vshape_layer_order(n_qubits, center_bond)?;
        let layer: Vec<(Pair, CMat)> = order.iter().map(|&p| (p, linalg::identity(4))).collect();
        Ok(StaircaseCircuit { n_qubits, center_bond, layers: alloc::vec![layer; n_layers] })
    }

    /// Haar-random gates.
    pub fn random(n_qubits: usize, center_bond: usize, n_layers: usize, seed: u64) -> Result<Self, CompileError> {
        let mut c = Self::identity(n_qubits, center_bond, n_layers)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in c.layers.iter_mut() {
            for (_, g) in layer.iter_mut() {
                *g = linalg::random_unitary(4, &mut rng);
            }
        }
        Ok(c)
    }

    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn n_gates(&self) -> usize {
        self.layers.iter().map(Vec::len).sum()
    }

    /// Checks pair order and unitarity to `tol`.
    pub fn validate(&self, tol: f64) -> Result<(), CompileError> {
        let order = vshape_layer_order(self.n_qubits, self.center_bond)?;
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.len() != order.len() {
                return Err(CompileError::InvalidGate { layer: l, index: layer.len(), reason: "wrong number of gates" });
            }
            for (i, ((p, g), want)) in layer.iter().zip(&order).enumerate() {
                if p != want {
                    return Err(CompileError::InvalidGate { layer: l, index: i, reason: "pair out of order" });
                }
                if g.shape() != (4, 4) || !linalg::is_unitary(g, tol) {
                    return Err(CompileError::InvalidGate { layer: l, index: i, reason: "not a 4x4 unitary" });
                }
            }
        }
        Ok(())
    }
}

/// `U|0...0>` with bonds capped at `chi_max`.
pub fn circuit_to_state(c: &StaircaseCircuit, chi_max: usize) -> Result<Mps, CompileError> {
    let mut psi = Mps::zero_state(c.n_qubits);
    for layer in &c.layers {
        for (p, g) in layer {
            psi = mps::apply_gate(&psi, g, p.0, chi_max.max(1), 0.0)?;
        }
    }
    Ok(psi)
}

/// Left and right overlap environments between a bra and a ket MPS. Each
/// cached step remembers the tensors it was built from, so only the part of
/// the chain that actually changed is contracted again.
#[derive(Default)]
struct EnvCache {
    left: Vec<CMat>,
    left_keys: Vec<(Site, Site)>,
    // right[j] covers the last j sites
    right: Vec<CMat>,
    right_keys: Vec<(Site, Site)>,
}

fn same(key: &(Site, Site), bra: &Site, ket: &Site) -> bool {
    key.0 == *bra && key.1 == *ket
}

impl EnvCache {
    /// Sites `< upto`, shape `chi_bra x chi_ket`.
    fn left(&mut self, bra: &Mps, ket: &Mps, upto: usize) -> CMat {
        if self.left.is_empty() {
            self.left.push(CMat::identity(1, 1));
        }
        for k in 0..upto {
            let (b, a) = (&bra.tensors[k], &ket.tensors[k]);
            if k < self.left_keys.len() && same(&self.left_keys[k], b, a) {
                continue;
            }
            self.left.truncate(k + 1);
            self.left_keys.truncate(k);
            let e = mps::overlap_left_step(&self.left[k], b, a);
            self.left.push(e);
            self.left_keys.push((b.clone(), a.clone()));
        }
        self.left[upto].clone()
    }

    /// Sites `>= from`, shape `chi_ket x chi_bra`.
    fn right(&mut self, bra: &Mps, ket: &Mps, from: usize) -> CMat {
        let n = ket.n_sites();
        if self.right.is_empty() {
            self.right.push(CMat::identity(1, 1));
        }
        for j in 0..n - from {
            let k = n - 1 - j;
            let (b, a) = (&bra.tensors[k], &ket.tensors[k]);
            if j < self.right_keys.len() && same(&self.right_keys[j], b, a) {
                continue;
            }
            self.right.truncate(j + 1);
            self.right_keys.truncate(j);
            let e = mps::overlap_right_step(&self.right[j], b, a);
            self.right.push(e);
            self.right_keys.push((b.clone(), a.clone()));
        }
        self.right[n - from].clone()
    }
}

/// `E` with `<bra| g_(i,i+1) |ket> = tr(g E)`.
fn gate_environment(cache: &mut EnvCache, bra: &Mps, ket: &Mps, i: usize) -> CMat {
    let l = cache.left(bra, ket, i);
    let r = cache.right(bra, ket, i + 2);
    let block = |m: &Mps, q: usize| linalg::matmul(&m.tensors[i][q / 2], &m.tensors[i + 1][q % 2]);
    let tb: [CMat; 4] = core::array::from_fn(|p| block(bra, p));
    let mut e = CMat::zeros(4, 4);
    for q in 0..4 {
        let m = linalg::matmul(&linalg::matmul(&l, &block(ket, q)), &r);
        for p in 0..4 {
            e[(q, p)] = tb[p].iter().zip(m.iter()).map(|(b, a)| b.conj() * a).sum();
        }
    }
    e
}

/// Result of one sweep. `degenerate` lists `(layer, index)` of gates whose
/// environment vanished and which were reset to the identity.
#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub circuit: StaircaseCircuit,
    pub overlap: f64,
    pub degenerate: Vec<Pair>,
}

fn check_target(c: &StaircaseCircuit, target: &Mps) -> Result<(), CompileError> {
    if target.n_sites() != c.n_qubits {
        return Err(CompileError::SizeMismatch(target.n_sites(), c.n_qubits));
    }
    c.validate(1e-10)
}

fn polar_update(e: &CMat, g: &mut CMat, at: Pair, degenerate: &mut Vec<Pair>) {
    match linalg::polar_maximizer(e) {
        Some(u) => *g = u,
        None => {
            *g = linalg::identity(4);
            degenerate.push(at);
        }
    }
}

/// Forward pass over the gates in application order, then a backward pass,
/// replacing every gate of the `active` layers by the polar unitary of its
/// environment.
fn sweep_layers(c: &mut StaircaseCircuit, target: &Mps, chi: usize, active: Range<usize>) -> Result<(f64, Vec<Pair>), CompileError> {
    let nl = c.layers.len();
    let n = c.n_qubits;
    let mut degenerate = Vec::new();
    if active.is_empty() || nl == 0 {
        let psi = circuit_to_state(c, chi)?;
        return Ok((mps::overlap(target, &psi)?.norm(), degenerate));
    }
    let apply = |s: &Mps, g: &CMat, site: usize| mps::apply_gate(s, g, site, chi, 0.0);
    let apply_dag = |s: &Mps, g: &CMat, site: usize| mps::apply_gate(s, &g.adjoint(), site, chi, 0.0);

    // bras[l]: (layers l..)^dagger |target>
    let mut bras: Vec<Mps> = alloc::vec![target.clone(); nl + 1];
    for l in (active.start..nl).rev() {
        let mut b = bras[l + 1].clone();
        for (p, g) in c.layers[l].iter().rev() {
            b = apply_dag(&b, g, p.0)?;
        }
        bras[l] = b;
    }

    let mut ket = Mps::zero_state(n);
    for layer in &c.layers[..active.start] {
        for (p, g) in layer {
            ket = apply(&ket, g, p.0)?;
        }
    }
    let mut kets: Vec<Mps> = alloc::vec![ket.clone()];
    let mut cache = EnvCache::default();
    for l in active.clone() {
        let m = c.layers[l].len();
        let mut per_gate: Vec<Mps> = alloc::vec![bras[l + 1].clone()];
        for g in (1..m).rev() {
            let (p, u) = &c.layers[l][g];
            let next = apply_dag(per_gate.last().unwrap(), u, p.0)?;
            per_gate.push(next);
        }
        per_gate.reverse();
        for g in 0..m {
            let site = c.layers[l][g].0 .0;
            let e = gate_environment(&mut cache, &per_gate[g], &ket, site);
            polar_update(&e, &mut c.layers[l][g].1, (l, g), &mut degenerate);
            ket = apply(&ket, &c.layers[l][g].1, site)?;
        }
        kets.push(ket.clone());
    }

    let mut bra = bras[active.end].clone();
    let mut cache = EnvCache::default();
    for l in active.clone().rev() {
        let m = c.layers[l].len();
        let mut per_gate: Vec<Mps> = alloc::vec![kets[l - active.start].clone()];
        for g in 0..m - 1 {
            let (p, u) = &c.layers[l][g];
            let next = apply(per_gate.last().unwrap(), u, p.0)?;
            per_gate.push(next);
        }
        for g in (0..m).rev() {
            let site = c.layers[l][g].0 .0;
            let e = gate_environment(&mut cache, &bra, &per_gate[g], site);
            polar_update(&e, &mut c.layers[l][g].1, (l, g), &mut degenerate);
            bra = apply_dag(&bra, &c.layers[l][g].1, site)?;
        }
    }
    for layer in c.layers[..active.start].iter().rev() {
        for (p, g) in layer.iter().rev() {
            bra = apply_dag(&bra, g, p.0)?;
        }
    }
    // <0| U^dagger |target>
    let ov = mps::overlap(&Mps::zero_state(n), &bra)?.norm();
    Ok((ov, degenerate))
}

/// One forward-and-back polar sweep over every gate. Environments are
/// contracted with bonds capped at `chi_env`.
pub fn optimize_sweep(c: &StaircaseCircuit, target: &Mps, chi_env: usize) -> Result<SweepOutcome, CompileError> {
    check_target(c, target)?;
    let mut out = c.clone();
    let all = 0..out.layers.len();
    let (overlap, degenerate) = sweep_layers(&mut out, target, chi_env.max(1), all)?;
    Ok(SweepOutcome { circuit: out, overlap, degenerate })
}

#[derive(Clone, Debug)]
pub struct CompileConfig {
    pub max_layers: usize,
    /// Sweeps stop when the overlap changes by less than this, relatively.
    pub rel_tol: f64,
    /// Environment bond cap; twice the target's largest bond when `None`.
    pub chi_env: Option<usize>,
    pub max_sweeps: usize,
    pub seed: u64,
}

impl Default for CompileConfig {
    fn default() -> Self {
        CompileConfig { max_layers: 5, rel_tol: 1e-4, chi_env: None, max_sweeps: 200, seed: 0 }
    }
}

fn converge(
    c: &mut StaircaseCircuit,
    target: &Mps,
    chi: usize,
    active: Range<usize>,
    cfg: &CompileConfig,
) -> Result<Vec<f64>, CompileError> {
    let mut prev: Option<f64> = None;
    let mut history = Vec::new();
    loop {
        let (ov, _) = sweep_layers(c, target, chi, active.clone())?;
        history.push(ov);
        let done = match prev {
            Some(p) => (ov - p).abs() <= cfg.rel_tol * p.abs().max(f64::MIN_POSITIVE),
            None => ov >= 1.0 - 1e-14,
        };
        prev = Some(ov);
        if done || history.len() >= cfg.max_sweeps {
            return Ok(history);
        }
    }
}

/// Grows the circuit one layer at a time. The first layer starts random.
/// Each later layer starts near the identity and is inserted next to
/// `|0...0>`; it is optimized alone against the fixed rest, then all layers
/// are optimized together. Returns the circuit after every stage.
pub fn grow_and_compile(
    target: &Mps,
    center_bond: usize,
    cfg: &CompileConfig,
) -> Result<(Vec<StaircaseCircuit>, CompileReport), CompileError> {
    if cfg.max_layers < 1 {
        return Err(CompileError::InvalidConfig("max_layers must be at least 1"));
    }
    if !(cfg.rel_tol > 0.0) || cfg.max_sweeps < 1 {
        return Err(CompileError::InvalidConfig("rel_tol must be positive and max_sweeps at least 1"));
    }
    let n = target.n_sites();
    let chi = cfg.chi_env.unwrap_or(2 * target.max_bond()).max(1);
    let mut c = StaircaseCircuit::empty(n, center_bond)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut stages = Vec::with_capacity(cfg.max_layers);
    let mut report = CompileReport::default();
    for stage in 0..cfg.max_layers {
        let order = vshape_layer_order(n, center_bond)?;
        let layer: Vec<(Pair, CMat)> = order
            .iter()
            .map(|&p| {
                let g = if stage == 0 { linalg::random_unitary(4, &mut rng) } else { near_identity(&mut rng, 1e-8) };
                (p, g)
            })
            .collect();
        c.layers.insert(0, layer);
        let mut history = Vec::new();
        if stage > 0 {
            history.extend(converge(&mut c, target, chi, 0..1, cfg)?);
        }
        let all = 0..c.layers.len();
        history.extend(converge(&mut c, target, chi, all, cfg)?);
        let ov = *history.last().unwrap();
        report.overlaps_per_layer.push(ov);
        report.sweeps_per_stage.push(history.len());
        report.sweep_overlaps.push(history);
        report.final_overlap = ov;
        stages.push(c.clone());
    }
    Ok((stages, report))
}

/// `exp(i eps H)` for a random Hermitian `H`, to leave exact saddle points.
fn near_identity<R: rand::Rng>(rng: &mut R, eps: f64) -> CMat {
    let mut h = CMat::zeros(4, 4);
    for i in 0..4 {
        for j in i..4 {
            let (a, b) = linalg::gaussian_pair(rng);
            let x = if i == j { c(a, 0.0) } else { c(a, b) };
            h[(i, j)] = x;
            h[(j, i)] = x.conj();
        }
    }
    let m = linalg::identity(4) + h * c(0.0, eps);
    linalg::polar_maximizer(&m.adjoint()).unwrap_or_else(|| linalg::identity(4))
}
