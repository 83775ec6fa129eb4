//! Pipeline stages. Each reads its inputs from the output directory, writes
//! its artifacts there and returns their paths.
//!
//! Artifacts: `state_<k>.mps`, `energies.csv`, `dmrg_log_<k>.csv`,
//! `target.mps`, `compress.csv`, `circuit_L<l>.su4c`, `compile.csv`,
//! `circuit_L<l>.rotc`, `decompose.csv`, `<id>.ctq`, `report.csv`,
//! `pareto.csv`, `extrapolate_data.csv`, `extrapolate_fit.csv`.

use std::path::{Path, PathBuf};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use stateprep_core::analysis::{self, AnalysisError, OverlapDataset, OverlapRecord, ReportRow};
use stateprep_core::compile::{grow_and_compile, CompileError, StaircaseCircuit};
use stateprep_core::dmrg::{excited_states, reverse_sweep_series, DmrgConfig, DmrgError, SectorGuard};
use stateprep_core::hamiltonian::{
    build_mpo, default_ordering, dense_hamiltonian, eigh, HamiltonianError, QubitMapping, ShellModelHamiltonian, DENSE_LIMIT,
};
use stateprep_core::linalg::C64;
use stateprep_core::mps::{self, Mps, MpsError};
use stateprep_core::mpo::Mpo;
use stateprep_core::rotations::{circuit_to_rotations, RotationError};
use stateprep_core::synthesis::{SynthError, Synthesizer};
use thiserror::Error;

use crate::config::{ConfigError, PipelineConfig};
use crate::dbcache::{self, CacheError};
use crate::formats::{self, FormatError};
use crate::interaction::{self, InteractionError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Interaction(#[from] InteractionError),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Cache(#[from] CacheError),
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {msg}")]
    BadArtifact { path: PathBuf, msg: String },
    #[error(transparent)]
    Hamiltonian(#[from] HamiltonianError),
    #[error(transparent)]
    Dmrg(#[from] DmrgError),
    #[error(transparent)]
    Mps(#[from] MpsError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Rotation(#[from] RotationError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("stage {stage} failed: {source}")]
    Stage { stage: &'static str, completed: Vec<PathBuf>, source: Box<PipelineError> },
}

impl PipelineError {
    /// 1 for numerical failures, 2 for IO, config and input errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Stage { source, .. } => source.exit_code(),
            PipelineError::Cache(CacheError::Synth(_)) => 1,
            PipelineError::Config(_)
            | PipelineError::Interaction(_)
            | PipelineError::Format(_)
            | PipelineError::Cache(_)
            | PipelineError::Csv { .. }
            | PipelineError::Io { .. }
            | PipelineError::BadArtifact { .. }
            | PipelineError::Hamiltonian(_) => 2,
            _ => 1,
        }
    }
}

type Result<T> = std::result::Result<T, PipelineError>;

fn out_dir(cfg: &PipelineConfig) -> Result<&Path> {
    let dir = cfg.paths.out_dir.as_path();
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io { path: dir.to_path_buf(), source })?;
    Ok(dir)
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let err = |source| PipelineError::Csv { path: path.to_path_buf(), source };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|source| PipelineError::Io { path: path.to_path_buf(), source })
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let err = |source| PipelineError::Csv { path: path.to_path_buf(), source };
    let mut r = csv::Reader::from_path(path).map_err(err)?;
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(err)
}

fn read_mps(path: &Path) -> Result<Mps> {
    Ok(formats::parse_mps(&formats::read_text(path)?)?)
}

struct Problem {
    h: ShellModelHamiltonian,
    mapping: QubitMapping,
    mpo: Mpo,
}

fn problem(cfg: &PipelineConfig) -> Result<Problem> {
    let h = interaction::read_interaction(cfg.require_hamiltonian()?)?;
    let mapping = default_ordering(&h);
    let mpo = build_mpo(&h, &mapping)?;
    cfg.sector().check(mapping.site_species())?;
    Ok(Problem { h, mapping, mpo })
}

fn dmrg_config(cfg: &PipelineConfig, p: &Problem) -> DmrgConfig {
    let mut d = cfg.dmrg_config();
    d.sector = Some(SectorGuard::new(&p.mapping, cfg.sector(), cfg.dmrg.sector_penalty, cfg.dmrg.penalty_weight_mev));
    d
}

fn initial_state(cfg: &PipelineConfig, p: &Problem) -> Result<Mps> {
    Ok(mps::random_sector_mps(p.mapping.n_sites(), cfg.sector(), &p.mapping, cfg.dmrg.init_chi, cfg.seed)?)
}

/// Sector ground state from dense diagonalization, in site order.
fn dense_ground_state(cfg: &PipelineConfig, p: &Problem) -> Result<Option<Vec<C64>>> {
    if p.mapping.n_sites() > 12 {
        return Ok(None);
    }
    let dense = dense_hamiltonian(&p.h, &p.mapping, Some(cfg.sector()))?;
    if dense.matrix.nrows() > DENSE_LIMIT || dense.matrix.nrows() == 0 {
        return Ok(None);
    }
    let (_, vecs) = eigh(&dense.matrix);
    let v: DVector<C64> = vecs.column(0).into_owned();
    Ok(Some(dense.embed(&v).iter().copied().collect()))
}

fn dense_overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
}

#[derive(Serialize)]
struct EnergyRow {
    state: usize,
    #[serde(rename = "energy_MeV")]
    energy_mev: f64,
    converged: bool,
    sweeps: usize,
    max_bond: usize,
}

#[derive(Serialize)]
struct SweepRow {
    sweep: usize,
    #[serde(rename = "energy_MeV")]
    energy_mev: f64,
    max_bond: usize,
    truncation_error_sum: f64,
}

pub fn cmd_solve(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let p = problem(cfg)?;
    let dir = out_dir(cfg)?;
    let res = excited_states(&p.mpo, cfg.dmrg.n_states, &dmrg_config(cfg, &p), &initial_state(cfg, &p)?)?;
    let mut written = Vec::new();
    let mut energies = Vec::new();
    for (k, r) in res.iter().enumerate() {
        let path = dir.join(format!("state_{k}.mps"));
        formats::write_text(&path, &formats::write_mps(&r.state))?;
        written.push(path);
        let log: Vec<SweepRow> = r
            .log
            .iter()
            .map(|s| SweepRow { sweep: s.sweep, energy_mev: s.energy, max_bond: s.max_bond, truncation_error_sum: s.truncation_error_sum })
            .collect();
        let path = dir.join(format!("dmrg_log_{k}.csv"));
        write_csv(&path, &log)?;
        written.push(path);
        energies.push(EnergyRow { state: k, energy_mev: r.energy, converged: r.converged, sweeps: r.log.len(), max_bond: r.state.max_bond() });
    }
    let path = dir.join("energies.csv");
    write_csv(&path, &energies)?;
    written.push(path);
    Ok(written)
}

#[derive(Serialize, Deserialize)]
struct CompressRow {
    chi: usize,
    target_to_state: f64,
    /// Overlap with the dense ground state, or with the DMRG state when the
    /// sector is too large to diagonalize.
    target_to_exact: f64,
    exact_is_dense: bool,
}

pub fn cmd_compress(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let p = problem(cfg)?;
    let dir = out_dir(cfg)?;
    let state = read_mps(&dir.join("state_0.mps"))?;
    let target = mps::compress(&state, cfg.compress.chi_max, cfg.compress.sweeps).normalized()?;
    let to_state = mps::overlap(&target, &state)?.norm();
    let (to_exact, dense) = match dense_ground_state(cfg, &p)? {
        Some(exact) => (dense_overlap(&target.to_dense(), &exact), true),
        None => (to_state, false),
    };
    let tpath = dir.join("target.mps");
    formats::write_text(&tpath, &formats::write_mps(&target))?;
    let cpath = dir.join("compress.csv");
    write_csv(&cpath, &[CompressRow { chi: cfg.compress.chi_max, target_to_state: to_state, target_to_exact: to_exact, exact_is_dense: dense }])?;
    Ok(vec![tpath, cpath])
}

#[derive(Serialize)]
struct CompileRow {
    layers: usize,
    overlap: f64,
    sweeps: usize,
}

fn center_bond(m: &QubitMapping) -> usize {
    m.species_boundary().unwrap_or((m.n_sites().max(2) - 2) / 2)
}

pub fn cmd_compile(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let p = problem(cfg)?;
    let dir = out_dir(cfg)?;
    let target = read_mps(&dir.join("target.mps"))?;
    let (circuits, report) = grow_and_compile(&target, center_bond(&p.mapping), &cfg.compile_config())?;
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for (k, c) in circuits.iter().enumerate() {
        let path = dir.join(format!("circuit_L{}.su4c", c.n_layers()));
        formats::write_text(&path, &formats::write_su4(c))?;
        written.push(path);
        rows.push(CompileRow { layers: c.n_layers(), overlap: report.overlaps_per_layer[k], sweeps: report.sweeps_per_stage[k] });
    }
    let path = dir.join("compile.csv");
    write_csv(&path, &rows)?;
    written.push(path);
    Ok(written)
}

fn compiled_circuits(cfg: &PipelineConfig, dir: &Path, ext: &str) -> Vec<(usize, PathBuf)> {
    (1..=cfg.compile.max_layers).map(|l| (l, dir.join(format!("circuit_L{l}.{ext}")))).filter(|(_, p)| p.is_file()).collect()
}

fn missing(dir: &Path, what: &str) -> PipelineError {
    PipelineError::BadArtifact { path: dir.to_path_buf(), msg: format!("no {what} files; run the previous stage first") }
}

#[derive(Serialize)]
struct DecomposeRow {
    layers: usize,
    gates: usize,
    rz_total: usize,
    rz_nontrivial: usize,
    merged_blocks: usize,
}

pub fn cmd_decompose(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let inputs = compiled_circuits(cfg, dir, "su4c");
    if inputs.is_empty() {
        return Err(missing(dir, "circuit_L*.su4c"));
    }
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for (l, path) in inputs {
        let c: StaircaseCircuit = formats::parse_su4(&formats::read_text(&path)?)?;
        let (r, report) = circuit_to_rotations(&c, true)?;
        let path = dir.join(format!("circuit_L{l}.rotc"));
        formats::write_text(&path, &formats::write_rotations(&r))?;
        written.push(path);
        rows.push(DecomposeRow {
            layers: l,
            gates: c.n_gates(),
            rz_total: report.rz_total,
            rz_nontrivial: report.rz_nontrivial,
            merged_blocks: report.merged_blocks,
        });
    }
    let path = dir.join("decompose.csv");
    write_csv(&path, &rows)?;
    written.push(path);
    Ok(written)
}

/// One row of `report.csv`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ReportCsvRow {
    pub circuit_id: String,
    pub layers: usize,
    pub eps: f64,
    pub strategy: String,
    pub rz_total: usize,
    pub t_count: usize,
    pub overlap_to_target: f64,
    pub bound_to_exact: f64,
}

impl From<ReportCsvRow> for ReportRow {
    fn from(r: ReportCsvRow) -> Self {
        ReportRow {
            circuit_id: r.circuit_id,
            layers: r.layers,
            eps: r.eps,
            strategy: r.strategy,
            rz_total: r.rz_total,
            t_count: r.t_count,
            overlap_to_target: r.overlap_to_target,
            bound_to_exact: r.bound_to_exact,
        }
    }
}

pub fn circuit_id(layers: usize, eps: f64, strategy: &str) -> String {
    format!("L{layers}_e{:.2}_{strategy}", -eps.log10())
}

pub fn cmd_synth(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let inputs = compiled_circuits(cfg, dir, "rotc");
    if inputs.is_empty() {
        return Err(missing(dir, "circuit_L*.rotc"));
    }
    let target = read_mps(&dir.join("target.mps"))?;
    let cpath = dir.join("compress.csv");
    let to_exact = read_csv::<CompressRow>(&cpath)?
        .first()
        .map(|r| r.target_to_exact)
        .ok_or_else(|| PipelineError::BadArtifact { path: cpath.clone(), msg: "empty".into() })?;
    let db = dbcache::load_or_build(&cfg.db_cache(), cfg.synth.t_budget)?;
    let mut synth = Synthesizer::new(&db);
    let chi = 1usize << (target.n_sites() / 2).min(8);
    let mut written = Vec::new();
    let mut rows = Vec::new();
    for (l, path) in inputs {
        let r = formats::parse_rotations(&formats::read_text(&path)?)?;
        for &eps in &cfg.synth.eps_list {
            for &strategy in &cfg.synth.strategy {
                let id = circuit_id(l, eps, strategy.name());
                let (ct, t_count, _) = synth.synth_circuit(&r, eps, strategy.core())?;
                let state = ct.to_mps(chi)?;
                let ov = mps::overlap(&target, &state)?.norm().min(1.0);
                let path = dir.join(format!("{id}.ctq"));
                formats::write_text(&path, &formats::write_clifford_t(&ct))?;
                written.push(path);
                rows.push(ReportCsvRow {
                    circuit_id: id,
                    layers: l,
                    eps,
                    strategy: strategy.name().into(),
                    rz_total: r.rz_count(),
                    t_count,
                    overlap_to_target: ov,
                    bound_to_exact: analysis::wootters_bound(ov, to_exact.min(1.0))?,
                });
            }
        }
    }
    let path = dir.join("report.csv");
    write_csv(&path, &rows)?;
    written.push(path);
    Ok(written)
}

#[derive(Serialize, Deserialize)]
pub struct ParetoCsvRow {
    pub circuit_id: String,
    pub layers: usize,
    pub eps: f64,
    pub t_count: usize,
    pub infidelity: f64,
}

pub fn cmd_report(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let dir = out_dir(cfg)?;
    let rows: Vec<ReportCsvRow> = read_csv(&dir.join("report.csv"))?;
    let points: Vec<_> = rows.into_iter().map(|r| ReportRow::from(r).pareto_point()).collect();
    let front: Vec<ParetoCsvRow> = analysis::pareto_front(&points)
        .into_iter()
        .map(|p| ParetoCsvRow { circuit_id: p.circuit_id, layers: p.layers, eps: p.eps, t_count: p.t_count, infidelity: p.infidelity })
        .collect();
    let path = dir.join("pareto.csv");
    write_csv(&path, &front)?;
    Ok(vec![path])
}

#[derive(Serialize, Deserialize)]
struct DataRow {
    chi_small: usize,
    chi_large: usize,
    overlap_sq: f64,
}

#[derive(Serialize)]
struct FitRow {
    kind: &'static str,
    chi: usize,
    value: f64,
}

/// Fits the overlap model to `data`, or to a reverse-sweep series computed
/// from the configured Hamiltonian. Returns the estimate and the artifacts.
pub fn cmd_extrapolate(cfg: &PipelineConfig, data: Option<&Path>) -> Result<(f64, Vec<PathBuf>)> {
    let dir = out_dir(cfg)?;
    let x = &cfg.extrapolate;
    let mut written = Vec::new();
    let mut check = None;
    let records: Vec<OverlapRecord> = match data {
        Some(path) => read_csv::<DataRow>(path)?
            .into_iter()
            .map(|r| OverlapRecord { chi_small: r.chi_small, chi_large: r.chi_large, overlap_sq: r.overlap_sq })
            .collect(),
        None => {
            let p = problem(cfg)?;
            let res = reverse_sweep_series(&p.mpo, &x.chis, &dmrg_config(cfg, &p), &initial_state(cfg, &p)?)?;
            let mut recs = Vec::new();
            for (i, &s) in x.chis.iter().enumerate() {
                for (j, &l) in x.chis.iter().enumerate() {
                    if x.chi_small.contains(&s) && x.chi_large.contains(&l) && s < l {
                        let f = mps::overlap(&res[i].state, &res[j].state)?.norm_sqr().min(1.0);
                        recs.push(OverlapRecord { chi_small: s, chi_large: l, overlap_sq: f });
                    }
                }
            }
            if let (Some(exact), Some(first)) = (dense_ground_state(cfg, &p)?, res.first()) {
                check = Some((x.chis[0], dense_overlap(&first.state.to_dense(), &exact).powi(2)));
            }
            let rows: Vec<DataRow> = recs.iter().map(|r| DataRow { chi_small: r.chi_small, chi_large: r.chi_large, overlap_sq: r.overlap_sq }).collect();
            let path = dir.join("extrapolate_data.csv");
            write_csv(&path, &rows)?;
            written.push(path);
            recs
        }
    };
    let query = x.chi_query.or(x.chis.first().copied()).unwrap_or(0);
    let dataset = OverlapDataset::new(records)?;
    let (est, diag) = analysis::extrapolate_overlap(&dataset, &x.chi_small, &x.chi_large, query)?;
    let mut rows: Vec<FitRow> = diag.asymptotes.iter().map(|&(chi, value)| FitRow { kind: "asymptote", chi, value }).collect();
    rows.push(FitRow { kind: "estimate", chi: query, value: est });
    if let Some((chi, value)) = check {
        rows.push(FitRow { kind: "dense", chi, value });
    }
    let path = dir.join("extrapolate_fit.csv");
    write_csv(&path, &rows)?;
    written.push(path);
    Ok((est, written))
}

pub fn cmd_bound(ab: f64, bc: f64) -> Result<f64> {
    Ok(analysis::wootters_bound(ab, bc)?)
}

type Stage = fn(&PipelineConfig) -> Result<Vec<PathBuf>>;

/// solve, compress, compile, decompose, synth, report. On failure the error
/// names the stage and lists everything already written.
pub fn cmd_pipeline(cfg: &PipelineConfig) -> Result<Vec<PathBuf>> {
    let stages: [(&'static str, Stage); 6] = [
        ("solve", cmd_solve),
        ("compress", cmd_compress),
        ("compile", cmd_compile),
        ("decompose", cmd_decompose),
        ("synth", cmd_synth),
        ("report", cmd_report),
    ];
    let mut completed = Vec::new();
    for (stage, run) in stages {
        match run(cfg) {
            Ok(paths) => completed.extend(paths),
            Err(e) => return Err(PipelineError::Stage { stage, completed, source: Box::new(e) }),
        }
    }
    Ok(completed)
}
