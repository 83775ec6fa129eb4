//! Pipeline configuration: flat `section.key = value` lines (a TOML subset).
//!
//! ```text
//! seed = 7
//! paths.hamiltonian = "toy12.int"
//! sector.n_protons = 2
//! dmrg.chi_max = 64
//! synth.eps_list = [0.1, 0.0316]
//! ```
//!
//! Relative paths are taken relative to the config file's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use stateprep_core::compile::CompileConfig;
use stateprep_core::dmrg::DmrgConfig;
use stateprep_core::hamiltonian::SymmetrySector;
use stateprep_core::synthesis::SynthesisStrategy;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config {path}: {msg}")]
    Syntax { path: PathBuf, msg: String },
    #[error("config: {0}")]
    Invalid(String),
    #[error("file not found: {0}")]
    MissingFile(PathBuf),
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: u64,
    pub paths: Paths,
    pub sector: Sector,
    #[serde(default)]
    pub dmrg: Dmrg,
    #[serde(default)]
    pub compress: Compress,
    #[serde(default)]
    pub compile: Compile,
    #[serde(default)]
    pub synth: Synth,
    #[serde(default)]
    pub extrapolate: Extrapolate,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub hamiltonian: PathBuf,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    /// Defaults to `db_t<budget>.bin` inside the output directory.
    pub db_cache: Option<PathBuf>,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct Sector {
    pub n_protons: usize,
    pub n_neutrons: usize,
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Dmrg {
    pub chi_max: usize,
    pub sv_tol: f64,
    pub max_sweeps: usize,
    pub energy_rtol: f64,
    pub penalty_weight_mev: f64,
    pub lanczos_dim: usize,
    pub expansion_pad: usize,
    /// Number of eigenstates, ground state first.
    pub n_states: usize,
    /// Add a particle-number penalty to the Hamiltonian on top of the exact
    /// sector labels.
    pub sector_penalty: bool,
    pub init_chi: usize,
}

impl Default for Dmrg {
    fn default() -> Self {
        let d = DmrgConfig::default();
        Dmrg {
            chi_max: d.chi_max,
            sv_tol: d.sv_tol,
            max_sweeps: d.max_sweeps,
            energy_rtol: d.energy_rtol,
            penalty_weight_mev: d.penalty_weight_mev,
            lanczos_dim: d.lanczos_dim,
            expansion_pad: d.expansion_pad,
            n_states: 1,
            sector_penalty: false,
            init_chi: 8,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Compress {
    /// Bond dimension of the compiled target.
    pub chi_max: usize,
    pub sweeps: usize,
}

impl Default for Compress {
    fn default() -> Self {
        Compress { chi_max: 8, sweeps: 10 }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Compile {
    pub max_layers: usize,
    pub rel_tol: f64,
    pub chi_env: Option<usize>,
    pub max_sweeps: usize,
}

impl Default for Compile {
    fn default() -> Self {
        let c = CompileConfig::default();
        Compile { max_layers: c.max_layers, rel_tol: c.rel_tol, chi_env: c.chi_env, max_sweeps: c.max_sweeps }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq, PartialOrd, Ord)]
pub enum Strategy {
    #[serde(rename = "RZ_ONLY")]
    RzOnly,
    #[serde(rename = "HYBRID")]
    Hybrid,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::RzOnly => "RZ_ONLY",
            Strategy::Hybrid => "HYBRID",
        }
    }

    pub fn core(self) -> SynthesisStrategy {
        match self {
            Strategy::RzOnly => SynthesisStrategy::RzOnly,
            Strategy::Hybrid => SynthesisStrategy::Hybrid,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Synth {
    pub eps_list: Vec<f64>,
    pub strategy: Vec<Strategy>,
    pub t_budget: usize,
}

impl Default for Synth {
    fn default() -> Self {
        Synth {
            eps_list: [1.0, 1.5, 2.0, 2.5].iter().map(|e: &f64| 10f64.powf(-e)).collect(),
            strategy: vec![Strategy::RzOnly, Strategy::Hybrid],
            t_budget: 14,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields, default)]
pub struct Extrapolate {
    /// Bond dimensions of the reverse-sweep series, largest first.
    pub chis: Vec<usize>,
    pub chi_small: Vec<usize>,
    pub chi_large: Vec<usize>,
    /// Defaults to the first entry of `chis`.
    pub chi_query: Option<usize>,
}

impl Default for Extrapolate {
    fn default() -> Self {
        Extrapolate { chis: vec![32, 12, 10, 8, 4, 3, 2], chi_small: vec![2, 3, 4], chi_large: vec![8, 10, 12], chi_query: None }
    }
}

impl PipelineConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ConfigError> {
        let mut c: PipelineConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax { path: path.to_path_buf(), msg: e.message().to_string() })?;
        let base = path.parent().unwrap_or(Path::new(""));
        let abs = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        c.paths.hamiltonian = abs(&c.paths.hamiltonian);
        c.paths.out_dir = abs(&c.paths.out_dir);
        c.paths.db_cache = c.paths.db_cache.as_deref().map(abs);
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if let Some(e) = self.synth.eps_list.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("synth.eps_list value {e} is not in (0, 1)"));
        }
        if self.synth.eps_list.is_empty() || self.synth.strategy.is_empty() {
            return bad("synth.eps_list and synth.strategy must not be empty".into());
        }
        if self.dmrg.n_states < 1 || self.dmrg.chi_max < 1 || self.dmrg.init_chi < 1 {
            return bad("dmrg.n_states, dmrg.chi_max and dmrg.init_chi must be at least 1".into());
        }
        if self.compress.chi_max < 1 || self.compile.max_layers < 1 {
            return bad("compress.chi_max and compile.max_layers must be at least 1".into());
        }
        Ok(())
    }

    /// Checked when a stage runs, not at load time, so configs can be
    /// written before their inputs exist.
    pub fn require_hamiltonian(&self) -> Result<&Path, ConfigError> {
        if self.paths.hamiltonian.is_file() {
            Ok(&self.paths.hamiltonian)
        } else {
            Err(ConfigError::MissingFile(self.paths.hamiltonian.clone()))
        }
    }

    pub fn db_cache(&self) -> PathBuf {
        self.paths.db_cache.clone().unwrap_or_else(|| self.paths.out_dir.join(format!("db_t{}.bin", self.synth.t_budget)))
    }

    pub fn sector(&self) -> SymmetrySector {
        SymmetrySector::new(self.sector.n_protons, self.sector.n_neutrons)
    }

    /// Without the sector guard; callers attach one for their mapping.
    pub fn dmrg_config(&self) -> DmrgConfig {
        let d = &self.dmrg;
        DmrgConfig {
            chi_max: d.chi_max,
            sv_tol: d.sv_tol,
            max_sweeps: d.max_sweeps,
            energy_rtol: d.energy_rtol,
            penalty_weight_mev: d.penalty_weight_mev,
            lanczos_dim: d.lanczos_dim,
            seed: self.seed,
            sector: None,
            expansion_pad: d.expansion_pad,
        }
    }

    pub fn compile_config(&self) -> CompileConfig {
        let c = &self.compile;
        CompileConfig { max_layers: c.max_layers, rel_tol: c.rel_tol, chi_env: c.chi_env, max_sweeps: c.max_sweeps, seed: self.seed }
    }
}
