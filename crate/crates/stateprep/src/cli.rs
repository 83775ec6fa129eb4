//! Command-line front end.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::config::PipelineConfig;
use crate::pipeline::{self, PipelineError};

#[derive(Debug, Parser)]
#[command(name = "stateprep", version, about = "Prepare shell-model eigenstates as Clifford+T circuits")]
pub struct Cli {
    /// Pipeline config file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Overrides the config output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// DMRG eigenstates and energies.
    Solve,
    /// Compress the ground state to the target bond dimension.
    Compress,
    /// Grow staircase circuits for the target.
    Compile,
    /// Rewrite compiled circuits as Clifford + Rz.
    Decompose,
    /// Clifford+T synthesis for every eps and strategy.
    Synth,
    /// Lower bound on |<a|c>| from |<a|b>| and |<b|c>|.
    Bound { ab: f64, bc: f64 },
    /// Extrapolate overlaps with the exact state.
    Extrapolate {
        /// CSV with columns chi_small, chi_large, overlap_sq. Without it a
        /// reverse-sweep series is computed.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// All stages from solve to report.
    Pipeline,
    /// Pareto front of the synthesis report.
    Report,
}

impl Cli {
    fn config(&self) -> Result<PipelineConfig, PipelineError> {
        let path = self.config.as_deref().unwrap_or(std::path::Path::new("stateprep.toml"));
        let mut cfg = PipelineConfig::load(path)?;
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.paths.out_dir = o.clone();
        }
        Ok(cfg)
    }

    /// Runs the command and returns the process exit code.
    pub fn run(&self) -> i32 {
        match self.dispatch() {
            Ok(()) => 0,
            Err(e) => {
                eprintln!("error: {e}");
                if let PipelineError::Stage { completed, .. } = &e {
                    for p in completed {
                        eprintln!("  kept {}", p.display());
                    }
                }
                e.exit_code()
            }
        }
    }

    fn dispatch(&self) -> Result<(), PipelineError> {
        let written = match &self.command {
            Command::Bound { ab, bc } => {
                println!("{}", pipeline::cmd_bound(*ab, *bc)?);
                return Ok(());
            }
            Command::Extrapolate { data } => {
                let (est, written) = pipeline::cmd_extrapolate(&self.config()?, data.as_deref())?;
                println!("estimate {est}");
                written
            }
            Command::Solve => pipeline::cmd_solve(&self.config()?)?,
            Command::Compress => pipeline::cmd_compress(&self.config()?)?,
            Command::Compile => pipeline::cmd_compile(&self.config()?)?,
            Command::Decompose => pipeline::cmd_decompose(&self.config()?)?,
            Command::Synth => pipeline::cmd_synth(&self.config()?)?,
            Command::Report => pipeline::cmd_report(&self.config()?)?,
            Command::Pipeline => pipeline::cmd_pipeline(&self.config()?)?,
        };
        for p in written {
            println!("{}", p.display());
        }
        Ok(())
    }
}
