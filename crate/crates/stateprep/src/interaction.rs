//! Interaction files: orbitals and two-body matrix elements as text.
//!
//! ```text
//! # comment
//! O <index> <tz2> <n> <l> <j2> <jz2> <energy_MeV>
//! V <i> <j> <k> <l> <value_MeV>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use stateprep_core::hamiltonian::{HamiltonianError, Orbital, ShellModelHamiltonian, TermKey};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum InteractionError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] HamiltonianError),
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T, InteractionError> {
    let tok = tok.ok_or_else(|| InteractionError::Parse { line, msg: format!("missing {what}") })?;
    tok.parse().map_err(|_| InteractionError::Parse { line, msg: format!("bad {what} '{tok}'") })
}

pub fn parse_interaction(text: &str) -> Result<ShellModelHamiltonian, InteractionError> {
    let mut orbitals = Vec::new();
    let mut terms: BTreeMap<TermKey, f64> = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("");
        let mut toks = body.split_whitespace();
        let Some(head) = toks.next() else { continue };
        match head {
            "O" => orbitals.push(Orbital {
                index: field(toks.next(), line, "index")?,
                tz2: field(toks.next(), line, "tz2")?,
                n: field(toks.next(), line, "n")?,
                l: field(toks.next(), line, "l")?,
                j2: field(toks.next(), line, "j2")?,
                jz2: field(toks.next(), line, "jz2")?,
                energy: field(toks.next(), line, "energy")?,
            }),
            "V" => {
                let key = (
                    field(toks.next(), line, "i")?,
                    field(toks.next(), line, "j")?,
                    field(toks.next(), line, "k")?,
                    field(toks.next(), line, "l")?,
                );
                let v: f64 = field(toks.next(), line, "value")?;
                if terms.insert(key, v).is_some() {
                    return Err(InteractionError::Parse { line, msg: format!("term {key:?} listed twice") });
                }
            }
            other => return Err(InteractionError::Parse { line, msg: format!("unknown keyword '{other}'") }),
        }
        if let Some(extra) = toks.next() {
            return Err(InteractionError::Parse { line, msg: format!("trailing field '{extra}'") });
        }
    }
    Ok(ShellModelHamiltonian::new(orbitals, terms)?)
}

pub fn read_interaction(path: &Path) -> Result<ShellModelHamiltonian, InteractionError> {
    let text = std::fs::read_to_string(path).map_err(|source| InteractionError::Io { path: path.to_path_buf(), source })?;
    parse_interaction(&text)
}

pub fn write_interaction(h: &ShellModelHamiltonian) -> String {
    let mut out = String::from("# index tz2 n l j2 jz2 energy_MeV\n");
    for o in h.orbitals() {
        writeln!(out, "O {} {} {} {} {} {} {:?}", o.index, o.tz2, o.n, o.l, o.j2, o.jz2, o.energy).unwrap();
    }
    out.push_str("# i j k l value_MeV, each term 1/2 V a+_i a+_j a_k a_l\n");
    for (&(i, j, k, l), v) in h.two_body() {
        writeln!(out, "V {i} {j} {k} {l} {v:?}").unwrap();
    }
    out
}
