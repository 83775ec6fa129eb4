//! Binary cache for the synthesis database.
//!
//! Layout, little-endian: `SPDB`, version u32, t_budget u32, grid key f64,
//! entry count u64, then four f64 per entry. The grid key is stored for
//! compatibility with fixed-resolution caches; this crate sizes its search
//! grid per query and always writes 0.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use stateprep_core::synthesis::{build_database, entry_count, SynthError, SynthesisDatabase};
use thiserror::Error;

const MAGIC: &[u8; 4] = b"SPDB";
const VERSION: u32 = 1;
pub const GRID_KEY: f64 = 0.0;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: corrupt database cache ({reason})")]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Synth(#[from] SynthError),
}

pub fn encode(db: &SynthesisDatabase) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + 32 * db.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(db.t_budget as u32).to_le_bytes());
    out.extend_from_slice(&GRID_KEY.to_le_bytes());
    out.extend_from_slice(&(db.len() as u64).to_le_bytes());
    for q in db.quaternions() {
        for x in q {
            out.extend_from_slice(&x.to_le_bytes());
        }
    }
    out
}

struct Header {
    version: u32,
    t_budget: usize,
    key: f64,
    count: usize,
}

fn header(b: &[u8]) -> Option<Header> {
    if b.len() < 28 || &b[..4] != MAGIC {
        return None;
    }
    Some(Header {
        version: u32::from_le_bytes(b[4..8].try_into().ok()?),
        t_budget: u32::from_le_bytes(b[8..12].try_into().ok()?) as usize,
        key: f64::from_le_bytes(b[12..20].try_into().ok()?),
        count: u64::from_le_bytes(b[20..28].try_into().ok()?) as usize,
    })
}

/// `Ok(None)` means a well-formed cache built for other parameters.
pub fn decode(bytes: &[u8], t_budget: usize, path: &Path) -> Result<Option<SynthesisDatabase>, CacheError> {
    let corrupt = |reason: String| CacheError::Corrupt { path: path.to_path_buf(), reason };
    let h = header(bytes).ok_or_else(|| corrupt("bad header".into()))?;
    if h.version != VERSION || h.t_budget != t_budget || h.key.to_bits() != GRID_KEY.to_bits() {
        return Ok(None);
    }
    if h.count != entry_count(t_budget) || bytes.len() != 28 + 32 * h.count {
        return Err(corrupt(format!("{} bytes for {} entries", bytes.len(), h.count)));
    }
    let qs: Vec<[f64; 4]> = bytes[28..]
        .chunks_exact(32)
        .map(|c| core::array::from_fn(|k| f64::from_le_bytes(c[8 * k..8 * k + 8].try_into().unwrap())))
        .collect();
    SynthesisDatabase::from_quaternions(t_budget, &qs).map(Some).map_err(|e| corrupt(e.to_string()))
}

/// Loads the cache at `path` or builds the database and writes it there.
/// A cache for another budget or version is rebuilt; a damaged one is an
/// error rather than being silently replaced.
pub fn load_or_build(path: &Path, t_budget: usize) -> Result<SynthesisDatabase, CacheError> {
    let io = |source| CacheError::Io { path: path.to_path_buf(), source };
    if path.exists() {
        let mut bytes = Vec::new();
        std::fs::File::open(path).and_then(|mut f| f.read_to_end(&mut bytes)).map_err(io)?;
        if let Some(db) = decode(&bytes, t_budget, path)? {
            return Ok(db);
        }
    }
    let db = build_database(t_budget)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::File::create(&tmp).and_then(|mut f| f.write_all(&encode(&db))).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)?;
    Ok(db)
}
