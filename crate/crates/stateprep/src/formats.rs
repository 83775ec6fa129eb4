//! Text formats for states and circuits: MPS1, SU4C1, ROTC1 and CTQ1.
//!
//! Complex numbers are written as `re im` with 17 significant digits, which
//! round-trips every f64 exactly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use stateprep_core::compile::{vshape_layer_order, StaircaseCircuit};
use stateprep_core::linalg::{CMat, C64};
use stateprep_core::mps::Mps;
use stateprep_core::rotations::{Clifford, Op, RotationCircuit};
use stateprep_core::synthesis::{CliffordTCircuit, CtOp, Gate1};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("{format} line {line}: {msg}")]
    Parse { format: &'static str, line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    std::fs::read_to_string(path).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), FormatError> {
    std::fs::write(path, text).map_err(|source| FormatError::Io { path: path.to_path_buf(), source })
}

struct Tokens<'a> {
    format: &'static str,
    toks: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn new(format: &'static str, text: &'a str) -> Self {
        let toks = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split('#').next().unwrap_or("").split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Tokens { format, toks, pos: 0 }
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).or(self.toks.last()).map_or(0, |t| t.0)
    }

    fn err(&self, msg: impl Into<String>) -> FormatError {
        FormatError::Parse { format: self.format, line: self.line(), msg: msg.into() }
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn word(&mut self, what: &str) -> Result<&'a str, FormatError> {
        let t = self.peek().ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, kw: &str) -> Result<(), FormatError> {
        let t = self.word(kw)?;
        if t != kw {
            self.pos -= 1;
            return Err(self.err(format!("expected '{kw}', found '{t}'")));
        }
        Ok(())
    }

    fn num<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, FormatError> {
        let t = self.word(what)?;
        t.parse().map_err(|_| {
            self.pos -= 1;
            self.err(format!("bad {what} '{t}'"))
        })
    }

    fn complex(&mut self) -> Result<C64, FormatError> {
        Ok(C64::new(self.num("real part")?, self.num("imaginary part")?))
    }

    fn end(&self) -> Result<(), FormatError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(self.err(format!("trailing '{t}'"))),
        }
    }
}

fn pair(out: &mut String, z: C64) {
    write!(out, "{:.16e} {:.16e}", z.re, z.im).unwrap();
}

pub fn write_mps(s: &Mps) -> String {
    let mut out = format!("MPS1 {}\n", s.n_sites());
    for t in &s.tensors {
        let (l, r) = t[0].shape();
        writeln!(out, "T {l} 2 {r}").unwrap();
        for a in 0..l {
            for p in t {
                for b in 0..r {
                    pair(&mut out, p[(a, b)]);
                    out.push('\n');
                }
            }
        }
    }
    out
}

pub fn parse_mps(text: &str) -> Result<Mps, FormatError> {
    let mut tk = Tokens::new("MPS1", text);
    tk.expect("MPS1")?;
    let n: usize = tk.num("site count")?;
    if n == 0 {
        return Err(tk.err("an MPS needs at least one site"));
    }
    let mut tensors = Vec::with_capacity(n);
    let mut left = 1;
    for k in 0..n {
        tk.expect("T")?;
        let l: usize = tk.num("left bond")?;
        let d: usize = tk.num("physical dimension")?;
        let r: usize = tk.num("right bond")?;
        if d != 2 {
            return Err(tk.err(format!("physical dimension must be 2, got {d}")));
        }
        if l != left || (k + 1 == n && r != 1) {
            return Err(tk.err(format!("site {k}: bond dimensions {l}x{r} do not chain")));
        }
        let mut t = [CMat::zeros(l, r), CMat::zeros(l, r)];
        for a in 0..l {
            for p in t.iter_mut() {
                for b in 0..r {
                    p[(a, b)] = tk.complex()?;
                }
            }
        }
        tensors.push(t);
        left = r;
    }
    tk.end()?;
    Ok(Mps { tensors, center: None })
}

pub fn write_su4(c: &StaircaseCircuit) -> String {
    let mut out = format!("SU4C1 {} {}\n", c.n_qubits, c.n_layers());
    for (k, layer) in c.layers.iter().enumerate() {
        for ((i, j), g) in layer {
            writeln!(out, "G {k} {i} {j}").unwrap();
            for r in 0..4 {
                for col in 0..4 {
                    if col > 0 {
                        out.push(' ');
                    }
                    pair(&mut out, g[(r, col)]);
                }
                out.push('\n');
            }
        }
    }
    out
}

/// The center bond is not stored; it is read off the first gate, which the
/// layer order always puts on the center pair. An empty circuit gets the
/// middle bond.
pub fn parse_su4(text: &str) -> Result<StaircaseCircuit, FormatError> {
    let mut tk = Tokens::new("SU4C1", text);
    tk.expect("SU4C1")?;
    let n: usize = tk.num("qubit count")?;
    let n_layers: usize = tk.num("layer count")?;
    if n < 2 {
        return Err(tk.err("need at least two qubits"));
    }
    let mut layers: Vec<Vec<((usize, usize), CMat)>> = vec![Vec::new(); n_layers];
    while tk.peek().is_some() {
        tk.expect("G")?;
        let k: usize = tk.num("layer")?;
        let i: usize = tk.num("qubit")?;
        let j: usize = tk.num("qubit")?;
        if k >= n_layers {
            return Err(tk.err(format!("layer {k} out of range")));
        }
        let mut g = CMat::zeros(4, 4);
        for r in 0..4 {
            for col in 0..4 {
                g[(r, col)] = tk.complex()?;
            }
        }
        layers[k].push(((i, j), g));
    }
    let center = layers.first().and_then(|l| l.first()).map_or((n - 2) / 2, |g| g.0 .0);
    let order = vshape_layer_order(n, center).map_err(|e| tk.err(e.to_string()))?;
    for (k, layer) in layers.iter().enumerate() {
        let pairs: Vec<(usize, usize)> = layer.iter().map(|g| g.0).collect();
        if pairs != order {
            return Err(FormatError::Parse { format: "SU4C1", line: 0, msg: format!("layer {k} is not a staircase around bond {center}") });
        }
    }
    let c = StaircaseCircuit { n_qubits: n, center_bond: center, layers };
    c.validate(1e-10).map_err(|e| FormatError::Parse { format: "SU4C1", line: 0, msg: e.to_string() })?;
    Ok(c)
}

/// Starts with a `ROTC1 <n_qubits>` header.
pub fn write_rotations(r: &RotationCircuit) -> String {
    let mut out = format!("ROTC1 {}\n", r.n_qubits);
    for op in &r.ops {
        match op {
            Op::Clifford(g, qs) => {
                out.push_str(g.name());
                for q in qs {
                    write!(out, " {q}").unwrap();
                }
            }
            Op::Rz(q, t) => write!(out, "RZ {q} {t:.16e}").unwrap(),
        }
        out.push('\n');
    }
    out.push_str("PHASE ");
    pair(&mut out, r.global_phase);
    out.push('\n');
    out
}

pub fn parse_rotations(text: &str) -> Result<RotationCircuit, FormatError> {
    let mut tk = Tokens::new("ROTC1", text);
    tk.expect("ROTC1")?;
    let n: usize = tk.num("qubit count")?;
    let mut r = RotationCircuit::new(n);
    loop {
        let name = tk.word("op or PHASE")?;
        let line = tk.line();
        match name {
            "PHASE" => {
                r.global_phase = tk.complex()?;
                break;
            }
            "RZ" => {
                let q = tk.num("qubit")?;
                r.ops.push(Op::Rz(q, tk.num("angle")?));
            }
            _ => {
                let g = Clifford::from_name(name).map_err(|e| FormatError::Parse { format: "ROTC1", line, msg: e.to_string() })?;
                let qs = (0..g.arity()).map(|_| tk.num("qubit")).collect::<Result<Vec<usize>, _>>()?;
                r.ops.push(Op::Clifford(g, qs));
            }
        }
    }
    tk.end()?;
    r.validate().map_err(|e| FormatError::Parse { format: "ROTC1", line: 0, msg: e.to_string() })?;
    Ok(r)
}

pub fn write_clifford_t(c: &CliffordTCircuit) -> String {
    let mut out = format!("CTQ1 {} {}\n", c.n_qubits, c.t_count());
    for line in c.gate_names() {
        out.push_str(&line);
        out.push('\n');
    }
    out
}

pub fn parse_clifford_t(text: &str) -> Result<CliffordTCircuit, FormatError> {
    let mut tk = Tokens::new("CTQ1", text);
    tk.expect("CTQ1")?;
    let n: usize = tk.num("qubit count")?;
    let t: usize = tk.num("T count")?;
    let mut c = CliffordTCircuit { n_qubits: n, ops: Vec::new() };
    while let Some(name) = tk.peek() {
        let line = tk.line();
        tk.pos += 1;
        let check = |q: usize, tk: &Tokens| if q < n { Ok(q) } else { Err(tk.err(format!("qubit {q} out of range"))) };
        if name == "CX" {
            let a = tk.num("control")?;
            let b = tk.num("target")?;
            if a == b {
                return Err(tk.err("CX needs two distinct qubits"));
            }
            c.ops.push(CtOp::Cx(check(a, &tk)?, check(b, &tk)?));
        } else {
            let g = Gate1::from_name(name)
                .ok_or_else(|| FormatError::Parse { format: "CTQ1", line, msg: format!("unknown gate '{name}'") })?;
            let q = tk.num("qubit")?;
            c.ops.push(CtOp::Single(g, check(q, &tk)?));
        }
    }
    if c.t_count() != t {
        return Err(FormatError::Parse { format: "CTQ1", line: 1, msg: format!("header says {t} T gates, body has {}", c.t_count()) });
    }
    Ok(c)
}
