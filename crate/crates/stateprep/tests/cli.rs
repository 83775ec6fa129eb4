use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use stateprep::formats::{parse_mps, write_mps};
use stateprep::interaction::write_interaction;
use stateprep::pipeline::ReportCsvRow;
use stateprep_core::hamiltonian::{default_ordering, dense_hamiltonian, eigh, SymmetrySector};
use stateprep_core::toy::toy_hamiltonian;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stateprep")).args(args).output().unwrap()
}

fn toy_dir(extra: &str) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("toy.int"), write_interaction(&toy_hamiltonian(3))).unwrap();
    let cfg = format!(
        "seed = 11\npaths.hamiltonian = \"toy.int\"\npaths.out_dir = \"out\"\n\
         sector.n_protons = 2\nsector.n_neutrons = 2\n{extra}"
    );
    std::fs::write(dir.path().join("run.toml"), cfg).unwrap();
    dir
}

fn cfg(dir: &Path) -> String {
    dir.join("run.toml").display().to_string()
}

fn energies(path: &Path) -> Vec<f64> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(|rec| rec.unwrap()[1].parse().unwrap()).collect()
}

#[test]
fn solve_matches_dense_diagonalization() {
    let dir = toy_dir("dmrg.n_states = 3\n");
    let out = run(&["--config", &cfg(dir.path()), "solve"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let h = toy_hamiltonian(3);
    let dense = dense_hamiltonian(&h, &default_ordering(&h), Some(SymmetrySector::new(2, 2))).unwrap();
    let (exact, _) = eigh(&dense.matrix);
    let got = energies(&dir.path().join("out/energies.csv"));
    assert_eq!(got.len(), 3);
    for (g, e) in got.iter().zip(&exact) {
        assert!(((g - e) / e).abs() < 1e-6, "{g} vs {e}");
    }
    for k in 0..3 {
        let log = std::fs::read_to_string(dir.path().join(format!("out/dmrg_log_{k}.csv"))).unwrap();
        assert!(log.starts_with("sweep,energy_MeV,max_bond,truncation_error_sum\n"));
        let text = std::fs::read_to_string(dir.path().join(format!("out/state_{k}.mps"))).unwrap();
        assert_eq!(write_mps(&parse_mps(&text).unwrap()), text);
    }
}

#[test]
fn diagonal_hamiltonian_gives_a_product_state() {
    let dir = tempfile::tempdir().unwrap();
    let orbitals = "O 0 1 0 1 1 1 2.0\nO 1 1 0 1 1 -1 -1.5\nO 2 1 0 1 3 1 0.5\n\
                    O 3 -1 0 1 1 1 0.25\nO 4 -1 0 1 1 -1 3.0\nO 5 -1 0 1 3 3 -0.75\n";
    std::fs::write(dir.path().join("diag.int"), orbitals).unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "paths.hamiltonian = \"diag.int\"\npaths.out_dir = \"out\"\nsector.n_protons = 1\nsector.n_neutrons = 1\n",
    )
    .unwrap();
    let out = run(&["--config", &cfg(dir.path()), "solve"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("out/state_0.mps")).unwrap();
    let state = parse_mps(&text).unwrap();
    assert_eq!(write_mps(&state), text);
    let e = energies(&dir.path().join("out/energies.csv"));
    assert!((e[0] - (-1.5 - 0.75)).abs() < 1e-10);
    let amps = state.to_dense();
    let big: Vec<usize> = (0..amps.len()).filter(|&i| amps[i].norm() > 1e-6).collect();
    assert_eq!(big.len(), 1);
    assert!((amps[big[0]].norm() - 1.0).abs() < 1e-10);
    // orbitals 1 and 5 occupied, wherever the ordering put them
    let h = stateprep::interaction::parse_interaction(orbitals).unwrap();
    let m = default_ordering(&h);
    let n = m.n_sites();
    let expect: usize = [1, 5].iter().map(|&o| 1 << (n - 1 - m.site_of_orbital()[o])).sum();
    assert_eq!(big[0], expect);
}

#[test]
fn missing_hamiltonian_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "paths.hamiltonian = \"nowhere.int\"\nsector.n_protons = 1\nsector.n_neutrons = 1\n",
    )
    .unwrap();
    let out = run(&["--config", &cfg(dir.path()), "solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.int"));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = toy_dir("synth.eps_list = [0.1, 1.5]\n");
    let out = run(&["--config", &cfg(dir.path()), "solve"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("1.5"));
    let dir = toy_dir("dmrg.chi_maks = 3\n");
    assert_eq!(run(&["--config", &cfg(dir.path()), "solve"]).status.code(), Some(2));
    assert_eq!(run(&["--config", "/no/such/config.toml", "solve"]).status.code(), Some(2));
}

#[test]
fn bound_subcommand() {
    let out = run(&["bound", "0.837", "0.960"]);
    assert!(out.status.success());
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - 0.6503032).abs() < 1e-6);
    assert_eq!(run(&["bound", "1.0", "0.3"]).stdout, b"0.3\n");
    assert_eq!(run(&["bound", "1.2", "0.3"]).status.code(), Some(1));
}

fn csv_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p: PathBuf = e.unwrap().path();
        if p.extension().is_some_and(|x| x == "csv") {
            files.insert(p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap());
        }
    }
    files
}

const SMALL: &str = "compile.max_layers = 3\nsynth.eps_list = [0.1, 0.031622776601683794]\n\
                     synth.t_budget = 10\npaths.db_cache = \"db.bin\"\n";

#[test]
fn pipeline_is_deterministic_and_complete() {
    let dir = toy_dir(SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&["--config", &cfg(dir.path()), "--out", out.to_str().unwrap(), "pipeline"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let (fa, fb) = (csv_files(&a), csv_files(&b));
    assert!(fa.contains_key("report.csv") && fa.contains_key("pareto.csv"));
    assert_eq!(fa, fb);
    let ctq = std::fs::read_dir(&a).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "ctq")).count();
    assert_eq!(ctq, 12);
    for l in 1..=3 {
        assert!(a.join(format!("circuit_L{l}.su4c")).is_file());
        assert!(a.join(format!("circuit_L{l}.rotc")).is_file());
    }
    let rows: Vec<ReportCsvRow> = stateprep::pipeline::read_csv(&a.join("report.csv")).unwrap();
    assert_eq!(rows.len(), 12);
    for r in rows.iter().filter(|r| r.strategy == "HYBRID") {
        let rz = rows.iter().find(|q| q.strategy == "RZ_ONLY" && q.layers == r.layers && q.eps == r.eps).unwrap();
        assert!(r.t_count <= rz.t_count, "{} {}", r.circuit_id, rz.circuit_id);
    }
    let pareto = std::fs::read_to_string(a.join("pareto.csv")).unwrap();
    assert!(pareto.lines().count() >= 2);
}

#[test]
fn failed_stage_is_named_and_earlier_artifacts_kept() {
    // a Clifford-only database cannot reach eps 1e-3
    let dir = toy_dir("compile.max_layers = 1\nsynth.eps_list = [0.001]\nsynth.t_budget = 0\npaths.db_cache = \"db.bin\"\n");
    let o = run(&["--config", &cfg(dir.path()), "pipeline"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("stage synth"), "{err}");
    assert!(err.contains("circuit_L1.rotc"));
    assert!(dir.path().join("out/circuit_L1.rotc").is_file());
    assert!(!dir.path().join("out/report.csv").exists());
}

#[test]
fn stages_can_run_one_at_a_time() {
    let dir = toy_dir(SMALL);
    let c = cfg(dir.path());
    assert_eq!(run(&["--config", &c, "compile"]).status.code(), Some(2));
    for stage in ["solve", "compress", "compile", "decompose", "synth", "report"] {
        let o = run(&["--config", &c, stage]);
        assert!(o.status.success(), "{stage}: {}", String::from_utf8_lossy(&o.stderr));
    }
    let o = run(&["--config", &c, "--out", dir.path().join("p").to_str().unwrap(), "pipeline"]);
    assert!(o.status.success());
    assert_eq!(csv_files(&dir.path().join("out")), csv_files(&dir.path().join("p")));
}

#[test]
fn extrapolate_from_a_data_file() {
    let dir = toy_dir("extrapolate.chi_small = [20, 40, 60]\nextrapolate.chi_large = [600, 700, 800]\nextrapolate.chi_query = 1000\n");
    let sq = |c: f64| c.ln().powi(2);
    let mut text = String::from("chi_small,chi_large,overlap_sq\n");
    for (k, s) in [20.0, 40.0, 60.0].iter().enumerate() {
        let c = 1.0 - (-1.0 - 0.08 * sq(*s)).exp();
        for l in [600.0, 700.0, 800.0] {
            text += &format!("{s},{l},{:?}\n", c + (-2.0 - 0.01 * k as f64 - 0.05 * sq(l)).exp());
        }
    }
    let data = dir.path().join("data.csv");
    std::fs::write(&data, text).unwrap();
    let o = run(&["--config", &cfg(dir.path()), "extrapolate", "--data", data.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let out = String::from_utf8_lossy(&o.stdout);
    let est: f64 = out.lines().next().unwrap().strip_prefix("estimate ").unwrap().parse().unwrap();
    let expected = 1.0 - (-1.0 - 0.08 * sq(1000.0)).exp();
    assert!((est - expected).abs() < 1e-8, "{est} vs {expected}");
    let fit = std::fs::read_to_string(dir.path().join("out/extrapolate_fit.csv")).unwrap();
    assert_eq!(fit.lines().count(), 5);
}
