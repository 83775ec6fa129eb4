use std::path::Path;

use stateprep::config::*;

#[test]
fn defaults_and_relative_paths() {
    let c = PipelineConfig::parse(
        "paths.hamiltonian = \"h.int\"\nsector.n_protons = 2\nsector.n_neutrons = 3\n",
        Path::new("/runs/a/cfg.toml"),
    )
    .unwrap();
    assert_eq!(c.paths.hamiltonian, Path::new("/runs/a/h.int"));
    assert_eq!(c.paths.out_dir, Path::new("/runs/a/out"));
    assert_eq!(c.db_cache(), Path::new("/runs/a/out/db_t14.bin"));
    assert_eq!(c.synth.t_budget, 14);
    assert_eq!(c.synth.strategy, vec![Strategy::RzOnly, Strategy::Hybrid]);
    let expected = [1e-1, 10f64.powf(-1.5), 1e-2, 10f64.powf(-2.5)];
    assert_eq!(c.synth.eps_list.len(), 4);
    for (a, b) in c.synth.eps_list.iter().zip(expected) {
        assert!((a - b).abs() < 1e-15);
    }
    assert_eq!(c.dmrg.chi_max, 64);
    assert_eq!(c.dmrg.sv_tol, 1e-8);
    assert_eq!(c.dmrg_config().seed, 0);
    assert_eq!((c.sector().n_protons, c.sector().n_neutrons), (2, 3));
}

#[test]
fn flat_keys_override_defaults() {
    let text = "seed = 9\npaths.hamiltonian = \"/abs/h.int\"\nsector.n_protons = 1\nsector.n_neutrons = 1\n\
                dmrg.chi_max = 16\ncompile.chi_env = 12\nsynth.strategy = [\"HYBRID\"]\nsynth.eps_list = [0.05]\n";
    let c = PipelineConfig::parse(text, Path::new("cfg.toml")).unwrap();
    assert_eq!(c.paths.hamiltonian, Path::new("/abs/h.int"));
    assert_eq!(c.dmrg_config().chi_max, 16);
    assert_eq!(c.compile_config().chi_env, Some(12));
    assert_eq!(c.compile_config().seed, 9);
    assert_eq!(c.synth.strategy, vec![Strategy::Hybrid]);
}

#[test]
fn bad_configs_are_rejected() {
    let base = "paths.hamiltonian = \"h.int\"\nsector.n_protons = 1\nsector.n_neutrons = 1\n";
    let p = Path::new("cfg.toml");
    for extra in ["synth.eps_list = [0.0]", "synth.eps_list = [1.0]", "synth.eps_list = []", "dmrg.n_states = 0", "dmrg.bogus = 1", "synth.strategy = [\"FAST\"]"] {
        assert!(PipelineConfig::parse(&format!("{base}{extra}\n"), p).is_err(), "{extra}");
    }
    assert!(PipelineConfig::parse("sector.n_protons = 1\nsector.n_neutrons = 1\n", p).is_err());
    let c = PipelineConfig::parse(base, p).unwrap();
    assert!(matches!(c.require_hamiltonian(), Err(ConfigError::MissingFile(_))));
}
