use proptest::prelude::*;
use stateprep::interaction::*;
use stateprep_core::hamiltonian::HamiltonianError;
use stateprep_core::toy::{random_hamiltonian, toy_hamiltonian};

const HEADER: &str = "O 0 1 0 0 1 1 -1.0\nO 1 1 0 0 1 -1 -1.0\nO 2 -1 0 0 1 1 0.5\nO 3 -1 0 0 1 -1 0.5\n";

fn err_line(text: &str) -> usize {
    match parse_interaction(text) {
        Err(InteractionError::Parse { line, .. }) => line,
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn toy_file_round_trips() {
    let h = toy_hamiltonian(3);
    let text = write_interaction(&h);
    let back = parse_interaction(&text).unwrap();
    assert_eq!(back.orbitals(), h.orbitals());
    assert_eq!(back.two_body(), h.two_body());
    assert_eq!(write_interaction(&back), text);
}

#[test]
fn comments_and_blank_lines_are_skipped() {
    let text = format!("# orbitals\n\n{HEADER}V 0 1 1 0 -0.5  # pairing\nV 1 0 0 1 -0.5\n");
    let h = parse_interaction(&text).unwrap();
    assert_eq!(h.n_orbitals(), 4);
    assert_eq!(h.two_body().len(), 2);
}

#[test]
fn errors_name_the_line() {
    assert_eq!(err_line(&format!("{HEADER}V 0 1 1 0 -0.5\nV 0 1 1 0 -0.5\n")), 6);
    assert_eq!(err_line(&format!("{HEADER}\nX 1 2\n")), 6);
    assert_eq!(err_line("O 0 1 0 0 1 1\n"), 1);
    assert_eq!(err_line("O 0 1 0 0 1 1 abc\n"), 1);
    assert_eq!(err_line(&format!("{HEADER}V 0 1 1 0 -0.5 7\n")), 5);
}

#[test]
fn physics_checks_reach_the_caller() {
    // proton pair turned into a neutron pair
    let r = parse_interaction(&format!("{HEADER}V 0 1 3 2 -0.5\nV 3 2 0 1 -0.5\n"));
    assert!(matches!(r, Err(InteractionError::Invalid(HamiltonianError::ChargeNonConserving(_)))));
    let r = parse_interaction(&format!("{HEADER}V 0 2 2 1 -0.5\n"));
    assert!(matches!(r, Err(InteractionError::Invalid(HamiltonianError::NonHermitian(_)))));
}

#[test]
fn missing_file_names_the_path() {
    let e = read_interaction(std::path::Path::new("/no/such/file.int")).unwrap_err();
    assert!(e.to_string().contains("/no/such/file.int"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn random_interactions_round_trip(seed in 0u64..10_000, terms in 0usize..30) {
        let h = random_hamiltonian(3, 3, terms, seed);
        let back = parse_interaction(&write_interaction(&h)).unwrap();
        prop_assert_eq!(back.orbitals(), h.orbitals());
        prop_assert_eq!(back.two_body(), h.two_body());
    }
}
