use ensemble_core::axioms::{
    check_galilean_boost, check_separability, default_suite, separable_pair, BOOST_TOLERANCE,
};
use ensemble_core::hamiltonian::Potential;
use ensemble_core::scenarios::preset;
use ensemble_core::state::Constants;
use ensemble_core::Error;

#[test]
fn default_suite_passes_and_is_deterministic() {
    let first = default_suite(11).unwrap();
    assert_eq!(first.len(), 6);
    for r in &first {
        assert!(r.pass, "{}: {:e} > {:e} ({})", r.axiom, r.deviation, r.tolerance, r.details);
    }
    assert_eq!(default_suite(11).unwrap(), first);
    let other = default_suite(12).unwrap();
    assert!(other.iter().all(|r| r.pass));
    assert_ne!(other[1].details, first[1].details);
}

#[test]
fn classical_dynamics_is_separable_too() {
    let (mut a, mut b) = separable_pair().unwrap();
    let classical = Constants::classical(1.0).unwrap();
    a.constants = classical;
    b.constants = classical;
    let run = a.run_params().with_stride(40);
    let r = check_separability(&a, &b, &run).unwrap();
    assert!(r.pass, "{}", r.details);
}

#[test]
fn separability_holds_with_external_traps() {
    let (mut a, mut b) = separable_pair().unwrap();
    a.potential = Potential::Harmonic { spring: vec![0.2] };
    b.potential = Potential::Harmonic { spring: vec![0.1] };
    let run = a.run_params().with_stride(40);
    let r = check_separability(&a, &b, &run).unwrap();
    assert!(r.pass, "{}", r.details);
}

#[test]
fn boost_in_either_direction() {
    let sc = preset("boosted-gaussian").unwrap();
    let run = sc.run_params();
    for v in [-1.0, 0.5] {
        let r = check_galilean_boost(&sc, v, &run).unwrap();
        assert!(r.deviation < BOOST_TOLERANCE, "v = {v}: {}", r.details);
    }
}

#[test]
fn classical_boost_is_tighter() {
    let sc = preset("boosted-gaussian").unwrap().with_constants(Constants::classical(1.0).unwrap());
    let r = check_galilean_boost(&sc, 1.0, &sc.run_params()).unwrap();
    assert!(r.deviation < 1e-6, "{}", r.details);
}

#[test]
fn boost_requires_free_one_dimensional_scenarios() {
    let trap = preset("harmonic-coherent").unwrap();
    assert!(matches!(check_galilean_boost(&trap, 1.0, &trap.run_params()), Err(Error::Unsupported(_))));
    let plane = preset("two-particle-separable").unwrap();
    assert!(matches!(check_galilean_boost(&plane, 1.0, &plane.run_params()), Err(Error::Unsupported(_))));
}
