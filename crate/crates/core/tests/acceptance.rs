//! Acceptance gate: each test runs one named criterion end to end and
//! asserts both the verdict and the criterion's wall-clock budget.

use causality_kit::config::DEFAULT_SEED;
use causality_kit::suite::{criteria, CriterionReport};
use causality_kit::Tolerances;

fn gate(rep: CriterionReport, budget_seconds: f64) {
    println!("{}", rep.line());
    assert!(rep.passed, "{}", rep.line());
    assert!(
        rep.seconds < budget_seconds,
        "{} exceeded {budget_seconds}s budget",
        rep.line()
    );
}

#[test]
fn criterion_1_term_type_algebra() {
    gate(criteria::term_type_algebra(DEFAULT_SEED, &Tolerances::default()), 1.0);
}

#[test]
fn criterion_2_validity_checks() {
    gate(criteria::validity_checks(DEFAULT_SEED, &Tolerances::default()), 5.0);
}

#[test]
fn criterion_3_switch_reproduction() {
    gate(criteria::switch_reproduction(DEFAULT_SEED, &Tolerances::default()), 10.0);
}

#[test]
fn criterion_4_causal_bound_exact() {
    gate(criteria::causal_bound_exact(DEFAULT_SEED, &Tolerances::default()), 10.0);
}

#[test]
fn criterion_5_quantum_violation() {
    gate(criteria::quantum_violation(DEFAULT_SEED, &Tolerances::default()), 20.0);
}

#[test]
fn criterion_6_activation() {
    gate(criteria::activation(DEFAULT_SEED, &Tolerances::default()), 30.0);
}

#[test]
fn criterion_7_polytope_soundness() {
    gate(criteria::polytope_soundness(DEFAULT_SEED, &Tolerances::default()), 30.0);
}

#[test]
fn criterion_8_separability_generators() {
    gate(criteria::separability_generators(DEFAULT_SEED, &Tolerances::default()), 30.0);
}

#[test]
fn criterion_9_classical_recomposition() {
    gate(criteria::classical_recomposition(DEFAULT_SEED, &Tolerances::default()), 10.0);
}
