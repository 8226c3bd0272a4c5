//! Acceptance suite: one test per criterion, each printing a single
//! pass/fail line. The criteria share one lazily-built state so field
//! computations are reused across tests regardless of execution order.

use std::sync::LazyLock;

use radmax::verifier::AcceptanceSuite;

static SUITE: LazyLock<AcceptanceSuite> = LazyLock::new(|| AcceptanceSuite::new(7, 1024));

fn run(id: u32) {
    let r = SUITE.criterion(id);
    println!(
        "criterion {:02} {:<28} {} {}",
        r.id,
        r.name,
        if r.passed { "PASS" } else { "FAIL" },
        r.detail
    );
    assert!(r.passed, "criterion {:02} {}: {}", r.id, r.name, r.detail);
}

#[test]
fn c01_kernel_volume() {
    run(1);
}

#[test]
fn c02_axis_reduction() {
    run(2);
}

#[test]
fn c03_line_equivalence() {
    run(3);
}

#[test]
fn c04_derivative_lemmas() {
    run(4);
}

#[test]
fn c05_perturbation_calculus() {
    run(5);
}

#[test]
fn c06_integral_identity() {
    run(6);
}

#[test]
fn c07_endpoint_derivative_bound() {
    run(7);
}

#[test]
fn c08_truncated_variation_chain() {
    run(8);
}

#[test]
fn c09_valley_structure() {
    run(9);
}

#[test]
fn c10_argmax_classification() {
    run(10);
}

#[test]
fn c11_conditional_domination() {
    run(11);
}

#[test]
fn c12_determinism() {
    run(12);
}
