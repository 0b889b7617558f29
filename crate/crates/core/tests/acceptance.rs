//! One test per acceptance criterion; each prints its pass/fail line.

use fracstab::acceptance::{run_criterion, CriterionResult};
use fracstab::hopfield::HopfieldParams;

fn check(id: u8) {
    let r: CriterionResult = run_criterion(id, &HopfieldParams::default());
    println!("{}", r.line());
    assert!(r.passed, "{}", r.line());
}

#[test]
fn criterion_1_mittag_leffler_identities() {
    check(1);
}

#[test]
fn criterion_2_solver_oracle() {
    check(2);
}

#[test]
fn criterion_3_linearization() {
    check(3);
}

#[test]
fn criterion_4_lmi_pipeline() {
    check(4);
}

#[test]
fn criterion_5_uncontrolled_benchmark() {
    check(5);
}

#[test]
fn criterion_6_adaptive_control() {
    check(6);
}

#[test]
fn criterion_7_controller_comparison() {
    check(7);
}

#[test]
fn criterion_8_property_suites() {
    check(8);
}

#[test]
fn criterion_9_sensitivity() {
    check(9);
}
