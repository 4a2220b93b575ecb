//! The acceptance criteria, one test each. Every test prints a PASS/FAIL line
//! with its timing; tolerances and runtime limits live in `gwlimits::verify`.
//!
//! Criteria share the machine, so they run one at a time.

use std::sync::Mutex;

use gwlimits::verify::{self, VerifyOptions};

static SERIAL: Mutex<()> = Mutex::new(());

fn criterion(id: &str) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let outcome = verify::run_criterion(id, &VerifyOptions::default());
    println!("{outcome}");
    assert!(outcome.passed, "{outcome}");
}

#[test]
fn c01_scalar_constants() {
    criterion("scalars");
}

#[test]
fn c02_pmf_cross_validation() {
    criterion("pmf-cross");
}

#[test]
fn c03_hand_enumerated_pmf() {
    criterion("pmf-hand");
}

#[test]
fn c04_local_limit() {
    criterion("locallimit");
}

#[test]
fn c05_sup_bounds() {
    criterion("supbounds");
}

#[test]
fn c06_q_function() {
    criterion("qfun");
}

#[test]
fn c07_w_transforms() {
    criterion("wfun");
}

#[test]
fn c08_boettcher_g() {
    criterion("gfun");
}

#[test]
fn c09_legendre() {
    criterion("legendre");
}

#[test]
fn c10_conditional_laplace_limit() {
    criterion("eq133");
}

#[test]
fn c11_ratio_tail_slope() {
    criterion("eq1");
}

#[test]
fn c12_conditional_ldp() {
    criterion("condldp");
}

#[test]
fn c13_determinism() {
    criterion("determinism");
}

#[test]
fn c14_rate_shape() {
    criterion("rateshape");
}
