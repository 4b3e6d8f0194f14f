use entdist_core::acceptance::{run_criterion, AcceptanceConfig};

fn check(id: u8) {
    let result = run_criterion(id, &AcceptanceConfig::default()).unwrap();
    println!("{result}");
    assert!(result.passed, "{result}");
}

#[test]
fn criterion_1_noise_independence() {
    check(1);
}

#[test]
fn criterion_2_noise_expansion() {
    check(2);
}

#[test]
fn criterion_3_outcome_routing() {
    check(3);
}

#[test]
fn criterion_4_correction_soundness() {
    check(4);
}

#[test]
fn criterion_5_ghz_pipeline() {
    check(5);
}

#[test]
fn criterion_6_fiber_phase() {
    check(6);
}

#[test]
fn criterion_7_worst_case_discrimination() {
    check(7);
}

#[test]
fn criterion_8_property_suites() {
    check(8);
}
