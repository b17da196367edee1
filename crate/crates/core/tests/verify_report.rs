//! Structure of the verification report and its sensitivity to a tampered bound.

use ::zorich::verify::{check_slabs, run_verification, Level, VerifyOptions};

#[test]
fn tampered_slab_bound_fails_the_report() {
    let opts = VerifyOptions { level: Level::Quick, slab_bound_scale: 0.1 };
    let rep = run_verification(&opts);
    assert!(!rep.pass);
    let failed: Vec<_> = rep.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    assert_eq!(failed, ["slab-distortion"]);
    let text = rep.to_text();
    assert!(text.contains("check=slab-distortion criterion=9"));
    assert!(text.lines().last().unwrap().ends_with("pass=false"));
}

#[test]
fn slab_check_passes_untampered() {
    let lambda = ::zorich::distortion::lambda_h_estimate(128).unwrap();
    assert!(check_slabs(3, lambda, 1.0).pass);
    assert!(!check_slabs(3, lambda, 0.1).pass);
}
