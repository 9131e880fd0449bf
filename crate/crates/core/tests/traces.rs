//! 20-step scalar traces on f(x) = x^2 against an independent scalar script.

mod suites;

use suites::traces::{dsa_cases, dsa_deviation, hd_deviation, HD_TRACE};

const TOL: f64 = 1e-12;

#[test]
fn hd_matches_hand_trace() {
    let (dev, step) = hd_deviation();
    assert!(dev <= TOL, "step {step}: {dev:e}");
    assert_eq!(HD_TRACE[1].0, 0.5888);
}

#[test]
fn dsa_matches_hand_traces() {
    for (name, cfg, trace) in dsa_cases() {
        let (dev, step) = dsa_deviation(cfg, trace);
        assert!(dev <= TOL, "{name} step {step}: {dev:e}");
    }
}
