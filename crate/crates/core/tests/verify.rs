use qrlab::verify::{run_check, run_suite, CheckStatus, SuiteConfig};
use qrlab::MapDescriptor;

#[test]
fn light_checks_pass_and_repeat() {
    let config = SuiteConfig {
        checks: vec![3, 4, 5, 6, 9, 12],
        ..SuiteConfig::default()
    };
    let a = run_suite(&config).unwrap();
    let b = run_suite(&config).unwrap();
    assert_eq!(a, b);
    for c in &a.checks {
        assert_eq!(c.status, CheckStatus::Pass, "{}: {:?}", c.name, c.detail);
    }
    assert!(!a.any_failed());
}

#[test]
fn winding_map_is_outside_the_hypothesis() {
    let config = SuiteConfig {
        map: Some(MapDescriptor::winding(3).unwrap()),
        ..SuiteConfig::default()
    };
    for id in [5, 6, 7, 10] {
        let c = run_check(id, &config).unwrap();
        assert_eq!(c.status, CheckStatus::HypothesisNotMet);
        assert!(!c.hypothesis_met);
    }
    let c = run_check(3, &config).unwrap();
    assert_eq!(c.status, CheckStatus::Pass);
}

#[test]
fn user_map_with_the_hypothesis_runs_the_map_checks() {
    let config = SuiteConfig {
        map: Some(MapDescriptor::stretch_power(4, 2.5).unwrap()),
        checks: vec![5, 6, 9, 12],
        ..SuiteConfig::default()
    };
    let report = run_suite(&config).unwrap();
    for c in &report.checks {
        assert_eq!(c.status, CheckStatus::Pass, "{}: {:?}", c.name, c.detail);
    }
}

#[test]
fn unknown_check_is_an_error() {
    assert!(run_check(42, &SuiteConfig::default()).is_err());
}
