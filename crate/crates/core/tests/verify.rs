use liftmix::verify::{run, Suite};

#[test]
fn every_suite_passes() {
    for suite in Suite::ALL {
        let report = run(suite, 0).unwrap();
        let failed: Vec<_> = report.failures().map(|c| (&c.check, c.measured, c.bound)).collect();
        assert!(report.pass, "{suite}: {failed:?}");
    }
}

#[test]
fn reports_are_deterministic() {
    for suite in [Suite::Lemma1, Suite::Thm1, Suite::ClockContraction, Suite::BridgeExactness] {
        let a = serde_json::to_string(&run(suite, 7).unwrap()).unwrap();
        let b = serde_json::to_string(&run(suite, 7).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn suite_names_parse() {
    for suite in Suite::ALL {
        assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
    }
    assert!("thm9".parse::<Suite>().is_err());
}

#[test]
fn example3_report_has_named_checks() {
    let report = run(Suite::Example3, 7).unwrap();
    let tau = report.checks.iter().find(|c| c.check == "tau_M").unwrap();
    assert_eq!(tau.measured, Some(2.0));
    assert!(report.checks.iter().any(|c| c.check == "flow_dev"));
    assert_eq!(report.seed, 7);
}
