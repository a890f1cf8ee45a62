use mjf_core::verify::*;

#[test]
fn json_report_is_deterministic() {
    let p = SuiteParams::default();
    let ids = ["weil", "splitting", "mock_theta_F0", "prop5_xi_image"];
    let a = serde_json::to_string(&run_suites(&ids, &p).unwrap().to_json()).unwrap();
    let b = serde_json::to_string(&run_suites(&ids, &p).unwrap().to_json()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_order_follows_request() {
    let p = SuiteParams::default();
    let doc = run_suites(&["splitting", "efunction", "weil"], &p).unwrap();
    let v = doc.to_json();
    let names: Vec<&str> = v["suites"].as_array().unwrap().iter().map(|s| s["suite"].as_str().unwrap()).collect();
    assert_eq!(names, ["splitting", "efunction", "weil"]);
}

#[test]
fn unknown_suite_is_rejected() {
    let err = run_suites(&["nope"], &SuiteParams::default()).unwrap_err().to_string();
    assert!(err.contains("suite"), "{err}");
}

#[test]
fn controls_count_as_passes_only_when_they_fail() {
    let ok = CheckRecord::new("x", Oracle::Quadrature, 0.5, 1.0);
    assert!(ok.pass());
    assert!(!ok.clone().control().pass());
    assert!(CheckRecord::new("y", Oracle::Quadrature, 2.0, 1.0).control().pass());
}

#[test]
fn bad_parameters_name_the_field() {
    let p = SuiteParams { copies: 0, ..SuiteParams::default() };
    assert!(run_suite("gz_product", &p).unwrap_err().to_string().contains("copies"));
    let p = SuiteParams { order: -1, ..SuiteParams::default() };
    assert!(run_suite("gz_product", &p).unwrap_err().to_string().contains("order"));
}

#[test]
fn product_identity_two_copies() {
    let p = SuiteParams { copies: 2, order: 4, ..SuiteParams::default() };
    let r = run_suite("gz_product", &p).unwrap();
    let c = r.checks.iter().find(|c| c.name.contains("corrected")).unwrap();
    assert!(c.pass(), "{}", r.to_text());
}
