use amalgam::harness::{run_scenario, Row, RunOptions, Scenario, Target, Verdict, VerificationReport};
use amalgam::operators::{riesz_potential, riesz_potential_power_route};
use amalgam::RealFunction;
use serde_json::json;

fn run(v: serde_json::Value) -> VerificationReport {
    let scn = Scenario::from_json(&v.to_string()).unwrap();
    run_scenario(&scn, &RunOptions::default()).unwrap()
}

fn rows_of<'a>(rep: &'a VerificationReport, function: &str) -> Vec<&'a Row> {
    rep.rows.iter().filter(|r| r.function == function).collect()
}

#[test]
fn zero_function_passes_every_inequality() {
    let cases = [
        json!({"target": "thm21_part1", "exponents": {"q": 1, "alpha": 2, "beta": 4, "q1": 1, "alpha1": 1.3333333333333333, "p1": 1.3333333333333333}}),
        json!({"target": "cor23", "exponents": {"q": 2, "p": 4, "alpha": 2, "beta": 4}}),
        json!({"target": "thm31_goodlambda", "kernel": {"kind": "riesz", "gamma": 0.5}, "exponents": {"q": 1, "alpha": 1.5, "beta": 2}}),
        json!({"target": "prop34", "kernel": {"kind": "riesz", "gamma": 0.5}, "exponents": {"q": 1, "alpha": 1.5, "beta": 2, "q1": 1, "alpha1": 1.5, "p1": 1.8}}),
        json!({"target": "lem32", "kernel": {"kind": "riesz", "gamma": 0.5}, "exponents": {"q": 1, "beta": 2}}),
        json!({"target": "prop41", "exponents": {"a": 0.25, "gamma": 0.5, "alpha": 1}}),
    ];
    for mut c in cases {
        c["functions"] = json!([{"kind": "zero"}]);
        let rep = run(c);
        assert_eq!(rep.verdict, Verdict::Pass, "{}", rep.target);
        assert!(rep.rows.iter().all(|r| r.lhs == 0.0), "{}", rep.target);
        assert_eq!(rep.empirical_constant, 0.0);
    }
}

#[test]
fn two_weight_level_sets_vanish_above_sup_f() {
    let rep = run(json!({
        "target": "thm21_part1",
        "functions": [{"kind": "indicator", "a": 0, "b": 1}],
        "exponents": {"q": 1, "alpha": 2, "beta": 4, "q1": 1, "alpha1": 1.3333333333333333, "p1": 1.3333333333333333},
        "lambda_grid": {"points": 41, "absolute": [0.01, 1.0]}
    }));
    assert_eq!(rep.verdict, Verdict::Pass);
    assert!(rep.empirical_constant.is_finite() && rep.empirical_constant > 0.0);
    let above: Vec<&Row> = rep.rows.iter().filter(|r| r.lambda.is_some_and(|l| l >= 1.0 - 1e-12)).collect();
    assert!(!above.is_empty());
    // the maximal function of an indicator never exceeds 1
    assert!(above.iter().all(|r| r.lhs == 0.0), "{above:?}");
    assert!(rep.rows.iter().any(|r| r.lhs > 0.0));
}

#[test]
fn weak_type_ratio_is_dilation_invariant_under_lebesgue() {
    let functions: Vec<_> = [0.25, 0.5, 1.0, 2.0, 4.0].iter().map(|h| json!({"kind": "indicator", "a": 0, "b": h})).collect();
    let rep = run(json!({
        "target": "cor23",
        "functions": functions,
        "exponents": {"q": 2, "p": 4, "alpha": 2, "beta": 4}
    }));
    assert_eq!(rep.verdict, Verdict::Pass);
    let per: Vec<f64> = [0.25, 0.5, 1.0, 2.0, 4.0]
        .iter()
        .map(|h| rows_of(&rep, &format!("indicator[0,{h})")).iter().map(|r| r.ratio).fold(0.0, f64::max))
        .collect();
    let (lo, hi) = (per.iter().cloned().fold(f64::INFINITY, f64::min), per.iter().cloned().fold(0.0, f64::max));
    assert!(lo > 0.0 && (hi - lo) / lo < 0.25, "{per:?}");
}

/// `I_{1/2} χ_[0,1)` in closed form.
fn riesz_half_of_unit_indicator(x: f64) -> f64 {
    if x <= 0.0 {
        2.0 * ((1.0 - x).sqrt() - (-x).sqrt())
    } else if x < 1.0 {
        2.0 * (x.sqrt() + (1.0 - x).sqrt())
    } else {
        2.0 * (x.sqrt() - (x - 1.0).sqrt())
    }
}

#[test]
fn good_lambda_lhs_matches_rectangle_rule() {
    let rep = run(json!({
        "target": "thm31_goodlambda",
        "kernel": {"kind": "riesz", "gamma": 0.5},
        "functions": [{"kind": "indicator", "a": 0, "b": 1}],
        "exponents": {"q": 1, "alpha": 1.5, "beta": 2, "kappa": [1]}
    }));
    assert_eq!(rep.verdict, Verdict::Pass);
    let row = &rep.rows[0];
    assert_eq!(row.param, "kappa=1");
    assert!(row.ratio.is_finite());
    let lambda = row.lambda.unwrap();
    // Kf(x) <= 1/sqrt(x - 1) for x > 1, and Kf is symmetric about 1/2
    let half = 1.0 / (lambda * lambda) + 1.0;
    let n = 100_000;
    let h = (2.0 * half + 1.0) / n as f64;
    let cells = (0..n).filter(|&k| riesz_half_of_unit_indicator(-half + (k as f64 + 0.5) * h) > lambda).count();
    let oracle = lambda * cells as f64 * h;
    assert!((row.lhs - oracle).abs() <= 1e-3 * oracle, "{} vs {oracle}", row.lhs);
}

#[test]
fn riesz_closed_form_agrees_with_quadrature() {
    let chi = RealFunction::indicator(0.0, 1.0).unwrap();
    for x in [-3.0, -0.2, 0.0, 0.3, 0.5, 0.9, 1.0, 2.0, 40.0] {
        let v = riesz_potential(&chi, 0.5, x, 1e-10).unwrap();
        assert!((v - riesz_half_of_unit_indicator(x)).abs() < 1e-7, "x = {x}: {v}");
    }
    // the weighted route at (a, γ) = (1/4, 1/2)
    let v = riesz_potential_power_route(&chi, 0.5, 0.25, 0.0, 1e-10).unwrap();
    assert!((v - 2.0).abs() < 1e-7, "{v}");
}

#[test]
fn far_field_potential_against_midpoint_rule() {
    let chi = RealFunction::indicator(-1.0, 1.0).unwrap();
    let x = 10.0;
    let n = 100_000;
    let h = 2.0 / n as f64;
    let oracle: f64 = (0..n).map(|k| (x - (-1.0 + (k as f64 + 0.5) * h)).abs().powf(-0.5) * h).sum();
    let v = riesz_potential(&chi, 0.5, x, 1e-10).unwrap();
    assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
}

#[test]
fn weighted_riesz_records_consistent_eta() {
    let rep = run(json!({
        "target": "prop41",
        "functions": [{"kind": "indicator", "a": 0, "b": 1}],
        "exponents": {"a": 0.25, "gamma": 0.5, "alpha": 1}
    }));
    assert_eq!(rep.verdict, Verdict::Pass);
    let eta = rep.derived["eta[a=0.25,gamma=0.5,alpha=1]"];
    assert!((1.0 / eta - (1.0 - 0.5) / (1.0 - 0.25)).abs() < 1e-12, "{eta}");
    let at_zero = rep.checks.iter().find(|c| c.name.ends_with("potential of the unit indicator at 0")).unwrap();
    assert!(at_zero.passed && (at_zero.value - 2.0).abs() < 1e-6);
}

#[test]
fn local_good_lambda_rows_vanish_as_c_over_b_shrinks() {
    let rep = run(json!({
        "target": "lem32",
        "kernel": {"kind": "riesz", "gamma": 0.5},
        "functions": [{"kind": "tent", "a": 0, "b": 1}],
        "exponents": {"q": 1, "beta": 2},
        "good_lambda": {"a": [0.05], "b": [16.0], "c": [1e-6, 1.0]}
    }));
    assert_eq!(rep.target, Target::Lem32);
    let tiny: Vec<&Row> = rep.rows.iter().filter(|r| r.param.contains("c=0.000001")).collect();
    assert!(!tiny.is_empty(), "{:?}", rep.rows.iter().map(|r| &r.param).collect::<Vec<_>>());
    assert!(tiny.iter().all(|r| r.lhs == 0.0), "{tiny:?}");
}

#[test]
fn hypothesis_violations_are_rejected_before_evaluation() {
    let scn = Scenario::from_json(
        &json!({"target": "cor23", "exponents": {"q": 1, "p": 4, "alpha": 2, "beta": 4}}).to_string(),
    )
    .unwrap();
    let err = run_scenario(&scn, &RunOptions::default()).unwrap_err();
    assert!(matches!(err, amalgam::Error::Hypothesis(_)), "{err}");
}

#[test]
fn malformed_scenarios_name_the_field() {
    let err = Scenario::from_json(r#"{"target": "cor23", "exponents": {"q": 1, "r": 2}}"#).unwrap_err();
    let msg = err.to_string();
    assert!(matches!(err, amalgam::Error::Config(_)));
    assert!(msg.contains("exponents"), "{msg}");
}
