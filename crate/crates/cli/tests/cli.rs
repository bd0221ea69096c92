use std::path::PathBuf;
use std::process::{Command, Output};

use hydroham::driftflux::mutation_catalog;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn hydroham(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hydroham"))
        .args(args)
        .env("NO_COLOR", "1")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn json_of(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn check(name: &str, extra: &[&str]) -> Output {
    let path = fixture(name);
    let mut args = vec!["check", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    hydroham(&args)
}

fn reciprocal(name: &str, extra: &[&str]) -> Output {
    let path = fixture(name);
    let mut args = vec!["reciprocal", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    hydroham(&args)
}

#[test]
fn nutku_spec_passes() {
    let o = check("nutku_h1.json", &["--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    let doc = json_of(&o);
    assert_eq!(doc["passed"], true);
    assert_eq!(doc["tool"], "hydroham");
    let names: Vec<&str> = doc["reports"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap())
        .collect();
    assert_eq!(
        names,
        ["skew_adjoint", "local_hamiltonian", "contravariant"]
    );
}

#[test]
fn flipped_connection_entry_fails_and_is_named() {
    let o = check("nutku_h1_flipped.json", &["--json"]);
    assert_eq!(code(&o), 1);
    let doc = json_of(&o);
    let failed: Vec<&str> = doc["reports"][0]["conditions"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["id"].as_str().unwrap())
        .collect();
    assert!(!failed.is_empty());
    assert!(
        failed
            .iter()
            .all(|id| ["torsion-free", "metric-compatible", "flat"].contains(id)),
        "{failed:?}"
    );
    let human = check("nutku_h1_flipped.json", &[]);
    let text = String::from_utf8_lossy(&human.stdout);
    assert!(text.contains("FAIL") && text.contains(failed[0]));
}

#[test]
fn sphere_with_one_tail_is_hamiltonian() {
    assert_eq!(code(&check("sphere_one_tail.json", &[])), 0);
}

#[test]
fn malformed_specs_exit_2() {
    for name in [
        "bad_nonsquare_metric.json",
        "bad_epsilon.json",
        "bad_unknown_field.json",
        "bad_missing_metric.json",
        "bad_no_checks.json",
        "bad_expression.json",
        "bad_box.json",
    ] {
        let o = check(name, &["--json"]);
        assert_eq!(code(&o), 2, "{name}");
        assert!(!o.stderr.is_empty(), "{name}");
        assert!(json_of(&o)["error"].is_string(), "{name}");
    }
    assert_eq!(code(&check("does_not_exist.json", &[])), 2);
}

#[test]
fn overrides_reach_the_reports_and_the_echo() {
    let o = check(
        "nutku_h1.json",
        &["--json", "--samples", "12", "--seed", "99", "--tol", "1e-7"],
    );
    let doc = json_of(&o);
    let plan = &doc["reports"][1]["plan"];
    assert_eq!(plan["count"], 12);
    assert_eq!(plan["seed"], 99);
    assert_eq!(plan["rel_tol"], 1e-7);
    assert_eq!(doc["spec"]["sample_plan"]["count"], 12);
    assert_eq!(doc["spec"]["sample_plan"]["seed"], 99);
}

#[test]
fn echoed_spec_reproduces_the_residuals() {
    let first = json_of(&check(
        "nutku_h1_flipped.json",
        &["--json", "--seed", "4242", "--samples", "30"],
    ));
    let dir = tempfile::tempdir().unwrap();
    let echoed = dir.path().join("echo.json");
    std::fs::write(&echoed, serde_json::to_string(&first["spec"]).unwrap()).unwrap();
    let o = hydroham(&["check", echoed.to_str().unwrap(), "--json"]);
    let second = json_of(&o);
    assert_eq!(
        serde_json::to_string(&first["reports"]).unwrap(),
        serde_json::to_string(&second["reports"]).unwrap()
    );
}

#[test]
fn human_output_respects_no_color() {
    let o = check("nutku_h1.json", &[]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(!text.contains('\x1b'));
    assert!(text.contains("overall: PASS"));
}

#[test]
fn object_presets_exit_0() {
    for name in [
        "s",
        "s-tilde",
        "s0",
        "h1",
        "h2",
        "h3",
        "h1-theta",
        "h2-hat",
        "h3-hat",
        "remark-ops",
        "kg-family",
        "constraints",
        "reciprocal-remark",
        "riemann-map",
        "pencil",
    ] {
        let o = hydroham(&["preset", name, "--json"]);
        assert_eq!(
            code(&o),
            0,
            "{name}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
        assert_eq!(json_of(&o)["passed"], true, "{name}");
    }
}

#[test]
fn preset_parameters_are_honoured() {
    for args in [
        vec!["preset", "h1-theta", "--theta", "exp(r3)"],
        vec![
            "preset",
            "h2-hat",
            "--theta",
            "2 + sin(r3)",
            "--lambda1",
            "exp(r3)",
            "--lambda2",
            "r3",
        ],
        vec!["preset", "h3-hat", "--theta", "1 + r3^4"],
        vec!["preset", "remark-ops", "--theta", "r3"],
        vec!["preset", "kg-family", "--k", "3"],
        vec!["preset", "kg-family", "--k", "-2/3"],
        vec![
            "preset",
            "constraints",
            "--equation",
            "eq4c",
            "--equation",
            "eq5(0)",
        ],
        vec!["preset", "constraints", "--ansatz", "h3"],
        vec!["preset", "pencil", "--lambdas", "-3,2"],
    ] {
        let o = hydroham(&args);
        assert_eq!(
            code(&o),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stdout)
        );
    }
}

#[test]
fn every_cataloged_mutation_exits_1() {
    for m in mutation_catalog() {
        let o = hydroham(&["preset", "mutation", "--mutation", m.name, "--json"]);
        assert_eq!(code(&o), 1, "{}", m.name);
        let doc = json_of(&o);
        let worst = doc["reports"][0]["conditions"]
            .as_array()
            .unwrap()
            .iter()
            .filter(|c| c["passed"] == false)
            .map(|c| c["max_residual"].as_f64().unwrap())
            .fold(0.0, f64::max);
        assert!(worst >= 1e-3, "{}: {worst}", m.name);
    }
    assert_eq!(
        code(&hydroham(&[
            "preset",
            "mutation",
            "--mutation",
            "no-such-thing"
        ])),
        2
    );
}

#[test]
fn as_printed_transformed_operator_fails() {
    assert_eq!(
        code(&hydroham(&[
            "preset",
            "remark-ops",
            "--variant",
            "as-printed"
        ])),
        1
    );
}

#[test]
fn excluded_parameters_exit_2() {
    let o = hydroham(&["preset", "kg-family", "--k", "1/2"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("pole"));

    let o = hydroham(&["preset", "h2-hat", "--b3", "0,0,0"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sum_a e_a c_a b_3a = -1"));

    let o = hydroham(&["preset", "h3-hat", "--c", "3,4,6"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sum_a e_a c_a^2 = 0"));

    assert_eq!(code(&hydroham(&["preset", "h1-theta", "--theta", "r1"])), 2);
    assert_eq!(
        code(&hydroham(&[
            "preset",
            "h2-hat",
            "--lambda1",
            "r3",
            "--lambda2",
            "2*r3"
        ])),
        2
    );
    assert_eq!(
        code(&hydroham(&["preset", "constraints", "--equation", "eq5"])),
        2
    );
    assert_eq!(code(&hydroham(&["preset", "no-such-preset"])), 2);
}

#[test]
fn reciprocal_remark_prints_the_transformed_speeds() {
    let o = hydroham(&["preset", "reciprocal-remark", "--json"]);
    let doc = json_of(&o);
    let samples = doc["samples"].as_array().unwrap();
    assert_eq!(samples.len(), 8);
    for s in samples {
        let p: Vec<f64> = s["point"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        let f = (p[0] - p[1]).exp();
        let v = &s["velocity"];
        for (i, want) in [-f, f, 0.0].into_iter().enumerate() {
            assert!((v[i][i].as_f64().unwrap() - want).abs() <= 1e-10 * f.max(1.0));
        }
    }
}

#[test]
fn reciprocal_command_matches_the_remark() {
    let o = reciprocal("reciprocal_remark.json", &["--json"]);
    assert_eq!(code(&o), 0);
    let doc = json_of(&o);
    for s in doc["samples"].as_array().unwrap() {
        let p: Vec<f64> = s["point"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        let f = (p[0] - p[1]).exp();
        let speeds: Vec<f64> = s["speeds"]
            .as_array()
            .unwrap()
            .iter()
            .map(|x| x.as_f64().unwrap())
            .collect();
        assert!(
            (speeds[0] - f).abs() < 1e-12
                && (speeds[1] + f).abs() < 1e-12
                && speeds[2].abs() < 1e-12
        );
    }
    let o = reciprocal("reciprocal_remark_with_operator.json", &["--json"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert_eq!(json_of(&o)["reports"].as_array().unwrap().len(), 3);
}

#[test]
fn identity_currents_leave_the_system_unchanged() {
    let doc = json_of(&reciprocal("reciprocal_identity.json", &["--json"]));
    assert_eq!(doc["passed"], true);
    for s in doc["samples"].as_array().unwrap() {
        let (a, b) = (
            s["point"][0].as_f64().unwrap(),
            s["point"][1].as_f64().unwrap(),
        );
        let want = [[a, b], [1.0, a * b]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((s["velocity"][i][j].as_f64().unwrap() - want[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn non_conserved_current_stops_before_transforming() {
    let o = reciprocal("reciprocal_not_conserved.json", &["--json"]);
    assert_eq!(code(&o), 1);
    let doc = json_of(&o);
    assert!(doc.get("samples").is_none());
    let r = &doc["reports"][1];
    assert_eq!(r["passed"], false);
    assert!(r["conditions"][0]["max_residual"].as_f64().unwrap() > 1e-3);
}
