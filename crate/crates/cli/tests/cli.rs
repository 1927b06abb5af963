use std::fs;
use std::process::{Command, Output};

fn rotorwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotorwalk"))
        .args(args)
        .output()
        .expect("run rotorwalk")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn analyze_appendix() {
    let o = rotorwalk(&["analyze", "appendix"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("classification: positive_recurrent"), "{out}");
    assert!(out.contains("rho(M) = 0.967"), "{out}");
    assert!(out.contains("3/5"), "{out}");
}

#[test]
fn analyze_subtree_is_transient() {
    let o = rotorwalk(&["analyze", "appendix_subtree"]);
    let out = stdout(&o);
    assert!(out.contains("classification: transient"), "{out}");
    assert!(out.contains("rho(M) = 1.093"), "{out}");
    assert!(!out.contains("predicted limit"), "{out}");
}

#[test]
fn analyze_json_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.toml");
    fs::write(&path, "n_types = 2\nword.1 = [2, 2]\nword.2 = [1]\n").unwrap();
    let o = rotorwalk(&["analyze", path.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["classification"], "positive_recurrent");
    assert_eq!(doc["palindromic"], true);
    let limit = doc["predicted_limit"].as_f64().unwrap();
    assert!((limit - (1.0 - 2f64.sqrt() / 2.0)).abs() < 1e-9);
    assert_eq!(doc["m_exact"][1][0], "1/2");
}

#[test]
fn law_file_overrides_uniform() {
    let dir = tempfile::tempdir().unwrap();
    let law = dir.path().join("law.toml");
    fs::write(&law, "rotor.1 = [0, 0, 1]\nrotor.2 = [0, 1]\n").unwrap();
    let o = rotorwalk(&["analyze", "sqrt2", "--law", law.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["rho_m"].as_f64().unwrap(), 0.0);
}

#[test]
fn parse_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    fs::write(&path, "n_types = 3\nword.1 = [2]\nword.2 = [1]\n").unwrap();
    let o = rotorwalk(&["verify", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing word for type 3"), "{}", stderr(&o));

    fs::write(&path, "n_types = [").unwrap();
    assert_eq!(rotorwalk(&["analyze", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(rotorwalk(&["analyze", "no/such/file.toml"]).status.code(), Some(2));
    assert_eq!(rotorwalk(&["simulate", "sqrt2", "--root", "3"]).status.code(), Some(2));
    assert_eq!(rotorwalk(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_series_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = rotorwalk(&[
        "simulate", "sqrt2", "--seed", "4", "--steps", "10000", "--stride", "1000",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(out.join("series.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,range");
    assert_eq!(lines.len(), 11);
    assert!(lines[10].starts_with("10000,"));
    let summary: toml::Table = fs::read_to_string(out.join("summary.toml")).unwrap().parse().unwrap();
    assert_eq!(summary["steps"].as_integer(), Some(10_000));
    assert_eq!(summary["status"].as_str(), Some("completed"));
}

#[test]
fn simulate_without_seed_prints_one() {
    let o = rotorwalk(&["simulate", "sqrt2", "--steps", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    let seed: u64 = err
        .lines()
        .find_map(|l| l.strip_prefix("seed: "))
        .expect("seed printed")
        .parse()
        .unwrap();
    let again = rotorwalk(&["simulate", "sqrt2", "--steps", "100", "--seed", &seed.to_string()]);
    assert_eq!(stdout(&o), stdout(&again));
}

#[test]
fn transient_simulation_reports_cap() {
    let o = rotorwalk(&[
        "simulate", "appendix_subtree", "--seed", "1", "--steps", "100000000", "--step-cap", "100000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let err = stderr(&o);
    assert!(err.contains("transient"), "{err}");
    assert!(err.contains("step cap exhausted"), "{err}");
    assert!(stdout(&o).contains("status = \"step_cap_exhausted\""));
}

#[test]
fn trace_rows_follow_the_rotor_rule() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let half_line = dir.path().join("ray.toml");
    fs::write(&half_line, "n_types = 1\nword.1 = [1]\nrotor.1 = [1, 0]\n").unwrap();
    let o = rotorwalk(&[
        "simulate", half_line.to_str().unwrap(), "--seed", "1", "--steps", "4",
        "--trace", trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = fs::read_to_string(trace).unwrap();
    assert_eq!(
        text,
        "n,vertex_path,type,rotor_after\n1,o,,\n2,r,1,1\n3,r.1,1,1\n4,r.1.1,1,1\n"
    );
}

#[test]
fn verify_palindromic_instance() {
    let o = rotorwalk(&[
        "verify", "sqrt2", "--seed", "3", "--replicas", "10", "--returns", "6", "--samples", "20000",
    ]);
    let out = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{out}");
    assert!(out.contains("2M=D: exact pass"), "{out}");
    assert!(out.contains("verify: pass"), "{out}");
}

#[test]
fn palindromic_command() {
    let o = rotorwalk(&["palindromic", "sqrt2", "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["two_m_equals_d"], true);
    let a = doc["gamma"].as_f64().unwrap();
    let b = doc["gamma_closed_form"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-9);
    assert_eq!(rotorwalk(&["palindromic", "appendix"]).status.code(), Some(2));
    let critical = rotorwalk(&["palindromic", "palindrome_critical"]);
    assert!(stdout(&critical).contains("null_recurrent"));
}

#[test]
fn experiment_verdicts_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("exp");
    let pass = rotorwalk(&[
        "experiment", "lln-returns", "sqrt2", "--seed", "2", "--returns", "8", "--replicas", "5",
        "--tolerance", "0.05", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(pass.status.code(), Some(0), "{}", stdout(&pass));
    let summary: toml::Table = fs::read_to_string(out.join("summary.toml")).unwrap().parse().unwrap();
    assert_eq!(summary["verdict"].as_str(), Some("pass"));
    assert!(fs::read_to_string(out.join("series.csv")).unwrap().starts_with("replica,n_or_k,value\n"));

    let fail = rotorwalk(&[
        "experiment", "lln-range", "sqrt2", "--seed", "2", "--steps", "1000", "--replicas", "2",
        "--tolerance", "0",
    ]);
    assert_eq!(fail.status.code(), Some(1));

    let info = rotorwalk(&[
        "experiment", "conjecture", "binary", "--seed", "2", "--steps", "10000", "--replicas", "2",
    ]);
    assert_eq!(info.status.code(), Some(0));
    assert!(stdout(&info).starts_with("conjecture_probe: informational"));

    let na = rotorwalk(&["experiment", "moments", "appendix_subtree", "--seed", "2"]);
    assert_eq!(na.status.code(), Some(0));
    assert!(stdout(&na).starts_with("moment_check: not_applicable"));
}
