use std::path::Path;
use std::process::{Command, Output};

use carleman_lab::report::csv_body;

const BIN: &str = env!("CARGO_BIN_EXE_carleman-lab");

const SMALL: &str = "[grid]\nn1 = 8\nn2 = 10\nnt = 40\nL = 2.0\n";

fn run(dir: &Path, cmd: &str, toml: &str, seed: Option<&str>) -> Output {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, toml).unwrap();
    let mut c = Command::new(BIN);
    c.args([cmd, "--config", cfg.to_str().unwrap(), "--jobs", "1", "--out", dir.join("out").to_str().unwrap()]);
    c.env_remove("CARLEMAN_LAB_SEED");
    if let Some(s) = seed {
        c.env("CARLEMAN_LAB_SEED", s);
    }
    c.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn paper_pair_passes_weight_check() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "check-weights", "", None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/check-weights.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["config"]["weights"]["beta_tilde"], "exp-decreasing");
    let csv = std::fs::read_to_string(dir.path().join("out/assumptions.csv")).unwrap();
    assert!(csv.starts_with("# schema=1\n# generated="));
}

#[test]
fn m_at_most_one_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "check-weights", "[weights]\nm = 1.0\n", None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("must exceed 1"), "{}", stderr(&o));
}

#[test]
fn constant_beta_tilde_fails_the_gradient_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "check-weights", "[weights]\nbeta_tilde = \"one\"\n", None);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("grad beta_tilde"), "{}", stderr(&o));
    assert!(dir.path().join("out/check-weights.json").exists());
}

#[test]
fn malformed_config_reports_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "forward", "[grid]\nn1 = 8\nn2 = \"ten\"\n", None);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.contains("line 3") && e.contains("n2"), "{e}");
}

#[test]
fn unknown_command_and_bad_seed_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(run(dir.path(), "frobnicate", "", None).status.code(), Some(2));
    let o = run(dir.path(), "check-weights", "", Some("minus-one"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("CARLEMAN_LAB_SEED"));
}

#[test]
fn weight_overflow_is_numerical() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "lemma-audit", &format!("{SMALL}[audit]\nlambda = 1000.0\n"), None);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn vanishing_divisor_is_an_assumption_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "invert", &format!("{SMALL}[fixture]\nreference = \"pure-phase\"\n"), None);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("divisor guard"), "{}", stderr(&o));
}

#[test]
fn identical_twins_invert_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let toml = format!("{SMALL}[coefficients]\nalpha = \"zero\"\ngamma = \"zero\"\n");
    let o = run(dir.path(), "invert", &toml, None);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/invert.json")).unwrap()).unwrap();
    assert_eq!(json["pass"], true);
    assert_eq!(json["summary"]["reconstruction"]["alpha"]["max_abs"], 0.0);
}

fn bodies(dir: &Path, files: &[&str]) -> Vec<String> {
    files.iter().map(|f| csv_body(&std::fs::read_to_string(dir.join("out").join(f)).unwrap())).collect()
}

#[test]
fn repeated_runs_give_identical_csv_bodies() {
    let toml = format!("{SMALL}[weights]\nss = [8.0, 16.0]\n[inverse]\nnoise = 0.01\n");
    let (a, b, c) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        assert_eq!(run(d.path(), "stability-audit", &toml, Some("7")).status.code(), Some(0));
    }
    assert_eq!(run(c.path(), "stability-audit", &toml, Some("8")).status.code(), Some(0));
    let files = ["stability.csv"];
    assert_eq!(bodies(a.path(), &files), bodies(b.path(), &files));
    assert_ne!(bodies(a.path(), &files), bodies(c.path(), &files));
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("out/stability-audit.json")).unwrap()).unwrap();
    assert_eq!(json["config"]["seed"], 7);
}
