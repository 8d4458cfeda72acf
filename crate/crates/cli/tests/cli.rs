//! End-to-end behaviour of the `converse-kit` binary.

use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_converse-kit"));
    cmd.env_remove("CONVERSE_KIT_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn docs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../docs")
}

/// Parses a document and blanks the timestamp, the only field that varies
/// between runs.
fn normalized(text: &str) -> Value {
    let mut v: Value = serde_json::from_str(text).expect("valid JSON");
    v["manifest"]["timestamp"] = Value::Null;
    v
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(docs().join("schema/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).expect("schema compiles")
}

#[test]
fn config_errors_exit_2() {
    let out = run(&["bound", "density", "--n", "0"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let out = run(&["bound", "active", "--c", "0.6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("(0, 1/2]"), "{}", stderr(&out));

    let out = run(&["bound", "cs", "--k", "not-a-number"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_thread_count_exits_2() {
    let out = bin().env("CONVERSE_KIT_THREADS", "zero").args(["bound", "cs"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_exits_3() {
    let out = run(&["bound", "cs", "--out", "/nonexistent-dir/report.json"]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn bound_output_is_deterministic_and_valid() {
    let schema = schema();
    for app in ["density", "active", "cs"] {
        let a = run(&["bound", app]);
        let b = bin().env("CONVERSE_KIT_THREADS", "1").args(["bound", app]).output().unwrap();
        assert!(a.status.success() && b.status.success());
        let (va, vb) = (normalized(&stdout(&a)), normalized(&stdout(&b)));
        assert_eq!(va, vb, "{app}");

        let raw: Value = serde_json::from_str(&stdout(&a)).unwrap();
        let errors: Vec<String> = schema.iter_errors(&raw).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{app}: {errors:?}");
    }
}

#[test]
fn bound_output_matches_goldens() {
    for app in ["density", "active", "cs"] {
        let golden = std::fs::read_to_string(docs().join(format!("golden/{app}.json"))).unwrap();
        let out = run(&["bound", app]);
        assert_eq!(normalized(&stdout(&out)), normalized(&golden), "{app}");
    }
}

#[test]
fn out_file_matches_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cs.json");
    let out = run(&["bound", "cs", "--out", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(stdout(&out).is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    assert_eq!(normalized(&written), normalized(&stdout(&run(&["bound", "cs"]))));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1, "no temporary files left behind");
}

#[test]
fn verify_packing_finds_a_large_code() {
    let out = run(&["verify", "packing", "--m", "12", "--dmin", "4"]);
    assert!(out.status.success(), "{}", stdout(&out));
    let text = stdout(&out);
    let size: usize = text
        .split("size ")
        .nth(1)
        .and_then(|s| s.split_whitespace().next())
        .and_then(|s| s.parse().ok())
        .expect("size reported");
    assert!(size >= 14, "{text}");
}

#[test]
fn verify_soundness_passes_and_writes_a_valid_summary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("soundness.json");
    let out = run(&["verify", "soundness", "--count", "200", "--seed", "7", "--out", path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", stdout(&out));
    assert!(stdout(&out).starts_with("soundness: 200/200 pass"), "{}", stdout(&out));
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert!(schema().is_valid(&doc));
    assert_eq!(doc["manifest"]["seed"], 7);
}

#[test]
fn single_point_sweep_equals_bound() {
    let bound: Value = serde_json::from_str(&stdout(&run(&["bound", "density", "--n", "1e9"]))).unwrap();
    let csv = stdout(&run(&["sweep", "density", "--vary", "n", "--values", "1e9"]));
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 1);
    let cells: Vec<f64> = rows[0].split(',').map(|c| c.parse().unwrap()).collect();
    let r = &bound["report"];
    let expected = [
        1e9,
        r["strong"]["eps_lower"].as_f64().unwrap(),
        r["fano"]["eps_lower"].as_f64().unwrap(),
        r["strong"]["risk_lower"].as_f64().unwrap(),
        r["fano"]["risk_lower"].as_f64().unwrap(),
        r["ratio"].as_f64().unwrap(),
    ];
    for (got, want) in cells.iter().zip(expected) {
        assert_eq!(got.to_bits(), want.to_bits());
    }
}

#[test]
fn density_sweep_reaches_the_strong_regime() {
    let out = run(&["sweep", "density", "--vary", "n", "--from", "1e6", "--to", "1e14", "--points", "9"]);
    assert!(out.status.success());
    let csv = stdout(&out);
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# manifest: {"));
    assert_eq!(lines.next().unwrap(), "value,strong_eps,fano_eps,strong_risk,fano_risk,ratio");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 9);
    let last_eps: f64 = rows[8][1].parse().unwrap();
    assert!(last_eps >= 0.99);
}

#[test]
fn sweep_rejects_unknown_parameters() {
    let out = run(&["sweep", "cs", "--vary", "bogus", "--values", "1,2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pack_outputs_parse_back() {
    let text = stdout(&run(&["pack", "gv", "--m", "8", "--dmin", "3"]));
    let code = converse_kit::packing::BinaryCodebook::from_text(&text).unwrap();
    assert_eq!(code.len(), 16);
    assert!(code.verify().passed);

    let text = stdout(&run(&["pack", "cs", "--n", "64", "--k", "4", "--count", "16", "--seed", "1"]));
    let p = converse_kit::packing::SparsePacking::from_text(&text).unwrap();
    assert_eq!(p.len(), 16);
    assert!(p.beta_hat().is_finite());
}

#[test]
fn impossible_packing_exits_1() {
    let out = run(&["pack", "cs", "--n", "8", "--k", "4", "--count", "1000", "--max-attempts", "200"]);
    assert_eq!(out.status.code(), Some(1), "{}", stderr(&out));
}
