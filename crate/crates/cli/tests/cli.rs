use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pidkit_core::corpus;
use pidkit_core::io::InputDocument;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pidkit"))
}

fn write_doc(dir: &Path, name: &str, doc: &InputDocument) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string(doc).unwrap()).unwrap();
    path
}

fn stdout_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr_error_kind(out: &Output) -> String {
    let v: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap_or_else(|e| {
        panic!("stderr is not JSON ({e}): {}", String::from_utf8_lossy(&out.stderr))
    });
    v["error"]["kind"].as_str().unwrap().to_string()
}

fn atom_bits(doc: &serde_json::Value, name: &str) -> f64 {
    doc["atoms"][name]["bits"].as_f64().unwrap()
}

#[test]
fn compute_broja_on_xor_gives_pure_synergy() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_doc(dir.path(), "xor.json", &InputDocument::from_discrete(&corpus::xor()));
    let out = bin().args(["compute", "--method", "broja", "--input"]).arg(&input).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert!(atom_bits(&doc, "ui_x").abs() < 1e-6);
    assert!(atom_bits(&doc, "ui_y").abs() < 1e-6);
    assert!(atom_bits(&doc, "ri").abs() < 1e-6);
    assert!((atom_bits(&doc, "si") - 1.0).abs() < 1e-6);
    assert_eq!(doc["units"], "bits");
    assert_eq!(doc["config"]["seed"], 42);
}

#[test]
fn compute_delta_on_the_four_bit_example() {
    let dir = tempfile::tempdir().unwrap();
    let input =
        write_doc(dir.path(), "fb.json", &InputDocument::from_discrete(&corpus::four_bit()));
    let out = bin().args(["compute", "--method", "delta", "--input"]).arg(&input).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    for name in ["ui_x", "ui_y", "ri", "si"] {
        assert!((atom_bits(&doc, name) - 1.0).abs() < 1e-2, "{name}");
    }
}

#[test]
fn compute_writes_file_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_doc(dir.path(), "and.json", &InputDocument::from_discrete(&corpus::and_gate()));
    let result = dir.path().join("result.json");
    let out = bin()
        .args(["compute", "--method", "ipid", "--input"])
        .arg(&input)
        .arg("--out")
        .arg(&result)
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("method   ipid"), "{text}");
    assert!(text.contains("converged true"), "{text}");
    let doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&result).unwrap()).unwrap();
    assert!((atom_bits(&doc, "ri") - 0.3113).abs() < 2e-2);
}

#[test]
fn compute_is_deterministic_apart_from_the_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_doc(dir.path(), "and.json", &InputDocument::from_discrete(&corpus::and_gate()));
    let run = || {
        let out =
            bin().args(["compute", "--method", "broja", "--input"]).arg(&input).output().unwrap();
        assert!(out.status.success());
        let mut doc = stdout_json(&out);
        doc.as_object_mut().unwrap().remove("timestamp");
        serde_json::to_string(&doc).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn gaussian_inputs_reject_discrete_only_methods() {
    let dir = tempfile::tempdir().unwrap();
    let g = corpus::gaussian_scalar(0.5, 1.0);
    let input = write_doc(dir.path(), "g.json", &InputDocument::from_gaussian(&g));
    let out = bin().args(["compute", "--method", "broja", "--input"]).arg(&input).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&out), "invalid-input");
    let out = bin().args(["compute", "--method", "ipid", "--input"]).arg(&input).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert!(atom_bits(&doc, "ui_x") > 0.2);
}

#[test]
fn malformed_documents_exit_one_with_an_error_object() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(
        &path,
        r#"{"kind":"discrete","alphabet_sizes":{"m":2,"x":2,"y":1},"pmf":[0.5,0.49]}"#,
    )
    .unwrap();
    let out = bin().args(["compute", "--method", "delta", "--input"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&out), "invalid-input");
    let out = bin().args(["compute", "--method", "delta", "--input", "/no/such/file.json"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    // Unknown flags are invalid input too, not clap's default exit 2.
    let out = bin().args(["compute", "--nonsense"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error_kind(&out), "invalid-input");
}

#[test]
fn blackwell_reports_both_directions() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_doc(
        dir.path(),
        "c.json",
        &InputDocument::from_discrete(&corpus::copy_with_constant_y()),
    );
    let out = bin().args(["blackwell", "--input"]).arg(&input).output().unwrap();
    assert!(out.status.success());
    let doc = stdout_json(&out);
    assert_eq!(doc["x_sufficient_for_y"]["sufficient"], true);
    assert_eq!(doc["y_sufficient_for_x"]["sufficient"], false);
    assert!(doc["lecam_emulate_x_from_y"].as_f64().unwrap() > 0.4);
    assert!(doc["lecam_emulate_y_from_x"].as_f64().unwrap() < 1e-9);

    let g = corpus::gaussian_scalar(0.5, 1.0);
    let ginput = write_doc(dir.path(), "g.json", &InputDocument::from_gaussian(&g));
    let out = bin().args(["blackwell", "--input"]).arg(&ginput).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert_eq!(doc["kind"], "gaussian");
    assert_eq!(doc["x_sufficient_for_y"]["sufficient"], true);
    assert_eq!(doc["y_sufficient_for_x"]["sufficient"], false);
}

#[test]
fn risk_audit_reports_and_hides_rows() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_doc(dir.path(), "and.json", &InputDocument::from_discrete(&corpus::and_gate()));
    let out = bin()
        .args(["risk-audit", "--losses", "5", "--seed", "9", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = stdout_json(&out);
    assert!(doc["max_violation"].as_f64().unwrap() <= 1e-6);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 0);
    let out = bin()
        .args(["risk-audit", "--losses", "5", "--seed", "9", "--verbose", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    let doc = stdout_json(&out);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 5);
    assert_eq!(doc["rows"][0]["zero_one"], true);
}

#[test]
fn sweep_writes_csv_and_rejects_bad_grids() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_doc(dir.path(), "and.json", &InputDocument::from_discrete(&corpus::and_gate()));
    let csv = dir.path().join("sweep.csv");
    let out = bin()
        .args(["sweep", "--grid", "0.1:10:logsteps=5", "--input"])
        .arg(&input)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "lambda,total_bits,kl_bits,cmi_bits,converged");
    let totals: Vec<f64> =
        lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(totals.len(), 5);
    assert!(totals.windows(2).all(|w| w[1] >= w[0] - 1e-9));

    let out = bin()
        .args(["sweep", "--grid", "10:0.1:logsteps=5", "--input"])
        .arg(&input)
        .arg("--csv")
        .arg(&csv)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["message"], "grid must be strictly increasing");
}

#[test]
fn thread_controls_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_doc(dir.path(), "xor.json", &InputDocument::from_discrete(&corpus::xor()));
    let out = bin()
        .args(["compute", "--method", "delta", "--threads", "1", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .env("PIDKIT_THREADS", "2")
        .args(["compute", "--method", "delta", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert!(out.status.success());
    let out = bin()
        .env("PIDKIT_THREADS", "zebra")
        .args(["compute", "--method", "delta", "--input"])
        .arg(&input)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
