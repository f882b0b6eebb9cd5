use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use tempfile::TempDir;

fn rbc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbc"))
        .args(args)
        // pins the model creation timestamp so reruns are byte-identical
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .output()
        .expect("spawn rbc")
}

fn ok(args: &[&str]) -> String {
    let out = rbc(args);
    assert!(
        out.status.success(),
        "rbc {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// One synthetic cell set with its feature table, shared by every test.
fn corpus() -> &'static (TempDir, PathBuf, PathBuf) {
    static CORPUS: OnceLock<(TempDir, PathBuf, PathBuf)> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let cells = dir.path().join("cells");
        let feats = dir.path().join("feats.csv");
        ok(&["-q", "experiment", "synth", "--out", s(&cells), "--n-cells", "90", "--features", s(&feats)]);
        (dir, cells, feats)
    })
}

#[test]
fn version_names_model_format_and_registry() {
    let v = ok(&["--version"]);
    assert!(v.starts_with("rbc 0.1.0 (model format 1, feature registry "), "{v}");
    let digest = v.trim().trim_end_matches(')').rsplit(' ').next().unwrap();
    assert_eq!(digest.len(), 64);
}

#[test]
fn usage_errors_exit_2_and_domain_errors_exit_1() {
    assert_eq!(rbc(&["--bogus"]).status.code(), Some(2));
    assert_eq!(rbc(&["train", "--data", "x.csv", "--out", "m.json"]).status.code(), Some(2));
    let missing = rbc(&["-q", "metrics", "--from-matrix", "/nonexistent/m.csv"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error: "));
}

#[test]
fn metrics_from_matrix() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("m.csv");
    std::fs::write(&path, "1042,5,52\n16,153,23\n75,3,71\n").unwrap();
    assert_eq!(ok(&["-q", "metrics", "--from-matrix", s(&path), "--sds"]).trim(), "89.72");
    let json: serde_json::Value = serde_json::from_str(&ok(&["-q", "metrics", "--from-matrix", s(&path), "--json"])).unwrap();
    assert!(json.is_object());
}

#[test]
fn extract_selected_groups() {
    let (dir, cells, _) = corpus();
    let out = dir.path().join("shape.csv");
    ok(&["-q", "extract", "--manifest", s(&cells.join("manifest.csv")), "--groups", "shape", "--out", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(header.split(',').count(), 43);
    assert!(header.starts_with("id,"));
    assert_eq!(lines.count(), 90);
}

#[test]
fn train_predict_evaluate_round_trip() {
    let (_, _, feats) = corpus();
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("rf.json");
    ok(&["-q", "train", "--learner", "RF", "--params", r#"{"n_trees": 10}"#, "--data", s(feats), "--out", s(&model)]);

    let serial = ok(&["-q", "--threads", "1", "predict", "--model", s(&model), "--data", s(feats), "--proba"]);
    let parallel = ok(&["-q", "--threads", "4", "predict", "--model", s(&model), "--data", s(feats), "--proba"]);
    assert_eq!(serial, parallel);
    let header = serial.lines().next().unwrap();
    assert!(header.contains("predicted") && header.contains("p_circular"), "{header}");
    assert_eq!(serial.lines().count(), 91);

    let again = dir.path().join("rf2.json");
    ok(&["-q", "train", "--learner", "RF", "--params", r#"{"n_trees": 10}"#, "--data", s(feats), "--out", s(&again)]);
    assert_eq!(std::fs::read(&model).unwrap(), std::fs::read(&again).unwrap());

    let eval: serde_json::Value =
        serde_json::from_str(&ok(&["-q", "evaluate", "--model", s(&model), "--data", s(feats), "--json"])).unwrap();
    assert!(eval.to_string().contains("sds"), "{eval}");

    let info = ok(&["-q", "inspect-model", s(&model)]);
    assert!(info.contains("RF"), "{info}");
    let mdi = ok(&["-q", "importance", "--model", s(&model)]);
    assert!(mdi.lines().count() > 1);
}

#[test]
fn replay_fixtures_succeeds() {
    let table = ok(&["-q", "experiment", "replay-fixtures"]);
    assert!(table.lines().count() >= 40);
}

#[test]
fn experiment_plan_writes_reports() {
    let (_, _, feats) = corpus();
    let dir = TempDir::new().unwrap();
    let plan = dir.path().join("plan.json");
    let body = serde_json::json!({
        "id": "exp2_groups",
        "train": feats,
        "pool": ["RF"],
        "learners": [{"kind": "RF", "n_trees": 5}],
        "output": "reports",
    });
    std::fs::write(&plan, body.to_string()).unwrap();
    let md = ok(&["-q", "experiment", "run", s(&plan)]);
    assert!(md.contains('|'), "{md}");
    let written: Vec<_> = std::fs::read_dir(dir.path().join("reports")).unwrap().collect();
    assert!(!written.is_empty());
}
