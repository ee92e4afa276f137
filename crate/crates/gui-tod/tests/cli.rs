//! End-to-end tests of the `gui-tod` binary: every subcommand, plus the
//! documented exit-code contract (0 ok, 2 validation failure, 1 internal).

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gui-tod"))
}

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn tmp_dir(tag: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(tag);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn parse_hierarchy_prints_items() {
    let output = bin()
        .args(["parse-hierarchy"])
        .arg(fixtures().join("calendar_screen.xml"))
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    assert!(text.contains("12 nodes, 6 actionable items"), "{text}");
    assert!(text.contains("Dentist appointment"));
}

#[test]
fn parse_hierarchy_emits_items_json() {
    let output = bin()
        .args(["parse-hierarchy"])
        .arg(fixtures().join("calendar_screen.xml"))
        .args(["--emit-items", "json"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let items: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(items.as_array().unwrap().len(), 6);
    assert_eq!(items[0]["text"], "Search");
}

#[test]
fn parse_hierarchy_pseudo_mode() {
    let output = bin()
        .args(["parse-hierarchy"])
        .arg(fixtures().join("hotel_booking_pseudo.json"))
        .args(["--pseudo", "--screen-size", "1080x1920", "--emit-items", "json"])
        .output()
        .unwrap();
    assert!(output.status.success());
    let items: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(items.as_array().unwrap().len(), 3);
    assert_eq!(items[1]["item_type"], "Unknown");
}

#[test]
fn parse_hierarchy_rejects_bad_bounds_with_exit_2() {
    let dir = tmp_dir("cli_bad_bounds");
    let path = dir.join("bad.xml");
    std::fs::write(&path, r#"<node class="X" bounds="[5,5][3,3]"/>"#).unwrap();
    let output = bin().arg("parse-hierarchy").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn validate_corpus_accepts_fixture() {
    let output = bin()
        .arg("validate-corpus")
        .arg(fixtures().join("corpus.jsonl"))
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).contains("ok: 6 episodes, 21 turns, 60 data points"));
}

#[test]
fn validate_corpus_flags_violations_with_exit_2() {
    let dir = tmp_dir("cli_bad_corpus");
    // Click index far out of range for a 6-item screen.
    let line = format!(
        r#"{{"episode_id": "bad", "turns": [{{"user": "u", "response": "r", "domain": "hotel", "apps": [], "trace": [{{"screen": {{"xml_path": "{}", "pseudo_layout_path": null, "screenshot_path": null, "size": [1080, 1920]}}, "action": "Click(item=99)"}}, {{"screen": {{"xml_path": "{}", "pseudo_layout_path": null, "screenshot_path": null, "size": [1080, 1920]}}, "action": "End()"}}]}}]}}"#,
        fixtures().join("calendar_screen.xml").display(),
        fixtures().join("calendar_screen.xml").display(),
    );
    let path = dir.join("bad.jsonl");
    std::fs::write(&path, line + "\n").unwrap();
    let output = bin().arg("validate-corpus").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let err = String::from_utf8_lossy(&output.stderr);
    assert!(err.contains("out of range"), "{err}");
}

#[test]
fn split_stats_train_eval_report_pipeline() {
    let dir = tmp_dir("cli_pipeline");
    let corpus = fixtures().join("corpus.jsonl");

    let output = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["--seed", "7", "split"])
        .arg(&corpus)
        .args(["--ratios", "8:1:1"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(stdout(&output).contains("4 / 1 / 1 episodes"));
    for name in ["train.jsonl", "dev.jsonl", "test.jsonl"] {
        assert!(dir.join(name).exists());
    }

    let output = bin().arg("stats").arg(dir.join("train.jsonl")).output().unwrap();
    assert!(output.status.success());
    let stats: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(stats["n_dialogues"], 4);

    // Tiny config keeps the training fast.
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, r#"{"epochs": 20, "feature_dim": 32}"#).unwrap();
    let output = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["--config"])
        .arg(&config_path)
        .arg("train")
        .arg(dir.join("train.jsonl"))
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(dir.join("params.json").exists());

    let output = bin()
        .args(["--out"])
        .arg(&dir)
        .arg("eval")
        .arg(dir.join("test.jsonl"))
        .args(["--policy", "reference", "--params"])
        .arg(dir.join("params.json"))
        .args(["--fit"])
        .arg(dir.join("train.jsonl"))
        .args(["--respond", "retrieval", "--predictions-out"])
        .arg(dir.join("predictions.jsonl"))
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let table = stdout(&output);
    assert!(table.contains("Action Type Acc."), "{table}");
    assert!(dir.join("report.json").exists());
    assert!(dir.join("predictions.jsonl").exists());

    // Predictions file lines parse as the documented schema.
    let predictions = std::fs::read_to_string(dir.join("predictions.jsonl")).unwrap();
    let first: serde_json::Value =
        serde_json::from_str(predictions.lines().next().unwrap()).unwrap();
    assert!(first["episode_id"].is_string());
    assert!(first["predicted"].is_string());

    let output = bin()
        .args(["report", "--from"])
        .arg(dir.join("report.json"))
        .args(["--format", "text"])
        .output()
        .unwrap();
    assert!(output.status.success());
    assert!(stdout(&output).contains("Turn CR"));
}

#[test]
fn split_holdout_domain_writes_pure_parts() {
    let dir = tmp_dir("cli_holdout");
    let output = bin()
        .args(["--out"])
        .arg(&dir)
        .arg("split")
        .arg(fixtures().join("corpus.jsonl"))
        .args(["--holdout-domain", "hotel"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert!(stdout(&output).contains("4 train / 2 test"));
    let test_text = std::fs::read_to_string(dir.join("test.jsonl")).unwrap();
    assert_eq!(test_text.lines().count(), 2);
    assert!(test_text.contains("hot-001") && test_text.contains("hot-002"));
    let train_text = std::fs::read_to_string(dir.join("train.jsonl")).unwrap();
    assert!(!train_text.contains("\"hotel\""));
}

#[test]
fn split_unknown_holdout_is_exit_2() {
    let dir = tmp_dir("cli_holdout_unknown");
    let output = bin()
        .args(["--out"])
        .arg(&dir)
        .arg("split")
        .arg(fixtures().join("corpus.jsonl"))
        .args(["--holdout-domain", "taxi"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("known"));
}

#[test]
fn baseline_subcommand_runs_all_kinds() {
    for kind in ["random", "fm", "mfm"] {
        let output = bin()
            .arg("baseline")
            .arg(fixtures().join("corpus.jsonl"))
            .args(["--kind", kind])
            .output()
            .unwrap();
        assert!(
            output.status.success(),
            "baseline {kind}: {}",
            String::from_utf8_lossy(&output.stderr)
        );
        assert!(stdout(&output).contains(&format!("{kind} @ baseline")));
    }
}

#[test]
fn import_then_validate_roundtrip() {
    let dir = tmp_dir("cli_import");
    let output = bin()
        .args(["--out"])
        .arg(&dir)
        .arg("import")
        .arg(fixtures().join("corpus.jsonl"))
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let output = bin().arg("validate-corpus").arg(dir.join("imported.jsonl")).output().unwrap();
    assert!(output.status.success());
}

#[test]
fn import_rejects_foreign_layout_with_exit_2() {
    let dir = tmp_dir("cli_import_foreign");
    let path = dir.join("foreign.jsonl");
    std::fs::write(&path, "{\"something\": \"else\"}\n").unwrap();
    let output = bin().args(["--out"]).arg(&dir).arg("import").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn generality_subcommand_produces_one_row_per_domain() {
    let dir = tmp_dir("cli_generality");
    let config_path = dir.join("config.json");
    std::fs::write(&config_path, r#"{"epochs": 5, "feature_dim": 32}"#).unwrap();
    let output = bin()
        .args(["--out"])
        .arg(&dir)
        .args(["--config"])
        .arg(&config_path)
        .arg("generality")
        .arg(fixtures().join("corpus.jsonl"))
        .args(["--by", "domain"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let table = stdout(&output);
    for held in ["holdout-calendar", "holdout-hotel", "holdout-weather"] {
        assert!(table.contains(held), "{table}");
    }
    assert!(dir.join("generality.json").exists());
}
