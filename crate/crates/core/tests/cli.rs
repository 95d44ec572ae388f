use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn lab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rigidity-lab"))
        .arg("--out-dir")
        .arg(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bare = Command::new(env!("CARGO_BIN_EXE_rigidity-lab")).output().unwrap();
    assert_eq!(code(&bare), 1);
    assert_eq!(code(&lab(dir.path(), &["cf", "--bogus"])), 1);
    assert_eq!(code(&lab(dir.path(), &["--alpha", "pi", "cf"])), 1);
    assert_eq!(code(&lab(dir.path(), &["lemma", "--l", "2", "--eps", "1/4"])), 1);
    assert_eq!(code(&lab(dir.path(), &["exceptional", "--theta-grid", "sqrt2-1"])), 1);
    assert_eq!(code(&lab(dir.path(), &["lemma", "--l", "1"])), 1);
}

#[test]
fn help_and_version_exit_0() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&lab(dir.path(), &["--help"])), 0);
    assert_eq!(code(&lab(dir.path(), &["--version"])), 0);
}

#[test]
fn exhausted_quotients_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["--alpha", "cf:0,1", "cf", "--min-norm", "1000"]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn faithful_schedule_is_reported_without_blocks() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["exceptional", "--mode", "faithful", "--stages", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let seq: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("sequence.json")).unwrap()).unwrap();
    assert!(seq["blocks"].is_null());
    assert!(seq["unmaterialized"].is_string());
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# cf run\nalpha = sqrt2\nconvergents = 5\nnorms = 1,2\n").unwrap();
    let out1 = dir.path().join("a");
    let o = lab(&out1, &["cf", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cf: serde_json::Value = serde_json::from_str(&fs::read_to_string(out1.join("cf.json")).unwrap()).unwrap();
    assert_eq!(cf["convergents"].as_array().unwrap().len(), 5);
    assert_eq!(cf["convergents"][1]["a"], "2");

    let out2 = dir.path().join("b");
    let o = lab(&out2, &["--alpha", "golden", "cf", "--config", cfg.to_str().unwrap(), "--convergents", "7"]);
    assert_eq!(code(&o), 0);
    let cf: serde_json::Value = serde_json::from_str(&fs::read_to_string(out2.join("cf.json")).unwrap()).unwrap();
    assert_eq!(cf["convergents"].as_array().unwrap().len(), 7);
    assert_eq!(cf["convergents"][1]["a"], "1");

    fs::write(&cfg, "not a pair\n").unwrap();
    assert_eq!(code(&lab(&out2, &["cf", "--config", cfg.to_str().unwrap()])), 1);
}

#[test]
fn reports_land_in_the_output_directory() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(dir.path(), &["rigidity", "--count", "10"]);
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("rigidity_sequence.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("metadata.json")).unwrap()).unwrap();
    assert_eq!(meta["command"], "rigidity");
    let leftovers: Vec<_> = fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}
