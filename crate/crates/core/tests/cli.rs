//! Exit codes and artifacts of the command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bench(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmark").join(name)
}

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_modelseed"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn reproduce_exit_codes_and_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ok");
    let ok = run(&["reproduce", s(&bench("static-protocol")), "--budget", "5000", "--out", s(&out)], tmp.path());
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    for f in ["outcome.json", "search.log", "best.sut-test", "timing.json", "pool.txt"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let best = fs::read_to_string(out.join("best.sut-test")).unwrap();
    assert!(best.starts_with("test reproduction {"));
    assert!(fs::read_to_string(out.join("search.log")).unwrap().starts_with("gen\tbest\td_l\td_e\td_s\tevals\n"));

    let fail = run(
        &["reproduce", s(&bench("static-protocol")), "--seeding", "none", "--budget", "200", "--out", s(&tmp.path().join("no"))],
        tmp.path(),
    );
    assert_eq!(fail.status.code(), Some(2));

    let not_started = run(&["reproduce", s(&bench("not-started")), "--out", s(&tmp.path().join("ns"))], tmp.path());
    assert_eq!(not_started.status.code(), Some(2));
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("ns/outcome.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "not-started");
    assert_eq!(json["fitness"]["total"], 6.0);
}

#[test]
fn usage_errors_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    fs::create_dir_all(tmp.path().join("b/program")).unwrap();
    fs::write(tmp.path().join("b/program/a.sut"), "class A { def m() { } }\n").unwrap();
    let missing_crash = run(&["reproduce", s(&tmp.path().join("b"))], tmp.path());
    assert_eq!(missing_crash.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing_crash.stderr).contains("crash.txt"));
    let bad_flag = run(&["reproduce", s(&bench("null-dereference")), "--pick-init", "1.5"], tmp.path());
    assert_eq!(bad_flag.status.code(), Some(1));
    assert_eq!(run(&["frobnicate"], tmp.path()).status.code(), Some(1));
    let zero_reps = run(&["experiment", s(&bench("null-dereference")), "--reps", "0"], tmp.path());
    assert_eq!(zero_reps.status.code(), Some(1));
}

#[test]
fn test_seeding_without_tests_warns_and_proceeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(
        &["reproduce", s(&bench("buffer-capacity")), "--seeding", "test", "--out", s(&tmp.path().join("o"))],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("test seeding unavailable"));
}

#[test]
fn inferred_models_are_stable_and_reusable() {
    let tmp = tempfile::tempdir().unwrap();
    let bundle = bench("deep-stack");
    let dirs = [tmp.path().join("m1"), tmp.path().join("m2")];
    for d in &dirs {
        assert!(run(&["infer-models", s(&bundle), "--out", s(d)], tmp.path()).status.success());
    }
    let listing = |d: &Path| {
        let mut names: Vec<_> = fs::read_dir(d).unwrap().map(|e| e.unwrap().file_name()).collect();
        names.sort();
        names
    };
    assert_eq!(listing(&dirs[0]), listing(&dirs[1]));
    for name in listing(&dirs[0]) {
        assert_eq!(fs::read(dirs[0].join(&name)).unwrap(), fs::read(dirs[1].join(&name)).unwrap());
    }
    let stats = fs::read_to_string(dirs[0].join("stats.tsv")).unwrap();
    let models = listing(&dirs[0]).iter().filter(|n| n.to_string_lossy().ends_with(".model")).count();
    assert_eq!(stats.lines().count(), models + 1);

    // inferred in-process and read back from disk give the same search
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run(&["reproduce", s(&bundle), "--budget", "500", "--out", s(&a)], tmp.path());
    run(&["reproduce", s(&bundle), "--budget", "500", "--models", s(&dirs[0]), "--out", s(&b)], tmp.path());
    assert_eq!(fs::read(a.join("outcome.json")).unwrap(), fs::read(b.join("outcome.json")).unwrap());
}

#[test]
fn analyze_prints_sequences() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&["analyze", s(&bench("static-protocol"))], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("Session\tstatic\t<init>/0,open,login,select,begin,commit\n"), "{text}");
}

#[test]
fn experiment_writes_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    let status = run(
        &["experiment", s(&bench("null-dereference")), "--modes", "none,model", "--reps", "3", "--budget", "300", "--out", s(&out)],
        tmp.path(),
    )
    .status;
    assert!(status.success());
    let runs = fs::read_to_string(out.join("runs.csv")).unwrap();
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 6);
    assert_eq!(summary.lines().count(), 1 + 2);
    assert!(summary.lines().next().unwrap().contains("a12_fewer_evaluations_than_baseline"));
}
