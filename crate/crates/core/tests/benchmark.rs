//! Every bundled scenario loads, and its witness test throws exactly the
//! recorded crash.

use std::path::Path;

use modelseed::harness::{discover_bundles, Scenario};
use modelseed::sutlang::stacktrace::format_frames;
use modelseed::sutlang::{execute_test, parse_tests, DEFAULT_STEP_LIMIT, HARNESS_CLASS};

fn scenarios() -> Vec<Scenario> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../benchmark");
    discover_bundles(&root)
        .unwrap()
        .iter()
        .map(|d| Scenario::load(d).unwrap_or_else(|e| panic!("{}: {e}", d.display())))
        .collect()
}

#[test]
fn at_least_ten_scenarios() {
    assert!(scenarios().len() >= 10);
}

#[test]
fn witnesses_throw_the_recorded_crash() {
    for s in scenarios() {
        let Ok(text) = std::fs::read_to_string(s.dir.join("witness.sut-test")) else {
            assert_eq!(s.name, "not-started", "only the not-started scenario lacks a witness");
            continue;
        };
        let witness = &parse_tests("witness", &text).unwrap()[0];
        let thrown = execute_test(&s.program, witness, DEFAULT_STEP_LIMIT)
            .thrown
            .unwrap_or_else(|| panic!("{}: witness does not throw", s.name));
        let frames: Vec<_> = thrown.frames.iter().filter(|f| f.class != HARNESS_CLASS).cloned().collect();
        assert_eq!(
            format_frames(&thrown.exception, thrown.message.as_deref(), &frames),
            s.crash_text,
            "{}",
            s.name
        );
    }
}

#[test]
fn every_target_resolves() {
    for s in scenarios() {
        for level in 1..=s.crash.frames.len() {
            s.target(level).unwrap_or_else(|e| panic!("{} level {level}: {e}", s.name));
        }
    }
}
