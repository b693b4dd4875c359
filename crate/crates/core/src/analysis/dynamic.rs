use std::collections::{BTreeMap, BTreeSet};

use log::{info, warn};

use super::{CallSequence, Origin, SequenceMap};
use crate::sutlang::{execute_test, Program, TestCase, DEFAULT_STEP_LIMIT};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DynamicReport {
    pub sequences: SequenceMap,
    /// Tests that were executed.
    pub executed: Vec<String>,
    /// Tests whose run was unusable, with the exception that ended them.
    pub skipped: Vec<(String, String)>,
}

/// Runs every test that names one of `relevant` and turns each object's
/// full event log (internal calls included) into one sequence.
pub fn collect_dynamic_sequences(program: &Program, tests: &[TestCase], relevant: &BTreeSet<String>) -> DynamicReport {
    let mut report = DynamicReport::default();
    for test in tests {
        if test.referenced_classes().is_disjoint(relevant) {
            continue;
        }
        let result = execute_test(program, test, DEFAULT_STEP_LIMIT);
        if result.is_unusable() {
            let exception = result.thrown.map(|t| t.exception).unwrap_or_default();
            warn!("test {} skipped by dynamic analysis: {exception}", test.name);
            report.skipped.push((test.name.clone(), exception));
            continue;
        }
        report.executed.push(test.name.clone());
        let mut per_object: BTreeMap<u64, (String, Vec<String>)> = BTreeMap::new();
        for e in &result.call_events {
            per_object
                .entry(e.object)
                .or_insert_with(|| (e.class.to_string(), Vec::new()))
                .1
                .push(e.action());
        }
        for (class, actions) in per_object.into_values() {
            report.sequences.entry(class.clone()).or_default().insert(CallSequence {
                class,
                actions,
                origin: Origin::Dynamic,
            });
        }
    }
    info!(
        "dynamic analysis: {} tests executed, {} skipped",
        report.executed.len(),
        report.skipped.len()
    );
    report
}
