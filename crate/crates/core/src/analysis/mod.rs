//! Call-sequence collection for model inference, and test carving/cloning
//! for test seeding.

mod carve;
mod dynamic;
mod static_paths;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use carve::{carve_objects, clone_tests, CarveReport, CloneReport};
pub use dynamic::{collect_dynamic_sequences, DynamicReport};
pub use static_paths::{collect_static_sequences, StaticReport, MAX_PATHS_PER_METHOD};

/// Warning emitted when no existing test can feed test seeding.
pub const TEST_SEEDING_UNAVAILABLE: &str = "test seeding unavailable";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Static,
    Dynamic,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Static => "static",
            Origin::Dynamic => "dynamic",
        })
    }
}

/// Methods observed on one object, in call order. Constructors appear as
/// `<init>/arity`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CallSequence {
    pub class: String,
    pub actions: Vec<String>,
    pub origin: Origin,
}

pub type SequenceMap = BTreeMap<String, BTreeSet<CallSequence>>;

/// Adds every sequence of `more` into `into`.
pub fn merge_sequences(into: &mut SequenceMap, more: SequenceMap) {
    for (class, seqs) in more {
        into.entry(class).or_default().extend(seqs);
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum DumpError {
    #[error("line {line}: expected `class<TAB>origin<TAB>actions`")]
    Malformed { line: usize },
    #[error("line {line}: unknown origin {origin:?}")]
    Origin { line: usize, origin: String },
}

/// One line per sequence: `class<TAB>origin<TAB>m1,m2,...`.
pub fn format_sequences(map: &SequenceMap) -> String {
    let mut out = String::new();
    for seqs in map.values() {
        for s in seqs {
            out.push_str(&format!("{}\t{}\t{}\n", s.class, s.origin, s.actions.join(",")));
        }
    }
    out
}

pub fn parse_sequences(text: &str) -> Result<SequenceMap, DumpError> {
    let mut map = SequenceMap::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let mut parts = line.split('\t');
        let (Some(class), Some(origin), Some(actions), None) = (parts.next(), parts.next(), parts.next(), parts.next())
        else {
            return Err(DumpError::Malformed { line: i + 1 });
        };
        let origin = match origin {
            "static" => Origin::Static,
            "dynamic" => Origin::Dynamic,
            other => {
                return Err(DumpError::Origin {
                    line: i + 1,
                    origin: other.to_string(),
                })
            }
        };
        if class.is_empty() || actions.is_empty() {
            return Err(DumpError::Malformed { line: i + 1 });
        }
        map.entry(class.to_string()).or_default().insert(CallSequence {
            class: class.to_string(),
            actions: actions.split(',').map(str::to_string).collect(),
            origin,
        });
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dump_round_trip() {
        let mut map = SequenceMap::new();
        for (class, actions, origin) in [
            ("A", vec!["<init>/0", "m"], Origin::Static),
            ("A", vec!["m"], Origin::Dynamic),
            ("B", vec!["x", "y", "x"], Origin::Dynamic),
        ] {
            map.entry(class.to_string()).or_default().insert(CallSequence {
                class: class.into(),
                actions: actions.into_iter().map(String::from).collect(),
                origin,
            });
        }
        let text = format_sequences(&map);
        assert_eq!(text.lines().next(), Some("A\tstatic\t<init>/0,m"));
        assert_eq!(parse_sequences(&text).unwrap(), map);
    }

    #[test]
    fn dump_rejects_bad_lines() {
        assert_eq!(parse_sequences("A\tstatic"), Err(DumpError::Malformed { line: 1 }));
        assert!(matches!(parse_sequences("A\tweird\tm"), Err(DumpError::Origin { .. })));
    }
}
