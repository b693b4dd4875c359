//! Seeding material for the search: objects built from model paths or
//! carved from tests, and cloned tests.

mod concretize;
mod select;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use concretize::{
    concretize, random_literal, random_object, ConcretizeError, FragmentBuilder, INT_RANGE, MAX_OBJECT_DEPTH,
    STRING_POOL,
};
pub use select::{jaccard_distance, select_behaviors, select_from_candidates, AbstractObjectBehavior};

use crate::analysis::{carve_objects, clone_tests, TEST_SEEDING_UNAVAILABLE};
use crate::behmodel::{TransitionSystem, DEFAULT_MAX_PATH_LENGTH};
use crate::sutlang::{CrashReport, Fragment, Program, TestCase};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{name} must be within [0, 1], got {value}")]
    Probability { name: &'static str, value: f64 },
    #[error("{0} must be at least 1")]
    Count(&'static str),
}

pub(crate) fn check_probability(name: &'static str, value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::Probability { name, value })
    }
}

pub(crate) fn check_count(name: &'static str, value: usize) -> Result<(), ConfigError> {
    if value >= 1 {
        Ok(())
    } else {
        Err(ConfigError::Count(name))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedingConfig {
    /// Chance of taking an object from the pool when building an initial test.
    pub pick_init: f64,
    /// Chance of taking an object from the pool when a mutation needs one.
    pub pick_mut: f64,
    /// Chance of starting an initial individual from a cloned test.
    pub clone: f64,
    /// Behaviors selected per model.
    pub behaviors: usize,
    /// Concretizations per selected behavior.
    pub concretizations: usize,
    /// Random paths drawn per selected behavior before diversity selection.
    pub candidate_multiplier: usize,
    pub max_path_length: usize,
}

impl Default for SeedingConfig {
    fn default() -> Self {
        Self {
            pick_init: 0.5,
            pick_mut: 0.3,
            clone: 0.5,
            behaviors: 100,
            concretizations: 1,
            candidate_multiplier: 10,
            max_path_length: DEFAULT_MAX_PATH_LENGTH,
        }
    }
}

impl SeedingConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_probability("pick-init", self.pick_init)?;
        check_probability("pick-mut", self.pick_mut)?;
        check_probability("clone", self.clone)?;
        check_count("behaviors", self.behaviors)?;
        check_count("concretizations", self.concretizations)?;
        check_count("candidate multiplier", self.candidate_multiplier)?;
        check_count("max path length", self.max_path_length)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    ModelSeeded,
    Carved,
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Provenance::ModelSeeded => "model-seeded",
            Provenance::Carved => "carved",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry {
    pub fragment: Fragment,
    pub provenance: Provenance,
}

/// Ready-made objects per class. Read-only during a search.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ObjectPool {
    entries: BTreeMap<String, Vec<PoolEntry>>,
}

impl ObjectPool {
    pub fn insert(&mut self, fragment: Fragment, provenance: Provenance) {
        self.entries
            .entry(fragment.class.clone())
            .or_default()
            .push(PoolEntry { fragment, provenance });
    }

    pub fn classes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn entries(&self, class: &str) -> &[PoolEntry] {
        self.entries.get(class).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn has(&self, class: &str) -> bool {
        !self.entries(class).is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Uniformly chosen entry for `class`.
    pub fn draw<R: Rng + ?Sized>(&self, class: &str, rng: &mut R) -> Option<&PoolEntry> {
        self.entries(class).choose(rng)
    }

    /// Every entry as a commented test block.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (class, entries) in &self.entries {
            for (i, e) in entries.iter().enumerate() {
                let _ = writeln!(out, "// {class} {}", e.provenance);
                out.push_str(&e.fragment.as_test(&format!("pool_{class}_{i}")).to_string());
            }
        }
        out
    }
}

/// Internal classes plus every program class named in the crash trace.
pub fn pool_classes(program: &Program, crash: &CrashReport) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = program.internal_classes().map(|c| c.name.to_string()).collect();
    for c in crash.classes() {
        if program.class(c).is_some() {
            out.insert(c.to_string());
        }
    }
    out
}

/// Selects diverse behaviors from the model of every pool class and
/// concretizes each of them.
pub fn build_object_pool<R: Rng + ?Sized>(
    models: &BTreeMap<String, TransitionSystem>,
    crash: &CrashReport,
    program: &Program,
    config: &SeedingConfig,
    rng: &mut R,
) -> ObjectPool {
    let mut pool = ObjectPool::default();
    if models.is_empty() {
        warn!("no behavioral models available; object pool left empty");
        return pool;
    }
    for class in pool_classes(program, crash) {
        let Some(model) = models.get(&class) else { continue };
        let behaviors = select_behaviors(
            model,
            config.behaviors,
            config.max_path_length,
            config.candidate_multiplier,
            rng,
        );
        for b in &behaviors {
            for _ in 0..config.concretizations {
                match concretize(b, program, rng) {
                    Ok(f) => pool.insert(f, Provenance::ModelSeeded),
                    Err(e) => warn!("{e}"),
                }
            }
        }
    }
    info!("object pool: {} model-seeded objects", pool.len());
    pool
}

/// Seeding material gathered from existing tests.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TestSeeds {
    pub objects: ObjectPool,
    pub tests: Vec<TestCase>,
    pub warnings: Vec<String>,
}

/// Carves pool-class objects from `tests` and clones those touching a class
/// of the crash trace.
pub fn build_test_seeds(program: &Program, tests: &[TestCase], crash: &CrashReport) -> TestSeeds {
    let mut seeds = TestSeeds::default();
    let carved = carve_objects(program, tests, &pool_classes(program, crash));
    for f in carved.objects {
        seeds.objects.insert(f, Provenance::Carved);
    }
    let trace_classes: BTreeSet<String> = crash.classes().into_iter().map(str::to_string).collect();
    seeds.tests = clone_tests(program, tests, &trace_classes).tests;
    if seeds.objects.is_empty() && seeds.tests.is_empty() {
        warn!("{TEST_SEEDING_UNAVAILABLE}; continuing without seeds");
        seeds.warnings.push(TEST_SEEDING_UNAVAILABLE.to_string());
    }
    seeds
}
