//! Analysis, model inference, seeding and search for one scenario.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::{info, warn};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::bundle::{BundleError, Scenario, SearchOverrides};
use crate::analysis::{
    collect_dynamic_sequences, collect_static_sequences, merge_sequences, SequenceMap, TEST_SEEDING_UNAVAILABLE,
};
use crate::behmodel::{infer_models, ModelError, TransitionSystem};
use crate::search::{run_search, CrashTarget, FitnessBreakdown, SearchConfig, SearchContext, SearchOutcome, SeedingMode, SeedingUsage, Status};
use crate::seeding::{build_object_pool, build_test_seeds, ObjectPool, Provenance};
use crate::sutlang::{Program, TestCase};

pub type Models = BTreeMap<String, TransitionSystem>;

pub const MODEL_EXTENSION: &str = "model";

/// Static sequences of every class plus dynamic sequences from the tests.
pub fn analyze(program: &Program, tests: &[TestCase]) -> SequenceMap {
    let static_report = collect_static_sequences(program);
    for m in &static_report.truncated {
        warn!("path enumeration truncated in {m}");
    }
    let mut sequences = static_report.sequences;
    let classes = program.class_names().map(str::to_string).collect();
    let dynamic = collect_dynamic_sequences(program, tests, &classes);
    merge_sequences(&mut sequences, dynamic.sequences);
    sequences
}

pub fn infer(program: &Program, tests: &[TestCase]) -> Models {
    infer_models(&analyze(program, tests))
}

/// Writes one `<Class>.model` file per model plus `stats.tsv`.
pub fn write_models(models: &Models, dir: &Path) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut stats = String::from("class\tstates\ttransitions\tbfs_height\n");
    for (class, model) in models {
        fs::write(dir.join(format!("{class}.{MODEL_EXTENSION}")), model.to_text())?;
        let s = model.stats();
        stats.push_str(&format!("{class}\t{}\t{}\t{}\n", s.states, s.transitions, s.bfs_height));
    }
    fs::write(dir.join("stats.tsv"), stats)
}

#[derive(Debug, thiserror::Error)]
pub enum ModelDirError {
    #[error("{path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Parse {
        path: std::path::PathBuf,
        #[source]
        source: ModelError,
    },
}

pub fn read_models(dir: &Path) -> Result<Models, ModelDirError> {
    let io = |source| ModelDirError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(io)?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == MODEL_EXTENSION))
        .collect();
    paths.sort();
    let mut models = Models::new();
    for path in paths {
        let text = fs::read_to_string(&path).map_err(|source| ModelDirError::Io {
            path: path.clone(),
            source,
        })?;
        let model = TransitionSystem::from_text(&text).map_err(|source| ModelDirError::Parse {
            path: path.clone(),
            source,
        })?;
        models.insert(model.class.clone(), model);
    }
    Ok(models)
}

impl SearchOverrides {
    pub fn apply(&self, config: &mut SearchConfig) {
        if let Some(p) = self.population {
            config.population = p;
            config.seeding.behaviors = p;
        }
        if let Some(b) = self.budget {
            config.budget = b;
        }
        if let Some(l) = self.max_test_length {
            config.max_test_length = l;
        }
        if let Some(s) = self.step_limit {
            config.step_limit = s;
        }
    }
}

/// Seeding material for one run.
#[derive(Debug, Clone, Default)]
pub struct Seeds {
    pub pool: ObjectPool,
    pub clones: Vec<TestCase>,
    pub warnings: Vec<String>,
}

/// Builds the pool and clones `config.mode` calls for. Model seeding infers
/// models unless `models` is given.
pub fn prepare_seeds(scenario: &Scenario, target: &CrashTarget, config: &SearchConfig, models: Option<&Models>) -> Seeds {
    match config.mode {
        SeedingMode::None => Seeds::default(),
        SeedingMode::Test => {
            let seeds = build_test_seeds(&scenario.program, &scenario.tests, &target.crash);
            Seeds {
                pool: seeds.objects,
                clones: seeds.tests,
                warnings: seeds.warnings,
            }
        }
        SeedingMode::Model => {
            let inferred;
            let models = match models {
                Some(m) => m,
                None => {
                    inferred = infer(&scenario.program, &scenario.tests);
                    &inferred
                }
            };
            // separate stream so pool construction does not shift the search
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(1);
            let pool = build_object_pool(models, &target.crash, &scenario.program, &config.seeding, &mut rng);
            let mut warnings = Vec::new();
            if pool.is_empty() {
                warnings.push("object pool is empty".to_string());
            }
            Seeds {
                pool,
                clones: Vec::new(),
                warnings,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct PoolSummary {
    pub model_seeded: usize,
    pub carved: usize,
    pub clones: usize,
}

impl PoolSummary {
    fn of(seeds: &Seeds) -> Self {
        let mut s = PoolSummary {
            clones: seeds.clones.len(),
            ..Default::default()
        };
        for class in seeds.pool.classes() {
            for e in seeds.pool.entries(class) {
                match e.provenance {
                    Provenance::ModelSeeded => s.model_seeded += 1,
                    Provenance::Carved => s.carved += 1,
                }
            }
        }
        s
    }
}

/// Everything one reproduction run produced.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub scenario: String,
    pub frame: usize,
    pub config: SearchConfig,
    pub outcome: SearchOutcome,
    pub pool: PoolSummary,
    pub pool_dump: String,
    pub warnings: Vec<String>,
}

/// The outcome JSON document.
#[derive(Debug, Serialize)]
pub struct OutcomeRecord<'a> {
    pub scenario: &'a str,
    pub target_frame_level: usize,
    pub status: Status,
    pub fitness: FitnessBreakdown,
    pub evaluations: u64,
    pub generations: usize,
    pub best_test: Option<String>,
    pub best_trace: Option<&'a str>,
    pub usage: SeedingUsage,
    pub pool: PoolSummary,
    pub warnings: &'a [String],
    pub config: &'a SearchConfig,
}

impl RunReport {
    pub fn record(&self) -> OutcomeRecord<'_> {
        OutcomeRecord {
            scenario: &self.scenario,
            target_frame_level: self.frame,
            status: self.outcome.status,
            fitness: self.outcome.fitness,
            evaluations: self.outcome.evaluations,
            generations: self.outcome.generations,
            best_test: self.best_test().map(|t| t.to_string()),
            best_trace: self.outcome.best_trace.as_deref(),
            usage: self.outcome.usage,
            pool: self.pool,
            warnings: &self.warnings,
            config: &self.config,
        }
    }

    pub fn outcome_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.record()).expect("outcome serializes");
        s.push('\n');
        s
    }

    /// The best test, renamed for emission.
    pub fn best_test(&self) -> Option<TestCase> {
        self.outcome.best_test.clone().map(|mut t| {
            t.name = "reproduction".to_string();
            t
        })
    }
}

/// Runs seeding and search against frame `frame` of the scenario's crash.
pub fn reproduce(
    scenario: &Scenario,
    frame: usize,
    config: &SearchConfig,
    models: Option<&Models>,
) -> Result<RunReport, BundleError> {
    let target = scenario.target(frame)?;
    let seeds = prepare_seeds(scenario, &target, config, models);
    for w in &seeds.warnings {
        if w == TEST_SEEDING_UNAVAILABLE {
            info!("{}: {w}; proceeding unseeded", scenario.name);
        }
    }
    let outcome = run_search(SearchContext {
        program: &scenario.program,
        target: &target,
        pool: &seeds.pool,
        clones: &seeds.clones,
        config,
    });
    Ok(RunReport {
        scenario: scenario.name.clone(),
        frame,
        config: config.clone(),
        pool: PoolSummary::of(&seeds),
        pool_dump: seeds.pool.dump(),
        warnings: seeds.warnings,
        outcome,
    })
}
