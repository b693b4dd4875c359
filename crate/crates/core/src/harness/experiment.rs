//! Repeated runs over scenarios, seeding modes and probability settings.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use super::bundle::{BundleError, Scenario};
use super::pipeline::{infer, reproduce, Models, RunReport};
use super::stats::{majority_outcome, vargha_delaney_a12};
use crate::search::{SearchConfig, SeedingMode, Status};
use crate::seeding::ConfigError;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error("at least one seeding mode is required")]
    NoModes,
    #[error("at least one scenario is required")]
    NoScenarios,
    #[error(transparent)]
    Bundle(#[from] BundleError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

/// One combination of the seeding probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Probabilities {
    pub pick_init: f64,
    pub pick_mut: f64,
    pub clone: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentPlan {
    /// Per-scenario configuration before mode, probabilities and seed.
    pub configs: Vec<SearchConfig>,
    pub modes: Vec<SeedingMode>,
    pub probabilities: Vec<Probabilities>,
    pub repetitions: usize,
    pub seed_base: u64,
    /// Search every frame of each trace instead of the configured one.
    pub all_frames: bool,
}

/// One row of `runs.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub scenario: String,
    pub mode: SeedingMode,
    pub pick_init: f64,
    pub pick_mut: f64,
    pub clone: f64,
    pub frame: usize,
    pub repetition: usize,
    pub seed: u64,
    pub status: Status,
    pub total: f64,
    pub d_l: f64,
    pub d_e: f64,
    pub d_s: f64,
    pub evaluations: u64,
    pub generations: usize,
    pub pool_model_seeded: usize,
    pub pool_carved: usize,
    pub clones: usize,
    pub receivers_from_pool: usize,
    pub init_pool_draws: usize,
    pub mutation_pool_draws: usize,
    pub clones_used: usize,
}

impl RunRow {
    fn new(report: &RunReport, repetition: usize, p: Probabilities) -> Self {
        let o = &report.outcome;
        Self {
            scenario: report.scenario.clone(),
            mode: report.config.mode,
            pick_init: p.pick_init,
            pick_mut: p.pick_mut,
            clone: p.clone,
            frame: report.frame,
            repetition,
            seed: report.config.seed,
            status: o.status,
            total: o.fitness.total,
            d_l: o.fitness.line,
            d_e: o.fitness.exception,
            d_s: o.fitness.stack,
            evaluations: o.evaluations,
            generations: o.generations,
            pool_model_seeded: report.pool.model_seeded,
            pool_carved: report.pool.carved,
            clones: report.pool.clones,
            receivers_from_pool: o.usage.receivers_from_pool,
            init_pool_draws: o.usage.init_pool_draws,
            mutation_pool_draws: o.usage.mutation_pool_draws,
            clones_used: o.usage.clones_used,
        }
    }
}

/// One row of `summary.csv`: all repetitions of one cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub mode: SeedingMode,
    pub pick_init: f64,
    pub pick_mut: f64,
    pub clone: f64,
    pub frame: usize,
    pub runs: usize,
    pub reproduced: usize,
    pub reproduction_ratio: f64,
    pub majority_outcome: Status,
    pub mean_evaluations: f64,
    /// Probability that a run of this cell needs fewer evaluations than a
    /// run of the baseline mode (first mode given) at the same setting.
    pub a12_fewer_evaluations_than_baseline: Option<f64>,
    /// Highest frame whose majority outcome is reproduced, 0 if none.
    pub highest_frame_majority: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub modes: Vec<SeedingMode>,
    pub probabilities: Vec<Probabilities>,
    pub repetitions: usize,
    pub seed_base: u64,
    pub configs: BTreeMap<String, SearchConfig>,
    pub runs: Vec<RunRow>,
    pub summary: Vec<SummaryRow>,
}

struct Cell {
    scenario: usize,
    frame: usize,
    mode: SeedingMode,
    probabilities: Probabilities,
    repetition: usize,
}

pub fn run_experiment(scenarios: &[Scenario], plan: &ExperimentPlan) -> Result<ExperimentReport, ExperimentError> {
    if plan.repetitions == 0 {
        return Err(ExperimentError::NoRepetitions);
    }
    if plan.modes.is_empty() {
        return Err(ExperimentError::NoModes);
    }
    if scenarios.is_empty() {
        return Err(ExperimentError::NoScenarios);
    }
    assert_eq!(scenarios.len(), plan.configs.len(), "one configuration per scenario");
    let models: Vec<Option<Models>> = if plan.modes.contains(&SeedingMode::Model) {
        scenarios.par_iter().map(|s| Some(infer(&s.program, &s.tests))).collect()
    } else {
        scenarios.iter().map(|_| None).collect()
    };

    let mut cells = Vec::new();
    for (si, s) in scenarios.iter().enumerate() {
        let frames: Vec<usize> = if plan.all_frames {
            (1..=s.crash.frames.len()).collect()
        } else {
            vec![s.crash.target_frame_level]
        };
        for &frame in &frames {
            s.target(frame)?;
            for &mode in &plan.modes {
                for &probabilities in &plan.probabilities {
                    for repetition in 0..plan.repetitions {
                        cells.push(Cell {
                            scenario: si,
                            frame,
                            mode,
                            probabilities,
                            repetition,
                        });
                    }
                }
            }
        }
    }
    let cell_config = |c: &Cell| {
        let mut config = plan.configs[c.scenario].clone();
        config.mode = c.mode;
        config.seeding.pick_init = c.probabilities.pick_init;
        config.seeding.pick_mut = c.probabilities.pick_mut;
        config.seeding.clone = c.probabilities.clone;
        config.seed = plan.seed_base.wrapping_add(c.repetition as u64);
        config
    };
    for c in &cells {
        cell_config(c).validate()?;
    }
    let runs: Vec<RunRow> = cells
        .par_iter()
        .map(|c| {
            let s = &scenarios[c.scenario];
            let report = reproduce(s, c.frame, &cell_config(c), models[c.scenario].as_ref())
                .expect("targets were checked before the runs");
            RunRow::new(&report, c.repetition, c.probabilities)
        })
        .collect();

    Ok(ExperimentReport {
        modes: plan.modes.clone(),
        probabilities: plan.probabilities.clone(),
        repetitions: plan.repetitions,
        seed_base: plan.seed_base,
        configs: scenarios
            .iter()
            .zip(&plan.configs)
            .map(|(s, c)| (s.name.clone(), c.clone()))
            .collect(),
        summary: summarize(&runs, plan.modes[0]),
        runs,
    })
}

fn summarize(runs: &[RunRow], baseline: SeedingMode) -> Vec<SummaryRow> {
    // groups keep first-seen order
    let mut groups: Vec<Vec<&RunRow>> = Vec::new();
    for r in runs {
        match groups.iter_mut().find(|g| same_cell(g[0], r)) {
            Some(g) => g.push(r),
            None => groups.push(vec![r]),
        }
    }
    let evals = |g: &[&RunRow]| g.iter().map(|r| r.evaluations as f64).collect::<Vec<f64>>();
    let mut rows: Vec<SummaryRow> = groups
        .iter()
        .map(|g| {
            let first = g[0];
            let statuses: Vec<Status> = g.iter().map(|r| r.status).collect();
            let reproduced = statuses.iter().filter(|s| **s == Status::Reproduced).count();
            let base = groups.iter().find(|b| {
                let b0 = b[0];
                b0.mode == baseline
                    && b0.scenario == first.scenario
                    && b0.frame == first.frame
                    && same_probabilities(b0, first)
            });
            SummaryRow {
                scenario: first.scenario.clone(),
                mode: first.mode,
                pick_init: first.pick_init,
                pick_mut: first.pick_mut,
                clone: first.clone,
                frame: first.frame,
                runs: g.len(),
                reproduced,
                reproduction_ratio: reproduced as f64 / g.len() as f64,
                majority_outcome: majority_outcome(&statuses).expect("non-empty group"),
                mean_evaluations: evals(g).iter().sum::<f64>() / g.len() as f64,
                a12_fewer_evaluations_than_baseline: base.and_then(|b| vargha_delaney_a12(&evals(g), &evals(b))),
                highest_frame_majority: 0,
            }
        })
        .collect();
    let highest: Vec<usize> = rows
        .iter()
        .map(|r| {
            rows.iter()
                .filter(|o| {
                    o.scenario == r.scenario
                        && o.mode == r.mode
                        && o.pick_init == r.pick_init
                        && o.pick_mut == r.pick_mut
                        && o.clone == r.clone
                        && o.majority_outcome == Status::Reproduced
                })
                .map(|o| o.frame)
                .max()
                .unwrap_or(0)
        })
        .collect();
    for (r, h) in rows.iter_mut().zip(highest) {
        r.highest_frame_majority = h;
    }
    rows
}

fn same_probabilities(a: &RunRow, b: &RunRow) -> bool {
    a.pick_init == b.pick_init && a.pick_mut == b.pick_mut && a.clone == b.clone
}

fn same_cell(a: &RunRow, b: &RunRow) -> bool {
    a.scenario == b.scenario && a.mode == b.mode && a.frame == b.frame && same_probabilities(a, b)
}

fn to_csv<T: Serialize>(rows: &[T]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("rows serialize");
    }
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8")
}

impl ExperimentReport {
    pub fn runs_csv(&self) -> String {
        to_csv(&self.runs)
    }

    pub fn summary_csv(&self) -> String {
        to_csv(&self.summary)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use std::path::Path;

    fn scenario(dir: &Path) -> Scenario {
        let write = |rel: &str, text: &str| {
            let p = dir.join(rel);
            fs::create_dir_all(p.parent().unwrap()).unwrap();
            fs::write(p, text).unwrap();
        };
        write(
            "program/c.sut",
            "class Counter {\n  field n: int;\n  def inc() {\n    this.n = this.n + 1;\n  }\n  def check() {\n    if (this.n > 1) {\n      throw Overflow();\n    }\n  }\n}\n",
        );
        write("tests/c.sut-test", "test t { c = new Counter(); c.inc(); c.check(); }\n");
        write("crash.txt", "Overflow\n\tat Counter.check(c.sut:8)\n");
        Scenario::load(dir).unwrap()
    }

    fn plan(modes: Vec<SeedingMode>, repetitions: usize) -> ExperimentPlan {
        ExperimentPlan {
            configs: vec![SearchConfig {
                budget: 500,
                population: 10,
                ..Default::default()
            }],
            modes,
            probabilities: vec![Probabilities {
                pick_init: 0.5,
                pick_mut: 0.3,
                clone: 0.5,
            }],
            repetitions,
            seed_base: 40,
            all_frames: false,
        }
    }

    #[test]
    fn row_counts_and_seeds() {
        let tmp = tempfile::tempdir().unwrap();
        let s = scenario(tmp.path());
        let report = run_experiment(&[s], &plan(vec![SeedingMode::None, SeedingMode::Model], 3)).unwrap();
        assert_eq!(report.runs.len(), 6);
        assert_eq!(report.summary.len(), 2);
        let seeds: Vec<u64> = report.runs.iter().map(|r| r.seed).collect();
        assert_eq!(seeds, vec![40, 41, 42, 40, 41, 42]);
        assert_eq!(report.summary[0].a12_fewer_evaluations_than_baseline, Some(0.5));
        for row in &report.summary {
            assert!((0.0..=1.0).contains(&row.reproduction_ratio));
        }
        assert!(report.runs_csv().starts_with("scenario,mode,pick_init,pick_mut,clone,frame,repetition,seed,status,"));
    }

    #[test]
    fn zero_repetitions_is_an_error() {
        let tmp = tempfile::tempdir().unwrap();
        let s = scenario(tmp.path());
        assert!(matches!(
            run_experiment(&[s], &plan(vec![SeedingMode::None], 0)),
            Err(ExperimentError::NoRepetitions)
        ));
    }

    #[test]
    fn highest_frame_and_majority() {
        let row = |frame: usize, status: Status| RunRow {
            scenario: "s".into(),
            mode: SeedingMode::None,
            pick_init: 0.5,
            pick_mut: 0.3,
            clone: 0.5,
            frame,
            repetition: 0,
            seed: 0,
            status,
            total: 0.0,
            d_l: 0.0,
            d_e: 0.0,
            d_s: 0.0,
            evaluations: 10,
            generations: 0,
            pool_model_seeded: 0,
            pool_carved: 0,
            clones: 0,
            receivers_from_pool: 0,
            init_pool_draws: 0,
            mutation_pool_draws: 0,
            clones_used: 0,
        };
        let runs = vec![
            row(1, Status::Reproduced),
            row(1, Status::Reproduced),
            row(1, Status::LineReached),
            row(2, Status::Reproduced),
            row(2, Status::LineReached),
            row(2, Status::LineReached),
        ];
        let summary = summarize(&runs, SeedingMode::None);
        assert_eq!(summary[0].majority_outcome, Status::Reproduced);
        assert_eq!(summary[1].majority_outcome, Status::LineReached);
        assert!(summary.iter().all(|r| r.highest_frame_majority == 1));
    }
}
