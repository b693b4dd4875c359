//! The generational loop.

use std::fmt;

use log::{debug, info};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::operators::{Operators, SearchContext, SeedingUsage, INIT_ATTEMPTS};
use super::{fitness, FitnessBreakdown};
use crate::sutlang::{execute_test, TestCase};

/// How far the best test got.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    /// Not a single initial test could be built.
    NotStarted,
    LineNotReached,
    LineReached,
    /// Target line reached and the crash exception thrown there.
    ExceptionThrown,
    Reproduced,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::NotStarted => "not-started",
            Status::LineNotReached => "line-not-reached",
            Status::LineReached => "line-reached",
            Status::ExceptionThrown => "exception-thrown",
            Status::Reproduced => "reproduced",
        }
    }

    fn classify(f: &FitnessBreakdown) -> Self {
        if f.is_reproduction() {
            Status::Reproduced
        } else if f.exception == 0.0 {
            Status::ExceptionThrown
        } else if f.line == 0.0 {
            Status::LineReached
        } else {
            Status::LineNotReached
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GenerationStats {
    pub generation: usize,
    pub best: FitnessBreakdown,
    pub evaluations: u64,
}

impl fmt::Display for GenerationStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}",
            self.generation, self.best.total, self.best.line, self.best.exception, self.best.stack, self.evaluations
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub status: Status,
    pub best_test: Option<TestCase>,
    pub fitness: FitnessBreakdown,
    /// Stack trace thrown by the best test, if any.
    pub best_trace: Option<String>,
    pub evaluations: u64,
    pub generations: usize,
    pub usage: SeedingUsage,
    pub log: Vec<GenerationStats>,
}

impl SearchOutcome {
    /// Header plus one line per generation.
    pub fn log_text(&self) -> String {
        let mut out = String::from("gen\tbest\td_l\td_e\td_s\tevals\n");
        for g in &self.log {
            out.push_str(&g.to_string());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone)]
struct Individual {
    test: TestCase,
    fitness: FitnessBreakdown,
}

fn tournament<'p, R: Rng + ?Sized>(population: &'p [Individual], size: usize, rng: &mut R) -> &'p Individual {
    let mut best = &population[rng.gen_range(0..population.len())];
    for _ in 1..size {
        let other = &population[rng.gen_range(0..population.len())];
        if other.fitness.total < best.fitness.total {
            best = other;
        }
    }
    best
}

/// Evolves tests towards the crash until one reproduces it or the
/// evaluation budget is spent. Deterministic for a fixed config seed.
pub fn run_search(ctx: SearchContext<'_>) -> SearchOutcome {
    let config = ctx.config;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut ops = Operators::new(ctx);
    let mut evaluations = 0u64;
    let evaluate = |test: &TestCase, evaluations: &mut u64| {
        *evaluations += 1;
        fitness(&execute_test(ctx.program, test, config.step_limit), ctx.target)
    };

    let mut population: Vec<Individual> = Vec::with_capacity(config.population);
    let mut best: Option<Individual> = None;
    let mut log = Vec::new();
    let solved = |best: &Option<Individual>| best.as_ref().is_some_and(|b| b.fitness.is_reproduction());

    while population.len() < config.population && evaluations < config.budget && !solved(&best) {
        let Some(test) = (0..INIT_ATTEMPTS).find_map(|_| ops.initial_individual(&mut rng)) else {
            break;
        };
        let f = evaluate(&test, &mut evaluations);
        let ind = Individual { test, fitness: f };
        if best.as_ref().map_or(true, |b| f.total < b.fitness.total) {
            best = Some(ind.clone());
        }
        population.push(ind);
    }

    let Some(mut best) = best else {
        info!("no initial test could call the target");
        return SearchOutcome {
            status: Status::NotStarted,
            best_test: None,
            fitness: FitnessBreakdown::worst(),
            best_trace: None,
            evaluations,
            generations: 0,
            usage: ops.usage,
            log,
        };
    };
    log.push(GenerationStats {
        generation: 0,
        best: best.fitness,
        evaluations,
    });

    let mut generation = 0;
    while evaluations < config.budget && !best.fitness.is_reproduction() {
        generation += 1;
        population.sort_by(|a, b| a.fitness.total.total_cmp(&b.fitness.total));
        let mut next: Vec<Individual> = population[..config.elitism.min(population.len())].to_vec();
        'breed: while next.len() < config.population {
            let a = tournament(&population, config.tournament, &mut rng);
            let b = tournament(&population, config.tournament, &mut rng);
            let (c1, c2) = if rng.gen_bool(config.crossover) {
                ops.crossover(&a.test, &b.test, &mut rng)
            } else {
                (a.test.clone(), b.test.clone())
            };
            for child in [c1, c2] {
                if next.len() >= config.population || evaluations >= config.budget {
                    break 'breed;
                }
                let child = ops.mutate(&child, &mut rng);
                debug_assert!(ops.has_target_call(&child), "offspring lost the target call:\n{child}");
                let f = evaluate(&child, &mut evaluations);
                let ind = Individual { test: child, fitness: f };
                if f.total < best.fitness.total {
                    best = ind.clone();
                }
                next.push(ind);
                if f.is_reproduction() {
                    break 'breed;
                }
            }
        }
        population = next;
        let stats = GenerationStats {
            generation,
            best: best.fitness,
            evaluations,
        };
        debug!("{stats}");
        log.push(stats);
    }

    let replay = execute_test(ctx.program, &best.test, config.step_limit);
    SearchOutcome {
        status: Status::classify(&best.fitness),
        best_trace: replay.thrown.as_ref().map(|t| t.stack_trace()),
        best_test: Some(best.test),
        fitness: best.fitness,
        evaluations,
        generations: generation,
        usage: ops.usage,
        log,
    }
}
