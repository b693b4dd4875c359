//! Guided genetic search for a test that reproduces a crash.

mod fitness;
mod ga;
mod operators;

use serde::{Deserialize, Serialize};

pub use fitness::{
    exception_distance, fitness, line_distance, stack_distance, CrashTarget, FitnessBreakdown, TargetError,
    WORST_FITNESS,
};
pub use ga::{run_search, GenerationStats, SearchOutcome, Status};
pub use operators::{make_well_formed, Operators, SearchContext, SeedingUsage, GENERATED_TEST_NAME, INIT_ATTEMPTS};

use crate::seeding::{check_count, check_probability, ConfigError, SeedingConfig};
use crate::sutlang::DEFAULT_STEP_LIMIT;

/// Where seeding material comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SeedingMode {
    None,
    Test,
    Model,
}

impl SeedingMode {
    pub const ALL: [SeedingMode; 3] = [SeedingMode::None, SeedingMode::Test, SeedingMode::Model];

    pub fn as_str(self) -> &'static str {
        match self {
            SeedingMode::None => "none",
            SeedingMode::Test => "test",
            SeedingMode::Model => "model",
        }
    }
}

impl std::fmt::Display for SeedingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SeedingMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(SeedingMode::None),
            "test" => Ok(SeedingMode::Test),
            "model" => Ok(SeedingMode::Model),
            other => Err(format!("unknown seeding mode {other:?} (expected none, test or model)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub population: usize,
    /// Maximum number of test executions.
    pub budget: u64,
    pub max_test_length: usize,
    pub tournament: usize,
    pub elitism: usize,
    pub crossover: f64,
    /// Per-statement mutation probability; `None` means 1/length.
    pub mutation_rate: Option<f64>,
    pub mode: SeedingMode,
    pub seeding: SeedingConfig,
    pub seed: u64,
    /// Interpreter step limit per test execution.
    pub step_limit: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            population: 100,
            budget: 62_328,
            max_test_length: 40,
            tournament: 2,
            elitism: 1,
            crossover: 0.75,
            mutation_rate: None,
            mode: SeedingMode::None,
            seeding: SeedingConfig::default(),
            seed: 0,
            step_limit: DEFAULT_STEP_LIMIT,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        check_count("population", self.population)?;
        check_count("budget", usize::try_from(self.budget).unwrap_or(usize::MAX))?;
        check_count("max test length", self.max_test_length)?;
        check_count("tournament size", self.tournament)?;
        check_count("step limit", usize::try_from(self.step_limit).unwrap_or(usize::MAX))?;
        check_probability("crossover", self.crossover)?;
        if let Some(rate) = self.mutation_rate {
            check_probability("mutation rate", rate)?;
        }
        self.seeding.validate()
    }
}
