//! Scenario bundles, the end-to-end pipeline, experiments and the CLI.

pub mod bundle;
pub mod cli;
pub mod experiment;
pub mod pipeline;
pub mod stats;

pub use bundle::{discover_bundles, load_program, BundleError, Scenario, ScenarioSettings, SearchOverrides};
pub use experiment::{run_experiment, ExperimentError, ExperimentPlan, ExperimentReport, Probabilities, RunRow, SummaryRow};
pub use pipeline::{analyze, infer, prepare_seeds, read_models, reproduce, write_models, Models, RunReport, Seeds};
pub use stats::{majority_outcome, vargha_delaney_a12};
