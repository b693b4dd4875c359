//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use super::bundle::{discover_bundles, load_program, Scenario};
use super::experiment::{run_experiment, ExperimentPlan, Probabilities};
use super::pipeline::{analyze, infer, read_models, reproduce, write_models};
use crate::analysis::format_sequences;
use crate::search::{SearchConfig, SeedingMode, Status};

/// Exit status of a successful reproduction.
pub const EXIT_REPRODUCED: i32 = 0;
/// Exit status of a usage or input error.
pub const EXIT_ERROR: i32 = 1;
/// Exit status of a search that ended without reproducing the crash.
pub const EXIT_NOT_REPRODUCED: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "modelseed", version, about = "Search-based crash reproduction with behavioral model seeding")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Dump static and dynamic call sequences of a bundle.
    Analyze {
        bundle: PathBuf,
        /// Write `sequences.tsv` here instead of printing.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Infer one transition system per class and write them as model files.
    InferModels {
        bundle: PathBuf,
        #[arg(long, default_value = "models")]
        out: PathBuf,
    },
    /// Search for a test reproducing the bundle's crash.
    Reproduce {
        bundle: PathBuf,
        #[arg(long, default_value = "model")]
        seeding: SeedingMode,
        #[command(flatten)]
        search: SearchFlags,
        #[arg(long)]
        pick_init: Option<f64>,
        #[arg(long)]
        pick_mut: Option<f64>,
        #[arg(long)]
        clone: Option<f64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Read models from here instead of inferring them.
        #[arg(long)]
        models: Option<PathBuf>,
        /// Frame level to reproduce up to; defaults to the scenario's.
        #[arg(long)]
        frame: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Repeat searches over scenarios, seeding modes and probabilities.
    Experiment {
        /// Bundles, or directories containing bundles.
        #[arg(required = true)]
        bundles: Vec<PathBuf>,
        /// Seeding modes; the first is the A12 baseline.
        #[arg(long, value_delimiter = ',', default_value = "none,test,model")]
        modes: Vec<SeedingMode>,
        #[arg(long, default_value_t = 30)]
        reps: usize,
        /// Seed of the first repetition; repetition i uses seed + i.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        search: SearchFlags,
        #[arg(long, value_delimiter = ',')]
        pick_init: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        pick_mut: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        clone: Vec<f64>,
        /// Search every frame of each trace.
        #[arg(long)]
        all_frames: bool,
        /// Worker threads; defaults to the number of cores.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Default, Args)]
pub struct SearchFlags {
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long)]
    pub population: Option<usize>,
}

impl SearchFlags {
    fn apply(&self, config: &mut SearchConfig) {
        if let Some(b) = self.budget {
            config.budget = b;
        }
        if let Some(p) = self.population {
            config.population = p;
            config.seeding.behaviors = p;
        }
    }
}

/// Defaults, then scenario overrides, then flags.
fn scenario_config(scenario: &Scenario, flags: &SearchFlags) -> SearchConfig {
    let mut config = SearchConfig::default();
    scenario.settings.search.apply(&mut config);
    flags.apply(&mut config);
    config
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).with_context(|| format!("creating {}", path.display()))
}

/// Runs a parsed command and returns the process exit status.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_ERROR
        }
    }
}

/// Parses `args` and runs them; clap errors map to exit status 1.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let _ = e.print();
            code
        }
    }
}

fn dispatch(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Analyze { bundle, out } => {
            let (program, tests) = load_program(&bundle)?;
            let dump = format_sequences(&analyze(&program, &tests));
            match out {
                Some(dir) => {
                    create_dir(&dir)?;
                    write(&dir.join("sequences.tsv"), &dump)?;
                }
                None => print!("{dump}"),
            }
            Ok(0)
        }
        Command::InferModels { bundle, out } => {
            let (program, tests) = load_program(&bundle)?;
            let models = infer(&program, &tests);
            write_models(&models, &out).with_context(|| format!("writing models to {}", out.display()))?;
            println!("{} models written to {}", models.len(), out.display());
            Ok(0)
        }
        Command::Reproduce {
            bundle,
            seeding,
            search,
            pick_init,
            pick_mut,
            clone,
            seed,
            models,
            frame,
            out,
        } => {
            let scenario = Scenario::load(&bundle)?;
            let mut config = scenario_config(&scenario, &search);
            config.mode = seeding;
            config.seed = seed;
            if let Some(p) = pick_init {
                config.seeding.pick_init = p;
            }
            if let Some(p) = pick_mut {
                config.seeding.pick_mut = p;
            }
            if let Some(p) = clone {
                config.seeding.clone = p;
            }
            config.validate()?;
            let models = match models {
                Some(dir) => Some(read_models(&dir)?),
                None => None,
            };
            let frame = frame.unwrap_or(scenario.crash.target_frame_level);
            let started = Instant::now();
            let report = reproduce(&scenario, frame, &config, models.as_ref())?;
            let seconds = started.elapsed().as_secs_f64();

            create_dir(&out)?;
            write(&out.join("outcome.json"), &report.outcome_json())?;
            write(&out.join("search.log"), &report.outcome.log_text())?;
            write(&out.join("pool.txt"), &report.pool_dump)?;
            write(&out.join("timing.json"), &format!("{:#}\n", json!({ "wall_seconds": seconds })))?;
            if let Some(t) = report.best_test() {
                write(&out.join("best.sut-test"), &t.to_string())?;
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            let o = &report.outcome;
            println!(
                "{}: {} (fitness {:.4}, {} evaluations)",
                scenario.name, o.status, o.fitness.total, o.evaluations
            );
            Ok(if o.status == Status::Reproduced {
                EXIT_REPRODUCED
            } else {
                EXIT_NOT_REPRODUCED
            })
        }
        Command::Experiment {
            bundles,
            modes,
            reps,
            seed,
            search,
            pick_init,
            pick_mut,
            clone,
            all_frames,
            jobs,
            out,
        } => {
            let mut scenarios = Vec::new();
            for b in &bundles {
                for dir in discover_bundles(b)? {
                    scenarios.push(Scenario::load(&dir)?);
                }
            }
            let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
            names.sort_unstable();
            if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
                bail!("scenario name {} appears twice", w[0]);
            }
            let defaults = SearchConfig::default().seeding;
            let or_default = |v: Vec<f64>, d: f64| if v.is_empty() { vec![d] } else { v };
            let mut probabilities = Vec::new();
            for &pi in &or_default(pick_init, defaults.pick_init) {
                for &pm in &or_default(pick_mut.clone(), defaults.pick_mut) {
                    for &cl in &or_default(clone.clone(), defaults.clone) {
                        probabilities.push(Probabilities {
                            pick_init: pi,
                            pick_mut: pm,
                            clone: cl,
                        });
                    }
                }
            }
            let plan = ExperimentPlan {
                configs: scenarios.iter().map(|s| scenario_config(s, &search)).collect(),
                modes,
                probabilities,
                repetitions: reps,
                seed_base: seed,
                all_frames,
            };
            let started = Instant::now();
            let report = match jobs {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build()
                    .context("building worker pool")?
                    .install(|| run_experiment(&scenarios, &plan))?,
                None => run_experiment(&scenarios, &plan)?,
            };
            let seconds = started.elapsed().as_secs_f64();
            create_dir(&out)?;
            write(&out.join("runs.csv"), &report.runs_csv())?;
            write(&out.join("summary.csv"), &report.summary_csv())?;
            write(&out.join("experiment.json"), &report.to_json())?;
            write(
                &out.join("timing.json"),
                &format!("{:#}\n", json!({ "wall_seconds": seconds, "runs": report.runs.len() })),
            )?;
            print!("{}", report.summary_csv());
            Ok(0)
        }
    }
}
