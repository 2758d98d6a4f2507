use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use mwc_core::tolerance::{Tolerances, DEFAULT_MAX_PATHS};

use crate::commands::{self, Options, Outcome};
use crate::error::CliError;
use crate::scenario::Scenario;

#[derive(Debug, Parser)]
#[command(name = "mwc", version, about = "Cluster and consensus analysis of matrix-weighted networks")]
pub struct Cli {
    /// Directory for reports and trajectories.
    #[arg(long, global = true, default_value = ".")]
    pub output_dir: PathBuf,

    /// Overrides the scenario seed used for random initial states.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Path budget per cluster-membership query.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_PATHS)]
    pub max_paths: usize,

    /// Relative threshold for definiteness and rank decisions.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Scenario file.
    pub scenario: Option<PathBuf>,

    /// Bundled scenario: example1, cluster9_case1, cluster9_case2 or bearing_square.
    #[arg(long)]
    pub builtin: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Positive trees, merge trace, clusters and the nullspace test.
    Analyze(Source),
    /// Integrate the dynamics; writes a CSV trajectory and a JSON report.
    Simulate(Source),
    /// Laplacian eigenvalues and nullspace.
    Spectrum {
        #[command(flatten)]
        source: Source,
        /// Include the nullspace basis vectors.
        #[arg(long)]
        basis: bool,
    },
    /// Cross-check structural, spectral and simulated answers.
    #[command(group = clap::ArgGroup::new("input").required(true).args(["scenario", "builtin", "random"]))]
    Verify {
        /// Scenario file.
        scenario: Option<PathBuf>,
        /// Bundled scenario.
        #[arg(long)]
        builtin: Option<String>,
        /// Check random graphs instead: N D FIRST_SEED COUNT.
        #[arg(long, num_args = 4, value_names = ["N", "D", "FIRST_SEED", "COUNT"])]
        random: Option<Vec<u64>>,
    },
}

impl Source {
    pub fn load(&self) -> Result<Scenario, CliError> {
        match (&self.scenario, &self.builtin) {
            (Some(path), _) => Scenario::load(path),
            (None, Some(name)) => crate::builtin(name),
            (None, None) => Err(CliError::Validation {
                field: "scenario".into(),
                message: "give a scenario file or --builtin".into(),
            }),
        }
    }
}

impl Cli {
    pub fn options(&self) -> Result<Options, CliError> {
        let tolerances = match self.tol {
            Some(t) if t > 0.0 && t.is_finite() => Tolerances::with_rank_tol(t),
            Some(t) => {
                return Err(CliError::Validation {
                    field: "--tol".into(),
                    message: format!("{t} is not a positive number"),
                })
            }
            None => Tolerances::default(),
        };
        Ok(Options {
            output_dir: self.output_dir.clone(),
            seed: self.seed,
            max_paths: self.max_paths,
            tolerances,
        })
    }

    pub fn run(&self) -> Result<Outcome, CliError> {
        let opts = self.options()?;
        match &self.command {
            Command::Analyze(src) => commands::analyze(&src.load()?, &opts),
            Command::Simulate(src) => commands::simulate_scenario(&src.load()?, &opts),
            Command::Spectrum { source, basis } => commands::spectrum(&source.load()?, &opts, *basis),
            Command::Verify {
                scenario,
                builtin,
                random,
            } => match random {
                Some(r) => commands::verify_random(r[0] as usize, r[1] as usize, r[2], r[3] as usize, &opts),
                None => {
                    let source = Source {
                        scenario: scenario.clone(),
                        builtin: builtin.clone(),
                    };
                    commands::verify(&source.load()?, &opts)
                }
            },
        }
    }
}
