//! `catebench`: batch front end for cohort summaries, T-learner effects,
//! treatment-count surfaces, diagnostic trees, the dose regression and
//! synthetic cohorts.

mod commands;
mod config;
mod error;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{CommonArgs, RunConfig, SEED_ENV};
use error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "catebench",
    version,
    about = "T-learner CATE estimation with treatment counts"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Treated vs control group means.
    Summarize(CommonArgs),
    /// One-variable T-learner: τ̂ per covariate bin, ATE, ATT, ATU.
    Cate(CommonArgs),
    /// Two-variable T-learner: φ(x1, x2) surface and ATT₂.
    Phi(CommonArgs),
    /// Diagnostic regression tree over the seven resource features.
    Tree(CommonArgs),
    /// Least squares of τ̂ on (x1, x2).
    DoseReg(CommonArgs),
    /// Generate a synthetic cohort and its ground truth.
    Synth {
        #[command(flatten)]
        common: CommonArgs,
        /// Built-in scenario used when no --config is given:
        /// `default`, `standard-biased`, `dose-recovery` or `dose-bias`.
        #[arg(long, default_value = "default")]
        preset: String,
    },
}

impl Command {
    fn common(&self) -> &CommonArgs {
        match self {
            Command::Summarize(c)
            | Command::Cate(c)
            | Command::Phi(c)
            | Command::Tree(c)
            | Command::DoseReg(c)
            | Command::Synth { common: c, .. } => c,
        }
    }

    fn execute(&self, cfg: &RunConfig) -> Result<(), CliError> {
        match self {
            Command::Summarize(_) => commands::summarize(cfg),
            Command::Cate(_) => commands::cate(cfg),
            Command::Phi(_) => commands::phi(cfg),
            Command::Tree(_) => commands::tree(cfg),
            Command::DoseReg(_) => commands::dose_reg(cfg),
            Command::Synth { common, preset } => {
                commands::synth(cfg, common.config.as_deref(), preset)
            }
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let env_seed = std::env::var(SEED_ENV).ok();
    let common = cli.command.common();
    let mut settings = common.clone();
    // For `synth`, --config names the scenario file, not run settings.
    if matches!(cli.command, Command::Synth { .. }) {
        settings.config = None;
    }
    let cfg = RunConfig::resolve(&settings, env_seed.as_deref())?;
    match common.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| CliError::Output(std::io::Error::other(e)))?
            .install(|| cli.command.execute(&cfg)),
        None => cli.command.execute(&cfg),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("catebench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
