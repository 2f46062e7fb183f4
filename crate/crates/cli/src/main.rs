use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tfe_cli::commands::{self, Outcome};
use tfe_cli::ExperimentConfig;

/// Feedback-entropy workbench: estimate, synthesize, simulate and verify.
///
/// Exit status: 0 on a passing or feasible verdict, 1 on a failing or
/// infeasible one, 2 on errors.
#[derive(Debug, Parser)]
#[command(name = "tfe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct Common {
    /// Experiment config (TOML).
    config: PathBuf,
    /// Output directory; overrides $TFE_OUTPUT_DIR and the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Largest horizon of the estimate budget.
    #[arg(long)]
    tau_max: Option<usize>,
    /// Robustness radius.
    #[arg(long)]
    radius: Option<f64>,
    /// Required margin inside K.
    #[arg(long)]
    delta_k: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Upper-bound the entropy over the configured budget.
    Estimate {
        #[command(flatten)]
        common: Common,
    },
    /// Build a coder-controller from a witness tuple.
    Synthesize {
        #[command(flatten)]
        common: Common,
        /// Witness report written by `estimate`
        #[arg(long)]
        witness: PathBuf,
    },
    /// Run one closed-loop trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Coder-controller report written by `synthesize`
        #[arg(long)]
        cc: PathBuf,
        /// Initial state, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x0: Vec<f64>,
        /// Steps to simulate; defaults to three cycles
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Sweep initial states and certify (robust) weak invariance.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Coder-controller report written by `synthesize`
        #[arg(long)]
        cc: PathBuf,
        /// Invariance horizon; defaults to the cycle length.
        #[arg(long)]
        q: Option<usize>,
    },
    /// Refinement covers, Fekete rates and subadditivity for a witness.
    Diagnose {
        #[command(flatten)]
        common: Common,
        /// Witness report written by `estimate`
        #[arg(long)]
        witness: PathBuf,
    },
    /// Exhaustive search for the smallest feasible alphabet.
    Bruteforce {
        #[command(flatten)]
        common: Common,
    },
}

fn load(common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(d) = &common.output_dir {
        cfg.output_override = Some(d.clone());
    }
    if let Some(t) = common.tau_max {
        cfg.budget.tau_max = t;
        cfg.budget.taus = None;
    }
    if let Some(r) = common.radius {
        cfg.radius = r;
    }
    if let Some(d) = common.delta_k {
        cfg.delta_k = d;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    match cli.command {
        Command::Estimate { common } => commands::estimate(&load(&common)?),
        Command::Synthesize { common, witness } => commands::synthesize(&load(&common)?, &witness),
        Command::Simulate { common, cc, x0, horizon } => commands::simulate(&load(&common)?, &cc, &x0, horizon),
        Command::Verify { common, cc, q } => commands::verify(&load(&common)?, &cc, q),
        Command::Diagnose { common, witness } => commands::diagnose(&load(&common)?, &witness),
        Command::Bruteforce { common } => commands::bruteforce(&load(&common)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            if outcome.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<tfe_core::Error>() {
                Some(tfe_core::Error::Infeasible(_)) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}
