//! Command-line front end for the `nzbc` library.

pub mod commands;
pub mod config;
pub mod error;
pub mod identities;
pub mod output;

use clap::{Parser, ValueEnum};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Verb {
    /// Constants of the asymptotic profile at each listed ξ (JSON).
    Params,
    /// Leading-order solution on an (x, t) grid (CSV).
    Asymp,
    /// Reflection coefficient and unitarity defect on a k grid (CSV).
    Scatter,
    /// PDE run compared with the asymptotic modulus (JSON).
    Validate,
    /// Invariant suite with residuals and thresholds (JSON).
    Identities,
}

#[derive(Clone, Debug, Parser)]
#[command(name = "nzbc", version, about = "Long-time asymptotics of focusing NLS with nonzero boundary conditions")]
pub struct Args {
    pub verb: Verb,
    /// JSON run configuration.
    #[arg(long, conflicts_with = "preset")]
    pub config: Option<PathBuf>,
    /// Packaged configuration: box, fig-qmod, validate, background.
    #[arg(long)]
    pub preset: Option<String>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for grid evaluations.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Factor applied to every quadrature tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tol_scale: f64,
}

/// Run one verb and return its output and exit status.
pub fn run(args: &Args) -> Result<commands::Outcome, error::CliError> {
    let cfg = match (&args.config, &args.preset) {
        (Some(path), _) => config::RunConfig::from_path(path)?,
        (None, Some(name)) => config::RunConfig::preset(name)?,
        (None, None) => config::RunConfig::preset("box")?,
    };
    let spec = cfg.spec(args.tol_scale)?;
    let work = || match args.verb {
        Verb::Params => commands::cmd_params(&cfg, &spec),
        Verb::Asymp => commands::cmd_asymp(&cfg, &spec),
        Verb::Scatter => commands::cmd_scatter(&cfg),
        Verb::Validate => commands::cmd_validate(&cfg, &spec),
        Verb::Identities => commands::cmd_identities(&cfg, &spec),
    };
    match args.threads {
        Some(0) => Err(error::CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| error::CliError::Config(e.to_string()))?
            .install(work),
        None => work(),
    }
}
