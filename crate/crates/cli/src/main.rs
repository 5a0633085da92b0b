use anyhow::Result;
use clap::{Parser, Subcommand};
use quench_cli::commands::Command;
use quench_cli::config::RunConfig;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "quench", version, about = "Quenching profiles, residuals, simulation and bootstrap monitoring")]
struct Cli {
    /// TOML configuration; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (overrides `threads`).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for synthetic noise (overrides `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Sub {
    /// Hermite orthogonality, eigen-relations and the spectral gap.
    BasisCheck,
    /// Exact table of the `e^{-2s}` block of the inner expansion.
    Sigma,
    /// Inner decay fit, outer ratio, far field and the outer exact solution.
    ResidualScan,
    /// Runs the polar solver to quenching and fits the rate.
    Simulate,
    /// Perturbation extraction and the bootstrap monitor.
    Renormalize,
    /// Level grids of the nonradial profile.
    Contours,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::BasisCheck => Command::BasisCheck,
            Sub::Sigma => Command::Sigma,
            Sub::ResidualScan => Command::ResidualScan,
            Sub::Simulate => Command::Simulate,
            Sub::Renormalize => Command::Renormalize,
            Sub::Contours => Command::Contours,
        }
    }
}

fn run(cli: Cli) -> Result<bool> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = o.display().to_string();
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if cfg.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global()?;
    }
    let command: Command = cli.command.into();
    let outcome = quench_cli::execute(command, &cfg, &PathBuf::from(&cfg.out))?;
    for c in &outcome.checks {
        println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let failed: Vec<&str> = outcome.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
    if !failed.is_empty() {
        eprintln!("{} check(s) failed: {}", failed.len(), failed.join("; "));
    }
    println!("artifacts in {}", PathBuf::from(&cfg.out).join(command.name()).display());
    Ok(failed.is_empty())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
