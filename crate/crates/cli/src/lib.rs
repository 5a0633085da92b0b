//! Configuration, pipelines and artifact emission behind the `quench`
//! binary.

pub mod artifacts;
pub mod commands;
pub mod config;

use anyhow::Result;
use artifacts::{ArtifactManifest, ArtifactSink};
use commands::{Check, Command};
use config::RunConfig;
use std::path::Path;

#[derive(Debug)]
pub struct Outcome {
    pub checks: Vec<Check>,
    pub manifest: ArtifactManifest,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }
}

/// Runs one subcommand, writing into `root/<command>/`.
pub fn execute(command: Command, cfg: &RunConfig, root: &Path) -> Result<Outcome> {
    let mut sink = ArtifactSink::new(&root.join(command.name()))?;
    let checks = command.run(cfg, &mut sink)?;
    let manifest = sink.finish(command.name(), cfg)?;
    Ok(Outcome { checks, manifest })
}
