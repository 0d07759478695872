//! Replay: regenerate the outputs of a recorded run, single threaded, into
//! a fresh directory. Classification and assembly are deterministic, so the
//! regenerated files match the originals byte for byte.

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use crate::manifest::{CommandConfig, RunManifest};
use crate::{atlas, delta, orbit, rescale};

#[derive(Debug, Clone, Args)]
pub struct ReplayArgs {
    /// Manifest recorded by a previous run.
    #[arg(long)]
    pub manifest: String,

    /// Directory receiving the regenerated outputs.
    #[arg(long)]
    pub out_dir: String,
}

#[derive(Serialize)]
struct ReplayReport {
    manifest: String,
    out_dir: String,
    outputs: Vec<String>,
}

pub fn run(args: &ReplayArgs) -> Result<ExitCode> {
    let manifest = RunManifest::load(Path::new(&args.manifest))?;
    let dir = Path::new(&args.out_dir);
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let outputs = match manifest.config {
        CommandConfig::Orbit(cfg) => orbit::execute(&cfg, Some(dir))?,
        CommandConfig::Atlas(cfg) => {
            let cfg = atlas::AtlasArgs { threads: 1, ..cfg };
            atlas::execute(&cfg, Some(dir))?
        }
        CommandConfig::RescaleVerify(cfg) => {
            let cfg = rescale::RescaleArgs { threads: 1, ..cfg };
            rescale::execute(&cfg, Some(dir))?.0
        }
        CommandConfig::DeltaScan(cfg) => {
            let cfg = delta::DeltaArgs { threads: 1, ..cfg };
            delta::execute(&cfg, Some(dir))?
        }
    };
    let report = ReplayReport {
        manifest: args.manifest.clone(),
        out_dir: args.out_dir.clone(),
        outputs,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}
