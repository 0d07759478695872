//! Run manifests: the resolved configuration of a completed command and
//! the files it wrote, enough to regenerate the outputs byte for byte.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::atlas::AtlasArgs;
use crate::delta::DeltaArgs;
use crate::orbit::OrbitArgs;
use crate::rescale::RescaleArgs;

pub const MANIFEST_SCHEMA: &str = "dlorenz.manifest.v1";

/// Configuration of one replayable command.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandConfig {
    Orbit(OrbitArgs),
    Atlas(AtlasArgs),
    RescaleVerify(RescaleArgs),
    DeltaScan(DeltaArgs),
}

/// On-disk record of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema: String,
    pub config: CommandConfig,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: CommandConfig, outputs: Vec<String>) -> RunManifest {
        RunManifest {
            schema: MANIFEST_SCHEMA.to_string(),
            config,
            outputs,
        }
    }

    pub fn save(&self, path: &str) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        fs::write(path, text + "\n").with_context(|| format!("writing {path}"))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RunManifest> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let manifest: RunManifest = serde_json::from_str(&text)
            .with_context(|| format!("parsing {}", path.display()))?;
        if manifest.schema != MANIFEST_SCHEMA {
            bail!(
                "unsupported manifest schema {:?}, expected {MANIFEST_SCHEMA:?}",
                manifest.schema
            );
        }
        Ok(manifest)
    }
}
