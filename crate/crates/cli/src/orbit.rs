//! Orbit recording: iterate a family and stream the points as CSV.

use std::path::Path;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::Args;
use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use dlorenz_core::maps::henon::mira_step;
use dlorenz_core::maps::{is_escaped, Map3, State3};

use crate::common::{
    basename, build_map, csv_writer, default_state, open_out, parse_triple, resolve_out, MapKind,
    MapParams,
};
use crate::manifest::{CommandConfig, RunManifest};

pub const ORBIT_SCHEMA: &str = "dlorenz.orbit.v1";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OrbitArgs {
    /// Family to iterate.
    #[arg(long, value_enum)]
    pub map: MapKind,

    #[command(flatten)]
    pub params: MapParams,

    /// Points to record after the transient.
    #[arg(long, default_value_t = 1000)]
    pub steps: usize,

    /// Steps discarded before recording.
    #[arg(long, default_value_t = 0)]
    pub transient: usize,

    /// Starting state x,y,z; defaults to a family-specific seed. The mira
    /// map reads the first two coordinates.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pub state: Option<State3>,

    /// Output CSV path, - for stdout.
    #[arg(long, default_value = "-")]
    pub out: String,

    /// Record the run description here for replay.
    #[arg(long)]
    pub manifest: Option<String>,
}

#[derive(Serialize)]
struct Row3 {
    step: usize,
    x: f64,
    y: f64,
    z: f64,
}

#[derive(Serialize)]
struct Row2 {
    step: usize,
    x: f64,
    y: f64,
}

pub fn run(args: &OrbitArgs) -> Result<ExitCode> {
    if args.manifest.is_some() && args.out == "-" {
        bail!("a manifest needs a file output; pass --out with a path");
    }
    let outputs = execute(args, None)?;
    if let Some(path) = &args.manifest {
        RunManifest::new(CommandConfig::Orbit(args.clone()), outputs).save(path)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn execute(args: &OrbitArgs, out_dir: Option<&Path>) -> Result<Vec<String>> {
    let built = match args.map {
        MapKind::Mira => None,
        kind => Some((build_map(kind, &args.params)?, match args.state {
            Some(s) => s,
            None => default_state(kind, &args.params)?,
        })),
    };
    let path = resolve_out(&args.out, out_dir)?;
    let out = open_out(&path.to_string_lossy())?;
    let mut wtr = csv_writer(out, ORBIT_SCHEMA)?;
    match built {
        None => {
            let s0 = args.state.unwrap_or_else(State3::zeros);
            let mut s = Vector2::new(s0.x, s0.y);
            for step in 0..args.transient + args.steps {
                if step >= args.transient {
                    wtr.serialize(Row2 {
                        step,
                        x: s.x,
                        y: s.y,
                    })?;
                }
                s = mira_step(s, args.params.m1, args.params.m2);
                if !s.x.is_finite() || !s.y.is_finite() || s.amax() > 1e6 {
                    eprintln!("orbit escaped at step {}", step + 1);
                    break;
                }
            }
        }
        Some((map, mut s)) => {
            for step in 0..args.transient + args.steps {
                if step >= args.transient {
                    wtr.serialize(Row3 {
                        step,
                        x: s.x,
                        y: s.y,
                        z: s.z,
                    })?;
                }
                s = map.step(s);
                if is_escaped(&s) {
                    eprintln!("orbit escaped at step {}", step + 1);
                    break;
                }
            }
        }
    }
    wtr.flush()?;
    Ok(if args.out == "-" {
        Vec::new()
    } else {
        vec![basename(&args.out)]
    })
}
