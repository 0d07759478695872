//! Lyapunov spectrum of a single orbit, with optional attractor
//! classification, printed as JSON.

use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use dlorenz_core::lyapunov::{classify_attractor, AttractorClass, ClassifyConfig};
use dlorenz_core::maps::State3;

use crate::common::{build_map, default_state, parse_triple, MapKind, MapParams};

#[derive(Debug, Clone, Args)]
pub struct LyapunovArgs {
    /// Family to iterate; must be three-dimensional.
    #[arg(long, value_enum)]
    pub map: MapKind,

    #[command(flatten)]
    pub params: MapParams,

    /// Steps discarded before accumulating.
    #[arg(long, default_value_t = 10_000)]
    pub transient: usize,

    /// Accumulation steps.
    #[arg(long, default_value_t = 1_000_000)]
    pub iterations: usize,

    /// Starting state x,y,z; defaults to a family-specific seed.
    #[arg(long, value_parser = parse_triple, allow_hyphen_values = true)]
    pub state: Option<State3>,

    /// Also classify the attractor and report its label.
    #[arg(long)]
    pub classify: bool,
}

#[derive(Serialize)]
struct SpectrumReport {
    map: MapKind,
    state: [f64; 3],
    exponents: [f64; 3],
    sum: f64,
    iterations_used: usize,
    transient_discarded: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<ClassReport>,
}

#[derive(Serialize)]
struct ClassReport {
    label: &'static str,
    period: Option<usize>,
    orbit_bound: f64,
}

impl From<AttractorClass> for ClassReport {
    fn from(class: AttractorClass) -> ClassReport {
        ClassReport {
            label: class.kind.label(),
            period: class.kind.period(),
            orbit_bound: class.orbit_bound,
        }
    }
}

pub fn run(args: &LyapunovArgs) -> Result<ExitCode> {
    if args.map == MapKind::Mira {
        bail!("the spectrum needs a three-dimensional family; mira is a plane map");
    }
    let map = build_map(args.map, &args.params)?;
    let s0 = match args.state {
        Some(s) => s,
        None => default_state(args.map, &args.params)?,
    };
    let spectrum = dlorenz_core::lyapunov::lyapunov_spectrum(&map, s0, args.transient, args.iterations)
        .context("accumulating the spectrum")?;
    let classification = if args.classify {
        let config = ClassifyConfig {
            transient: args.transient,
            iterations: args.iterations,
            ..ClassifyConfig::default()
        };
        Some(classify_attractor(&map, s0, &config).into())
    } else {
        None
    };
    let report = SpectrumReport {
        map: args.map,
        state: [s0.x, s0.y, s0.z],
        exponents: spectrum.exponents,
        sum: spectrum.sum(),
        iterations_used: spectrum.iterations_used,
        transient_discarded: spectrum.transient_discarded,
        classification,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}
