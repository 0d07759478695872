//! Parameter atlas: classify the forward family over a parameter box and
//! summarize the connected components of a chosen class.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use dlorenz_core::atlas::{region_extract, sweep_grid, SweepAxis, SweepConfig};
use dlorenz_core::lyapunov::ClassifyConfig;

use crate::common::{
    basename, csv_writer, open_out, parse_axis, resolve_out, with_threads, SeedArg,
};
use crate::manifest::{CommandConfig, RunManifest};

pub const ATLAS_SCHEMA: &str = "dlorenz.atlas.v1";

/// Parameter point of the degenerate fixed point with multipliers
/// {+1, -1, -1}, the organizing corner of the candidate domain.
const DEGENERATE_CORNER: [f64; 3] = [-0.25, 1.0, 1.0];

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AtlasArgs {
    /// First-parameter axis min,max,count.
    #[arg(long, value_parser = parse_axis, default_value = "-0.5,0.5,50", allow_hyphen_values = true)]
    pub m1: SweepAxis,

    /// Second-parameter axis min,max,count.
    #[arg(long, value_parser = parse_axis, default_value = "0.5,1.1,50", allow_hyphen_values = true)]
    pub m2: SweepAxis,

    /// Jacobian axis min,max,count.
    #[arg(long, value_parser = parse_axis, default_value = "0.5,1.0,50", allow_hyphen_values = true)]
    pub b: SweepAxis,

    /// Initial-point policy.
    #[arg(long, value_enum, default_value_t = SeedArg::NearFixedPoint)]
    pub seed: SeedArg,

    /// Steps discarded before accumulating.
    #[arg(long, default_value_t = 10_000)]
    pub transient: usize,

    /// Accumulation steps per cell.
    #[arg(long, default_value_t = 200_000)]
    pub iterations: usize,

    /// Class whose connected components are summarized.
    #[arg(long, default_value = "discrete-lorenz-candidate")]
    pub region_label: String,

    /// Output CSV path.
    #[arg(long, default_value = "atlas.csv")]
    pub out: String,

    /// Record the run description here for replay.
    #[arg(long)]
    pub manifest: Option<String>,

    /// Worker threads; 0 reads DLORENZ_THREADS, then the rayon default.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Serialize)]
struct AtlasRow {
    m1: f64,
    m2: f64,
    b: f64,
    class: &'static str,
    period: Option<usize>,
    lyap1: Option<f64>,
    lyap2: Option<f64>,
    lyap3: Option<f64>,
    orbit_bound: f64,
}

#[derive(Serialize)]
struct AtlasSummary {
    cells: usize,
    counts: BTreeMap<&'static str, usize>,
    region_label: String,
    regions: Vec<RegionSummary>,
}

#[derive(Serialize)]
struct RegionSummary {
    cells: usize,
    bbox_min: [f64; 3],
    bbox_max: [f64; 3],
    distance_to_degenerate_corner: [f64; 3],
}

pub fn run(args: &AtlasArgs) -> Result<ExitCode> {
    let outputs = execute(args, None)?;
    if let Some(path) = &args.manifest {
        RunManifest::new(CommandConfig::Atlas(args.clone()), outputs).save(path)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn execute(args: &AtlasArgs, out_dir: Option<&Path>) -> Result<Vec<String>> {
    let config = SweepConfig {
        m1: args.m1,
        m2: args.m2,
        b: args.b,
        seed: args.seed.policy(),
        classify: ClassifyConfig {
            transient: args.transient,
            iterations: args.iterations,
            ..ClassifyConfig::default()
        },
    };
    let atlas = with_threads(args.threads, || sweep_grid(&config))?;

    let path = resolve_out(&args.out, out_dir)?;
    let mut wtr = csv_writer(open_out(&path.to_string_lossy())?, ATLAS_SCHEMA)?;
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    for cell in &atlas.cells {
        *counts.entry(cell.class.kind.label()).or_insert(0) += 1;
        let e = cell.class.spectrum.map(|s| s.exponents);
        wtr.serialize(AtlasRow {
            m1: cell.params.m1,
            m2: cell.params.m2,
            b: cell.params.b,
            class: cell.class.kind.label(),
            period: cell.class.kind.period(),
            lyap1: e.map(|e| e[0]),
            lyap2: e.map(|e| e[1]),
            lyap3: e.map(|e| e[2]),
            orbit_bound: cell.class.orbit_bound,
        })?;
    }
    wtr.flush()?;

    let regions = region_extract(&atlas, &args.region_label);
    let summary = AtlasSummary {
        cells: atlas.cells.len(),
        counts,
        region_label: args.region_label.clone(),
        regions: regions
            .iter()
            .take(3)
            .map(|r| RegionSummary {
                cells: r.cell_count(),
                bbox_min: r.bbox_min,
                bbox_max: r.bbox_max,
                distance_to_degenerate_corner: r.distance_to(DEGENERATE_CORNER),
            })
            .collect(),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(vec![basename(&args.out)])
}
