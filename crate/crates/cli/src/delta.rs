//! Grid comparison of assembled return maps against the limit family at
//! one return index.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{ensure, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use dlorenz_core::atlas::{delta_k_scan, SweepAxis};
use dlorenz_core::lyapunov::ClassifyConfig;
use dlorenz_core::model::{Model, UnfoldingParams};

use crate::common::{
    basename, csv_writer, open_out, parse_axis, resolve_out, with_threads, CaseArg,
};
use crate::manifest::{CommandConfig, RunManifest};

pub const DELTA_SCHEMA: &str = "dlorenz.delta.v1";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DeltaArgs {
    /// Tangency case of the model.
    #[arg(long, value_enum, default_value_t = CaseArg::I)]
    pub case: CaseArg,

    /// Return index.
    #[arg(long, default_value_t = 18)]
    pub k: usize,

    /// Third unfolding parameter; chosen from --m3-target when absent.
    #[arg(long, allow_negative_numbers = true)]
    pub mu3: Option<f64>,

    /// Effective third limit parameter to aim for when --mu3 is absent.
    #[arg(long, default_value_t = 0.7)]
    pub m3_target: f64,

    /// First-target axis min,max,count.
    #[arg(long, value_parser = parse_axis, default_value = "-0.2,0.3,20", allow_hyphen_values = true)]
    pub m1: SweepAxis,

    /// Second-target axis min,max,count.
    #[arg(long, value_parser = parse_axis, default_value = "0.5,1.0,20", allow_hyphen_values = true)]
    pub m2: SweepAxis,

    /// Steps discarded before accumulating.
    #[arg(long, default_value_t = 10_000)]
    pub transient: usize,

    /// Accumulation steps per cell.
    #[arg(long, default_value_t = 200_000)]
    pub iterations: usize,

    /// Output CSV path.
    #[arg(long, default_value = "delta.csv")]
    pub out: String,

    /// Record the run description here for replay.
    #[arg(long)]
    pub manifest: Option<String>,

    /// Worker threads; 0 reads DLORENZ_THREADS, then the rayon default.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Serialize)]
struct DeltaRow {
    m1: f64,
    m2: f64,
    m1_eff: f64,
    m2_eff: f64,
    m3_eff: f64,
    rescaled_class: &'static str,
    limit_class: &'static str,
    agree: bool,
}

#[derive(Serialize)]
struct DeltaSummary {
    case: &'static str,
    k: usize,
    mu3: f64,
    cells: usize,
    agreement: f64,
    candidate_cells: usize,
    rescaled_counts: BTreeMap<&'static str, usize>,
}

pub fn run(args: &DeltaArgs) -> Result<ExitCode> {
    let outputs = execute(args, None)?;
    if let Some(path) = &args.manifest {
        RunManifest::new(CommandConfig::DeltaScan(args.clone()), outputs).save(path)?;
    }
    Ok(ExitCode::SUCCESS)
}

pub fn execute(args: &DeltaArgs, out_dir: Option<&Path>) -> Result<Vec<String>> {
    let mu3 = match args.mu3 {
        Some(v) => v,
        None => {
            ensure!(
                args.m3_target > 0.0,
                "the effective third-parameter target must be positive"
            );
            1.0 - args.m3_target.powf(1.0 / args.k as f64)
        }
    };
    let mu = UnfoldingParams {
        mu1: 0.0,
        mu2: 0.0,
        mu3,
    };
    let model = match args.case {
        CaseArg::I => Model::case1(mu),
        CaseArg::Ii => Model::case2(mu),
    }?;
    let config = ClassifyConfig {
        transient: args.transient,
        iterations: args.iterations,
        ..ClassifyConfig::default()
    };
    let scan = with_threads(args.threads, || {
        delta_k_scan(&model, args.k, args.m1, args.m2, &config)
    })??;

    let path = resolve_out(&args.out, out_dir)?;
    let mut wtr = csv_writer(open_out(&path.to_string_lossy())?, DELTA_SCHEMA)?;
    let mut counts: BTreeMap<&'static str, usize> = BTreeMap::new();
    let mut candidates = 0usize;
    for cell in &scan.cells {
        let label = cell.rescaled.kind.label();
        *counts.entry(label).or_insert(0) += 1;
        if label == "discrete-lorenz-candidate" {
            candidates += 1;
        }
        wtr.serialize(DeltaRow {
            m1: cell.targets.0,
            m2: cell.targets.1,
            m1_eff: cell.effective.m1,
            m2_eff: cell.effective.m2,
            m3_eff: cell.effective.m3,
            rescaled_class: label,
            limit_class: cell.limit.kind.label(),
            agree: cell.agree,
        })?;
    }
    wtr.flush()?;

    let summary = DeltaSummary {
        case: args.case.tangency().label(),
        k: args.k,
        mu3,
        cells: scan.cells.len(),
        agreement: scan.agreement,
        candidate_cells: candidates,
        rescaled_counts: counts,
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(vec![basename(&args.out)])
}
