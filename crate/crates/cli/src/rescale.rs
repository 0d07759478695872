//! Rescaling verification: assemble return maps over a range of return
//! indices, compare them with the limit family and check the geometric
//! deviation rate against an acceptance band.

use std::path::Path;
use std::process::ExitCode;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};

use dlorenz_core::model::UnfoldingParams;
use dlorenz_core::rescale::convergence_report;

use crate::common::{
    basename, csv_writer, open_out, parse_pair, resolve_out, with_threads, CaseArg,
};
use crate::manifest::{CommandConfig, RunManifest};

pub const RESCALE_SCHEMA: &str = "dlorenz.rescale.v1";

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RescaleArgs {
    /// Tangency case of the model.
    #[arg(long, value_enum, default_value_t = CaseArg::I)]
    pub case: CaseArg,

    /// Target limit-family parameters m1,m2.
    #[arg(long, value_parser = parse_pair, default_value = "0,0", allow_hyphen_values = true)]
    pub targets: (f64, f64),

    /// Smallest return index.
    #[arg(long, default_value_t = 10)]
    pub k_min: usize,

    /// Largest return index.
    #[arg(long, default_value_t = 24)]
    pub k_max: usize,

    /// Sample points per axis of the deviation grid.
    #[arg(long, default_value_t = 9)]
    pub grid: usize,

    /// Third unfolding parameter.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu3: f64,

    /// Acceptance band lo,hi for the fitted geometric rate.
    #[arg(long, value_parser = parse_pair, default_value = "0.35,0.65")]
    pub band: (f64, f64),

    /// Required shrink factor of the derivative deviation from the first
    /// row to the last.
    #[arg(long, default_value_t = 10.0)]
    pub shrink: f64,

    /// Invert parameters with the leading-order shortcut instead of the
    /// calibrated probes; the check is expected to fail.
    #[arg(long)]
    pub sabotage: bool,

    /// Output CSV path.
    #[arg(long, default_value = "rescale.csv")]
    pub out: String,

    /// Record the run description here for replay.
    #[arg(long)]
    pub manifest: Option<String>,

    /// Worker threads; 0 reads DLORENZ_THREADS, then the rayon default.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Serialize)]
struct RescaleRow {
    k: usize,
    c0: f64,
    c1: f64,
    coverage: f64,
    jac_residual: f64,
    m1_eff: f64,
    m2_eff: f64,
    m3_eff: f64,
    mu1: f64,
    mu2: f64,
    mu3: f64,
}

#[derive(Serialize)]
struct Verdict {
    case: &'static str,
    targets: (f64, f64),
    mu3: f64,
    k_range: (usize, usize),
    sabotage: bool,
    fitted_rate: f64,
    predicted_rate: f64,
    band: (f64, f64),
    c1_first: f64,
    c1_last: f64,
    shrink: f64,
    pass: bool,
}

pub fn run(args: &RescaleArgs) -> Result<ExitCode> {
    let (outputs, pass) = execute(args, None)?;
    if let Some(path) = &args.manifest {
        RunManifest::new(CommandConfig::RescaleVerify(args.clone()), outputs).save(path)?;
    }
    Ok(if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(3)
    })
}

pub fn execute(args: &RescaleArgs, out_dir: Option<&Path>) -> Result<(Vec<String>, bool)> {
    let mu = UnfoldingParams {
        mu1: 0.0,
        mu2: 0.0,
        mu3: args.mu3,
    };
    let model = match args.case {
        CaseArg::I => dlorenz_core::model::Model::case1(mu),
        CaseArg::Ii => dlorenz_core::model::Model::case2(mu),
    }?;
    let report = with_threads(args.threads, || {
        convergence_report(
            &model,
            args.targets,
            (args.k_min, args.k_max),
            args.grid,
            args.sabotage,
        )
    })??;

    let path = resolve_out(&args.out, out_dir)?;
    let mut wtr = csv_writer(open_out(&path.to_string_lossy())?, RESCALE_SCHEMA)?;
    for row in &report.rows {
        wtr.serialize(RescaleRow {
            k: row.k,
            c0: row.c0,
            c1: row.c1,
            coverage: row.coverage,
            jac_residual: row.jacobian_residual,
            m1_eff: row.effective.m1,
            m2_eff: row.effective.m2,
            m3_eff: row.effective.m3,
            mu1: row.mu.mu1,
            mu2: row.mu.mu2,
            mu3: row.mu.mu3,
        })?;
    }
    wtr.flush()?;

    let (lo, hi) = args.band;
    let pass = report.fitted_rate >= lo
        && report.fitted_rate <= hi
        && report.c1_last < report.c1_first / args.shrink;
    let verdict = Verdict {
        case: args.case.tangency().label(),
        targets: args.targets,
        mu3: args.mu3,
        k_range: (args.k_min, args.k_max),
        sabotage: args.sabotage,
        fitted_rate: report.fitted_rate,
        predicted_rate: report.predicted_rate,
        band: args.band,
        c1_first: report.c1_first,
        c1_last: report.c1_last,
        shrink: args.shrink,
        pass,
    };
    println!("{}", serde_json::to_string_pretty(&verdict)?);
    Ok((vec![basename(&args.out)], pass))
}
