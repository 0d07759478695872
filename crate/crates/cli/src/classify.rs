//! Model classification: tangency case and the invariants that govern the
//! first-return analysis.

use std::fs;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;

use dlorenz_core::model::{classify_tangency, Model};

use crate::common::{CaseArg, MapParams};

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// Model description JSON; built-in defaults when absent.
    #[arg(long)]
    pub config: Option<String>,

    #[command(flatten)]
    pub params: MapParams,
}

#[derive(Serialize)]
struct ClassifyReport {
    base_case: &'static str,
    unfolded_case: &'static str,
    lambda1: f64,
    lambda2: f64,
    gamma: f64,
    j1_saddle: f64,
    transversality_determinant: f64,
    k_min: usize,
}

pub fn run(args: &ClassifyArgs) -> Result<ExitCode> {
    let model = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {path}"))?;
            Model::from_json(&text)?
        }
        None => match args.params.case {
            CaseArg::I => Model::case1(args.params.unfolding())?,
            CaseArg::Ii => Model::case2(args.params.unfolding())?,
        },
    };
    let report = ClassifyReport {
        base_case: classify_tangency(model.base_coefficients())?.label(),
        unfolded_case: classify_tangency(&model.coeffs)?.label(),
        lambda1: model.saddle.lambda1,
        lambda2: model.saddle.lambda2,
        gamma: model.saddle.gamma,
        j1_saddle: model.saddle.j1_saddle(),
        transversality_determinant: model.coeffs.transversality_determinant(),
        k_min: model.k_min()?,
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(ExitCode::SUCCESS)
}
