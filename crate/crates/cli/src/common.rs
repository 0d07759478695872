//! Shared pieces of the command surface: map selection, comma-separated
//! numeric values, output plumbing and thread-pool control.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use dlorenz_core::atlas::{seed_state, SeedPolicy, SweepAxis};
use dlorenz_core::maps::henon::{hatted_params, Henon3d, HenonParams, InverseHenon3d};
use dlorenz_core::maps::limit::{LimitCase1, LimitCase2};
use dlorenz_core::maps::{Map3, State3};
use dlorenz_core::model::{FirstReturnMap, Model, UnfoldingParams};
use dlorenz_core::rescale::limit_fixed_point;
use dlorenz_core::TangencyCase;

/// Families addressable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapKind {
    /// Forward family on (x, y, z).
    Henon3d,
    /// Cross-form inverse family at the hatted parameters of m1, m2, b.
    Henon3dInv,
    /// Plane endomorphism the forward family degenerates to at b = 0.
    Mira,
    /// First limit family at m1, m2, m3.
    Limit1,
    /// Second limit family at m1, m2, m3.
    Limit2,
    /// First-return map of the homoclinic model at case, k and mu.
    ModelReturn,
}

/// Tangency case selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CaseArg {
    I,
    Ii,
}

impl CaseArg {
    pub fn tangency(self) -> TangencyCase {
        match self {
            CaseArg::I => TangencyCase::CaseI,
            CaseArg::Ii => TangencyCase::CaseII,
        }
    }
}

/// Initial-point policy selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SeedArg {
    Origin,
    NearFixedPoint,
}

impl SeedArg {
    pub fn policy(self) -> SeedPolicy {
        match self {
            SeedArg::Origin => SeedPolicy::Origin,
            SeedArg::NearFixedPoint => SeedPolicy::NearFixedPoint,
        }
    }
}

/// Numeric parameters, interpreted per map kind: the forward and inverse
/// families read m1, m2, b; the limit families read m1, m2, m3; the model
/// return map reads case, k and mu1, mu2, mu3.
#[derive(Debug, Clone, Copy, Args, Serialize, Deserialize)]
pub struct MapParams {
    /// First parameter.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub m1: f64,
    /// Second parameter.
    #[arg(long, default_value_t = 0.85, allow_negative_numbers = true)]
    pub m2: f64,
    /// Jacobian of the forward family.
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    pub b: f64,
    /// Third parameter of the limit families.
    #[arg(long, default_value_t = 0.7, allow_negative_numbers = true)]
    pub m3: f64,
    /// Tangency case of the model.
    #[arg(long, value_enum, default_value_t = CaseArg::I)]
    pub case: CaseArg,
    /// Return index of the model map.
    #[arg(long, default_value_t = 12)]
    pub k: usize,
    /// First unfolding parameter.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu1: f64,
    /// Second unfolding parameter.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu2: f64,
    /// Third unfolding parameter.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub mu3: f64,
}

impl MapParams {
    pub fn henon(&self) -> HenonParams {
        HenonParams {
            m1: self.m1,
            m2: self.m2,
            b: self.b,
        }
    }

    pub fn unfolding(&self) -> UnfoldingParams {
        UnfoldingParams {
            mu1: self.mu1,
            mu2: self.mu2,
            mu3: self.mu3,
        }
    }

    pub fn model(&self) -> Result<Model> {
        let model = match self.case {
            CaseArg::I => Model::case1(self.unfolding()),
            CaseArg::Ii => Model::case2(self.unfolding()),
        }?;
        Ok(model)
    }
}

/// A selected three-dimensional family, ready to iterate.
#[derive(Debug, Clone)]
pub enum AnyMap {
    Henon(Henon3d),
    HenonInv(InverseHenon3d),
    Limit1(LimitCase1),
    Limit2(LimitCase2),
    ModelReturn(FirstReturnMap),
}

impl Map3 for AnyMap {
    fn step(&self, s: State3) -> State3 {
        match self {
            AnyMap::Henon(m) => m.step(s),
            AnyMap::HenonInv(m) => m.step(s),
            AnyMap::Limit1(m) => m.step(s),
            AnyMap::Limit2(m) => m.step(s),
            AnyMap::ModelReturn(m) => m.step(s),
        }
    }

    fn jacobian(&self, s: State3) -> Matrix3<f64> {
        match self {
            AnyMap::Henon(m) => m.jacobian(s),
            AnyMap::HenonInv(m) => m.jacobian(s),
            AnyMap::Limit1(m) => m.jacobian(s),
            AnyMap::Limit2(m) => m.jacobian(s),
            AnyMap::ModelReturn(m) => m.jacobian(s),
        }
    }
}

/// Builds the selected family. `Mira` is not three-dimensional and is
/// handled by the orbit command alone.
pub fn build_map(kind: MapKind, p: &MapParams) -> Result<AnyMap> {
    Ok(match kind {
        MapKind::Henon3d => AnyMap::Henon(Henon3d { params: p.henon() }),
        MapKind::Henon3dInv => AnyMap::HenonInv(InverseHenon3d {
            params: hatted_params(&p.henon())?,
        }),
        MapKind::Limit1 => AnyMap::Limit1(LimitCase1 {
            m1: p.m1,
            m2: p.m2,
            m3: p.m3,
        }),
        MapKind::Limit2 => AnyMap::Limit2(LimitCase2 {
            m1: p.m1,
            m2: p.m2,
            m3: p.m3,
        }),
        MapKind::ModelReturn => AnyMap::ModelReturn(p.model()?.first_return(p.k)?),
        MapKind::Mira => anyhow::bail!("mira is a plane map; pick a three-dimensional family"),
    })
}

/// Default starting state for a family: near the most contracting fixed
/// point where one is known, the strip center for the model return map,
/// the origin otherwise.
pub fn default_state(kind: MapKind, p: &MapParams) -> Result<State3> {
    Ok(match kind {
        MapKind::Henon3d => seed_state(&p.henon(), SeedPolicy::NearFixedPoint),
        MapKind::ModelReturn => p.model()?.first_return(p.k)?.strip().center(),
        MapKind::Limit1 | MapKind::Limit2 => {
            let case = if kind == MapKind::Limit1 {
                TangencyCase::CaseI
            } else {
                TangencyCase::CaseII
            };
            let params = dlorenz_core::rescale::LimitParams {
                m1: p.m1,
                m2: p.m2,
                m3: p.m3,
            };
            match limit_fixed_point(case, params) {
                Ok(fp) => fp + State3::new(1e-3, 1e-3, 1e-3),
                Err(_) => State3::zeros(),
            }
        }
        _ => State3::zeros(),
    })
}

/// Parses "x,y,z" into a state.
pub fn parse_triple(text: &str) -> Result<State3, String> {
    let parts = parse_floats(text, 3)?;
    Ok(State3::new(parts[0], parts[1], parts[2]))
}

/// Parses "a,b" into a pair.
pub fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let parts = parse_floats(text, 2)?;
    Ok((parts[0], parts[1]))
}

/// Parses "min,max,count" into a sweep axis.
pub fn parse_axis(text: &str) -> Result<SweepAxis, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 3 {
        return Err(format!("expected min,max,count, got {text:?}"));
    }
    let min: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|e| format!("bad axis minimum {:?}: {e}", parts[0]))?;
    let max: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|e| format!("bad axis maximum {:?}: {e}", parts[1]))?;
    let n: usize = parts[2]
        .trim()
        .parse()
        .map_err(|e| format!("bad axis count {:?}: {e}", parts[2]))?;
    if n == 0 {
        return Err("axis count must be positive".to_string());
    }
    Ok(SweepAxis::new(min, max, n))
}

fn parse_floats(text: &str, n: usize) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {text:?}"));
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad number {p:?}: {e}"))
        })
        .collect()
}

/// Runs `f` on a dedicated thread pool. A zero count falls back to the
/// DLORENZ_THREADS variable, then to the rayon default.
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let n = if threads == 0 {
        std::env::var("DLORENZ_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
            .unwrap_or(0)
    } else {
        threads
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .context("building the thread pool")?;
    Ok(pool.install(f))
}

/// Opens `path` for writing, with "-" meaning stdout.
pub fn open_out(path: &str) -> Result<Box<dyn Write>> {
    Ok(if path == "-" {
        Box::new(io::stdout())
    } else {
        Box::new(File::create(path).with_context(|| format!("creating {path}"))?)
    })
}

/// Starts a CSV stream whose first line names the schema.
pub fn csv_writer(mut out: Box<dyn Write>, schema: &str) -> Result<csv::Writer<Box<dyn Write>>> {
    writeln!(out, "# {schema}")?;
    Ok(csv::Writer::from_writer(out))
}

/// Resolves an output path, replacing its directory when regenerating
/// into a replay target.
pub fn resolve_out(path: &str, out_dir: Option<&Path>) -> Result<PathBuf> {
    match out_dir {
        None => Ok(PathBuf::from(path)),
        Some(dir) => {
            let name = Path::new(path)
                .file_name()
                .context("output path has no file name")?;
            Ok(dir.join(name))
        }
    }
}

/// File name of an output path, as recorded in manifests.
pub fn basename(path: &str) -> String {
    Path::new(path)
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string())
}
