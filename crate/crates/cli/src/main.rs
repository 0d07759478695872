//! Command-line driver: orbits, Lyapunov spectra, parameter atlases,
//! rescaling verification, tangency classification and byte-exact replay
//! of recorded runs.

mod atlas;
mod classify;
mod common;
mod delta;
mod lyap;
mod manifest;
mod orbit;
mod replay;
mod rescale;

use std::process::ExitCode;

use clap::Parser;

/// Toolkit for three-dimensional Henon-family maps and homoclinic
/// first-return maps.
#[derive(Parser)]
#[command(name = "dlorenz", version)]
enum Cli {
    /// Iterate a map and write the orbit as CSV.
    Orbit(orbit::OrbitArgs),
    /// Compute the Lyapunov spectrum of an orbit.
    Lyapunov(lyap::LyapunovArgs),
    /// Sweep the forward-family parameter box and classify each cell.
    Atlas(atlas::AtlasArgs),
    /// Check that rescaled return maps converge to their limit family.
    RescaleVerify(rescale::RescaleArgs),
    /// Report the tangency class and invariants of a model.
    ClassifyModel(classify::ClassifyArgs),
    /// Compare return-map and limit-family classifications on a grid.
    DeltaScan(delta::DeltaArgs),
    /// Re-run a recorded command and regenerate its outputs.
    Replay(replay::ReplayArgs),
}

fn main() -> ExitCode {
    let outcome = match Cli::parse() {
        Cli::Orbit(args) => orbit::run(&args),
        Cli::Lyapunov(args) => lyap::run(&args),
        Cli::Atlas(args) => atlas::run(&args),
        Cli::RescaleVerify(args) => rescale::run(&args),
        Cli::ClassifyModel(args) => classify::run(&args),
        Cli::DeltaScan(args) => delta::run(&args),
        Cli::Replay(args) => replay::run(&args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
