//! `windsphere`: experiments on spheres of revolution carrying
//! navigation winds. Every run writes a hashed `report.json` plus CSV
//! and SVG artifacts into the output directory and prints one line per
//! check.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 configuration
//! error, 3 precondition violated by the inputs, 4 numerical failure.

mod config;
mod experiments;
mod report;
mod suites;
mod svg;
mod trace_io;

use std::path::PathBuf;
use std::process;

use clap::{Parser, Subcommand};

use config::{Experiment, Failure, Overrides, RunConfig};

#[derive(Parser)]
#[command(
    name = "windsphere",
    version,
    about = "Randers metrics on spheres of revolution: geodesics, conjugate points, cut loci"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON run configuration file
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory for report.json and artifacts
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Seed for the randomized suites
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Integrator step length
    #[arg(long, global = true)]
    step: Option<f64>,

    /// Number of fan directions
    #[arg(long = "fan-n", global = true)]
    fan_n: Option<usize>,

    /// Emit SVG artifacts (the default)
    #[arg(long, global = true, overrides_with = "no_svg")]
    svg: bool,

    /// Skip SVG artifacts
    #[arg(long = "no-svg", global = true)]
    no_svg: bool,

    /// Named preset filling unset config fields
    #[arg(long, global = true)]
    preset: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the profile shape conditions and wind admissibility
    Check,
    /// Compare numerical Gauss curvature against the closed form
    Curvature,
    /// Integrate one geodesic and check its conservation law
    Geodesic,
    /// Integrate a fan of geodesics and mark first conjugate points
    Fan,
    /// Compute the cut locus from a source point
    #[command(name = "cutlocus")]
    CutLocus,
    /// Tabulate the Maxwell half-period over the Clairaut range
    #[command(name = "halfperiod")]
    HalfPeriod,
    /// Run the seeded identity suites and write a hashed report
    #[command(name = "verify-lemmas")]
    VerifyLemmas,
}

impl Command {
    fn experiment(&self) -> Experiment {
        match self {
            Command::Check => Experiment::Check,
            Command::Curvature => Experiment::Curvature,
            Command::Geodesic => Experiment::Geodesic,
            Command::Fan => Experiment::Fan,
            Command::CutLocus => Experiment::CutLocus,
            Command::HalfPeriod => Experiment::HalfPeriod,
            Command::VerifyLemmas => Experiment::VerifyLemmas,
        }
    }
}

fn main() {
    let cli = Cli::parse();
    process::exit(match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(failure) => {
            eprintln!("error: {failure}");
            failure.exit_code()
        }
    });
}

fn execute(cli: Cli) -> Result<bool, Failure> {
    let experiment = cli.command.experiment();
    let cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            serde_json::from_str::<RunConfig>(&text)
                .map_err(|e| Failure::Config(format!("invalid config: {e}")))?
        }
        None => RunConfig::default(),
    };
    let svg = if cli.svg {
        Some(true)
    } else if cli.no_svg {
        Some(false)
    } else {
        None
    };
    let flags = Overrides {
        out: cli.out,
        seed: cli.seed,
        step: cli.step,
        fan_n: cli.fan_n,
        svg,
        preset: cli.preset,
    };
    let resolved = config::resolve(experiment, cfg, &flags)?;
    let report = experiments::run(&resolved)?;
    for warning in &report.warnings {
        println!("WARN  {warning}");
    }
    for check in &report.checks {
        println!(
            "CHECK {:<36} {} measured={:.6e} tol={:.6e}  {}",
            check.name,
            if check.pass { "PASS" } else { "FAIL" },
            check.measured,
            check.tolerance,
            check.detail
        );
    }
    println!(
        "REPORT {} pass={} sha256={}",
        resolved.out.join("report.json").display(),
        report.pass,
        report.report_sha256
    );
    Ok(report.pass)
}
