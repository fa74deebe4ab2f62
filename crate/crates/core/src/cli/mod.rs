//! Command-line interface: `granflow uniform-flow|collapse|sweep --config <path>`.
//!
//! Exit codes: 0 success, 1 runtime error, 2 configuration or usage error,
//! 3 outputs written but a validation check failed.

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{execute, Status};
pub use config::{Command, Overrides, RunConfig};

use crate::error::Error;
use crate::multilayer::ShearOrder;
use crate::rheology::FrictionLaw;

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "granflow", version, about = "Multilayer granular flow simulations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Steady flow down an infinite slope, compared with the closed form.
    UniformFlow(RunArgs),
    /// Column collapse over an erodible bed.
    Collapse(RunArgs),
    /// Collapses over a grid of slopes, bed thicknesses and model options.
    Sweep(RunArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub layers: Option<usize>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub cfl: Option<f64>,
    /// Friction law: mu-i or constant.
    #[arg(long)]
    pub rheology: Option<FrictionLaw>,
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub shear_order: Option<u8>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl RunArgs {
    fn overrides(&self) -> crate::Result<Overrides> {
        Ok(Overrides {
            layers: self.layers,
            nx: self.nx,
            cfl: self.cfl,
            friction: self.rheology,
            shear_order: self.shear_order.map(ShearOrder::from_u8).transpose()?,
            out: self.out.clone(),
        })
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let (command, args) = match &cli.command {
        CliCommand::UniformFlow(a) => (Command::UniformFlow, a),
        CliCommand::Collapse(a) => (Command::Collapse, a),
        CliCommand::Sweep(a) => (Command::Sweep, a),
    };
    let config = std::fs::read_to_string(&args.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", args.config.display())))
        .and_then(|text| RunConfig::parse(&text, command, &args.overrides()?));
    let config = match config {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match execute(&config) {
        Ok(Status::Ok) => EXIT_OK,
        Ok(Status::ValidationFailed(msg)) => {
            eprintln!("validation failed: {msg}");
            EXIT_VALIDATION
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
