use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use hypertess::volume::DEFAULT_TOL;
use hypertess_cli::commands::{
    cmd_decompose, cmd_density, cmd_export, cmd_verify, DensityMode, ExportFormat,
};
use hypertess_cli::error::{exit, CliError};

#[derive(Parser)]
#[command(
    name = "hypertess",
    version,
    about = "Hyperball packings: local cells, polar decomposition, densities"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check that a scene is an admissible packing around its vertex.
    Verify {
        scene: PathBuf,
        /// Print a JSON report instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Decompose the local cell of a scene into truncated tetrahedra.
    Decompose {
        scene: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        /// Relative tolerance of the leaf volume integrals.
        #[arg(long, env = "HYPERTESS_TOL", default_value_t = DEFAULT_TOL)]
        tol: f64,
    },
    /// Packing density in the regular truncated tetrahedron family.
    #[command(group(ArgGroup::new("mode").required(true).args(["p", "r", "optimize", "sweep"])))]
    Density {
        #[arg(long, value_enum)]
        family: Family,
        /// Cell realizing the {p,3,3} tiling.
        #[arg(long)]
        p: Option<u32>,
        /// Chart radius of the cell's outer vertices.
        #[arg(long)]
        r: Option<f64>,
        /// Maximize over the family.
        #[arg(long)]
        optimize: bool,
        /// CSV over `steps + 1` values of r.
        #[arg(long, num_args = 3, value_names = ["RMIN", "RMAX", "STEPS"])]
        sweep: Option<Vec<f64>>,
        /// Hyperball height (default: the largest admissible one).
        #[arg(long)]
        h: Option<f64>,
        #[arg(long, env = "HYPERTESS_TOL", default_value_t = DEFAULT_TOL)]
        tol: f64,
        #[arg(long)]
        json: bool,
    },
    /// Convert a trace file to a mesh or re-emit it.
    Export {
        trace: PathBuf,
        #[arg(long, value_enum)]
        format: Format,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    #[value(name = "regular-tt")]
    RegularTt,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Obj,
    Json,
}

fn check_tol(tol: f64) -> Result<f64, CliError> {
    if tol > 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(CliError::Parse {
            path: "--tol".into(),
            message: format!("tolerance must be positive, got {tol}"),
        })
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let mut stdout = std::io::stdout();
    match cli.command {
        Command::Verify { scene, json } => cmd_verify(&scene, json, &mut stdout),
        Command::Decompose { scene, output, tol } => {
            cmd_decompose(&scene, &output, check_tol(tol)?, &mut stdout)
        }
        Command::Density {
            family: Family::RegularTt,
            p,
            r,
            optimize,
            sweep,
            h,
            tol,
            json,
        } => {
            let mode = match (p, r, optimize, sweep) {
                (Some(p), ..) => DensityMode::P(p),
                (_, Some(r), ..) => DensityMode::R(r),
                (_, _, true, _) => DensityMode::Optimize,
                (_, _, _, Some(v)) => {
                    let steps = v[2];
                    if !(steps >= 1.0 && steps.fract() == 0.0) {
                        return Err(CliError::Parse {
                            path: "--sweep".into(),
                            message: format!("STEPS must be a positive integer, got {steps}"),
                        });
                    }
                    DensityMode::Sweep {
                        r_min: v[0],
                        r_max: v[1],
                        steps: steps as usize,
                    }
                }
                _ => unreachable!("clap requires one mode"),
            };
            cmd_density(mode, h, check_tol(tol)?, json, &mut stdout)
        }
        Command::Export {
            trace,
            format,
            output,
        } => {
            let format = match format {
                Format::Obj => ExportFormat::Obj,
                Format::Json => ExportFormat::Json,
            };
            cmd_export(&trace, format, &output)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    debug_assert!((exit::OK..=exit::GUARD).contains(&code));
    ExitCode::from(code as u8)
}
