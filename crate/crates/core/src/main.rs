use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use phasefield_avi::app::{cmd_benchmark, cmd_mesh_info, cmd_run, RunSummary};
use phasefield_avi::config::{material_preset, preset, Benchmark, PresetOverrides};
use phasefield_avi::element::PhaseSolveMode;
use phasefield_avi::material::PhaseFieldVariant;
use phasefield_avi::Error;

#[derive(Parser)]
#[command(version, about = "Phase-field dynamic fracture with an asynchronous variational integrator")]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace); RUST_LOG overrides it.
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a TOML configuration.
    Run { config: PathBuf },
    /// Run a bundled benchmark preset (tension, ct, kalthoff).
    Benchmark {
        name: String,
        /// Multiply the coarse cell counts by k (ell shrinks with the mesh).
        #[arg(long, value_name = "k")]
        mesh_scale: Option<u32>,
        #[arg(long)]
        variant: Option<PhaseFieldVariant>,
        /// Phase solve domain: patch, or local (element only).
        #[arg(long)]
        mode: Option<PhaseSolveMode>,
        /// Load magnitude: traction in Pa (tension, ct) or impact speed in m/s (kalthoff).
        #[arg(long)]
        load: Option<f64>,
        /// Final time in seconds.
        #[arg(long)]
        tf: Option<f64>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Use the tabulated regularization length with band cells near ell / 2.
        #[arg(long)]
        full_scale: bool,
        /// Write the resolved configuration to this file instead of running it.
        #[arg(long, value_name = "path")]
        write_config: Option<PathBuf>,
    },
    /// Print mesh statistics and the critical time step distribution.
    MeshInfo {
        /// Mesh file (.msh or native text) or a run configuration (.toml).
        path: PathBuf,
        /// silica, soda-lime or steel.
        #[arg(long)]
        material: Option<String>,
        #[arg(long)]
        c_cfl: Option<f64>,
        /// Simulated duration for the update estimates (s).
        #[arg(long)]
        duration: Option<f64>,
    },
}

fn report(s: &RunSummary) {
    println!(
        "{} elemental updates in {:.2} s; min {} max {} median {}; synchronous estimate {} ({:.1}%)",
        s.updates,
        s.elapsed.as_secs_f64(),
        s.stats.min,
        s.stats.max,
        s.stats.median,
        s.stats.synchronous_estimate,
        100.0 * s.stats.ratio()
    );
}

fn write_preset(b: Benchmark, ov: &PresetOverrides, path: &Path) -> Result<(), Error> {
    let text = preset(b, ov)?.to_toml()?;
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log)).init();
    let result = match cli.command {
        Command::Run { config } => cmd_run(&config).map(|s| report(&s)),
        Command::Benchmark {
            name,
            mesh_scale,
            variant,
            mode,
            load,
            tf,
            output,
            full_scale,
            write_config,
        } => name.parse::<Benchmark>().map_err(Into::into).and_then(|b| {
            let ov = PresetOverrides {
                mesh_scale,
                variant,
                mode,
                load,
                tf,
                output,
                full_scale,
            };
            match write_config {
                Some(path) => write_preset(b, &ov, &path),
                None => cmd_benchmark(b, &ov).map(|s| report(&s)),
            }
        }),
        Command::MeshInfo {
            path,
            material,
            c_cfl,
            duration,
        } => {
            let mat = match material.as_deref().map(|m| (m, material_preset(m))) {
                Some((m, None)) => {
                    eprintln!("error: unknown material '{m}' (expected silica, soda-lime or steel)");
                    return ExitCode::FAILURE;
                }
                Some((_, found)) => found,
                None => None,
            };
            cmd_mesh_info(&path, mat, c_cfl, duration).map(|info| println!("{info}"))
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
