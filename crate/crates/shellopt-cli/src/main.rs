//! Batch CLI for shell topology optimization runs.
//!
//! Exit codes: 0 converged / success, 2 configuration or usage error,
//! 3 solver failure, 4 not converged within the iteration budget, 5 I/O.

use clap::{Parser, Subcommand};
use shellopt::batch::{run_to_dir, RunError};
use shellopt::cases::CASE_NAMES;
use shellopt::config::RunConfig;
use shellopt::driver::{build_geometry, InheritanceMode, Mode, RccDirection};
use shellopt::error::FeaError;
use shellopt::export::{checkpoint_from_str, density_vtk, tmesh_vtk};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_OK: u8 = 0;
const EXIT_CONFIG: u8 = 2;
const EXIT_SOLVER: u8 = 3;
const EXIT_NOT_CONVERGED: u8 = 4;
const EXIT_IO: u8 = 5;

#[derive(Parser)]
#[command(
    name = "shellopt",
    about = "Adaptive isogeometric topology optimization of shell structures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an optimization described by a config file.
    Run {
        /// Path to the configuration file.
        config: PathBuf,
        /// Output directory (default: $SHELLOPT_OUTPUT_ROOT/<config stem> or ./runs/<config stem>).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override opt.mode.
        #[arg(long, value_parser = ["adaptive", "tensor-global"])]
        mode: Option<String>,
        /// Override opt.inheritance.
        #[arg(long, value_parser = ["inherit", "reset"])]
        inheritance: Option<String>,
        /// Override opt.tol_ref.
        #[arg(long)]
        tol_ref: Option<f64>,
        /// Override opt.rcc_direction.
        #[arg(long, value_parser = ["greater", "less"])]
        rcc_direction: Option<String>,
        /// Write the seconds column as 0 for reproducible logs.
        #[arg(long)]
        no_timing: bool,
        /// Write the fully resolved manifest to this path and exit without running.
        #[arg(long)]
        seed_manifest: Option<PathBuf>,
    },
    /// List the built-in cases.
    Cases,
    /// Export a checkpoint to VTK files `<out>.density.vtk` and `<out>.tmesh.vtk`.
    Export {
        checkpoint: PathBuf,
        out: PathBuf,
        /// Quads per element edge in the density tessellation.
        #[arg(long, default_value_t = 4)]
        tess: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Run {
            config,
            out,
            mode,
            inheritance,
            tol_ref,
            rcc_direction,
            no_timing,
            seed_manifest,
        } => cmd_run(RunArgs {
            config,
            out,
            mode,
            inheritance,
            tol_ref,
            rcc_direction,
            no_timing,
            seed_manifest,
        }),
        Command::Cases => {
            for name in CASE_NAMES {
                println!("{name}");
            }
            EXIT_OK
        }
        Command::Export {
            checkpoint,
            out,
            tess,
        } => cmd_export(checkpoint, out, tess),
    };
    ExitCode::from(code)
}

struct RunArgs {
    config: PathBuf,
    out: Option<PathBuf>,
    mode: Option<String>,
    inheritance: Option<String>,
    tol_ref: Option<f64>,
    rcc_direction: Option<String>,
    no_timing: bool,
    seed_manifest: Option<PathBuf>,
}

fn cmd_run(args: RunArgs) -> u8 {
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return EXIT_IO;
        }
    };
    let mut cfg = match RunConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    if let Some(m) = args.mode {
        cfg.mode = if m == "adaptive" {
            Mode::Adaptive
        } else {
            Mode::TensorGlobal
        };
    }
    if let Some(i) = args.inheritance {
        cfg.inheritance = if i == "inherit" {
            InheritanceMode::Inherit
        } else {
            InheritanceMode::Reset
        };
    }
    if let Some(t) = args.tol_ref {
        cfg.tol_ref = t;
    }
    if let Some(d) = args.rcc_direction {
        cfg.rcc_direction = if d == "greater" {
            RccDirection::Greater
        } else {
            RccDirection::Less
        };
    }
    if args.no_timing {
        cfg.timing = false;
    }
    if let Some(path) = args.seed_manifest {
        if let Err(e) = std::fs::write(&path, cfg.manifest()) {
            eprintln!("error: cannot write manifest: {e}");
            return EXIT_IO;
        }
        println!("manifest written to {}", path.display());
        return EXIT_OK;
    }
    let stem = args
        .config
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "run".to_string());
    let dir = args.out.unwrap_or_else(|| {
        std::env::var_os("SHELLOPT_OUTPUT_ROOT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"))
            .join(stem)
    });
    match run_to_dir(&cfg, &dir) {
        Ok(bundle) => {
            println!(
                "{}: {} iterations, {} refinements, compliance {:.6}, volume fraction {:.4}",
                if bundle.converged {
                    "converged"
                } else {
                    "stopped at iteration budget"
                },
                bundle.n_iterations,
                bundle.n_refinements,
                bundle.final_compliance,
                bundle.final_volume_fraction,
            );
            println!("outputs in {}", bundle.dir.display());
            if bundle.converged {
                EXIT_OK
            } else {
                EXIT_NOT_CONVERGED
            }
        }
        Err(RunError::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
        Err(RunError::Fea(e)) => {
            eprintln!("error: {e}");
            match e {
                FeaError::Config(_) | FeaError::Unconstrained => EXIT_CONFIG,
                _ => EXIT_SOLVER,
            }
        }
    }
}

fn cmd_export(checkpoint: PathBuf, out: PathBuf, tess: usize) -> u8 {
    let text = match std::fs::read_to_string(&checkpoint) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", checkpoint.display());
            return EXIT_IO;
        }
    };
    let ck = match checkpoint_from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    // Geometry lives on the level-0 space of the same initial mesh.
    let (nx, ny) = ck.space.mesh().resolution();
    let surf = shellopt::tmesh::HierTMesh::tensor(nx, ny)
        .map_err(shellopt::SpaceError::from)
        .map_err(FeaError::Space)
        .and_then(|m| shellopt::phtspace::PhtSpace::level0(m).map_err(FeaError::Space))
        .map(std::sync::Arc::new)
        .and_then(|base| build_geometry(&base, &ck.geometry, ck.thickness));
    let surf = match surf {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    let density = match density_vtk(&surf, &ck.rho, tess) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
    };
    let wire = match tmesh_vtk(&surf, ck.space.mesh(), 2) {
        Ok(d) => d,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SOLVER;
        }
    };
    let dpath = out.with_extension("density.vtk");
    let tpath = out.with_extension("tmesh.vtk");
    if let Err(e) = std::fs::write(&dpath, density).and_then(|_| std::fs::write(&tpath, wire)) {
        eprintln!("error: {e}");
        return EXIT_IO;
    }
    println!("wrote {} and {}", dpath.display(), tpath.display());
    EXIT_OK
}
