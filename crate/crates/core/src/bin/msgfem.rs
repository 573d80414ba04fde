//! Command-line front end for the experiment drivers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use msgfem::coarse::eigenvalue_csv;
use msgfem::experiments::{self, ExperimentConfig, ExperimentKind};
use msgfem::linalg::mtx::write_matrix_market;

#[derive(Parser)]
#[command(name = "msgfem", version, about = "Two-level MS-GFEM preconditioned Helmholtz solver experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write its CSV.
    Run {
        experiment: ExperimentKind,
        #[arg(long)]
        config: PathBuf,
        /// Output file; defaults to `output.path` from the config, then stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the global system matrix of the first sweep point in Matrix Market format.
    ExportMatrix {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write every local eigenvalue of the first sweep point as CSV.
    Eigdump {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn create(path: &Path) -> msgfem::Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn execute(cli: Cli) -> msgfem::Result<()> {
    match cli.command {
        Command::Run { experiment, config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let result = experiments::run(experiment, &cfg)?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            match out.or_else(|| cfg.output.path.clone()) {
                Some(path) => experiments::write_csv(create(&path)?, &cfg, &result.rows)?,
                None => experiments::write_csv(io::stdout().lock(), &cfg, &result.rows)?,
            }
        }
        Command::ExportMatrix { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let (inst, _, _) = experiments::first_instance(&cfg)?;
            let mut w = create(&out)?;
            write_matrix_market(&inst.system.b, &mut w)?;
            w.flush()?;
        }
        Command::Eigdump { config, out } => {
            let cfg = ExperimentConfig::load(&config)?;
            let bases = experiments::eigenvalue_dump(&cfg)?;
            let mut w = create(&out)?;
            w.write_all(eigenvalue_csv(&bases).as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    msgfem::init_thread_pool();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
