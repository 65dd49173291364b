//! Command-line front end: configuration files, presets of the worked
//! examples, convergence drivers and the acceptance suite.
//!
//! ```text
//! pmlbie solve       --config run.toml --out out/
//! pmlbie convergence --preset flat --out out/ --norm l2
//! pmlbie pml-sweep   --preset semicircles
//! pmlbie validate    --only 1,4,10
//! ```
//!
//! Exit codes: [`EXIT_OK`], [`EXIT_CONFIG`], [`EXIT_SOLVER`],
//! [`EXIT_ACCEPTANCE`].

pub mod acceptance;
pub mod config;
pub mod drivers;
pub mod presets;

use clap::{Args, Parser, Subcommand};
use config::{Norm, RunConfig};
use drivers::DriverError;
use log::error;
use std::path::{Path, PathBuf};
use thiserror::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_ACCEPTANCE: i32 = 4;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot access {0}: {1}")]
    Io(String, String),
    #[error("malformed configuration: {0}")]
    Parse(String),
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

#[derive(Debug, Parser)]
#[command(name = "pmlbie", version, about = "PML boundary integral solver for scattering by a perturbed interface")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve every incidence of a configuration and write densities, field grids and diagnostics.
    Solve(RunArgs),
    /// Convergence in the node counts of the configuration's sweep.
    Convergence(RunArgs),
    /// Convergence in the absorbing magnitude S.
    PmlSweep(RunArgs),
    /// Run the built-in acceptance suite.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads for assembly, factorization and sweeps.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Configuration file (TOML).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    pub config: Option<PathBuf>,
    /// Built-in configuration: flat, semicircles, obstacle or step.
    #[arg(long)]
    pub preset: Option<String>,
    /// Error norm, overriding the configuration.
    #[arg(long, value_enum)]
    pub norm: Option<Norm>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Comma-separated criterion numbers; all when absent.
    #[arg(long, value_delimiter = ',')]
    pub only: Vec<u32>,
    #[command(flatten)]
    pub common: Common,
}

impl RunArgs {
    pub fn load(&self) -> Result<RunConfig, ConfigError> {
        match (&self.config, &self.preset) {
            (Some(p), _) => RunConfig::load(p),
            (None, Some(name)) => presets::preset(name),
            (None, None) => Err(ConfigError::Invalid("either --config or --preset is required".into())),
        }
    }
}

fn configure_threads(threads: Option<usize>) {
    if let Some(k) = threads {
        let k = k.max(1);
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(k).build_global() {
            log::warn!("thread pool already initialized: {e}");
        }
        faer::set_global_parallelism(if k == 1 { faer::Par::Seq } else { faer::Par::rayon(k) });
    }
}

fn exit_code(e: &DriverError) -> i32 {
    match e {
        DriverError::Config(_) => EXIT_CONFIG,
        _ => EXIT_SOLVER,
    }
}

fn create_dir(dir: &Path) -> Result<(), DriverError> {
    std::fs::create_dir_all(dir).map_err(|e| DriverError::Io(dir.display().to_string(), e.to_string()))
}

fn run_verb(args: &RunArgs, verb: &Command) -> Result<(), DriverError> {
    let cfg = args.load()?;
    let dir = &args.common.out;
    create_dir(dir)?;
    match verb {
        Command::Solve(_) => {
            let out = drivers::solve(&cfg)?;
            drivers::write_solve(&cfg, &out, dir)?;
            println!("{}", out.diagnostics);
        }
        Command::Convergence(_) => {
            let reports = drivers::convergence(&cfg, args.norm)?;
            drivers::write_reports(&cfg, &reports, dir, "convergence")?;
            for r in &reports {
                println!("{}", r.summary());
            }
        }
        Command::PmlSweep(_) => {
            let reports = drivers::pml_sweep(&cfg, args.norm)?;
            drivers::write_reports(&cfg, &reports, dir, "pml_sweep")?;
            for r in &reports {
                println!("{}", r.summary());
            }
        }
        Command::Validate(_) => unreachable!(),
    }
    Ok(())
}

fn run_validate(args: &ValidateArgs) -> i32 {
    if let Err(e) = create_dir(&args.common.out) {
        error!("{e}");
        return EXIT_CONFIG;
    }
    let outcomes = acceptance::run_selected(&args.only);
    let report = acceptance::report(&outcomes);
    print!("{report}");
    let path = args.common.out.join("acceptance.txt");
    if let Err(e) = std::fs::write(&path, &report) {
        error!("cannot write {}: {e}", path.display());
    }
    if acceptance::all_passed(&outcomes) {
        EXIT_OK
    } else {
        EXIT_ACCEPTANCE
    }
}

/// Parses `args` and runs the command, returning the process exit code.
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
    match &cli.command {
        Command::Validate(v) => {
            configure_threads(v.common.threads);
            run_validate(v)
        }
        Command::Solve(a) | Command::Convergence(a) | Command::PmlSweep(a) => {
            configure_threads(a.common.threads);
            match run_verb(a, &cli.command) {
                Ok(()) => EXIT_OK,
                Err(e) => {
                    error!("{e}");
                    eprintln!("error: {e}");
                    exit_code(&e)
                }
            }
        }
    }
}
