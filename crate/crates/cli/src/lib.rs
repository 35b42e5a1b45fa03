//! Command-line front end: argument parsing, configuration merging, worker
//! pool setup and output writing. The computations live in `deffusion_core`.

pub mod commands;
pub mod config;

use clap::{Args, Parser};
use serde_json::{json, Value};
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

pub use commands::{execute, CommandOutput, Status, Table};
pub use config::{GammaSpec, PotentialSpec, Resolved, RunConfig, Subcommand};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Environment variable giving the default number of worker threads.
pub const WORKERS_ENV: &str = "DEFF_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] deffusion_core::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 1 for I/O, 2 for invalid input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Core(_) => 2,
            CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "deffusion", version, about = "Effective diffusivity of Langevin dynamics in periodic potentials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Subcommand)]
enum Command {
    /// Spectral D_γ for each friction value.
    Deff {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gamma: GammaArg,
        #[command(flatten)]
        basis: BasisArgs,
        /// Also compute the spectral gap on a small dense basis.
        #[arg(long)]
        gap: bool,
        #[arg(long)]
        gap_nh: Option<usize>,
        #[arg(long)]
        gap_nk: Option<usize>,
    },
    /// Monte Carlo D_γ from the mean-square displacement.
    Mc {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gamma: GammaArg,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        record_stride: Option<usize>,
    },
    /// Period and action on the energy graph, and D*.
    Fw {
        #[command(flatten)]
        common: Common,
        /// Energies per edge in the table.
        #[arg(long)]
        points: Option<usize>,
        /// Upper energy for the rotational edges.
        #[arg(long)]
        z_max: Option<f64>,
    },
    /// Overdamped diffusivity, partition integrals and the large-γ expansion.
    Smol {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gamma: GammaArg,
        #[arg(long)]
        grid: Option<usize>,
    },
    /// Simulates the limiting diffusion on the energy graph.
    GraphSim {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        n_paths: Option<usize>,
        #[arg(long)]
        n_records: Option<usize>,
    },
    /// Checks D*/γ ≤ D_γ ≤ D̄/γ for each friction value.
    BoundsCheck {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gamma: GammaArg,
        #[command(flatten)]
        basis: BasisArgs,
    },
    /// Spectral gap of the discretized generator.
    Gap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gamma: GammaArg,
        #[command(flatten)]
        basis: BasisArgs,
    },
    /// Spectral, Monte Carlo and limiting values across a friction grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        gamma: GammaArg,
        #[command(flatten)]
        basis: BasisArgs,
        /// Monte Carlo paths per row; 0 skips the simulation.
        #[arg(long)]
        mc_paths: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Preset name (pendulum, zero), inline JSON, or @file.json.
    #[arg(long)]
    potential: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads [default: $DEFF_WORKERS, else all cores].
    #[arg(long)]
    workers: Option<usize>,
    /// CSV output path ('-' for standard output).
    #[arg(long)]
    csv: Option<PathBuf>,
    /// JSON output path [default: standard output].
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GammaArg {
    /// Friction values: repeatable, comma-separated, or lo:hi:n (geometric).
    #[arg(long = "gamma", allow_negative_numbers = true)]
    gamma: Vec<String>,
}

#[derive(Debug, Args)]
struct BasisArgs {
    /// Hermite levels [default: chosen from γ].
    #[arg(long)]
    nh: Option<usize>,
    /// Fourier wavenumbers [default: chosen from γ].
    #[arg(long)]
    nk: Option<usize>,
}

impl Common {
    fn flags(&self) -> Result<RunConfig, CliError> {
        Ok(RunConfig {
            potential: self.potential.as_deref().map(PotentialSpec::parse_flag).transpose()?,
            beta: self.beta,
            seed: self.seed,
            workers: self.workers,
            csv: self.csv.clone(),
            json: self.json.clone(),
            ..Default::default()
        })
    }
}

impl GammaArg {
    fn apply(&self, cfg: &mut RunConfig) {
        if !self.gamma.is_empty() {
            cfg.gamma = Some(GammaSpec::Text(self.gamma.join(",")));
        }
    }
}

impl BasisArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.nh = self.nh.or(cfg.nh);
        cfg.nk = self.nk.or(cfg.nk);
    }
}

impl Command {
    fn into_parts(self) -> Result<(Subcommand, Option<PathBuf>, RunConfig), CliError> {
        let (cmd, common, mut f) = match &self {
            Command::Deff { common, .. } => (Subcommand::Deff, common, common.flags()?),
            Command::Mc { common, .. } => (Subcommand::Mc, common, common.flags()?),
            Command::Fw { common, .. } => (Subcommand::Fw, common, common.flags()?),
            Command::Smol { common, .. } => (Subcommand::Smol, common, common.flags()?),
            Command::GraphSim { common, .. } => (Subcommand::GraphSim, common, common.flags()?),
            Command::BoundsCheck { common, .. } => (Subcommand::BoundsCheck, common, common.flags()?),
            Command::Gap { common, .. } => (Subcommand::Gap, common, common.flags()?),
            Command::Sweep { common, .. } => (Subcommand::Sweep, common, common.flags()?),
        };
        let config_path = common.config.clone();
        match &self {
            Command::Deff { gamma, basis, gap, gap_nh, gap_nk, .. } => {
                gamma.apply(&mut f);
                basis.apply(&mut f);
                f.gap = gap.then_some(true);
                f.gap_nh = *gap_nh;
                f.gap_nk = *gap_nk;
            }
            Command::Mc { gamma, dt, t_end, n_paths, record_stride, .. } => {
                gamma.apply(&mut f);
                f.dt = *dt;
                f.t_end = *t_end;
                f.n_paths = *n_paths;
                f.record_stride = *record_stride;
            }
            Command::Fw { points, z_max, .. } => {
                f.points = *points;
                f.z_max = *z_max;
            }
            Command::Smol { gamma, grid, .. } => {
                gamma.apply(&mut f);
                f.grid = *grid;
            }
            Command::GraphSim { t_end, dt, n_paths, n_records, .. } => {
                f.t_end = *t_end;
                f.dt = *dt;
                f.n_paths = *n_paths;
                f.n_records = *n_records;
            }
            Command::BoundsCheck { gamma, basis, .. } | Command::Gap { gamma, basis, .. } => {
                gamma.apply(&mut f);
                basis.apply(&mut f);
            }
            Command::Sweep { gamma, basis, mc_paths, .. } => {
                gamma.apply(&mut f);
                basis.apply(&mut f);
                f.mc_paths = *mc_paths;
            }
        }
        Ok((cmd, config_path, f))
    }
}

/// Parses arguments (including the program name) into a resolved
/// configuration.
pub fn resolve_args<I, T>(args: I) -> Result<Resolved, ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(ParseOutcome::Clap)?;
    let inner = || -> Result<Resolved, CliError> {
        let (cmd, path, flags) = cli.command.into_parts()?;
        let file = match path {
            Some(p) => RunConfig::from_file(&p)?,
            None => RunConfig::default(),
        };
        let mut merged = file.overridden_by(flags);
        if merged.workers.is_none() {
            merged.workers = workers_from_env()?;
        }
        merged.resolve(cmd)
    };
    inner().map_err(ParseOutcome::Error)
}

#[derive(Debug)]
pub enum ParseOutcome {
    Clap(clap::Error),
    Error(CliError),
}

fn workers_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(WORKERS_ENV) {
        Ok(s) if !s.trim().is_empty() => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| CliError::Usage(format!("{WORKERS_ENV} must be a positive integer, got '{s}'"))),
        _ => Ok(None),
    }
}

/// Runs `execute` on a pool of the configured size.
pub fn execute_with_workers(r: &Resolved) -> Result<CommandOutput, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = r.config.workers {
        if w == 0 {
            return Err(CliError::Usage("workers must be positive".into()));
        }
        builder = builder.num_threads(w);
    }
    let pool = builder.build().map_err(|e| CliError::Io(format!("cannot start worker pool: {e}")))?;
    pool.install(|| execute(r))
}

/// The JSON document written for every successful run.
pub fn envelope(r: &Resolved, out: &CommandOutput) -> Value {
    json!({
        "version": VERSION,
        "command": r.cmd.name(),
        "seed": r.seed(),
        "status": out.status.as_str(),
        "config": r.config,
        "result": out.result,
    })
}

pub fn write_csv<W: Write>(table: &Table, w: W) -> Result<(), CliError> {
    let io = |e: csv::Error| CliError::Io(e.to_string());
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(&table.header).map_err(io)?;
    for row in &table.rows {
        wr.write_record(row).map_err(io)?;
    }
    wr.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn open(path: &Path) -> Result<Box<dyn Write>, CliError> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(std::io::stdout().lock()));
    }
    let f = std::fs::File::create(path).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(Box::new(std::io::BufWriter::new(f)))
}

fn emit(r: &Resolved, out: &CommandOutput) -> Result<(), CliError> {
    if let (Some(path), Some(table)) = (&r.config.csv, &out.table) {
        write_csv(table, open(path)?)?;
    }
    let text = serde_json::to_string_pretty(&envelope(r, out)).expect("JSON values always serialize");
    let mut w = match &r.config.json {
        Some(p) => open(p)?,
        None => Box::new(std::io::stdout().lock()),
    };
    writeln!(w, "{text}").and_then(|_| w.flush()).map_err(|e| CliError::Io(e.to_string()))
}

/// Entry point. Exit codes: 0 success, 1 failed check or I/O error,
/// 2 invalid input, 3 numerical non-convergence.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let r = match resolve_args(args) {
        Ok(r) => r,
        Err(ParseOutcome::Clap(e)) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
        Err(ParseOutcome::Error(e)) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let result = execute_with_workers(&r).and_then(|out| emit(&r, &out).map(|_| out.status));
    match result {
        Ok(Status::Ok) => 0,
        Ok(Status::CheckFailed) => {
            eprintln!("error: check failed");
            1
        }
        Ok(Status::RowsFailed) => {
            eprintln!("error: some rows failed to converge");
            3
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
