//! `nvq` command-line driver: configuration, dispatch and table output.

pub mod commands;
pub mod config;
pub mod table;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, CONFIG_ENV};

/// Exit status: 2 for requests that cannot be satisfied, 1 for internal errors.
#[derive(Clone, Debug, PartialEq)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn request(message: String) -> Self {
        Failure { code: 2, message }
    }

    pub fn internal(message: String) -> Self {
        Failure { code: 1, message }
    }
}

impl From<nvq_core::Error> for Failure {
    fn from(e: nvq_core::Error) -> Self {
        use nvq_core::Error::*;
        let code = match e {
            InvalidArgument(_) | NoSolution { .. } | Domain(_) | InvalidPoint(_) | CycleInfeasible { .. } | Refused(_) => 2,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

#[derive(Parser, Debug)]
#[command(name = "nvq", version, about = "Exact thermodynamics of an asymmetric NV-ensemble / pairing-qubit model")]
pub struct Cli {
    /// Config file (flat JSON or key = value lines); defaults to $NVQ_CONFIG.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Override one config key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Default, Clone)]
pub struct GridArgs {
    /// Temperatures (GHz): lo:hi:n or a,b,c.
    #[arg(long = "t-grid")]
    pub t: Option<String>,
    #[arg(long = "alpha-grid")]
    pub alpha: Option<String>,
    #[arg(long = "g-grid")]
    pub g: Option<String>,
    /// Cycle entropies.
    #[arg(long = "s-grid")]
    pub s: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Block spectra along the alpha grid.
    Spectrum(GridArgs),
    /// Exceptional points along a sweep, and the first EPs about alpha = 1 per coupling.
    Eps(GridArgs),
    /// Critical temperature over the (g, alpha) grid.
    TcMap(GridArgs),
    /// Potentials and pairing gap over the (alpha, T) grid.
    Thermo(GridArgs),
    /// Free-energy isotherms, minima, inflections and binodals.
    Spinodal(GridArgs),
    /// Carnot or Stirling efficiency grid.
    Cycle {
        #[command(flatten)]
        grids: GridArgs,
        /// carnot | stirling
        #[arg(long)]
        kind: Option<String>,
    },
    /// Fit of the pairing rescaling factor.
    RescaleFit,
    /// Brute-force Fock-space comparison at a tiny size.
    OracleCheck,
    /// Block labels, dimensions and multiplicities.
    BlocksDump,
}

fn resolve(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::default();
    let path = cli.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    if let Some(p) = path {
        cfg.load(&p)?;
    }
    for pair in &cli.set {
        cfg.set_pair(pair)?;
    }
    let grids = match &cli.command {
        Command::Spectrum(g)
        | Command::Eps(g)
        | Command::TcMap(g)
        | Command::Thermo(g)
        | Command::Spinodal(g)
        | Command::Cycle { grids: g, .. } => Some(g),
        _ => None,
    };
    if let Some(g) = grids {
        for (key, v) in [("grid.T", &g.t), ("grid.alpha", &g.alpha), ("grid.g", &g.g), ("grid.S", &g.s)] {
            if let Some(v) = v {
                cfg.set(key, v)?;
            }
        }
    }
    if let Command::Cycle { kind: Some(k), .. } = &cli.command {
        cfg.set("cycle.kind", k)?;
    }
    Ok(cfg)
}

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("nvq: {}", f.message);
            f.code
        }
    }
}

fn execute(cli: &Cli) -> Result<(), Failure> {
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Failure::request("--workers must be positive".into()));
        }
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let cfg = resolve(cli)?;
    commands::dispatch(&cli.command, &cfg, &cli.out)
}
