//! `pgsd` — batch driver for the PGSD/UCCSD variational pipeline.
//!
//! Subcommands: `scan` (dissociation curves), `select-as` (active-space
//! ranking), `resources` (circuit cost comparison), `noise-compare`
//! (noisy-simulator A/B runs). Exit codes: 0 success, 1 configuration or
//! usage error, 2 partial failure (some geometries failed; details are in
//! the output's error column).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use config::{geometry_from_path, RunConfig};

#[derive(Parser)]
#[command(
    name = "pgsd",
    version,
    about = "PGSD variational quantum chemistry toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dissociation scan: VQE energies against exact references per geometry
    Scan(CommonArgs),
    /// Rank candidate active spaces by correlation factor
    SelectAs(CommonArgs),
    /// Side-by-side PGSD/UCCSD gate and depth accounting
    Resources(CommonArgs),
    /// Noisy-simulator comparison of both ansatzes at their noiseless optima
    NoiseCompare(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key-value config file; flags below override its entries
    #[arg(long)]
    config: Option<PathBuf>,
    /// FCIDUMP integral file (repeatable; each adds one geometry, labelled
    /// by the file stem)
    #[arg(long)]
    fcidump: Vec<PathBuf>,
    /// Ansatz: pgsd or uccsd
    #[arg(long)]
    ansatz: Option<String>,
    /// Active electrons
    #[arg(long)]
    electrons: Option<usize>,
    /// Active orbital count (auto policy)
    #[arg(long)]
    orbitals: Option<usize>,
    /// Fixed active orbital list, e.g. 1,2,3,5,6
    #[arg(long, value_name = "i,j,k")]
    orbital_set: Option<String>,
    /// Active-space policy: auto (re-rank per geometry) or fixed
    #[arg(long)]
    policy: Option<String>,
    /// Optimizer mode: gradient or derivative-free
    #[arg(long)]
    optimizer: Option<String>,
    /// Energy convergence tolerance (Hartree)
    #[arg(long)]
    tol: Option<f64>,
    /// Optimizer iteration cap (noisy reoptimization in noise-compare)
    #[arg(long)]
    max_iter: Option<usize>,
    /// Shots per measurement group
    #[arg(long)]
    shots: Option<u64>,
    /// Noise rates p1,p2,p_readout
    #[arg(long, value_name = "p1,p2,pr")]
    noise: Option<String>,
    /// Independent noisy repetitions in noise-compare
    #[arg(long)]
    seeds: Option<u64>,
    /// External amplitude CSV for select-as (default: internal CI)
    #[arg(long)]
    amplitudes: Option<PathBuf>,
    /// Base random seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output CSV path
    #[arg(long)]
    out: Option<PathBuf>,
}

fn resolve_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        cfg.load_file(path)?;
    }
    for path in &args.fcidump {
        cfg.geometries.push(geometry_from_path(path));
    }
    if let Some(s) = &args.ansatz {
        cfg.ansatz = config::parse_ansatz(s)?;
    }
    if let Some(e) = args.electrons {
        cfg.electrons = Some(e);
    }
    if let Some(o) = args.orbitals {
        cfg.orbitals = Some(o);
    }
    if let Some(s) = &args.orbital_set {
        cfg.orbital_set = Some(config::parse_orbital_set(s)?);
    }
    if let Some(s) = &args.policy {
        cfg.policy = Some(config::parse_policy(s)?);
    }
    if let Some(s) = &args.optimizer {
        cfg.optimizer = config::parse_optimizer(s)?;
    }
    if let Some(t) = args.tol {
        cfg.tol = t;
    }
    if let Some(m) = args.max_iter {
        cfg.max_iter = Some(m);
    }
    if let Some(s) = args.shots {
        cfg.shots = s;
    }
    if let Some(n) = &args.noise {
        cfg.noise_rates = config::parse_noise_rates(n)?;
    }
    if let Some(k) = args.seeds {
        cfg.n_seeds = k;
    }
    if let Some(p) = &args.amplitudes {
        cfg.amplitudes = Some(p.clone());
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(p) = &args.out {
        cfg.out = Some(p.clone());
    }
    Ok(cfg)
}

fn run() -> Result<i32> {
    // Usage errors must exit 1, not clap's default 2.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let is_help = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            err.print().expect("cannot write to stderr");
            return Ok(if is_help { 0 } else { 1 });
        }
    };
    let (args, command): (&CommonArgs, fn(&RunConfig) -> Result<i32>) = match &cli.command {
        Command::Scan(a) => (a, commands::cmd_scan),
        Command::SelectAs(a) => (a, commands::cmd_select_as),
        Command::Resources(a) => (a, commands::cmd_resources),
        Command::NoiseCompare(a) => (a, commands::cmd_noise_compare),
    };
    let cfg = resolve_config(args)?;
    command(&cfg)
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code as u8),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}
