//! `ising-lab`: exact checks, correlation inequalities and Monte Carlo
//! studies for the long-range Ising chain and its jump-process limit.
//!
//! Exit status: 0 on success, 1 when a verification check fails, 2 for
//! invalid configuration or domain errors, 3 for numerical failures.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use ising_lab::continuum::DiscreteMethod;
use ising_lab::inequalities::Engine;
use ising_lab::{Execution, Kernel};
use serde::de::DeserializeOwned;

use config::{Common, FileConfig, Quantity, ScanMethod, DEFAULT_SEED, DEFAULT_SHARDS};

pub const WORKERS_ENV: &str = "ISING_LAB_WORKERS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] ising_lab::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use ising_lab::Error as E;
        match self {
            CliError::Config(_) | CliError::Core(E::Domain(_) | E::Capacity { .. }) => 2,
            CliError::Core(E::Numerical(_) | E::DegenerateWeights(_)) | CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "ising-lab", version, about = "Long-range Ising chain and jump-process toolkit")]
struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    shards: Option<usize>,
    /// Worker threads for the parallel pool (default: $ISING_LAB_WORKERS, then all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_parser = parse_enum::<Execution>)]
    execution: Option<Execution>,
    /// Output file (default: stdout). Nothing is written if the run fails.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the randomized inequality suite (JSON lines; summary CSV on stderr).
    Verify(VerifyArgs),
    /// Exact partition function and correlations of a pair coupling.
    Exact(ExactArgs),
    /// Discrete-to-continuum convergence table (CSV).
    ContinuumStudy(ContinuumArgs),
    /// Jump-process Monte Carlo estimates (JSON lines).
    Mc(McArgs),
    /// Susceptibility against the horizon T (CSV).
    SusceptibilityScan(ScanArgs),
    /// Correlation-sum bound checks (JSON lines).
    Corbound(CorboundArgs),
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Instances per randomized family.
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    no_corbound_grid: bool,
    /// Also write the summary CSV here.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExactArgs {
    /// Pair strengths w_1,w_2,...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    w: Option<Vec<f64>>,
    #[arg(long)]
    half_width: Option<usize>,
    /// One query <σ_A>, sites comma separated; repeat for more.
    #[arg(long = "sites", value_parser = parse_sites, allow_hyphen_values = true)]
    sites: Vec<Vec<i64>>,
    #[arg(long, value_parser = parse_enum::<Engine>)]
    engine: Option<Engine>,
}

#[derive(Args, Debug)]
struct ContinuumArgs {
    /// Kernel as JSON, e.g. '{"family":"exponential","a":0.01,"b":1}'.
    #[arg(long, value_parser = config::parse_kernel)]
    kernel: Option<Kernel>,
    #[arg(long)]
    horizon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    deltas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, value_parser = parse_enum::<DiscreteMethod>)]
    method: Option<DiscreteMethod>,
    #[arg(long)]
    no_jump_reference: bool,
    #[arg(long)]
    susceptibility: bool,
    /// Also estimate the probability of two sign changes closer than this gap.
    #[arg(long)]
    epsilon_gap: Option<f64>,
}

#[derive(Args, Debug)]
struct McArgs {
    #[arg(long, value_parser = config::parse_kernel)]
    kernel: Option<Kernel>,
    #[arg(long = "T", alias = "horizons", value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    intensity: Option<f64>,
    #[arg(long, value_delimiter = ',', value_enum)]
    quantities: Option<Vec<Quantity>>,
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    times: Option<Vec<f64>>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[arg(long, value_parser = config::parse_kernel)]
    kernel: Option<Kernel>,
    #[arg(long = "T", alias = "horizons", value_delimiter = ',')]
    horizons: Option<Vec<f64>>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    intensity: Option<f64>,
    #[arg(long, value_enum)]
    method: Option<ScanMethod>,
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug)]
struct CorboundArgs {
    /// Check one point with these strengths instead of the configured points.
    #[arg(long, value_delimiter = ',')]
    w: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 1.01)]
    d: f64,
    #[arg(long, default_value_t = 2000)]
    half_width: usize,
    #[arg(long, default_value_t = 1500)]
    truncation: usize,
    #[arg(long, value_parser = parse_enum::<Engine>, default_value = "auto")]
    engine: Engine,
}

fn parse_enum<T: DeserializeOwned>(s: &str) -> Result<T, String> {
    serde_json::from_value(serde_json::Value::String(s.to_owned())).map_err(|e| e.to_string())
}

fn parse_sites(s: &str) -> Result<Vec<i64>, String> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| p.trim().parse::<i64>().map_err(|e| format!("bad site {p:?}: {e}")))
        .collect()
}

fn set_opt<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn common(cli: &Cli, file: &FileConfig) -> Result<Common, CliError> {
    let workers = match cli.workers.or(file.workers) {
        Some(n) => Some(n),
        None => match std::env::var(WORKERS_ENV) {
            Ok(v) => Some(
                v.trim()
                    .parse()
                    .map_err(|_| CliError::Config(format!("{WORKERS_ENV}={v:?} is not a thread count")))?,
            ),
            Err(_) => None,
        },
    };
    let shards = cli.shards.or(file.shards).unwrap_or(DEFAULT_SHARDS);
    if shards == 0 {
        return Err(CliError::Config("shards must be at least 1".into()));
    }
    if workers == Some(0) {
        return Err(CliError::Config("workers must be at least 1".into()));
    }
    Ok(Common {
        seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        shards,
        workers,
        execution: cli.execution.or(file.execution).unwrap_or_default(),
    })
}

fn run(cli: Cli) -> Result<output::Document, CliError> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let common = common(&cli, &file)?;
    if let Some(n) = common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {n} workers: {e}")))?;
    }
    match cli.command {
        Command::Verify(a) => {
            let mut cfg = file.verify;
            if let Some(n) = a.instances {
                cfg.gks_instances = n;
                cfg.lemma36_instances = n;
                cfg.uncoupled_instances = n;
                cfg.monotonicity_instances = n;
            }
            if a.no_corbound_grid {
                cfg.include_corbound_grid = false;
            }
            commands::verify(&common, cfg, a.summary.as_deref())
        }
        Command::Exact(a) => {
            let mut cfg = file.exact;
            if let Some(w) = a.w {
                cfg.w = ising_lab::ising::PairCoupling::new(w)?;
            }
            set_opt(&mut cfg.half_width, a.half_width);
            if !a.sites.is_empty() {
                cfg.sites = a.sites;
            }
            set_opt(&mut cfg.engine, a.engine);
            commands::exact(&common, cfg)
        }
        Command::ContinuumStudy(a) => {
            let mut cfg = file.continuum_study;
            set_opt(&mut cfg.kernel, a.kernel);
            set_opt(&mut cfg.horizon, a.horizon);
            set_opt(&mut cfg.deltas, a.deltas);
            set_opt(&mut cfg.times, a.times);
            set_opt(&mut cfg.samples, a.samples);
            set_opt(&mut cfg.method, a.method);
            if a.no_jump_reference {
                cfg.jump_reference = false;
            }
            if a.susceptibility {
                cfg.susceptibility = true;
            }
            if a.epsilon_gap.is_some() {
                cfg.epsilon_gap = a.epsilon_gap;
            }
            commands::continuum_study(&common, cfg)
        }
        Command::Mc(a) => {
            let mut cfg = file.mc;
            set_opt(&mut cfg.kernel, a.kernel);
            set_opt(&mut cfg.horizons, a.horizons);
            set_opt(&mut cfg.samples, a.samples);
            set_opt(&mut cfg.intensity, a.intensity);
            set_opt(&mut cfg.quantities, a.quantities);
            set_opt(&mut cfg.mu, a.mu);
            set_opt(&mut cfg.h, a.h);
            set_opt(&mut cfg.times, a.times);
            commands::mc(&common, cfg)
        }
        Command::SusceptibilityScan(a) => {
            let mut cfg = file.susceptibility_scan;
            set_opt(&mut cfg.kernel, a.kernel);
            set_opt(&mut cfg.horizons, a.horizons);
            set_opt(&mut cfg.samples, a.samples);
            set_opt(&mut cfg.intensity, a.intensity);
            set_opt(&mut cfg.method, a.method);
            set_opt(&mut cfg.h, a.h);
            commands::susceptibility_scan(&common, cfg)
        }
        Command::Corbound(a) => {
            let mut cfg = file.corbound;
            if let Some(w) = a.w {
                let mut point = ising_lab::inequalities::CorBoundConfig::new(
                    ising_lab::ising::PairCoupling::new(w)?,
                    a.epsilon,
                    a.half_width,
                    a.truncation,
                );
                point.d = a.d;
                point.engine = a.engine;
                cfg.points = vec![point];
            }
            commands::corbound(&common, cfg)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let out = cli.out.clone();
    let start = Instant::now();
    let result = run(cli).and_then(|doc| {
        let text = doc.render(start.elapsed().as_secs_f64());
        output::write(&text, out.as_deref())?;
        Ok(doc.failures)
    });
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(n) => {
            eprintln!("ising-lab: {n} check(s) failed");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("ising-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
