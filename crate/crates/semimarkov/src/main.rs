//! Command-line front end. Exit codes: 0 success, 2 configuration or
//! validation error, 3 numerical guard trip.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use semimarkov::embedding::{EmbeddedModel, EmbeddingError};
use semimarkov::estimate::EstimationRun;
use semimarkov::filter::{run_filter, FilterError, InitMode};
use semimarkov::io::{self, IoError};
use semimarkov::model::ObservationModel;
use semimarkov::simulate::simulate_path;
use semimarkov::smoother::smooth_run;

#[derive(Parser)]
#[command(
    name = "semimarkov",
    about = "Simulate, filter, smooth, and estimate hidden semi-Markov chains",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum)]
enum InitArg {
    /// q_0 ∝ B(y_0) p_0 (the first observation is absorbed).
    #[default]
    Bayes0,
    /// q_0 = p_0 (y_0 left unused by the recursion).
    Prior,
}

impl From<InitArg> for InitMode {
    fn from(value: InitArg) -> Self {
        match value {
            InitArg::Bayes0 => InitMode::Bayes0,
            InitArg::Prior => InitMode::Prior,
        }
    }
}

#[derive(Args)]
struct FilterIo {
    /// Model JSON file.
    #[arg(long)]
    model: PathBuf,
    /// Observations CSV (any file with a `y` column, e.g. simulate output).
    #[arg(long)]
    obs: PathBuf,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Filter initialization.
    #[arg(long, value_enum, default_value_t = InitArg::Bayes0)]
    init: InitArg,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a path and emit `k,state,h[,y]` CSV.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        /// Number of steps T; the path has T+1 points.
        #[arg(long)]
        horizon: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the forward filter; emit `k,hhat,map_state,post_*,log_norm`.
    Filter(FilterIo),
    /// Run the forward-backward smoother; emit `k,smoothed_*`.
    Smooth(FilterIo),
    /// Run the recursive statistics and re-estimates; emit JSON.
    Estimate(FilterIo),
    /// Run the exact embedded filter; emit `k,i,posterior` marginals plus a
    /// `.lognorm.csv` sidecar.
    EmbedFilter(FilterIo),
    /// Run the approximate and embedded filters and report their
    /// divergence.
    Crosscheck(FilterIo),
}

enum CliError {
    Config(String),
    Guard(String),
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FilterError> for CliError {
    fn from(e: FilterError) -> Self {
        match e {
            FilterError::MassUnderflow { .. } => CliError::Guard(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<EmbeddingError> for CliError {
    fn from(e: EmbeddingError) -> Self {
        match e {
            EmbeddingError::MassUnderflow { .. } | EmbeddingError::TooManyPaths { .. } => {
                CliError::Guard(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Guard(message)) => {
            eprintln!("numerical guard: {message}");
            ExitCode::from(3)
        }
    }
}

fn writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>, CliError> {
    match out {
        Some(path) => {
            let file = File::create(path)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(std::io::stdout().lock())),
    }
}

fn require_observation_model(obs: Option<ObservationModel>) -> Result<ObservationModel, CliError> {
    obs.ok_or_else(|| CliError::Config("model JSON has no `observation` section".into()))
}

fn write_failed(e: std::io::Error) -> CliError {
    CliError::Config(format!("write failed: {e}"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            model,
            horizon,
            seed,
            out,
        } => {
            let (model, obs) = io::load_model(&model)?;
            let mut path = simulate_path(&model, horizon, seed);
            if let Some(obs) = obs {
                path = path.with_observations(&obs, seed);
            }
            io::write_simulation_csv(writer(&out)?, &path).map_err(write_failed)
        }
        Command::Filter(args) => {
            let (model, obs) = io::load_model(&args.model)?;
            let obs = require_observation_model(obs)?;
            let y = io::read_observations(&args.obs)?;
            let states = run_filter(&model, &obs, &y, args.init.into())?;
            io::write_filter_csv(writer(&args.out)?, &states).map_err(write_failed)
        }
        Command::Smooth(args) => {
            let (model, obs) = io::load_model(&args.model)?;
            let obs = require_observation_model(obs)?;
            let y = io::read_observations(&args.obs)?;
            let (_, pass) = smooth_run(&model, &obs, &y, args.init.into())?;
            io::write_smoothed_csv(writer(&args.out)?, &pass.smoothed).map_err(write_failed)
        }
        Command::Estimate(args) => {
            let (model, obs) = io::load_model(&args.model)?;
            let obs = require_observation_model(obs)?;
            let y = io::read_observations(&args.obs)?;
            let run = EstimationRun::run(&model, &obs, &y, args.init.into())?;
            let est = run.reestimate();
            io::write_reestimates_json(writer(&args.out)?, &est).map_err(write_failed)?;
            if !est.undefined_states.is_empty() {
                return Err(CliError::Guard(format!(
                    "states {:?} were never visited; their re-estimates are undefined",
                    est.undefined_states
                )));
            }
            Ok(())
        }
        Command::EmbedFilter(args) => {
            let (model, obs) = io::load_model(&args.model)?;
            let obs = require_observation_model(obs)?;
            let y = io::read_observations(&args.obs)?;
            let em = EmbeddedModel::new(&model);
            let out = em.filter(&model, &obs, &y, args.init.into())?;
            io::write_marginals_csv(writer(&args.out)?, &out.state_marginals())
                .map_err(write_failed)?;
            if let Some(path) = &args.out {
                let sidecar = sidecar_path(path);
                let file = File::create(&sidecar)
                    .map_err(|e| CliError::Config(format!("{}: {e}", sidecar.display())))?;
                io::write_log_norm_csv(BufWriter::new(file), &out.log_likelihood)
                    .map_err(write_failed)?;
            }
            Ok(())
        }
        Command::Crosscheck(args) => {
            let (model, obs) = io::load_model(&args.model)?;
            let obs = require_observation_model(obs)?;
            let y = io::read_observations(&args.obs)?;
            let init: InitMode = args.init.into();
            let states = run_filter(&model, &obs, &y, init)?;
            let em = EmbeddedModel::new(&model);
            let exact = em.filter(&model, &obs, &y, init)?;
            let exact = exact.state_marginals();

            let mut max_tv = 0.0f64;
            let mut worst_step = 0usize;
            let mut per_step = Vec::with_capacity(states.len());
            for (k, (state, marginal)) in states.iter().zip(&exact).enumerate() {
                let tv = 0.5
                    * state
                        .posterior
                        .iter()
                        .zip(marginal)
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>();
                if tv > max_tv {
                    max_tv = tv;
                    worst_step = k;
                }
                per_step.push(tv);
            }
            println!("steps: {}", per_step.len());
            println!("max_total_variation: {}", io::fmt_float(max_tv));
            println!("worst_step: {worst_step}");
            if let Some(path) = &args.out {
                let report = serde_json::json!({
                    "max_total_variation": max_tv,
                    "worst_step": worst_step,
                    "per_step": per_step,
                });
                let file = File::create(path)
                    .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
                serde_json::to_writer_pretty(BufWriter::new(file), &report)
                    .map_err(|e| CliError::Config(format!("write failed: {e}")))?;
            }
            Ok(())
        }
    }
}

fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".lognorm.csv");
    out.with_file_name(name)
}
