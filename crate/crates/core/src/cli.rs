//! Command-line front end: `fit`, `simulate`, `bands` and `report`.

use crate::event_model::{
    derive_stats_with, parse_transactions_with_report, IncompletePolicy, ParseOptions, TransactionLog,
};
use crate::generator::{simulate_log, SimSpec, Truth};
use crate::inference::{fit_stats, FitConfig, FitResult};
use crate::io::{
    atomic_write, bands_csv, initial_csv, labels_csv, transitions_csv, truth_from_json, truth_to_json, FitDocument,
};
use crate::likelihood::Mode;
use crate::metrics::adjusted_rand_index;
use crate::uncertainty::{observed_info, rate_bands, time_grid};
use crate::{CsbmError, PLAY_CLOCK};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "csbm", version, about = "Continuous-time stochastic block models for pass logs")]
pub struct Cli {
    /// Worker threads for restarts and simulation.
    #[arg(long, env = "CSBM_THREADS", global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the model to a log and write the result and report tables.
    Fit(FitArgs),
    /// Simulate a log from a model specification.
    Simulate(SimulateArgs),
    /// Recompute rate confidence bands for a saved fit.
    Bands(BandsArgs),
    /// Print a summary of a saved fit.
    Report(ReportArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModeArg {
    Simplified,
    General,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum IncompleteArg {
    /// Drop plays that stop without an outcome.
    Exclude,
    /// Censor the open possession at the last event.
    LastEvent,
    /// Censor the open possession at the end of the play clock.
    Clock,
}

impl From<IncompleteArg> for IncompletePolicy {
    fn from(arg: IncompleteArg) -> Self {
        match arg {
            IncompleteArg::Exclude => IncompletePolicy::Exclude,
            IncompleteArg::LastEvent => IncompletePolicy::CloseAtLastEvent,
            IncompleteArg::Clock => IncompletePolicy::CloseAt(PLAY_CLOCK),
        }
    }
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Transaction log CSV.
    #[arg(long)]
    pub input: PathBuf,
    /// Drop plays containing unknown event tokens instead of failing.
    #[arg(long)]
    pub skip_unknown: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long)]
    pub seed: u64,
    /// TOML file with fit settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, short = 'k')]
    pub clusters: Option<usize>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    #[arg(long)]
    pub em_max_iters: Option<usize>,
    #[arg(long)]
    pub gibbs_burnin: Option<usize>,
    #[arg(long)]
    pub gibbs_samples: Option<usize>,
    #[arg(long)]
    pub plus_max_steps: Option<usize>,
    #[arg(long, value_enum)]
    pub incomplete: Option<IncompleteArg>,
    /// Truth sidecar from `simulate`; adds the adjusted Rand index to the report.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model specification (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub n_plays: usize,
    #[arg(long)]
    pub seed: u64,
    /// Output log CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Output truth sidecar (JSON).
    #[arg(long)]
    pub truth: PathBuf,
}

#[derive(Debug, Args)]
pub struct BandsArgs {
    /// Fit document written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long, default_value_t = 0.1)]
    pub grid_step: f64,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub truth: Option<PathBuf>,
}

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<CsbmError> for CliError {
    fn from(err: CsbmError) -> Self {
        let code = match err {
            CsbmError::Infeasible(_) | CsbmError::RootNotBracketed { .. } => EXIT_INFEASIBLE,
            _ => EXIT_INPUT,
        };
        CliError { code, message: err.to_string() }
    }
}

fn input_error(message: String) -> CliError {
    CliError { code: EXIT_INPUT, message }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    atomic_write(path, text.as_bytes()).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn load_log(args: &InputArgs) -> Result<TransactionLog, CliError> {
    let text = read(&args.input)?;
    let options = ParseOptions { skip_unknown: args.skip_unknown };
    let (log, report) = parse_transactions_with_report(text.as_bytes(), &options)
        .map_err(|e| input_error(format!("{}: {e}", args.input.display())))?;
    for (play, reason) in &report.skipped_plays {
        eprintln!("skipped play {play}: {reason}");
    }
    Ok(log)
}

/// Settings from the optional config file, overridden by flags.
pub fn fit_config(args: &FitArgs) -> Result<FitConfig, CliError> {
    let mut config = match &args.config {
        Some(path) => {
            toml::from_str::<FitConfig>(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))?
        }
        None => FitConfig::default(),
    };
    config.seed = args.seed;
    if let Some(k) = args.clusters {
        config.k = k;
    }
    if let Some(v) = args.restarts {
        config.n_restarts = v;
    }
    if let Some(mode) = args.mode {
        config.mode = match mode {
            ModeArg::Simplified => Mode::Simplified,
            ModeArg::General => Mode::General,
        };
    }
    if let Some(v) = args.em_max_iters {
        config.em_max_iters = v;
    }
    if let Some(v) = args.gibbs_burnin {
        config.gibbs_burnin = v;
    }
    if let Some(v) = args.gibbs_samples {
        config.gibbs_samples = v;
    }
    if let Some(v) = args.plus_max_steps {
        config.plus_max_steps = v;
    }
    if let Some(v) = args.incomplete {
        config.stats.incomplete = v.into();
    }
    config.validate()?;
    Ok(config)
}

/// Adjusted Rand index of `labels` (indexed like `players`) against the
/// truth, over the players the truth knows.
pub fn truth_ari(truth: &Truth, players: &[String], labels: &[usize]) -> Option<f64> {
    let (mut fitted, mut actual) = (Vec::new(), Vec::new());
    for (p, &e) in players.iter().zip(labels) {
        if let Some(i) = truth.players.iter().position(|q| q == p) {
            fitted.push(e);
            actual.push(truth.labels[i]);
        }
    }
    (!fitted.is_empty()).then(|| adjusted_rand_index(&fitted, &actual))
}

/// Human-readable summary of a fit.
pub fn report_text(doc: &FitDocument, truth: Option<&Truth>) -> String {
    let result: &FitResult = &doc.result;
    let params = &result.params;
    let mut out = String::new();
    let _ = writeln!(out, "csbm {} fit, K = {}, mode = {:?}", doc.tool_version, params.k, params.mode());
    let _ = writeln!(out, "log-likelihood: {}", result.loglik);
    let sizes: Vec<usize> = (0..params.k).map(|c| result.labels.hard.iter().filter(|&&e| e == c).count()).collect();
    let _ = writeln!(out, "cluster sizes: {sizes:?}");
    let _ = writeln!(out, "pi: {:?}", params.pi);
    for r in &result.restarts {
        match (&r.loglik, &r.error) {
            (Some(ll), _) => {
                let _ = writeln!(
                    out,
                    "restart {} (seed {}): loglik {ll}, {} EM iterations, {} Plus steps",
                    r.restart, r.seed, r.em_iters, r.plus_steps
                );
            }
            (None, err) => {
                let _ =
                    writeln!(out, "restart {} (seed {}): failed: {}", r.restart, r.seed, err.as_deref().unwrap_or(""));
            }
        }
    }
    if let Some(ari) = truth.and_then(|t| truth_ari(t, &doc.players, &result.labels.hard)) {
        let _ = writeln!(out, "adjusted Rand index vs truth: {ari}");
    }
    out.push_str("\ncluster labels\n");
    out.push_str(&labels_csv(&doc.players, &result.labels.hard));
    out.push_str("\ninitial-action probabilities\n");
    out.push_str(&initial_csv(params));
    out.push_str("\ntransitions\n");
    out.push_str(&transitions_csv(params));
    out
}

fn cmd_fit(args: &FitArgs) -> Result<(), CliError> {
    let config = fit_config(args)?;
    let log = load_log(&args.input)?;
    let truth = match &args.truth {
        Some(path) => Some(truth_from_json(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let stats = derive_stats_with(&log, &config.stats)?;
    let result = fit_stats(&stats, &config)?;

    let info = observed_info(&stats, &result.labels, &result.params)?;
    let grid = time_grid(0.0, PLAY_CLOCK, args.grid_step)?;
    let bands = rate_bands(&result.params, &info, &grid, args.level)?;
    let doc = FitDocument::new(config, log.players.clone(), result);

    fs::create_dir_all(&args.out_dir).map_err(|e| input_error(format!("{}: {e}", args.out_dir.display())))?;
    let dir = &args.out_dir;
    write(&dir.join("fit.json"), &doc.to_json()?)?;
    write(&dir.join("labels.csv"), &labels_csv(&doc.players, &doc.result.labels.hard))?;
    write(&dir.join("initial.csv"), &initial_csv(&doc.result.params))?;
    write(&dir.join("transitions.csv"), &transitions_csv(&doc.result.params))?;
    write(&dir.join("rates.csv"), &bands_csv(&bands))?;
    write(&dir.join("report.txt"), &report_text(&doc, truth.as_ref()))?;
    Ok(())
}

fn cmd_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let spec: SimSpec =
        serde_json::from_str(&read(&args.spec)?).map_err(|e| input_error(format!("{}: {e}", args.spec.display())))?;
    spec.validate().map_err(|e| input_error(format!("{}: {e}", args.spec.display())))?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let log = simulate_log(&spec, args.n_plays, &mut rng)?;
    write(&args.out, &log.to_csv_string())?;
    write(&args.truth, &truth_to_json(&spec.truth())?)?;
    Ok(())
}

fn load_fit(path: &Path) -> Result<FitDocument, CliError> {
    FitDocument::from_json(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))
}

fn cmd_bands(args: &BandsArgs) -> Result<(), CliError> {
    let doc = load_fit(&args.fit)?;
    let log = load_log(&args.input)?;
    if log.players != doc.players {
        return Err(input_error("the log's players differ from the fitted roster".into()));
    }
    let stats = derive_stats_with(&log, &doc.config.stats)?;
    let info = observed_info(&stats, &doc.result.labels, &doc.result.params)?;
    let grid = time_grid(0.0, PLAY_CLOCK, args.grid_step)?;
    let bands = rate_bands(&doc.result.params, &info, &grid, args.level)?;
    if !bands.singular.is_empty() {
        eprintln!("singular information for rate rows {:?}; bands use the pseudo-inverse", bands.singular);
    }
    write(&args.out, &bands_csv(&bands))
}

fn cmd_report(args: &ReportArgs) -> Result<(), CliError> {
    let doc = load_fit(&args.fit)?;
    let truth = match &args.truth {
        Some(path) => Some(truth_from_json(&read(path)?).map_err(|e| input_error(format!("{}: {e}", path.display())))?),
        None => None,
    };
    print!("{}", report_text(&doc, truth.as_ref()));
    Ok(())
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    match &cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bands(args) => cmd_bands(args),
        Command::Report(args) => cmd_report(args),
    }
}

/// Parses `std::env::args`, runs, and returns the exit code.
pub fn main_exit_code() -> i32 {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {}", err.message);
            err.code
        }
    }
}
