use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kqi::config::split_list;
use kqi::stages;
use kqi::{ConfigFile, Error, RunConfig};

#[derive(Parser)]
#[command(name = "kqi", version, about = "Estimate video-streaming KQIs from network KPIs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate the measurement campaign into dataset.csv
    Generate,
    /// Clean, aggregate, split and scale dataset.csv
    Prepare,
    /// Grid-search every (KQI, strategy, family) and store the best models
    Train,
    /// Score stored models on the test split and write reports
    Evaluate,
    /// Run generate, prepare, train and evaluate in order
    All,
}

#[derive(Args)]
struct Opts {
    /// TOML config file; flags override its keys
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of none,fs,fe
    #[arg(long, global = true)]
    strategies: Option<String>,
    /// Comma-separated subset of rf,rr,svr,knr,nn,abr
    #[arg(long, global = true)]
    families: Option<String>,
    /// Comma-separated KQI column names
    #[arg(long, global = true)]
    kqis: Option<String>,
    /// per_session or per_sample
    #[arg(long, global = true)]
    granularity: Option<String>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Experiments per scenario configuration
    #[arg(long, global = true)]
    experiments: Option<usize>,
    /// Fit models to standardized targets
    #[arg(long, global = true)]
    standardize_target: bool,
}

impl Opts {
    fn overrides(&self) -> ConfigFile {
        ConfigFile {
            seed: self.seed,
            out: self.out.clone(),
            workers: self.workers,
            granularity: self.granularity.clone(),
            strategies: self.strategies.as_deref().map(split_list),
            families: self.families.as_deref().map(split_list),
            kqis: self.kqis.as_deref().map(split_list),
            experiments: self.experiments,
            standardize_target: self.standardize_target.then_some(true),
            ..Default::default()
        }
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    let base = match &cli.opts.config {
        Some(p) => ConfigFile::load(p)?,
        None => ConfigFile::default(),
    };
    let cfg = RunConfig::resolve(base.overlay(cli.opts.overrides()))?;
    match cli.command {
        Command::Generate => {
            let m = stages::cmd_generate(&cfg)?;
            println!("wrote {} samples", m.n_samples);
        }
        Command::Prepare => {
            let m = stages::cmd_prepare(&cfg)?;
            println!("prepared {} train and {} test rows", m.n_train, m.n_test);
        }
        Command::Train => {
            let e = stages::cmd_train(&cfg)?;
            println!("trained {} models", e.len());
        }
        Command::Evaluate => {
            let e = stages::cmd_evaluate(&cfg)?;
            println!("wrote {} reports", e.reports.len());
        }
        Command::All => {
            let e = stages::cmd_all(&cfg)?;
            println!("wrote {} reports", e.reports.len());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
