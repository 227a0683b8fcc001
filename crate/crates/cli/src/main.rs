use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use twlearn_cli::commands::{self, ApplyMode};
use twlearn_cli::config::{parse_seed_list, ExperimentConfig};
use twlearn_cli::error::{CliError, CliResult};

/// Learn and evaluate term-weighting schemes for text classification.
#[derive(Parser, Debug)]
#[command(name = "twlearn", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// key=value configuration file
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override any configuration key (repeatable)
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,

    /// Single root seed
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Comma-separated root seeds, one run each
    #[arg(long, global = true)]
    seeds: Option<String>,

    /// Vocabulary size, or `all`
    #[arg(long, global = true)]
    top_k: Option<String>,

    /// Cross-validation folds used for fitness
    #[arg(long, global = true)]
    folds: Option<usize>,

    /// Population size
    #[arg(long, global = true)]
    pop: Option<usize>,

    /// Generations
    #[arg(long, global = true)]
    gens: Option<usize>,

    /// Training corpus
    #[arg(long, global = true)]
    train: Option<PathBuf>,

    /// Test corpus (default: stratified split of the training corpus)
    #[arg(long, global = true)]
    test: Option<PathBuf>,

    /// tsv, labeled-dirs or svmlight-counts
    #[arg(long, global = true)]
    format: Option<String>,

    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve a scheme on the training part and evaluate it on the test part
    Learn,
    /// Evaluate the six fixed schemes
    Baselines,
    /// Evaluate a saved scheme on a corpus
    Apply {
        /// Model file written by `learn`
        #[arg(long, required_unless_present = "matrix")]
        model: Option<PathBuf>,
        /// Refit vocabulary and statistics on the new training part
        #[arg(long)]
        refit: bool,
        /// Cross-dataset mode: every model on every dataset
        #[arg(long, requires_all = ["models", "datasets"])]
        matrix: bool,
        /// Comma-separated model files (matrix mode)
        #[arg(long, value_delimiter = ',')]
        models: Vec<PathBuf>,
        /// Comma-separated corpora (matrix mode)
        #[arg(long, value_delimiter = ',')]
        datasets: Vec<PathBuf>,
    },
    /// Evaluate a saved scheme and the baselines over growing vocabularies
    Sweep {
        #[arg(long)]
        model: PathBuf,
        /// Comma-separated vocabulary fractions in (0,1]
        #[arg(long, default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
        fractions: String,
    },
    /// Fit term statistics on the training part and dump them as JSON
    Stats {
        /// Destination file (default: standard output)
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Validate a prefix expression and print its canonical form
    Parse { expr: String },
}

fn build_config(c: &Common) -> CliResult<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply_assignments(c.set.iter().map(String::as_str))?;
    let path = |p: &PathBuf| p.display().to_string();
    let flags: [(&str, Option<String>); 9] = [
        ("seed", c.seed.map(|s| s.to_string())),
        ("top_k", c.top_k.clone()),
        ("folds", c.folds.map(|v| v.to_string())),
        ("pop", c.pop.map(|v| v.to_string())),
        ("gens", c.gens.map(|v| v.to_string())),
        ("train", c.train.as_ref().map(path)),
        ("test", c.test.as_ref().map(path)),
        ("format", c.format.clone()),
        ("out", c.out.as_ref().map(path)),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Some(list) = &c.seeds {
        cfg.seeds = parse_seed_list(list)?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> CliResult<()> {
    if let Command::Parse { expr } = &cli.command {
        println!("{}", commands::cmd_parse(expr)?);
        return Ok(());
    }
    let cfg = build_config(&cli.common)?;
    match cli.command {
        Command::Learn => commands::cmd_learn(&cfg).map(drop),
        Command::Baselines => commands::cmd_baselines(&cfg).map(drop),
        Command::Apply {
            model,
            refit,
            matrix,
            models,
            datasets,
        } => {
            if matrix {
                commands::cmd_apply_matrix(&cfg, &models, &datasets).map(drop)
            } else {
                let model = model.ok_or_else(|| CliError::config("--model is required"))?;
                let mode = if refit {
                    ApplyMode::Refit
                } else {
                    ApplyMode::Stored
                };
                commands::cmd_apply(&cfg, &model, mode).map(drop)
            }
        }
        Command::Sweep { model, fractions } => {
            let fr = commands::parse_fractions(&fractions)?;
            commands::cmd_sweep(&cfg, &model, &fr).map(drop)
        }
        Command::Stats { output } => commands::cmd_stats(&cfg, output.as_deref()).map(drop),
        Command::Parse { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
