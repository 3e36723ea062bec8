use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hidden_dissent::pipeline::{run, Command, ModelKind, RunConfig};
use hidden_dissent::{Error, Result};

/// Hidden-dissent pipeline. Settings come from the JSON config, then
/// `HIDDEN_DISSENT__*` environment overrides (e.g.
/// `HIDDEN_DISSENT__TRAIN__MAX_STEPS=200`), then flags.
#[derive(Debug, Parser)]
#[command(name = "hidden-dissent", version)]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Model {
    Vote,
    Minutes,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Validate every configured input and any extra embedding files.
    IngestCheck { files: Vec<PathBuf> },
    /// Train the vote classifier, or the minutes regressor with k-fold CV.
    Train {
        #[arg(long, value_enum, default_value = "vote")]
        model: Model,
    },
    /// Random hyperparameter search for the vote classifier.
    Tune {
        #[arg(long)]
        budget: Option<usize>,
    },
    /// Score every member transcript with the trained classifier.
    Score,
    /// Meeting-level measures and summary statistics.
    Aggregate,
    /// Member- and meeting-level regressions on forecasts and composition.
    AnalyzePanel,
    /// SEP disagreement components and their link to hidden dissent.
    AnalyzeSep,
    /// Absolute policy perturbations on hidden dissent.
    AnalyzeOpp,
    /// Local projections of market returns with BCa bands.
    EventStudy,
    /// Collect every table into one directory.
    Report,
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>> {
    let mut cfg = RunConfig::resolve(cli.config.as_deref(), std::env::vars())?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = cli.out {
        cfg.out = o;
    }
    if let Cmd::Tune { budget: Some(b) } = cli.command {
        cfg.tune.budget = b;
    }
    cfg.validate()?;
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(Error::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    let command = match cli.command {
        Cmd::IngestCheck { files } => Command::IngestCheck { extra: files },
        Cmd::Train { model: Model::Vote } => Command::Train { model: ModelKind::Vote },
        Cmd::Train { model: Model::Minutes } => Command::Train { model: ModelKind::Minutes },
        Cmd::Tune { .. } => Command::Tune,
        Cmd::Score => Command::Score,
        Cmd::Aggregate => Command::Aggregate,
        Cmd::AnalyzePanel => Command::AnalyzePanel,
        Cmd::AnalyzeSep => Command::AnalyzeSep,
        Cmd::AnalyzeOpp => Command::AnalyzeOpp,
        Cmd::EventStudy => Command::EventStudy,
        Cmd::Report => Command::Report,
    };
    run(&command, &cfg)
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for --help
    let cli = Cli::parse();
    match execute(cli) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
