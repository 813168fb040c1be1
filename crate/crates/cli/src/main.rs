use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::info;
use rigcast::commands;
use rigcast::config::PipelineConfig;
use rigcast::error::{Error, Result};

#[derive(Parser, Debug)]
#[command(name = "rigcast", version, about = "Drilling accident forecasting from rig telemetry")]
struct Cli {
    /// Config file of `key = value` lines; defaults apply otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override one config key, e.g. `--set codebook.k=50`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Worker threads. Results do not depend on this.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic corpus.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Clean a log file or a directory of logs.
    Clean { input: PathBuf, output: PathBuf },
    /// Train on a corpus directory and write a model artifact.
    Train {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Replay a log through a model artifact and write alarms.
    Predict {
        #[arg(long)]
        artifact: PathBuf,
        #[arg(long)]
        log: PathBuf,
        /// Evaluation step in minutes; the artifact's value otherwise.
        #[arg(long)]
        step: Option<i64>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Well-grouped cross-validation of the pipeline and its baselines.
    Evaluate {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Parameter sweeps: stage1, stage2, sensitivity or step.
    Tune {
        corpus: PathBuf,
        #[arg(long)]
        mode: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Pairwise distances between reference segment histograms.
    ExportDistances {
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(path: Option<&Path>, overrides: &[String]) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load_or_default(path)?;
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Synth { out } => {
            let s = commands::cmd_synth(&cfg, &out)?;
            println!("{} wells, {} accidents, {} annotations -> {}", s.wells, s.accidents, s.annotations, out.display());
        }
        Command::Clean { input, output } => {
            let files = commands::cmd_clean(&cfg, &input, &output)?;
            println!("cleaned {} file(s)", files.len());
        }
        Command::Train { corpus, out } => {
            let a = commands::cmd_train(&corpus, &cfg, &out)?;
            println!("{} sha256={}", out.display(), a.checksum());
        }
        Command::Predict { artifact, log, step, threshold, out } => {
            let s = commands::cmd_predict(&artifact, &log, step, threshold, &out)?;
            print!("{}", s.to_text());
        }
        Command::Evaluate { corpus, out } => {
            for r in commands::cmd_evaluate(&corpus, &cfg, &out)? {
                println!("{}", r.to_text());
            }
        }
        Command::Tune { corpus, mode, out } => {
            let mode: commands::TuneMode = mode.parse()?;
            print!("{}", commands::cmd_tune(&corpus, &cfg, mode, &out)?);
        }
        Command::ExportDistances { corpus, out } => {
            let n = commands::cmd_export_distances(&corpus, &cfg, &out)?;
            println!("{n} segments -> {}", out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("RIGCAST_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(1);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
        info!("using {n} worker threads");
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
