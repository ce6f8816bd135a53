use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use simproto_cli::commands;
use simproto_cli::config::RunConfig;

/// Similarity prototypes from semantic label statistics, with
/// similarity-guided label softening and batch-level contrastive training.
#[derive(Parser)]
#[command(name = "simproto", version, about)]
struct Cli {
    /// Config file of `key = value` lines with dotted keys.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Override any config key, e.g. `--set train.epochs=5`. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,

    /// Run seed (config key `seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory (config key `out`; env `SIMPROTO_OUT`).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Suppress progress output (config key `quiet`).
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset (PGM maps, manifest, feature CSVs).
    Gen,
    /// Compute per-class semantic representations of a dataset.
    Stats {
        /// Dataset root containing a manifest.
        dataset_dir: PathBuf,
    },
    /// Build the similarity prototype and archive it.
    Prototype {
        /// Dataset root or a stats CSV.
        input: PathBuf,
        /// Correlation metric: cosine or euclidean (config key
        /// `proto.metric`).
        #[arg(long)]
        metric: Option<String>,
    },
    /// Train the classifier and write report, metrics, and checkpoint.
    Train {
        /// Existing dataset directory (config key `data.dir`); generated
        /// from `gen.*` when omitted.
        #[arg(long, value_name = "DIR")]
        data: Option<PathBuf>,
        /// Prototype archive directory; computed from the data when
        /// omitted.
        #[arg(long, value_name = "DIR")]
        proto: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on a dataset split.
    Eval {
        #[arg(long, value_name = "FILE")]
        checkpoint: PathBuf,
        #[arg(long, value_name = "DIR")]
        data: PathBuf,
        /// Which split to score: train or test.
        #[arg(long, default_value = "test")]
        split: String,
        /// Also export penultimate-layer embeddings.
        #[arg(long)]
        embeddings: bool,
    },
    /// Compare strategies over the configured seed list.
    Bench,
    /// Verify analytic gradients against finite differences.
    Gradcheck {
        /// Random instances per configuration axis.
        #[arg(long, default_value_t = 2)]
        trials: usize,
    },
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let mut cfg = RunConfig::default();
    if let Some(path) = &cli.config {
        cfg.apply_file(path)?;
    }
    cfg.apply_overrides(&cli.sets)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if cli.quiet {
        cfg.quiet = true;
    }

    let out = cfg.out.clone();
    match &cli.command {
        Command::Gen => commands::cmd_gen(&cfg, &out),
        Command::Stats { dataset_dir } => commands::cmd_stats(&cfg, dataset_dir, &out),
        Command::Prototype { input, metric } => {
            if let Some(metric) = metric {
                cfg.set("proto.metric", metric)?;
            }
            commands::cmd_prototype(&cfg, input, &out)
        }
        Command::Train { data, proto } => {
            if let Some(data) = data {
                cfg.data_dir = Some(data.clone());
            }
            commands::cmd_train(&cfg, proto.as_deref(), &out)
        }
        Command::Eval {
            checkpoint,
            data,
            split,
            embeddings,
        } => commands::cmd_eval(&cfg, checkpoint, data, split, *embeddings, &out),
        Command::Bench => commands::cmd_bench(&cfg, &out).map(|_| ()),
        Command::Gradcheck { trials } => commands::cmd_gradcheck(&cfg, *trials, &out),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
