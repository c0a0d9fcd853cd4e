use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use visemic::pipeline::{
    cmd_build_vocab, cmd_decode, cmd_evaluate, cmd_extract, cmd_feature_comparison,
    cmd_model_inspect, cmd_rank_sweep, cmd_sweep_vocab, cmd_synth, cmd_train, DecodeMode,
    ExperimentConfig, VocabChoice,
};

#[derive(Parser)]
#[command(
    name = "visemic",
    about = "Viseme vocabulary construction and continuous visual speech decoding",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> visemic::Result<ExperimentConfig> {
        let mut config = ExperimentConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct DecodeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Use the vocabulary of this length (built earlier); omit for the
    /// identity (one viseme per phoneme) vocabulary.
    #[arg(long)]
    vocab_len: Option<usize>,
    /// Top-R candidate observations per step (0 = all classes).
    #[arg(long)]
    rank: Option<usize>,
    /// Standard Viterbi on argmax observations, no likelihood weighting.
    #[arg(long)]
    baseline: bool,
}

impl DecodeArgs {
    fn choice(&self) -> VocabChoice {
        match self.vocab_len {
            Some(k) => VocabChoice::Length(k),
            None => VocabChoice::Identity,
        }
    }

    fn mode_override(&self) -> Option<DecodeMode> {
        if self.baseline {
            Some(DecodeMode::Baseline)
        } else {
            match self.rank {
                Some(0) | None => None, // config default (0 = full rank)
                Some(r) => Some(DecodeMode::Soft { rank: r }),
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus configured under [synthetic].
    Synth {
        #[command(flatten)]
        config: ConfigArgs,
        /// Directory to write manifest + frames into.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit the feature recipe and fill per-utterance feature caches.
    Extract {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Train the identity-vocabulary classifier ensemble and HMMs.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also train k cross-validation fold models.
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Build a viseme vocabulary of the given length.
    BuildVocab {
        #[command(flatten)]
        config: ConfigArgs,
        /// Target vocabulary length.
        #[arg(long)]
        target: usize,
        /// Retrain classifiers after every merge instead of collapsing the
        /// confusion matrix.
        #[arg(long)]
        retrain_each_step: bool,
    },
    /// Build, decode, and score vocabularies over a list of lengths.
    SweepVocab {
        #[command(flatten)]
        config: ConfigArgs,
        /// Lengths, comma separated; defaults to decode.vocab_lengths.
        #[arg(long, value_delimiter = ',')]
        lengths: Vec<usize>,
        #[arg(long)]
        retrain_each_step: bool,
    },
    /// Decode the held-out corpus into viseme/phoneme/word tracks.
    Decode(DecodeArgs),
    /// Score decoded tracks; `--rank-sweep` decodes every configured rank.
    Evaluate {
        #[command(flatten)]
        decode: DecodeArgs,
        /// Run the rank sweep (baseline + decode.ranks) instead of scoring
        /// existing tracks.
        #[arg(long)]
        rank_sweep: bool,
        /// Cross-validated feature comparison with this many folds.
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Model file utilities.
    Model {
        #[command(subcommand)]
        command: ModelCommand,
    },
}

#[derive(Subcommand)]
enum ModelCommand {
    /// Print per-class projection statistics of a stored ensemble.
    Inspect {
        /// Path to an ensemble model file.
        #[arg(long)]
        model: PathBuf,
        /// Corpus manifest providing class names.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
}

fn run() -> visemic::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Synth { config, out } => {
            let cfg = config.load()?;
            let n = cmd_synth(&cfg, &out)?;
            println!("wrote {n} utterances to {}", out.display());
        }
        Command::Extract { config } => {
            let cfg = config.load()?;
            let report = cmd_extract(&cfg)?;
            println!(
                "extract: {} computed, {} up-to-date",
                report.computed, report.skipped
            );
        }
        Command::Train { config, folds } => {
            let cfg = config.load()?;
            cmd_train(&cfg, folds)?;
            println!("trained models in {}", cfg.output.join("models").display());
        }
        Command::BuildVocab {
            config,
            target,
            retrain_each_step,
        } => {
            let mut cfg = config.load()?;
            cfg.decode.retrain_each_step |= retrain_each_step;
            let path = cmd_build_vocab(&cfg, target)?;
            println!("vocabulary written to {}", path.display());
        }
        Command::SweepVocab {
            config,
            lengths,
            retrain_each_step,
        } => {
            let mut cfg = config.load()?;
            cfg.decode.retrain_each_step |= retrain_each_step;
            let lengths = if lengths.is_empty() {
                cfg.decode.vocab_lengths.clone()
            } else {
                lengths
            };
            let path = cmd_sweep_vocab(&cfg, &lengths)?;
            println!("sweep written to {}", path.display());
        }
        Command::Decode(args) => {
            let cfg = args.config.load()?;
            let dir = cmd_decode(&cfg, args.choice(), args.mode_override())?;
            println!("tracks written to {}", dir.display());
        }
        Command::Evaluate {
            decode,
            rank_sweep,
            folds,
        } => {
            let cfg = decode.config.load()?;
            if let Some(k) = folds {
                let path = cmd_feature_comparison(&cfg, k)?;
                println!("feature comparison written to {}", path.display());
            } else if rank_sweep {
                let path = cmd_rank_sweep(&cfg, decode.choice())?;
                println!("rank sweep written to {}", path.display());
            } else {
                let summary = cmd_evaluate(&cfg, decode.choice(), decode.mode_override())?;
                println!(
                    "viseme acc {:.4}  phoneme acc {:.4}  word acc {}",
                    summary.viseme_token_accuracy,
                    summary.phoneme_token_accuracy,
                    summary
                        .word_accuracy
                        .map_or_else(|| "n/a".to_string(), |w| format!("{w:.4}")),
                );
            }
        }
        Command::Model { command } => match command {
            ModelCommand::Inspect { model, manifest } => {
                let text = cmd_model_inspect(&model, manifest.as_deref())?;
                print!("{text}");
            }
        },
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
