//! `punctuate`: restore punctuation in conversational transcripts.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use punctuate_core::pipeline::{self, PipelineConfig, PipelineError};
use punctuate_core::synth::SampleSpec;

/// Settings come from built-in defaults, then the config file, then the
/// command line flags.
#[derive(Debug, Parser)]
#[command(name = "punctuate", version, about)]
struct Cli {
    /// Flat `section.key = value` config file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Seed for every random number generator.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Align transcripts, write the labeled dataset, splits and class counts.
    Prepare,
    /// Count vocabulary and co-occurrences on the training split.
    Cooc,
    /// Train word vectors from scratch.
    TrainEmbeddings,
    /// Retrofit the pre-trained vectors to the corpus.
    Retrofit,
    /// Train the punctuation tagger.
    TrainTagger,
    /// Score the tagger on the test split.
    Evaluate {
        /// Use the gold labels as predictions.
        #[arg(long)]
        self_test: bool,
    },
    /// Punctuate a time-annotated transcript.
    Predict {
        input: PathBuf,
        /// Write here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Compare phrase similarities before and after retrofitting.
    Similarity {
        /// One `phrase a | phrase b` per line.
        pairs: PathBuf,
    },
    /// Generate a synthetic corpus with a matching config.
    MakeSample {
        dir: PathBuf,
        #[arg(long, default_value_t = 30)]
        conversations: usize,
    },
}

fn config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(text: &str, dest: Option<&Path>) -> Result<(), PipelineError> {
    match dest {
        Some(path) => std::fs::write(path, text).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| PipelineError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}

fn run(cli: &Cli) -> Result<(), PipelineError> {
    if let Command::MakeSample { dir, conversations } = &cli.command {
        let spec = SampleSpec {
            conversations: *conversations,
            ..SampleSpec::default()
        };
        return pipeline::make_sample(dir, &spec, cli.seed.unwrap_or(pipeline::DEFAULT_SEED));
    }
    let cfg = config(cli)?;
    match &cli.command {
        Command::Prepare => pipeline::cmd_prepare(&cfg),
        Command::Cooc => pipeline::cmd_cooc(&cfg),
        Command::TrainEmbeddings => pipeline::cmd_train_embeddings(&cfg),
        Command::Retrofit => pipeline::cmd_retrofit(&cfg),
        Command::TrainTagger => pipeline::cmd_train_tagger(&cfg),
        Command::Evaluate { self_test } => {
            let summary = pipeline::cmd_evaluate(&cfg, *self_test)?;
            emit(&summary.render(), None)
        }
        Command::Predict { input, output } => emit(&pipeline::cmd_predict(&cfg, input)?, output.as_deref()),
        Command::Similarity { pairs } => emit(&pipeline::cmd_similarity(&cfg, pairs)?, None),
        Command::MakeSample { .. } => unreachable!(),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            ExitCode::FAILURE
        }
    }
}
