use std::path::PathBuf;

use clap::{Parser, Subcommand};

use gw_core::backtest::{in_holdout, load_corpus};
use gw_core::ngram::{build_ngram, DEFAULT_ORDER};
use gw_core::synth::{synth_corpus, write_corpus};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "gw-ngram", version, about = "Build n-gram reference models")]
pub struct NgramArgs {
    #[command(subcommand)]
    pub command: NgramCommand,
}

#[derive(Debug, Subcommand)]
pub enum NgramCommand {
    /// Count n-grams over every source file under a directory.
    Build {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_ORDER)]
        order: usize,
        /// Leave out the files `gw-backtest --holdout-frac` would sample.
        #[arg(long)]
        exclude_holdout_frac: Option<f64>,
    },
}

/// Builds and saves a model; returns a one-line summary.
pub fn run(args: &NgramArgs) -> Result<String, CliError> {
    let NgramCommand::Build {
        corpus,
        out,
        order,
        exclude_holdout_frac,
    } = &args.command;
    if *order < 2 {
        return Err(CliError::Usage("--order must be at least 2".into()));
    }
    let files: Vec<(String, String)> = load_corpus(corpus)?
        .into_iter()
        .filter(|f| exclude_holdout_frac.is_none_or(|frac| !in_holdout(&f.path, frac)))
        .map(|f| (f.path, f.text))
        .collect();
    let model = build_ngram(&files, *order);
    model.save(out)?;
    Ok(format!(
        "{} files, {} token types, order {} -> {}\n",
        files.len(),
        model.vocab().len(),
        order,
        out.display()
    ))
}

#[derive(Debug, Parser)]
#[command(name = "gw-synth", version, about = "Write a deterministic synthetic Python/C++ corpus")]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Files per language.
    #[arg(long, default_value_t = 200)]
    pub files: usize,
    /// Approximate size of each file in bytes.
    #[arg(long, default_value_t = 5000)]
    pub bytes: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

pub fn synth(args: &SynthArgs) -> Result<String, CliError> {
    let files = synth_corpus(args.files, args.bytes, args.seed);
    write_corpus(&files, &args.out)?;
    let total: usize = files.iter().map(|f| f.text.len()).sum();
    Ok(format!("{} files, {} bytes -> {}\n", files.len(), total, args.out.display()))
}
