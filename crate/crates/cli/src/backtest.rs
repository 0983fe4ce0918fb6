use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Duration;

use clap::Parser;

use gw_core::backtest::{
    load_corpus, make_samples, run_backtest, EvalReport, ReportConfig, RunOptions, SampleOptions, DEFAULT_GAP_MAX,
    MAX_ERROR_FRACTION,
};
use gw_core::config::PromptConfig;
use gw_core::prompt::Language;
use gw_service::HttpCompleter;

use crate::CliError;

#[derive(Debug, Clone, Parser)]
#[command(name = "gw-backtest", version, about = "Offline exact-match and BLEU evaluation against a completion service")]
pub struct BacktestArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "py,cpp")]
    pub languages: Vec<String>,
    /// Samples per language.
    #[arg(long, default_value_t = 500)]
    pub n: usize,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, env = "GW_SERVICE_URL")]
    pub backend_url: Option<String>,
    /// Where to write the JSON report.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write sample id to target JSON for an oracle service, then stop.
    #[arg(long)]
    pub emit_truth: Option<PathBuf>,
    #[arg(long)]
    pub strict_em: bool,
    #[arg(long, default_value_t = DEFAULT_GAP_MAX)]
    pub gap_max: usize,
    #[arg(long)]
    pub holdout_frac: Option<f64>,
    #[arg(long, env = "GW_BUDGET", default_value_t = gw_core::config::DEFAULT_BUDGET)]
    pub budget: usize,
    #[arg(long, env = "GW_SPLIT", default_value_t = gw_core::config::DEFAULT_SPLIT)]
    pub split: f64,
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[arg(long, default_value_t = 10_000)]
    pub timeout_ms: u64,
}

/// What a run produced: the report (absent for `--emit-truth`) and the
/// text to print.
pub struct Outcome {
    pub report: Option<EvalReport>,
    pub output: String,
}

pub fn run(args: &BacktestArgs) -> Result<Outcome, CliError> {
    let languages = args
        .languages
        .iter()
        .map(|l| Language::new(l))
        .collect::<Result<Vec<_>, _>>()?;
    let prompt = PromptConfig {
        budget: args.budget,
        split: args.split,
        ..PromptConfig::default()
    };
    prompt.validate()?;
    let opts = SampleOptions {
        gap_max: args.gap_max,
        prompt,
        holdout_frac: args.holdout_frac,
    };
    let corpus = load_corpus(&args.corpus)?;
    let samples = make_samples(&corpus, &languages, args.n, args.seed, &opts)?;

    if let Some(path) = &args.emit_truth {
        let truth: BTreeMap<&str, &str> = samples.iter().map(|s| (s.sample_id.as_str(), s.target.as_str())).collect();
        std::fs::write(path, serde_json::to_string_pretty(&truth).expect("map serializes"))?;
        return Ok(Outcome {
            report: None,
            output: format!("{} targets -> {}\n", truth.len(), path.display()),
        });
    }

    let url = args
        .backend_url
        .as_deref()
        .ok_or_else(|| CliError::Usage("--backend-url is required unless --emit-truth is given".into()))?;
    let completer = HttpCompleter::new(url, Duration::from_millis(args.timeout_ms));
    let backend_id = completer.health().map(|h| h.fingerprint).unwrap_or_else(|_| url.to_owned());
    let config = ReportConfig {
        seed: args.seed,
        n_per_language: args.n,
        budget: args.budget,
        split: args.split,
        gap_max: args.gap_max,
        strict_em: args.strict_em,
        backend_id,
    };
    let run_opts = RunOptions {
        strict_em: args.strict_em,
        workers: args.workers,
    };
    let report = run_backtest(&samples, &completer, config, &run_opts);
    if let Some(path) = &args.report {
        std::fs::write(path, report.to_json() + "\n")?;
    }
    let mut output = report.to_table();
    for w in &report.warnings {
        output.push_str(&format!("warning: {w}\n"));
    }
    if report.error_fraction() > MAX_ERROR_FRACTION {
        return Err(CliError::TooManyErrors {
            errored: report.overall.errored,
            total: report.overall.errored + report.overall.n,
            limit: MAX_ERROR_FRACTION * 100.0,
        });
    }
    Ok(Outcome {
        report: Some(report),
        output,
    })
}
