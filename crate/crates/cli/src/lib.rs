//! Command implementations behind the `gw-*` binaries.

pub mod backtest;
pub mod metrics;
pub mod ngram;

pub fn init_logging() {
    use tracing_subscriber::EnvFilter;
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Backtest(#[from] gw_core::BacktestError),
    #[error(transparent)]
    Telemetry(#[from] gw_core::TelemetryError),
    #[error(transparent)]
    Model(#[from] gw_core::ModelFileError),
    #[error(transparent)]
    Prompt(#[from] gw_core::PromptError),
    #[error("{0}")]
    Usage(String),
    #[error("{errored} of {total} samples errored, above the {limit:.0}% limit")]
    TooManyErrors { errored: usize, total: usize, limit: f64 },
}
