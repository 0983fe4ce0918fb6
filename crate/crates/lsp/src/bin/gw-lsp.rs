use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use tracing_subscriber::EnvFilter;

use gw_core::orchestrator::SystemClock;
use gw_core::telemetry::EventLog;
use gw_lsp::{run, LspArgs, ServerOptions};
use gw_service::HttpCompleter;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    // stdout carries the protocol, so logs go to stderr
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("warn")))
        .with_writer(std::io::stderr)
        .init();
    let args = LspArgs::parse();
    let telemetry = match &args.telemetry_log {
        Some(path) => EventLog::open(path)?,
        None => EventLog::in_memory(),
    };
    let opts = ServerOptions {
        config: args.orchestrator_config()?,
        completer: Arc::new(HttpCompleter::new(
            &args.service_url,
            Duration::from_millis(args.request_timeout_ms),
        )),
        telemetry: Arc::new(telemetry),
        clock: Arc::new(SystemClock),
    };
    run(tokio::io::stdin(), tokio::io::stdout(), opts).await?;
    Ok(())
}
