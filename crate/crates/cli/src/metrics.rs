use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use gw_core::telemetry::{read_log, MetricsReport, DEFAULT_MIN_DISPLAY_MS};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "gw-metrics", version, about = "Usage metrics from suggestion event logs")]
pub struct MetricsArgs {
    #[command(subcommand)]
    pub command: MetricsCommand,
}

#[derive(Debug, Subcommand)]
pub enum MetricsCommand {
    /// Acceptance rate and AI character share per language.
    Report {
        #[arg(long)]
        log: PathBuf,
        #[arg(long, default_value_t = DEFAULT_MIN_DISPLAY_MS)]
        min_display_ms: u64,
        #[arg(long, value_enum, default_value = "table")]
        format: Format,
    },
}

pub fn run(args: &MetricsArgs) -> Result<String, CliError> {
    match &args.command {
        MetricsCommand::Report {
            log,
            min_display_ms,
            format,
        } => {
            let events = read_log(log)?;
            let report = MetricsReport::compute(&events, *min_display_ms);
            Ok(match format {
                Format::Table => report.to_table(),
                Format::Json => report.to_json() + "\n",
                Format::Csv => report.to_csv(),
            })
        }
    }
}
