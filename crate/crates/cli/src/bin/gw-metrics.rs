use std::process::ExitCode;

use clap::Parser;
use gw_cli::metrics::{run, MetricsArgs};

fn main() -> ExitCode {
    gw_cli::init_logging();
    match run(&MetricsArgs::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gw-metrics: {e}");
            ExitCode::FAILURE
        }
    }
}
