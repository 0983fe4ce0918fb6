use std::process::ExitCode;

use clap::Parser;
use gw_cli::backtest::{run, BacktestArgs};

fn main() -> ExitCode {
    gw_cli::init_logging();
    match run(&BacktestArgs::parse()) {
        Ok(out) => {
            print!("{}", out.output);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gw-backtest: {e}");
            ExitCode::FAILURE
        }
    }
}
