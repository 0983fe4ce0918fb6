use std::process::ExitCode;

use clap::Parser;
use gw_cli::ngram::{run, NgramArgs};

fn main() -> ExitCode {
    gw_cli::init_logging();
    match run(&NgramArgs::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gw-ngram: {e}");
            ExitCode::FAILURE
        }
    }
}
