use std::process::ExitCode;

use clap::Parser;
use gw_cli::ngram::{synth, SynthArgs};

fn main() -> ExitCode {
    gw_cli::init_logging();
    match synth(&SynthArgs::parse()) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("gw-synth: {e}");
            ExitCode::FAILURE
        }
    }
}
