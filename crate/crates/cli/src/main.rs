mod args;
mod commands;
mod outputs;

use std::process::ExitCode;

use clap::Parser;

use auscult_core::{Error, ErrorCategory, Execution};

use args::{Cli, Command};

const EXIT_USAGE: u8 = 64;

fn exit_code(e: &Error) -> u8 {
    match e.category() {
        ErrorCategory::Io => 2,
        ErrorCategory::Format => 3,
        ErrorCategory::Data => 4,
        ErrorCategory::Internal => 5,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let execution = if cli.serial { Execution::Serial } else { Execution::Parallel };
    let result = match &cli.command {
        Command::Extract(a) => commands::extract(a, execution),
        Command::Stats(a) => commands::stats(a),
        Command::Reduce(a) => commands::reduce(a),
        Command::Train(a) => commands::train(a, execution),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a, execution),
        Command::Synth(a) => commands::synth(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
