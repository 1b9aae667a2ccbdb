mod args;
mod commands;
mod error;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match &cli.command {
        Command::Ingest(a) => commands::cmd_ingest(a),
        Command::Synth(a) => commands::cmd_synth(a),
        Command::Train(a) => commands::cmd_train(a),
        Command::Evaluate(a) => commands::cmd_evaluate(a),
        Command::Run(a) => commands::cmd_run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
