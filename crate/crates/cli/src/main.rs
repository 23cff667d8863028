mod args;
mod config;
mod error;
mod pipeline;
mod setup;
mod tools;

use std::process::ExitCode;

use clap::{CommandFactory, Parser};

use args::{Cli, Command, FontDbCommand};
use error::CliError;

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Morph(a) => pipeline::morph(a),
        Command::Regions(a) => pipeline::regions(a),
        Command::Fontdb(FontDbCommand::Build(a)) => tools::fontdb_build(a),
        Command::Fontdb(FontDbCommand::List(a)) => tools::fontdb_list(a),
        Command::Render(a) => tools::render_command(a),
    }
}

fn main() -> ExitCode {
    let argv = match config::apply(std::env::args_os().collect(), &Cli::command()) {
        Ok(argv) => argv,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
