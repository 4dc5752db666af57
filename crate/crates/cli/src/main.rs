mod args;
mod commands;
mod config;
mod error;
mod serve;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::ToolConfig;
use error::CliError;

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let config = ToolConfig::load(cli.config.as_deref())?;
    match cli.command {
        Command::Corpus(cmd) => commands::corpus(cmd, &config),
        Command::Generate(args) => commands::generate(args, &config),
        Command::Metrics(cmd) => commands::metrics(cmd, &config),
        Command::Eval(cmd) => commands::eval(cmd, &config),
        Command::Humaneval(cmd) => commands::humaneval(cmd, &config),
        Command::Serve(args) => serve::serve(args, &config),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
