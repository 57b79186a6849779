use std::process::ExitCode;

use clap::Parser;
use ultranarrow::cli::{self, Cli, CliError};

fn run() -> anyhow::Result<()> {
    let args = Cli::parse();
    cli::run(args)?;
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<CliError>().map_or(1, CliError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
