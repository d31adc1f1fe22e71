use std::process::ExitCode;

use clap::Parser;

mod args;
mod config;
mod error;
mod input;
mod report;
mod run;
mod sketcher;

use args::{Cli, Command};
use config::RunConfig;
use error::{exit_code, CliResult};

fn configure(cli: &Cli) -> CliResult<RunConfig> {
    match &cli.command {
        Command::Replay { report } => {
            let mut c = report::read_config(report)?;
            c.output = cli.common.out.clone();
            c.validate()?;
            Ok(c)
        }
        _ => RunConfig::from_cli(cli),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure(&cli).and_then(|config| {
        if let Some(t) = config.threads {
            rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global()
                .map_err(|e| error::CliError::Usage(format!("--threads: {e}")))?;
        }
        run::run(&config)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kronsketch: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
