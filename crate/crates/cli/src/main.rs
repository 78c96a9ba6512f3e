mod args;
mod commands;
mod config;
mod failure;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};
use crate::config::Settings;
use crate::failure::{Failure, EXIT_VALIDATION};

fn run(cli: &Cli) -> Result<(), Failure> {
    let settings = Settings::load(&cli.global)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(settings.workers)
        .build()
        .map_err(|e| {
            Failure::validation(format!("cannot start {} workers: {e}", settings.workers))
        })?;
    pool.install(|| match &cli.command {
        Command::Score(args) => commands::score(&settings, args),
        Command::BuildPairs(args) => commands::build_pairs(&settings, args),
        Command::Advantages(args) => commands::advantages(&settings, args),
        Command::GridSearch(args) => commands::grid_search_cmd(&settings, args),
        Command::EvalSelect(args) => commands::eval_select(&settings, args),
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            // Help and version requests exit 0; usage errors count as invalid values.
            return if err.use_stderr() {
                ExitCode::from(EXIT_VALIDATION)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {failure}");
            ExitCode::from(failure.code)
        }
    }
}
