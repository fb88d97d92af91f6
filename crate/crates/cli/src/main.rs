mod args;
mod bench;
mod explain;
mod failure;
mod output;
mod shap;
mod system;
mod train;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::{Failure, Outcome};

fn configure_threads() -> Outcome<()> {
    let Ok(value) = std::env::var("CFX_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| Failure::usage(format!("CFX_THREADS must be an integer, got {value:?}")))?;
    if threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::usage(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome<()> {
    configure_threads()?;
    match &cli.command {
        Command::Train(a) => train::run(cli, a),
        Command::Explain(a) => explain::run(cli, a),
        Command::Shap(a) => shap::run(cli, a),
        Command::Bench(a) => bench::run(cli, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                failure::USAGE as u8
            } else {
                0
            });
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !f.message.is_empty() {
                eprintln!("cfx: {}", f.message);
            }
            ExitCode::from(f.code as u8)
        }
    }
}
