mod args;
mod commands;
mod config;
mod exit;

use std::process::ExitCode;

use clap::Parser;
use crate::args::Cli;

fn init_threads(threads: Option<usize>) -> anyhow::Result<()> {
    match threads {
        Some(0) => Err(exit::usage("--threads must be at least 1")),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| exit::usage(format!("--threads {n}: {e}"))),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(exit::USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = commands::resolve(&cli).and_then(|mut cfg| {
        init_threads(cfg.threads)?;
        commands::run(&cli, &mut cfg)
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
