mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use log::error;

use args::{Cli, Command};

/// Process exit status for a library error.
fn exit_code(e: &nmfa::Error) -> u8 {
    use nmfa::Error::*;
    match e {
        InvalidParameter(_) => 2,
        Degenerate(_) | Domain(_) => 4,
        Structural(_) | Data(_) | Lookup(_) | Format { .. } | Io { .. } | Ordering(_) => 3,
    }
}

fn run(cli: Cli) -> nmfa::Result<u8> {
    match cli.command {
        Command::Analyze {
            inputs,
            analysis,
            out,
        } => commands::analyze::run(&inputs, &analysis, &out).map(|_| 0),
        Command::Emergence {
            inputs,
            baseline_epoch,
            analysis,
            out,
        } => commands::emergence::run(&inputs, baseline_epoch, &analysis, &out).map(|_| 0),
        Command::Generate { kind } => commands::generate::run(&kind).map(|_| 0),
        Command::Selfcheck { mass_floor } => {
            let all_pass = commands::selfcheck::run(mass_floor.into())?;
            Ok(if all_pass { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    if cli.threads == Some(0) {
        eprintln!("error: --threads must be at least 1");
        return ExitCode::from(2);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
