//! `vidprobe`: evaluate frozen video embeddings from the command line.

mod args;
mod commands;
mod report;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use vidprobe_core::analyze::AnalyzeError;
use vidprobe_core::numkit::NumError;
use vidprobe_core::probe::ProbeError;

/// Bad flags or flag combinations (exit status 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

const EXIT_USAGE: u8 = 2;
const EXIT_VALIDATION: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if cause.is::<NumError>() {
            return EXIT_NUMERIC;
        }
        if let Some(e) = cause.downcast_ref::<ProbeError>() {
            return match e {
                ProbeError::Numeric(_) | ProbeError::Diverged { .. } => EXIT_NUMERIC,
                _ => EXIT_VALIDATION,
            };
        }
        if let Some(e) = cause.downcast_ref::<AnalyzeError>() {
            return match e {
                AnalyzeError::Numeric(_) | AnalyzeError::IdenticalMeans => EXIT_NUMERIC,
                _ => EXIT_VALIDATION,
            };
        }
    }
    EXIT_VALIDATION
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    if cli.global.workers > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.workers)
            .build_global()
        {
            eprintln!("error: cannot start {} workers: {e}", cli.global.workers);
            return ExitCode::from(EXIT_USAGE);
        }
    }
    let result = match &cli.command {
        Command::Probe(cmd) => commands::probe::run(&cli.global, cmd),
        Command::Knn(cmd) => commands::knn::run(&cli.global, cmd),
        Command::LdaReversal(cmd) => commands::lda::run(&cli.global, cmd),
        Command::Viz(cmd) => commands::viz::run(&cli.global, cmd),
        Command::Metrics(cmd) => commands::metrics::run(&cli.global, cmd),
        Command::Plan(cmd) => commands::plan::run(&cli.global, cmd),
        Command::Synth(cmd) => commands::synth::run(&cli.global, cmd),
        Command::Report(cmd) => commands::scatter::run(&cli.global, cmd),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
