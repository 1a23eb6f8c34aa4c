mod args;
mod commands;
mod error;
mod ingest;
mod report;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use commands::Output;
use error::{CliError, CliResult};

const THREADS_VAR: &str = "ECLOSE_THREADS";

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        CliError::Usage(format!(
            "{THREADS_VAR} must be a positive integer, got {raw:?}"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))
}

fn run(cli: &Cli) -> CliResult<Output> {
    configure_threads()?;
    match &cli.command {
        Command::Estimate(a) => commands::estimate(a),
        Command::Divergence(a) => commands::divergence(a),
        Command::Entropy(a) => commands::entropy(a),
        Command::Test(a) => commands::test(a),
        Command::Simulate(a) => commands::simulate(a, cli.format),
        Command::Schedule(a) => commands::schedule(a),
        Command::Draw(a) => commands::draw(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(&cli) {
        Ok(out) => {
            let text = match out {
                Output::Report(env) if cli.format == Format::Csv => env.to_csv(),
                Output::Report(env) => env.to_json(),
                Output::Text(t) => t,
            };
            let _ = std::io::stdout().write_all(text.as_bytes());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
