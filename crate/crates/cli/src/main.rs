mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::Parser;

use args::Cli;

const FINDINGS: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Usage errors are operational errors; 2 is reserved for findings.
            return ExitCode::from(u8::from(e.use_stderr()));
        }
    };
    match run(&cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(FINDINGS),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns whether any finding was reported.
fn run(cli: &Cli) -> anyhow::Result<bool> {
    let c = &cli.common;
    output::prepare_dir(&c.out)?;
    let artifact = commands::run(&cli.command, c)?;
    output::write(&artifact, &c.out, c.format, c.svg)?;
    print!("{}", output::stdout_summary(&artifact));
    for f in &artifact.findings {
        eprintln!("finding: {f}");
    }
    Ok(!artifact.findings.is_empty())
}
