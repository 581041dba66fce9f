use std::process::ExitCode;

use clap::Parser;
use trace_ratio_cli::args::Cli;
use trace_ratio_cli::commands::{error_code, run};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(outcome) => {
            for path in &outcome.written {
                println!("{}", path.display());
            }
            if !outcome.failures.is_empty() {
                eprintln!("{} of the requested runs failed:", outcome.failures.len());
                for f in &outcome.failures {
                    eprintln!("  {}: {} (exit code {})", f.run, f.message, f.code);
                }
            }
            outcome.exit_code()
        }
        Err(e) => {
            eprintln!("trace-ratio {}: {e}", cli.command.name());
            error_code(&e)
        }
    };
    ExitCode::from(code as u8)
}
