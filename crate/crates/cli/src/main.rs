use std::io::Write;
use std::process::ExitCode;

use clap::Parser;
use sta_cli::{run, Cli};

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            let text = serde_json::to_string_pretty(&outcome.summary).expect("summary is valid JSON");
            // A closed pipe downstream is not a failure of the run.
            let _ = writeln!(std::io::stdout().lock(), "{text}");
            ExitCode::from(outcome.exit_code())
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
