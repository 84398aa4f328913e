use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cayley_cli::Cli::parse();
    match cayley_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // One line, chain flattened: `error: context: cause`.
            let line = format!("{err:#}").replace('\n', "; ");
            eprintln!("error: {line}");
            ExitCode::FAILURE
        }
    }
}
