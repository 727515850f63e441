use std::process::ExitCode;

use clap::Parser;
use levyband::cli::{exit_code, run, Cli, Outcome, EXIT_REPLICATES};
use levyband::Error;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::ExcessiveFailures { failed, total }) => {
            eprintln!("error: {failed} of {total} replicates failed");
            ExitCode::from(EXIT_REPLICATES)
        }
        Err(err) => {
            eprintln!("error: {err}");
            if matches!(err, Error::BandwidthTooSmall { .. }) {
                eprintln!("hint: rerun with a larger h");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
