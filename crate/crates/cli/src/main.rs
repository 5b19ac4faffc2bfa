use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = match ddd_cli::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    match ddd_cli::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(ddd_cli::exit_code(&e))
        }
    }
}
