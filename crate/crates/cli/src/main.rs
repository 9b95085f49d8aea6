use std::process::ExitCode;

use clap::Parser;

use boxreg_cli::args::Cli;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match boxreg_cli::run(&cli) {
        Ok(m) if m.passed => ExitCode::SUCCESS,
        Ok(m) => {
            eprintln!("{}: checks failed", m.command);
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
