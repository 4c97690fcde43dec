use std::io::IsTerminal;
use std::process::ExitCode;

use clap::Parser;
use fedosov_cli::{run, Cli};

fn color() -> bool {
    std::env::var_os("NO_COLOR").is_none_or(|v| v.is_empty()) && std::io::stderr().is_terminal()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let (red, reset) = if color() {
        ("\x1b[31m", "\x1b[0m")
    } else {
        ("", "")
    };
    match run(&cli, &mut out) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("{red}checks failed{reset}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("{red}error:{reset} {e}");
            ExitCode::from(2)
        }
    }
}
