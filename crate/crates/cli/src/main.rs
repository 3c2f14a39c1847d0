use clap::Parser;

use thzsim_cli::cli::{execute, Cli};

fn main() {
    let cli = Cli::parse();
    if let Err(e) = execute(&cli) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
