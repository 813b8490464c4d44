use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    regan::cli::main_with(regan::cli::Cli::parse())
}
