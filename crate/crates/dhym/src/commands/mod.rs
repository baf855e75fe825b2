pub mod charge;
pub mod flow;
pub mod point;
pub mod selftest;
pub mod syz;

use crate::cli::{Cli, Command};
use crate::error::CliError;

/// Runs the parsed command line and returns the text for stdout.
pub fn dispatch(cli: &Cli) -> Result<String, CliError> {
    match &cli.command {
        Command::Point(args) => point::run(&cli.common, args),
        Command::Charge => charge::run(&cli.common),
        Command::Flow => flow::run(&cli.common),
        Command::Syz => syz::run(&cli.common),
        Command::Selftest => selftest::run(&cli.common),
    }
}
