use clap::Parser;
use stateprep::cli::Cli;

fn main() {
    std::process::exit(Cli::parse().run());
}
