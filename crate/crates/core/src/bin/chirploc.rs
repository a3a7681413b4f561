use clap::Parser;

use chirploc::harness::cli::{run, Cli};

fn main() {
    env_logger::init();
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
