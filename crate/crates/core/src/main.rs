use clap::Parser;
use spectral_schwarz::harness::experiment::{main_with, Cli};

fn main() {
    let cli = Cli::parse();
    std::process::exit(main_with(&cli));
}
