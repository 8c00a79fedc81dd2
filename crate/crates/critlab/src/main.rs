use clap::Parser;

fn main() {
    std::process::exit(critlab::cli::run(critlab::cli::Args::parse()));
}
