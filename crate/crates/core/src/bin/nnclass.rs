use clap::Parser;

fn main() {
    env_logger::init();
    std::process::exit(nnclass::cli::run(nnclass::cli::Cli::parse()));
}
