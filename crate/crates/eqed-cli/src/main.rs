use clap::Parser;

fn main() {
    std::process::exit(eqed_cli::run(eqed_cli::Cli::parse()));
}
