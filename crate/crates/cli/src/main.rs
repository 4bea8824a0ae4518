use clap::Parser;

fn main() {
    let args = factorspace_cli::Args::parse();
    std::process::exit(factorspace_cli::run(&args));
}
