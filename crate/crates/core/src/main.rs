use clap::Parser;

fn main() {
    let cli = subgal::cli::Cli::parse();
    std::process::exit(subgal::cli::run(cli));
}
