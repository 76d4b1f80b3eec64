use clap::Parser;

fn main() {
    let cli = uavnet::cli::Cli::parse();
    std::process::exit(uavnet::cli::run(cli));
}
