use clap::Parser;

fn main() {
    std::process::exit(weyl_lab::cli::execute(weyl_lab::cli::Cli::parse()));
}
