use clap::Parser;

fn main() {
    let cli = winldl_cli::Cli::parse();
    std::process::exit(winldl_cli::run(cli));
}
