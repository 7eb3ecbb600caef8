use clap::Parser;

fn main() {
    let cli = trolab_cli::Cli::parse();
    std::process::exit(trolab_cli::run(cli));
}
