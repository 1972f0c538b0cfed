use clap::Parser;

fn main() {
    let cli = qcluster_cli::Cli::parse();
    if let Err(e) = qcluster_cli::execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
