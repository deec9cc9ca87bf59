use clap::Parser;

fn main() {
    let cli = bnsl_cli::Cli::parse();
    if let Err(e) = bnsl_cli::dispatch(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
