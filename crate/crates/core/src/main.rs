use clap::Parser;

fn main() {
    if let Err(e) = netgame::cli::run(netgame::cli::Cli::parse()) {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
