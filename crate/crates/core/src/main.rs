use clap::Parser;

use lanechange::cli::{run, Cli};
use lanechange::Error;

fn main() {
    let cli = Cli::parse();
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        let code = match e {
            Error::Usage(_) | Error::InvalidArgument(_) => 2,
            _ => 1,
        };
        std::process::exit(code);
    }
}
