use clap::Parser;
use pd_planner::cli::{run, Cli};

fn main() {
    std::process::exit(run(Cli::parse()));
}
