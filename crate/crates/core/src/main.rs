use clap::Parser;
use diffeo_lab::cli::{run, RunConfig};

fn main() {
    let config = RunConfig::parse();
    let status = run(&config, &mut std::io::stdout().lock(), &mut std::io::stderr().lock());
    std::process::exit(status);
}
