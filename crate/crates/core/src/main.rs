use clap::Parser;
use fuzzreg::cli::{run, Cli};

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    for path in run(&cli)? {
        println!("{}", path.display());
    }
    Ok(())
}
