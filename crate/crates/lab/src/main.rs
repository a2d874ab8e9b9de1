use clap::Parser;
use frac_helmholtz_lab::config::Experiment;
use std::path::PathBuf;

/// Runs one fractional Helmholtz experiment from a JSON config.
#[derive(Parser)]
#[command(name = "fhlab", version)]
struct Cli {
    #[arg(value_enum)]
    experiment: Experiment,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Directory for CSV, JSON and snapshot artifacts.
    #[arg(long)]
    out: PathBuf,
    /// Overrides `solver.seed`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    verbose: bool,
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(frac_helmholtz_lab::execute(cli.experiment, &cli.config, &cli.out, cli.seed, cli.verbose));
}
