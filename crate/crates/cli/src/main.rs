use std::process::ExitCode;

use clap::Parser;
use hzfem_cli::{parse_config, run, Command};

/// Curved Hu-Zhang mixed finite elements for planar elasticity.
#[derive(Parser)]
#[command(name = "hzfem", version)]
struct Cli {
    /// Log progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.verbose { "info" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let (kind, flags) = cli.command.split();
    let outcome = parse_config(kind, &flags).and_then(|config| run(&config));
    match outcome {
        Ok(o) if o.rates_ok => ExitCode::SUCCESS,
        Ok(_) => {
            eprintln!("error: fitted rates miss their targets");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
