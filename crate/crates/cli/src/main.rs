//! `homolab`: command-line front end for the periodic homogenization lab.

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::RunConfig;
use run::Command;

#[derive(Debug, Parser)]
#[command(name = "homolab", version, about = "Periodic homogenization numerical laboratory")]
struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    command: Command,
    /// Run configuration (`key = value` lines).
    #[arg(short, long)]
    config: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let cfg = match RunConfig::from_file(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("homolab: {}: {e}", cli.config.display());
            return ExitCode::from(1);
        }
    };
    let dir = std::env::var_os("HOMOLAB_OUT").map(PathBuf::from).unwrap_or_else(|| cfg.output_dir.clone());
    match run::run(cli.command, &cfg, &cli.config, &dir) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("homolab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
