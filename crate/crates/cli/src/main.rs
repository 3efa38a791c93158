use std::path::PathBuf;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use cred_cli::{commands, serve};
use cred_core::harness::{read_json, ServeConfig, SessionStore};

#[derive(Parser)]
#[command(name = "cred", version, about = "Active preference learning with environment design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment cell.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run every condition × user × seed cell of a suite.
    Suite {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convert an OpenStreetMap XML extract into a street-graph environment.
    ConvertOsm {
        #[arg(long = "in")]
        input: PathBuf,
        /// Radius in meters around the center.
        #[arg(long)]
        radius: f64,
        /// "lat,lon"
        #[arg(long, allow_hyphen_values = true)]
        center: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Serve the elicitation HTTP API.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
    },
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Run { config, seed, out } => commands::run(&config, seed, &out),
        Command::Suite { config, out } => commands::suite(&config, out).map(|_| ()),
        Command::ConvertOsm {
            input,
            radius,
            center,
            out,
        } => commands::convert(&input, radius, &center, &out),
        Command::Serve { config, bind } => {
            let cfg: ServeConfig = read_json(&config)?;
            let base = config.parent().filter(|p| !p.as_os_str().is_empty());
            let store = Arc::new(SessionStore::new(cfg, base)?);
            tokio::runtime::Runtime::new()?.block_on(serve::serve(store, &bind))
        }
    }
}
