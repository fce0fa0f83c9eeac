// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Calibration daemon: runs calibration cycles on a cadence and prints one
//! JSON cycle report per line.

use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::Parser;
use pulsecal_cli::shutdown::Shutdown;
use pulsecal_service::{Daemon, DaemonConfig, ParamSink, ParamStore, QueryClient, TimeMode};

#[derive(Parser, Debug)]
#[command(name = "calibd", version, about = "Periodic Rx and CR calibration")]
struct Args {
    /// Daemon configuration JSON.
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Run on the backend's simulated clock, `factor` times faster than
    /// wall time (`inf` for no sleeping at all).
    #[arg(long, value_name = "FACTOR")]
    simulated_time: Option<f64>,
    /// Stop after this many cycles.
    #[arg(long)]
    max_cycles: Option<u64>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn main() -> Result<()> {
    let args = Args::parse();
    pulsecal_cli::init_logging(args.verbose.max(1));
    let text = std::fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let cfg = DaemonConfig::from_json(&text)?;
    let mode = match args.simulated_time {
        None => TimeMode::Wall,
        Some(f) if f > 0.0 => TimeMode::Simulated { factor: f },
        Some(f) => bail!("--simulated-time must be positive, got {f}"),
    };
    let backend = cfg.backend.connect()?;
    let sink: Arc<dyn ParamSink> = match &cfg.query_url {
        Some(url) => Arc::new(QueryClient::new(url)?),
        None => {
            tracing::warn!("no query_url configured; parameters stay in this process");
            Arc::new(ParamStore::in_memory())
        }
    };
    let shutdown = Shutdown::install()?;
    let mut daemon = Daemon::new(cfg, backend, sink)?;
    let stdout = std::io::stdout();
    let ran = daemon.run_forever(mode, shutdown.flag(), args.max_cycles, |report| {
        let mut out = stdout.lock();
        match serde_json::to_string(report) {
            Ok(line) => {
                let _ = writeln!(out, "{line}");
                let _ = out.flush();
            }
            Err(e) => tracing::error!("could not encode report: {e}"),
        }
    });
    tracing::info!("stopped after {ran} cycles, {} puts pending", daemon.pending());
    Ok(())
}
