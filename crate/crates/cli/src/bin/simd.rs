// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Exposes a simulated device over HTTP so daemons and benchmarks in other
//! processes share one backend queue and clock.

use std::net::{IpAddr, SocketAddr};
use std::sync::Arc;

use anyhow::Result;
use clap::Parser;
use pulsecal::sim::SimBackend;
use pulsecal_cli::args::load_device;
use pulsecal_cli::shutdown::Shutdown;
use pulsecal_service::spawn_backend_server;

#[derive(Parser, Debug)]
#[command(name = "simd", version, about = "Serve a simulated backend over HTTP")]
struct Args {
    /// Device JSON file or preset (`lima`, `line-<n>`).
    #[arg(long, default_value = "lima")]
    device: String,
    #[arg(long, default_value_t = 8788)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Overrides the device seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn main() -> Result<()> {
    let args = Args::parse();
    pulsecal_cli::init_logging(args.verbose.max(1));
    let mut device = load_device(&args.device)?;
    if let Some(seed) = args.seed {
        device.seed = seed;
    }
    let name = device.name.clone();
    let shutdown = Shutdown::install()?;
    let backend = Arc::new(SimBackend::new(device)?);
    let server = spawn_backend_server(backend, SocketAddr::new(args.host, args.port))?;
    eprintln!("simd serving '{name}' on {}", server.url());
    shutdown.wait();
    server.shutdown()?;
    Ok(())
}
