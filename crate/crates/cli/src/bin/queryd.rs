// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Query server for calibrated pulse parameters.

use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use anyhow::Result;
use clap::Parser;
use pulsecal_cli::shutdown::Shutdown;
use pulsecal_service::open_and_serve;

#[derive(Parser, Debug)]
#[command(name = "queryd", version, about = "Serve calibrated pulse parameters over HTTP")]
struct Args {
    #[arg(long, default_value_t = 8787)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: IpAddr,
    /// Directory holding the append-only parameter log.
    #[arg(long, value_name = "DIR")]
    data_dir: PathBuf,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

fn main() -> Result<()> {
    let args = Args::parse();
    pulsecal_cli::init_logging(args.verbose.max(1));
    std::fs::create_dir_all(&args.data_dir)?;
    let shutdown = Shutdown::install()?;
    let (store, server) = open_and_serve(&args.data_dir, SocketAddr::new(args.host, args.port))?;
    let health = store.health();
    eprintln!(
        "queryd listening on {} ({} rx, {} zx records)",
        server.url(),
        health.rx.records,
        health.zx.records
    );
    shutdown.wait();
    server.shutdown()?;
    Ok(())
}
