// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lowers a circuit JSON file to a pulse schedule.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use pulsecal::params::PulseLibrary;
use pulsecal::pulse::Schedule;
use pulsecal::transpile::{transpile, Mode, ToffoliChoice};
use pulsecal_cli::args::{load_circuit, load_device, parse_toffoli};
use pulsecal_service::{ParamSink, QueryClient};
use serde::Serialize;

#[derive(Parser, Debug)]
#[command(name = "transpile", version, about = "Lower a circuit to a pulse schedule")]
struct Args {
    /// Circuit JSON: {"n_qubits": n, "gates": [{"kind", "qubits", "params"}, ...]}.
    #[arg(long = "in", value_name = "FILE")]
    input: PathBuf,
    /// squeeze | gokhale | baseline | earnest
    #[arg(long, default_value = "squeeze")]
    mode: Mode,
    /// Device JSON file, or a preset (`lima`, `line-<n>`), giving the
    /// coupling map and vendor pulses.
    #[arg(long, value_name = "DEVICE")]
    coupling: String,
    /// Query server to take calibrations from.
    #[arg(long, value_name = "URL")]
    query_url: Option<String>,
    /// Library JSON file; bypasses the query server.
    #[arg(long, value_name = "FILE")]
    offline: Option<PathBuf>,
    /// Toffoli decomposition: auto | a | b | standard. Defaults per mode.
    #[arg(long, value_parser = parse_toffoli)]
    toffoli: Option<ToffoliChoice>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(short, long, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Serialize)]
struct Output<'a> {
    mode: Mode,
    duration: u64,
    pulses: usize,
    swaps: usize,
    /// Physical qubits in measurement order.
    measured: &'a [usize],
    initial_layout: &'a [usize],
    schedule: &'a Schedule,
}

fn library(args: &Args) -> Result<PulseLibrary> {
    if let Some(path) = &args.offline {
        // the backend is not consulted for file libraries
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        return serde_json::from_str(&text).with_context(|| format!("parsing library {}", path.display()));
    }
    if let Some(url) = &args.query_url {
        return Ok(QueryClient::new(url)?.snapshot()?);
    }
    if args.mode == Mode::Squeeze {
        bail!("squeeze mode needs calibrations: pass --query-url or --offline");
    }
    Ok(PulseLibrary::default())
}

fn main() -> Result<()> {
    let args = Args::parse();
    pulsecal_cli::init_logging(args.verbose);
    let circuit = load_circuit(&args.input)?;
    let device = load_device(&args.coupling)?;
    let props = device.properties();
    let lib = library(&args)?;
    let t = transpile(&circuit, &props, &lib, args.mode, args.toffoli)?;
    let out = Output {
        mode: args.mode,
        duration: t.schedule.duration(),
        pulses: t.schedule.pulse_count(),
        swaps: t.routing.swaps,
        measured: &t.measured,
        initial_layout: &t.routing.initial_layout,
        schedule: &t.schedule,
    };
    let json = serde_json::to_string_pretty(&out)?;
    match &args.out {
        Some(path) => {
            std::fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
            eprintln!(
                "{}: {} dt, {} pulses, {} swaps -> {}",
                args.mode,
                out.duration,
                out.pulses,
                out.swaps,
                path.display()
            );
        }
        None => println!("{json}"),
    }
    Ok(())
}
