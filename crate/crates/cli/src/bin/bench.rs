// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Benchmarks: gate tomography, randomized benchmarking, algorithm error
//! and schedule durations, with optional CSV and SVG output.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args as ClapArgs, Parser, Subcommand};
use pulsecal::bench::circuits::{make_benchmark, Benchmark};
use pulsecal::bench::durations::{duration_report, reference_durations, u3_duration_summary, DeviceDurations, DurationTable};
use pulsecal::bench::rb::{run_rb, RbFamily};
use pulsecal::bench::tomography::{mean_error, tomography_sweep, GateFamily};
use pulsecal::bench::{execute, ideal_distribution, Metric};
use pulsecal::circuit::{g, Circuit};
use pulsecal::params::PulseLibrary;
use pulsecal::sim::{Backend, SimBackend};
use pulsecal::transpile::Mode;
use pulsecal_cli::args::{distinct, load_circuit, parse_endpoint, parse_list, parse_modes};
use pulsecal_cli::library::{library_for, LibrarySource};
use pulsecal_cli::plot::{bar_chart, xy_chart, Series};
use pulsecal_service::BackendEndpoint;

#[derive(Parser, Debug)]
#[command(name = "bench", version, about = "Benchmark transpilation modes on a backend")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

// `std::vec::Vec` keeps clap from treating list-valued flags as repeated
// occurrences.
#[derive(ClapArgs, Debug, Clone)]
struct Common {
    /// Comma-separated modes, or `all`.
    #[arg(long, default_value = "all", value_parser = parse_modes)]
    mode: std::vec::Vec<Mode>,
    /// Backend URL, device JSON file or preset (`lima`, `line-<n>`).
    #[arg(long, default_value = "lima")]
    backend: String,
    #[arg(long, default_value_t = 1024)]
    shots: u64,
    /// Seeds the in-process device and every random choice.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the per-point results as CSV.
    #[arg(long, value_name = "FILE")]
    csv: Option<PathBuf>,
    /// Write an SVG chart.
    #[arg(long, value_name = "FILE")]
    plot: Option<PathBuf>,
    /// l1 (raw 1-norm) or tv (half of it).
    #[arg(long, default_value = "l1", value_parser = parse_metric)]
    metric: Metric,
    /// Library JSON file for squeeze mode.
    #[arg(long, value_name = "FILE")]
    offline: Option<PathBuf>,
    /// Query server holding squeeze calibrations.
    #[arg(long, value_name = "URL", conflicts_with = "offline")]
    query_url: Option<String>,
    /// Use the exact library of the simulated device instead of
    /// calibrating. Without any library flag one calibration cycle runs
    /// first.
    #[arg(long, conflicts_with_all = ["offline", "query_url"])]
    ideal: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rx or Rzx error over an angle grid in the X, Y and Z bases.
    Tomography {
        #[command(flatten)]
        common: Common,
        /// rx | rzx
        #[arg(long, default_value = "rx")]
        family: GateFamily,
        /// Physical qubits; control first for rzx. Defaults to 0 or 0,1.
        #[arg(long, value_parser = parse_list::<usize>)]
        qubits: Option<std::vec::Vec<usize>>,
        /// Angles evenly spaced over [0, pi].
        #[arg(long, default_value_t = 16)]
        angles: usize,
    },
    /// Randomized benchmarking with an exponential-decay fit.
    Rb {
        #[command(flatten)]
        common: Common,
        /// su2 | su4
        #[arg(long, default_value = "su2")]
        family: RbFamily,
        #[arg(long, value_parser = parse_list::<usize>)]
        qubits: Option<std::vec::Vec<usize>>,
        #[arg(long, default_value = "1,2,4,8,16,32,64", value_parser = parse_list::<usize>)]
        depths: std::vec::Vec<usize>,
        /// Random sequences per depth.
        #[arg(long, default_value_t = 10)]
        sequences: usize,
    },
    /// Output-distribution error of benchmark algorithms.
    Algo {
        #[command(flatten)]
        common: Common,
        /// Comma-separated bv | qft | qaoa | cdkm, or `all`.
        #[arg(long, default_value = "all")]
        benchmark: String,
        /// Qubits for bv, qft and qaoa.
        #[arg(long, default_value_t = 3)]
        size: usize,
        /// Data bits per adder operand; cdkm uses 2 * bits + 2 qubits.
        #[arg(long, default_value_t = 1)]
        adder_bits: usize,
    },
    /// Schedule durations per mode. Without circuits, tabulates a generic
    /// U3 on every qubit of the reference pulse durations.
    Durations {
        #[command(flatten)]
        common: Common,
        /// Circuit JSON files to tabulate on the backend.
        #[arg(long = "in", value_name = "FILE")]
        inputs: Vec<PathBuf>,
        /// Tabulate Rzx over an angle grid on this control,target pair.
        #[arg(long, value_parser = parse_list::<usize>)]
        rzx: Option<std::vec::Vec<usize>>,
        /// JSON list of {"name", "rx_durations"} replacing the reference set.
        #[arg(long, value_name = "FILE")]
        reference: Option<PathBuf>,
        /// Print the per-qubit rows of the reference table.
        #[arg(long)]
        table: bool,
    },
}

fn parse_metric(s: &str) -> Result<Metric, String> {
    match s.to_ascii_lowercase().as_str() {
        "l1" | "1-norm" => Ok(Metric::L1),
        "tv" | "total-variation" => Ok(Metric::TotalVariation),
        _ => Err(format!("unknown metric '{s}' (expected l1|tv)")),
    }
}

impl Common {
    fn backend(&self) -> Result<Arc<dyn Backend>> {
        let endpoint = parse_endpoint(&self.backend)?;
        if let BackendEndpoint::Url(_) = endpoint {
            return Ok(endpoint.connect()?);
        }
        let mut cfg = endpoint.device_config()?.expect("in-process endpoint");
        cfg.seed = self.seed;
        Ok(Arc::new(SimBackend::new(cfg)?))
    }

    fn library(&self, backend: &Arc<dyn Backend>) -> Result<PulseLibrary> {
        let source = LibrarySource::from_flags(self.offline.clone(), self.query_url.clone(), self.ideal, self.seed);
        if self.mode.contains(&Mode::Squeeze) && source == (LibrarySource::Calibrate { seed: self.seed }) {
            eprintln!("calibrating {} before benchmarking", self.backend);
        }
        library_for(&self.mode, &source, backend)
    }

    fn write_csv(&self, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let Some(path) = &self.csv else { return Ok(()) };
        let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn angle_grid(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![PI / 2.0],
        _ => (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect(),
    }
}

fn tomography(common: &Common, family: GateFamily, qubits: Option<Vec<usize>>, angles: usize) -> Result<()> {
    let qubits = qubits.unwrap_or_else(|| (0..family.n_qubits()).collect());
    if qubits.len() != family.n_qubits() {
        bail!("{family:?} needs {} qubits, got {qubits:?}", family.n_qubits());
    }
    distinct(&qubits)?;
    let backend = common.backend()?;
    let lib = common.library(&backend)?;
    let props = backend.properties()?;
    let grid = angle_grid(angles);
    let mut rows = Vec::new();
    let mut series = Vec::new();
    println!("{:<9} {:>7} {:>7} {:>7} {:>7}", "mode", "X", "Y", "Z", "mean");
    for &mode in &common.mode {
        let results = tomography_sweep(
            backend.as_ref(),
            &props,
            &lib,
            mode,
            family,
            &qubits,
            &grid,
            common.shots,
            common.metric,
        )?;
        let per_basis: Vec<String> = results.iter().map(|r| format!("{:>7.4}", r.mean_error())).collect();
        println!("{:<9} {} {:>7.4}", mode.name(), per_basis.join(" "), mean_error(&results));
        for r in &results {
            for (theta, e) in r.angles.iter().zip(&r.errors) {
                rows.push(vec![mode.to_string(), format!("{:?}", r.basis), theta.to_string(), e.to_string()]);
            }
        }
        let mean_by_angle: Vec<(f64, f64)> = grid
            .iter()
            .enumerate()
            .map(|(i, &t)| (t, results.iter().map(|r| r.errors[i]).sum::<f64>() / results.len() as f64))
            .collect();
        series.push(Series::line(mode.name(), mean_by_angle));
    }
    common.write_csv(&["mode", "basis", "theta", "error"], &rows)?;
    if let Some(path) = &common.plot {
        let title = format!("{family:?} tomography on {:?}", qubits);
        xy_chart(path, &title, "theta (rad)", "mean error over X, Y, Z", &series)?;
    }
    Ok(())
}

fn rb(common: &Common, family: RbFamily, qubits: Option<Vec<usize>>, depths: &[usize], sequences: usize) -> Result<()> {
    let qubits = qubits.unwrap_or(match family {
        RbFamily::Su2 => vec![0],
        RbFamily::Su4 => vec![0, 1],
    });
    distinct(&qubits)?;
    if family == RbFamily::Su4 && qubits.len() != 2 {
        bail!("su4 benchmarking needs exactly two qubits, got {qubits:?}");
    }
    let backend = common.backend()?;
    let lib = common.library(&backend)?;
    let props = backend.properties()?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    println!("{:<9} {:>9} {:>9} {:>10} {:>10}", "mode", "p", "epsilon", "+/-", "SPAM a,b");
    for &mode in &common.mode {
        let s = run_rb(
            backend.as_ref(),
            &props,
            &lib,
            mode,
            family,
            &qubits,
            depths,
            sequences,
            common.shots,
            common.seed,
        )?;
        match &s.fit {
            Some(f) => println!(
                "{:<9} {:>9.6} {:>9.6} {:>10.2e} {:>5.3},{:.3}",
                mode.name(),
                f.p,
                f.epsilon,
                f.epsilon_stderr(),
                f.alpha,
                f.beta
            ),
            None => println!("{:<9} fit failed", mode.name()),
        }
        for (i, &k) in s.depths.iter().enumerate() {
            rows.push(vec![
                mode.to_string(),
                k.to_string(),
                s.survival[i].to_string(),
                s.survival_stderr[i].to_string(),
            ]);
        }
        let points: Vec<(f64, f64)> = s.depths.iter().zip(&s.survival).map(|(&k, &p)| (k as f64, p)).collect();
        series.push(Series::markers(format!("{} data", mode.name()), points));
        if let Some(f) = &s.fit {
            let last = depths.iter().copied().max().unwrap_or(1);
            let curve = (0..=100)
                .map(|i| {
                    let k = last as f64 * i as f64 / 100.0;
                    (k, f.alpha * f.p.powf(k) + f.beta)
                })
                .collect();
            series.push(Series::line(format!("{} fit", mode.name()), curve));
        }
    }
    common.write_csv(&["mode", "depth", "survival", "stderr"], &rows)?;
    if let Some(path) = &common.plot {
        xy_chart(path, &format!("{family:?} RB on {qubits:?}"), "depth k", "P(all zeros)", &series)?;
    }
    Ok(())
}

fn algo(common: &Common, benchmark: &str, size: usize, adder_bits: usize) -> Result<()> {
    let kinds: Vec<Benchmark> = if benchmark.eq_ignore_ascii_case("all") {
        vec![Benchmark::Bv, Benchmark::Qft, Benchmark::Qaoa, Benchmark::Cdkm]
    } else {
        parse_list(benchmark).map_err(anyhow::Error::msg)?
    };
    let circuits: Vec<(String, Circuit)> = kinds
        .iter()
        .map(|&k| {
            let width = if k == Benchmark::Cdkm { adder_bits } else { size };
            Ok((format!("{k}{width}"), make_benchmark(k, width, common.seed)?))
        })
        .collect::<Result<_>>()?;
    let backend = common.backend()?;
    let lib = common.library(&backend)?;
    let props = backend.properties()?;
    let ideal: Vec<Vec<f64>> = circuits.iter().map(|(_, c)| ideal_distribution(c)).collect::<Result<_, _>>()?;
    let logical: Vec<Circuit> = circuits.iter().map(|(_, c)| c.clone()).collect();
    let mut rows = Vec::new();
    let mut groups = Vec::new();
    print!("{:<9}", "mode");
    for (label, _) in &circuits {
        print!(" {label:>8}");
    }
    println!();
    for &mode in &common.mode {
        let measured = execute(backend.as_ref(), &props, &lib, mode, &logical, common.shots)?;
        let errors: Vec<f64> = measured
            .iter()
            .zip(&ideal)
            .map(|(p, q)| common.metric.eval(p, q))
            .collect::<Result<_, _>>()?;
        print!("{:<9}", mode.name());
        for ((label, _), e) in circuits.iter().zip(&errors) {
            print!(" {e:>8.4}");
            rows.push(vec![label.clone(), mode.to_string(), e.to_string()]);
        }
        println!();
        groups.push((mode.to_string(), errors));
    }
    common.write_csv(&["circuit", "mode", "error"], &rows)?;
    if let Some(path) = &common.plot {
        let labels: Vec<String> = circuits.iter().map(|(l, _)| l.clone()).collect();
        bar_chart(path, "Algorithm output error", "error", &labels, &groups)?;
    }
    Ok(())
}

fn print_table(t: &DurationTable) {
    print!("{:<16}", "circuit");
    for m in &t.modes {
        print!(" {:>9}", m.name());
    }
    println!();
    for r in &t.rows {
        print!("{:<16}", r.label);
        for c in &r.cells {
            match c {
                Ok(d) => print!(" {d:>9}"),
                Err(_) => print!(" {:>9}", "error"),
            }
        }
        println!();
    }
    for r in &t.rows {
        for (m, c) in t.modes.iter().zip(&r.cells) {
            if let Err(e) = c {
                eprintln!("{} / {m}: {e}", r.label);
            }
        }
    }
}

fn durations_output(common: &Common, t: &DurationTable) -> Result<()> {
    if let Some(path) = &common.csv {
        std::fs::write(path, t.to_csv()?).with_context(|| format!("writing {}", path.display()))?;
    }
    if let Some(path) = &common.plot {
        let groups: Vec<(String, Vec<f64>)> = t
            .modes
            .iter()
            .map(|&m| (m.to_string(), vec![t.mean(m).unwrap_or(f64::NAN)]))
            .collect();
        bar_chart(path, "Mean schedule duration", "dt", &["mean".to_string()], &groups)?;
    }
    Ok(())
}

fn load_reference(path: &Path) -> Result<Vec<DeviceDurations>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn durations(
    common: &Common,
    inputs: &[PathBuf],
    rzx: Option<Vec<usize>>,
    reference: Option<PathBuf>,
    table: bool,
) -> Result<()> {
    if inputs.is_empty() && rzx.is_none() {
        let devices = match &reference {
            Some(p) => load_reference(p)?,
            None => reference_durations(),
        };
        let s = u3_duration_summary(&devices)?;
        if table {
            print_table(&s.table);
        }
        println!("U3 over {} qubits", s.table.rows.len());
        println!("  baseline {:>8.2} dt", s.baseline_mean);
        println!("  gokhale  {:>8.2} dt  {:.2}x", s.gokhale_mean, s.gokhale_speedup());
        println!("  squeeze  {:>8.2} dt  {:.2}x  (std {:.2})", s.squeeze_mean, s.squeeze_speedup(), s.squeeze_std);
        return durations_output(common, &s.table);
    }
    let backend = common.backend()?;
    let lib = common.library(&backend)?;
    let props = backend.properties()?;
    let mut circuits = Vec::new();
    for path in inputs {
        circuits.push((path.display().to_string(), load_circuit(path)?));
    }
    if let Some(pair) = rzx {
        let [c, t] = pair[..] else { bail!("--rzx takes control,target") };
        let n = props.n_qubits();
        for i in 1..=8 {
            let theta = PI * i as f64 / 8.0;
            circuits.push((format!("rzx({i}pi/8)"), Circuit::from_gates(n, vec![g::rzx(theta, c, t)])?));
        }
    }
    let report = duration_report(&circuits, &props, &lib, &common.mode);
    print_table(&report);
    for &m in &common.mode {
        if let Some(mean) = report.mean(m) {
            println!("mean {:<9} {mean:>9.2} dt", m.name());
        }
    }
    durations_output(common, &report)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    pulsecal_cli::init_logging(cli.verbose);
    match cli.command {
        Command::Tomography { common, family, qubits, angles } => tomography(&common, family, qubits, angles),
        Command::Rb { common, family, qubits, depths, sequences } => rb(&common, family, qubits, &depths, sequences),
        Command::Algo { common, benchmark, size, adder_bits } => algo(&common, &benchmark, size, adder_bits),
        Command::Durations { common, inputs, rzx, reference, table } => {
            durations(&common, &inputs, rzx, reference, table)
        }
    }
}
