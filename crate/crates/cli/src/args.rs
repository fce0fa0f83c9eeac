// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Parsers for command-line values shared by several binaries.

use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use pulsecal::circuit::Circuit;
use pulsecal::sim::DeviceConfig;
use pulsecal::transpile::{Mode, ToffoliChoice};
use pulsecal_service::daemon::preset;
use pulsecal_service::BackendEndpoint;

/// Reads a circuit in the `{"n_qubits": n, "gates": [...]}` format.
pub fn load_circuit(path: &Path) -> Result<Circuit> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing circuit {}", path.display()))
}

/// A device from a preset name (`lima`, `line-<n>`) or a JSON file.
pub fn load_device(arg: &str) -> Result<DeviceConfig> {
    let path = Path::new(arg);
    if path.is_file() {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        return DeviceConfig::from_json(&text).with_context(|| format!("parsing device {arg}"));
    }
    Ok(preset(arg)?)
}

/// `http(s)://` URLs name a backend server; anything else is a device.
pub fn parse_endpoint(arg: &str) -> Result<BackendEndpoint> {
    if arg.starts_with("http://") || arg.starts_with("https://") {
        return Ok(BackendEndpoint::Url(arg.to_string()));
    }
    if Path::new(arg).is_file() {
        return Ok(BackendEndpoint::Device(Box::new(load_device(arg)?)));
    }
    preset(arg)?;
    Ok(BackendEndpoint::Preset(arg.to_string()))
}

/// Comma-separated modes, or `all`.
pub fn parse_modes(s: &str) -> Result<Vec<Mode>, String> {
    if s.eq_ignore_ascii_case("all") {
        return Ok(Mode::ALL.to_vec());
    }
    let modes: Vec<Mode> = parse_list(s)?;
    if modes.is_empty() {
        return Err("no modes given".into());
    }
    Ok(modes)
}

/// Comma-separated values of any parsable type.
pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: std::fmt::Display,
{
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|e| format!("'{x}': {e}")))
        .collect()
}

pub fn parse_toffoli(s: &str) -> Result<ToffoliChoice, String> {
    serde_json::from_value(serde_json::Value::String(s.to_ascii_lowercase()))
        .map_err(|_| format!("unknown toffoli choice '{s}' (expected auto|a|b|standard)"))
}

/// Checks that physical qubits are distinct.
pub fn distinct(qubits: &[usize]) -> Result<()> {
    let mut seen = qubits.to_vec();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != qubits.len() {
        bail!("qubits {qubits:?} repeat");
    }
    Ok(())
}
