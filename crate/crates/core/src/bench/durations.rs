// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Schedule-duration accounting per circuit and mode.

use serde::{Deserialize, Serialize};

use super::BenchError;
use crate::circuit::{g, Circuit};
use crate::params::PulseLibrary;
use crate::sim::{presets, DeviceModel};
use crate::target::BackendProperties;
use crate::transpile::{transpile, Mode};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationRow {
    pub label: String,
    /// One cell per mode of the table, in dt or the transpile error.
    pub cells: Vec<Result<u64, String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DurationTable {
    pub modes: Vec<Mode>,
    pub rows: Vec<DurationRow>,
}

impl DurationTable {
    fn column(&self, mode: Mode) -> Option<usize> {
        self.modes.iter().position(|&m| m == mode)
    }

    /// Successful cells of `mode`'s column.
    pub fn values(&self, mode: Mode) -> Vec<u64> {
        let Some(i) = self.column(mode) else { return Vec::new() };
        self.rows.iter().filter_map(|r| r.cells[i].as_ref().ok().copied()).collect()
    }

    pub fn mean(&self, mode: Mode) -> Option<f64> {
        let v = self.values(mode);
        (!v.is_empty()).then(|| v.iter().sum::<u64>() as f64 / v.len() as f64)
    }

    /// Sample standard deviation of `mode`'s column.
    pub fn std_dev(&self, mode: Mode) -> Option<f64> {
        let v = self.values(mode);
        if v.len() < 2 {
            return None;
        }
        let m = self.mean(mode)?;
        Some((v.iter().map(|&x| (x as f64 - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
    }

    /// `circuit,<mode>...` with errors written as `error: ...`.
    pub fn to_csv(&self) -> Result<String, csv::Error> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["circuit".to_string()];
        header.extend(self.modes.iter().map(|m| m.to_string()));
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.label.clone()];
            rec.extend(r.cells.iter().map(|c| match c {
                Ok(d) => d.to_string(),
                Err(e) => format!("error: {e}"),
            }));
            w.write_record(&rec)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Transpiles every circuit in every mode and records schedule durations.
pub fn duration_report(
    circuits: &[(String, Circuit)],
    props: &BackendProperties,
    lib: &PulseLibrary,
    modes: &[Mode],
) -> DurationTable {
    let rows = circuits
        .iter()
        .map(|(label, c)| DurationRow {
            label: label.clone(),
            cells: modes
                .iter()
                .map(|&m| transpile(c, props, lib, m, None).map(|t| t.schedule.duration()).map_err(|e| e.to_string()))
                .collect(),
        })
        .collect();
    DurationTable { modes: modes.to_vec(), rows }
}

/// Per-qubit optimal `Rx` durations of one device, in dt.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceDurations {
    pub name: String,
    pub rx_durations: Vec<u32>,
}

/// Published optimal `Rx` durations for five 5- and 7-qubit devices.
pub fn reference_durations() -> Vec<DeviceDurations> {
    let d = |name: &str, v: &[u32]| DeviceDurations { name: name.into(), rx_durations: v.to_vec() };
    vec![
        d("belem", &[80, 64, 80, 96, 96]),
        d("lima", &[64, 64, 64, 64, 64]),
        d("manila", &[80, 80, 80, 80, 80]),
        d("quito", &[80, 64, 80, 80, 112]),
        d("nairobi", &[64, 80, 80, 80, 80, 80, 80]),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct U3Summary {
    /// Rows `device/q<i>`, columns baseline, gokhale, squeeze.
    pub table: DurationTable,
    pub baseline_mean: f64,
    pub gokhale_mean: f64,
    pub squeeze_mean: f64,
    pub squeeze_std: f64,
}

impl U3Summary {
    pub fn gokhale_speedup(&self) -> f64 {
        self.baseline_mean / self.gokhale_mean
    }

    pub fn squeeze_speedup(&self) -> f64 {
        self.baseline_mean / self.squeeze_mean
    }
}

/// Generic `U3` angles (no component is a multiple of `pi/2`).
pub const GENERIC_U3: (f64, f64, f64) = (1.1, 0.4, -0.7);

/// Duration of a generic `U3` on every listed qubit, with the library built
/// from the given durations on a simulated device of matching size.
pub fn u3_duration_summary(devices: &[DeviceDurations]) -> Result<U3Summary, BenchError> {
    let modes = [Mode::Baseline, Mode::Gokhale, Mode::Squeeze];
    let mut rows = Vec::new();
    for dev in devices {
        let n = dev.rx_durations.len();
        let props = DeviceModel::new(presets::ideal_line(n))
            .map_err(|e| BenchError::Resource(e.to_string()))?
            .properties();
        let lib = PulseLibrary::with_durations(&props, &dev.rx_durations)
            .map_err(|e| BenchError::Resource(format!("{}: {e}", dev.name)))?;
        let (t, p, l) = GENERIC_U3;
        let circuits: Vec<(String, Circuit)> = (0..n)
            .map(|q| Ok((format!("{}/q{q}", dev.name), Circuit::from_gates(n, vec![g::u3(t, p, l, q)])?)))
            .collect::<Result<_, BenchError>>()?;
        rows.extend(duration_report(&circuits, &props, &lib, &modes).rows);
    }
    let table = DurationTable { modes: modes.to_vec(), rows };
    if let Some(bad) = table.rows.iter().find(|r| r.cells.iter().any(|c| c.is_err())) {
        return Err(BenchError::Resource(format!("{}: {:?}", bad.label, bad.cells)));
    }
    let mean = |m| table.mean(m).unwrap_or(f64::NAN);
    Ok(U3Summary {
        baseline_mean: mean(Mode::Baseline),
        gokhale_mean: mean(Mode::Gokhale),
        squeeze_mean: mean(Mode::Squeeze),
        squeeze_std: table.std_dev(Mode::Squeeze).unwrap_or(0.0),
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::presets;
    use std::f64::consts::PI;

    #[test]
    fn reference_u3_row() {
        let s = u3_duration_summary(&reference_durations()).unwrap();
        assert_eq!(s.table.rows.len(), 27);
        assert_eq!(s.baseline_mean, 320.0);
        assert_eq!(s.gokhale_mean, 160.0);
        // 2096 dt over 27 qubits
        assert!((s.squeeze_mean - 2096.0 / 27.0).abs() < 1e-12);
        assert!((s.squeeze_speedup() - 4.12).abs() < 0.005);
    }

    #[test]
    fn x_row_and_csv() {
        let props = DeviceModel::new(presets::ideal_line(2)).unwrap().properties();
        let lib = PulseLibrary::with_durations(&props, &[64, 96]).unwrap();
        let c = vec![("x0".to_string(), Circuit::from_gates(2, vec![g::x(0)]).unwrap()),
                     ("x1".to_string(), Circuit::from_gates(2, vec![g::x(1)]).unwrap())];
        let t = duration_report(&c, &props, &lib, &[Mode::Baseline, Mode::Squeeze]);
        assert_eq!(t.values(Mode::Baseline), vec![160, 160]);
        assert_eq!(t.values(Mode::Squeeze), vec![64, 96]);
        assert_eq!(t.to_csv().unwrap(), "circuit,baseline,squeeze\nx0,160,64\nx1,160,96\n");
    }

    #[test]
    fn lima_rzx_baseline_mean() {
        let props = presets::lima().properties();
        let lib = PulseLibrary::default();
        let circuits: Vec<(String, Circuit)> = (1..=8)
            .map(|i| (format!("{i}"), Circuit::from_gates(5, vec![g::rzx(PI * i as f64 / 8.0, 0, 1)]).unwrap()))
            .collect();
        let t = duration_report(&circuits, &props, &lib, &[Mode::Baseline]);
        assert_eq!(t.mean(Mode::Baseline), Some(3072.0));
    }

    #[test]
    fn errors_are_per_cell() {
        let props = DeviceModel::new(presets::ideal_line(1)).unwrap().properties();
        let c = vec![("rx".to_string(), Circuit::from_gates(1, vec![g::rx(0.3, 0)]).unwrap())];
        let t = duration_report(&c, &props, &PulseLibrary::default(), &[Mode::Baseline, Mode::Squeeze]);
        assert!(t.rows[0].cells[0].is_ok());
        assert!(t.rows[0].cells[1].as_ref().unwrap_err().contains("rx/0"));
        assert!(t.to_csv().unwrap().contains("error:"));
    }
}
