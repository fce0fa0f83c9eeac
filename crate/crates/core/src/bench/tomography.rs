// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-gate tomography in the X, Y and Z bases.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{execute, ideal_distribution, place, BenchError, Metric};
use crate::circuit::{g, Circuit};
use crate::params::PulseLibrary;
use crate::sim::Backend;
use crate::target::BackendProperties;
use crate::transpile::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    /// Gates rotating this basis onto Z before readout.
    fn rotate(self, q: usize) -> Vec<crate::circuit::Gate> {
        match self {
            Basis::X => vec![g::h(q)],
            Basis::Y => vec![g::sdg(q), g::h(q)],
            Basis::Z => vec![],
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateFamily {
    Rx,
    Rzx,
}

impl GateFamily {
    pub fn n_qubits(self) -> usize {
        match self {
            GateFamily::Rx => 1,
            GateFamily::Rzx => 2,
        }
    }
}

impl FromStr for GateFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rx" => Ok(GateFamily::Rx),
            "rzx" => Ok(GateFamily::Rzx),
            _ => Err(format!("unknown gate family '{s}' (expected rx|rzx)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TomographyResult {
    pub family: GateFamily,
    pub basis: Basis,
    pub mode: Mode,
    pub angles: Vec<f64>,
    pub measured: Vec<Vec<f64>>,
    pub ideal: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
}

impl TomographyResult {
    pub fn mean_error(&self) -> f64 {
        if self.errors.is_empty() {
            return 0.0;
        }
        self.errors.iter().sum::<f64>() / self.errors.len() as f64
    }
}

/// Logical tomography circuit. `Rx` starts from `|0>`; `Rzx` starts from
/// `|+>` on the control so the result depends on both qubits.
pub fn tomography_circuit(family: GateFamily, theta: f64, basis: Basis) -> Circuit {
    let n = family.n_qubits();
    let mut gates = match family {
        GateFamily::Rx => vec![g::rx(theta, 0)],
        GateFamily::Rzx => vec![g::h(0), g::rzx(theta, 0, 1)],
    };
    for q in 0..n {
        gates.extend(basis.rotate(q));
    }
    gates.extend((0..n).map(g::measure));
    Circuit::from_gates(n, gates).expect("tomography gates fit their register")
}

/// Runs every angle in every basis on physical `qubits` and scores the
/// measured distributions against the exact ones.
#[allow(clippy::too_many_arguments)]
pub fn tomography_sweep(
    backend: &dyn Backend,
    props: &BackendProperties,
    lib: &PulseLibrary,
    mode: Mode,
    family: GateFamily,
    qubits: &[usize],
    angles: &[f64],
    shots: u64,
    metric: Metric,
) -> Result<Vec<TomographyResult>, BenchError> {
    let mut logical = Vec::new();
    let mut physical = Vec::new();
    for basis in Basis::ALL {
        for &theta in angles {
            let c = tomography_circuit(family, theta, basis);
            physical.push(place(&c, qubits, props.n_qubits())?);
            logical.push(c);
        }
    }
    let measured = execute(backend, props, lib, mode, &physical, shots)?;
    let mut out = Vec::new();
    for (b, basis) in Basis::ALL.into_iter().enumerate() {
        let range = b * angles.len()..(b + 1) * angles.len();
        let ideal: Vec<Vec<f64>> = logical[range.clone()].iter().map(ideal_distribution).collect::<Result<_, _>>()?;
        let m = measured[range].to_vec();
        let errors = m.iter().zip(&ideal).map(|(p, q)| metric.eval(p, q)).collect::<Result<_, _>>()?;
        out.push(TomographyResult { family, basis, mode, angles: angles.to_vec(), measured: m, ideal, errors });
    }
    Ok(out)
}

/// Mean error over all bases and angles.
pub fn mean_error(results: &[TomographyResult]) -> f64 {
    let all: Vec<f64> = results.iter().flat_map(|r| r.errors.iter().copied()).collect();
    if all.is_empty() {
        return 0.0;
    }
    all.iter().sum::<f64>() / all.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{presets, SamplingMode, SimBackend};
    use std::f64::consts::PI;

    fn grid(n: usize) -> Vec<f64> {
        (0..n).map(|i| PI * i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn z_basis_ideal_is_sin_squared() {
        for theta in grid(9) {
            let p = ideal_distribution(&tomography_circuit(GateFamily::Rx, theta, Basis::Z)).unwrap();
            assert!((p[1] - (theta / 2.0).sin().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_sweeps_are_exact() {
        let mut cfg = presets::ideal_line(2);
        cfg.sampling = SamplingMode::Expected;
        let be = SimBackend::new(cfg).unwrap();
        let props = be.properties().unwrap();
        let lib = PulseLibrary::ideal(&props, 1.4);
        for mode in Mode::ALL {
            let rx = tomography_sweep(&be, &props, &lib, mode, GateFamily::Rx, &[0], &[0.0], 4096, Metric::L1).unwrap();
            assert_eq!(rx.iter().find(|r| r.basis == Basis::Z).unwrap().errors, vec![0.0]);
        }
        let dev = crate::sim::DeviceModel::new(presets::ideal_line(2)).unwrap();
        for mode in [Mode::Squeeze, Mode::Earnest, Mode::Baseline] {
            for basis in Basis::ALL {
                for theta in grid(20) {
                    let c = tomography_circuit(GateFamily::Rzx, theta, basis);
                    assert!(super::super::noiseless_error(&dev, &lib, mode, &c).unwrap() < 1e-6, "{mode} {basis} {theta}");
                }
            }
        }
    }
}
