// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Benchmark harness: error metrics, tomography, randomized benchmarking,
//! algorithm circuits and schedule-duration accounting.

pub mod circuits;
pub mod durations;
pub mod rb;
pub mod tomography;

pub use circuits::{bernstein_vazirani, cdkm_adder, make_benchmark, qaoa, qft, Benchmark};
pub use durations::{
    duration_report, reference_durations, u3_duration_summary, DeviceDurations, DurationTable, U3Summary,
};
pub use rb::{haar_su2, random_su4, rb_fit, rb_generate, run_rb, RbFamily, RbFit, RbSeries};
pub use tomography::{tomography_circuit, tomography_sweep, Basis, GateFamily, TomographyResult};

use thiserror::Error;

use crate::circuit::{circuit_statevector, Circuit, CircuitError, GateTag};
use crate::params::PulseLibrary;
use crate::sim::{counts_to_probs, Backend, BackendError, DeviceError, DeviceModel, Experiment, JobRequest, BATCH_LIMIT};
use crate::target::BackendProperties;
use crate::transpile::{transpile, Mode, TranspileError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("outcome spaces differ: {0} vs {1}")]
    Domain(usize, usize),
    #[error("benchmark too large: {0}")]
    Resource(String),
    #[error("fit failed: {0}")]
    FitFailed(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Transpile(#[from] TranspileError),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Distance reported between a measured and an ideal distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Metric {
    /// Raw `sum |p - q|`, in `[0, 2]`.
    #[default]
    L1,
    /// Half the 1-norm, in `[0, 1]`.
    TotalVariation,
}

impl Metric {
    pub fn eval(self, measured: &[f64], ideal: &[f64]) -> Result<f64, BenchError> {
        let d = distance_1norm(measured, ideal)?;
        Ok(match self {
            Metric::L1 => d,
            Metric::TotalVariation => d / 2.0,
        })
    }
}

/// `sum_i |p_i - q_i|`.
pub fn distance_1norm(measured: &[f64], ideal: &[f64]) -> Result<f64, BenchError> {
    if measured.len() != ideal.len() {
        return Err(BenchError::Domain(measured.len(), ideal.len()));
    }
    Ok(measured.iter().zip(ideal).map(|(p, q)| (p - q).abs()).sum())
}

/// Qubits a circuit reads out: its measure gates in order, or every qubit
/// when it has none.
pub fn readout_qubits(c: &Circuit) -> Vec<usize> {
    let m = c.measured();
    if m.is_empty() {
        (0..c.n_qubits()).collect()
    } else {
        m
    }
}

/// Exact outcome distribution of a logical circuit over [`readout_qubits`],
/// indexed with the first measured qubit as bit 0.
pub fn ideal_distribution(c: &Circuit) -> Result<Vec<f64>, BenchError> {
    if c.n_qubits() > crate::sim::MAX_ACTIVE_QUBITS {
        return Err(BenchError::Resource(format!("{} qubits", c.n_qubits())));
    }
    let amps = circuit_statevector(c)?;
    let measured = readout_qubits(c);
    let mut out = vec![0.0; 1 << measured.len()];
    for (i, a) in amps.iter().enumerate() {
        let k = measured.iter().enumerate().fold(0, |acc, (j, &q)| acc | ((i >> q & 1) << j));
        out[k] += a.norm_sqr();
    }
    Ok(out)
}

/// Copies `c` onto a `width`-qubit register, logical `i` going to `qubits[i]`.
pub fn place(c: &Circuit, qubits: &[usize], width: usize) -> Result<Circuit, BenchError> {
    if qubits.len() < c.n_qubits() {
        return Err(BenchError::Resource(format!("{} qubits given for a {}-qubit circuit", qubits.len(), c.n_qubits())));
    }
    Ok(Circuit::from_gates(width, c.gates().iter().map(|g| g.remapped(|i| qubits[i])).collect())?)
}

fn with_measurements(c: &Circuit) -> Result<Circuit, BenchError> {
    if c.gates().iter().any(|g| g.tag() == GateTag::Measure) {
        return Ok(c.clone());
    }
    let mut out = c.clone();
    out.extend((0..c.n_qubits()).map(crate::circuit::g::measure))?;
    Ok(out)
}

/// Transpiles `circuits` in `mode`, runs them in batches of at most
/// [`BATCH_LIMIT`] and returns measured distributions.
pub fn execute(
    backend: &dyn Backend,
    props: &BackendProperties,
    lib: &PulseLibrary,
    mode: Mode,
    circuits: &[Circuit],
    shots: u64,
) -> Result<Vec<Vec<f64>>, BenchError> {
    let experiments = circuits
        .iter()
        .map(|c| {
            let t = transpile(&with_measurements(c)?, props, lib, mode, None)?;
            Ok(Experiment { schedule: t.schedule, measured: t.measured })
        })
        .collect::<Result<Vec<_>, BenchError>>()?;
    let mut out = Vec::with_capacity(experiments.len());
    for chunk in experiments.chunks(BATCH_LIMIT) {
        let widths: Vec<usize> = chunk.iter().map(|e| e.measured.len()).collect();
        let r = backend.submit(JobRequest { experiments: chunk.to_vec(), shots })?;
        out.extend(r.counts.iter().zip(widths).map(|(c, w)| counts_to_probs(c, w)));
    }
    Ok(out)
}

/// Exact distribution of the transpiled circuit on `dev` with every noise
/// source off.
pub fn simulate_noiseless(
    dev: &DeviceModel,
    lib: &PulseLibrary,
    mode: Mode,
    c: &Circuit,
) -> Result<Vec<f64>, BenchError> {
    let t = transpile(&with_measurements(c)?, &dev.properties(), lib, mode, None)?;
    Ok(dev.distribution(&t.schedule, &t.measured, true)?)
}

/// 1-norm error of `c` after noiseless simulation in `mode`.
pub fn noiseless_error(dev: &DeviceModel, lib: &PulseLibrary, mode: Mode, c: &Circuit) -> Result<f64, BenchError> {
    let c = with_measurements(c)?;
    distance_1norm(&simulate_noiseless(dev, lib, mode, &c)?, &ideal_distribution(&c)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::g;
    use proptest::prelude::*;

    #[test]
    fn one_norm_examples() {
        assert_eq!(distance_1norm(&[0.5, 0.5], &[0.5, 0.5]).unwrap(), 0.0);
        assert_eq!(distance_1norm(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 2.0);
        assert!((distance_1norm(&[0.6, 0.4], &[0.5, 0.5]).unwrap() - 0.2).abs() < 1e-15);
        assert!((Metric::TotalVariation.eval(&[0.6, 0.4], &[0.5, 0.5]).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(distance_1norm(&[1.0], &[0.5, 0.5]), Err(BenchError::Domain(1, 2)));
    }

    #[test]
    fn ideal_distribution_uses_measure_order() {
        let c = Circuit::from_gates(3, vec![g::x(2), g::measure(2), g::measure(0)]).unwrap();
        assert_eq!(ideal_distribution(&c).unwrap(), vec![0.0, 1.0, 0.0, 0.0]);
        let plain = Circuit::from_gates(2, vec![g::x(1)]).unwrap();
        assert_eq!(ideal_distribution(&plain).unwrap(), vec![0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn algorithms_noiseless_in_every_mode() {
        let dev = DeviceModel::new(crate::sim::presets::ideal_line(4)).unwrap();
        let lib = PulseLibrary::ideal(&dev.properties(), 1.4);
        let circuits = [
            bernstein_vazirani(3, 0b101).unwrap(),
            make_benchmark(Benchmark::Qft, 3, 2).unwrap(),
            cdkm_adder(1, 1, 1).unwrap(),
            make_benchmark(Benchmark::Qaoa, 4, 3).unwrap(),
        ];
        for mode in Mode::ALL {
            for c in &circuits {
                let e = noiseless_error(&dev, &lib, mode, c).unwrap();
                assert!(e < 1e-6, "{mode}: {e}");
            }
        }
    }

    proptest! {
        #[test]
        fn one_norm_is_a_metric(p in prop::collection::vec(0.0f64..1.0, 4), q in prop::collection::vec(0.0f64..1.0, 4), r in prop::collection::vec(0.0f64..1.0, 4)) {
            let d = |a: &[f64], b: &[f64]| distance_1norm(a, b).unwrap();
            prop_assert!((d(&p, &q) - d(&q, &p)).abs() < 1e-15);
            prop_assert!(d(&p, &r) <= d(&p, &q) + d(&q, &r) + 1e-12);
            prop_assert_eq!(d(&p, &p), 0.0);
        }
    }
}
