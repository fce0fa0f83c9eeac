// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Ready-made device configurations.

use super::{DeviceConfig, DriftConfig, PairConfig, QubitConfig, SamplingMode};

fn qubit(x_amp: f64, readout: [f64; 2]) -> QubitConfig {
    QubitConfig { x_amp, x_duration: 160, sigma: 40.0, beta: 0.0, readout, gain: 1.0 }
}

fn pair(control: usize, target: usize, amp: f64, width: f64, duration: u32, sigma: f64) -> PairConfig {
    PairConfig { control, target, amp, width, duration, sigma, gain: 1.0 }
}

/// Five qubits in a T (0-1-2 with 1-3-4), CR channels pointing away from 1.
///
/// The `(0, 1)` cross-resonance pulse is 528 dt long.
pub fn lima() -> DeviceConfig {
    DeviceConfig {
        name: "lima".into(),
        qubits: vec![
            qubit(0.18, [0.015, 0.030]),
            qubit(0.21, [0.012, 0.025]),
            qubit(0.19, [0.020, 0.035]),
            qubit(0.20, [0.010, 0.028]),
            qubit(0.17, [0.018, 0.040]),
        ],
        pairs: vec![
            pair(0, 1, 0.35, 272.0, 528, 64.0),
            pair(1, 2, 0.30, 208.0, 464, 64.0),
            pair(1, 3, 0.32, 320.0, 576, 64.0),
            pair(3, 4, 0.28, 240.0, 496, 64.0),
        ],
        depolarizing_rate: 2e-6,
        drift: DriftConfig::default(),
        seed: 7,
        queue_delay_s: 0.0,
        sampling: SamplingMode::Multinomial,
    }
}

/// Noiseless, drift-free line of `n` qubits with forward CR channels
/// `(i, i + 1)`.
pub fn ideal_line(n: usize) -> DeviceConfig {
    DeviceConfig {
        name: format!("line{n}"),
        qubits: (0..n).map(|i| qubit(0.2 + 0.01 * (i % 3) as f64, [0.0, 0.0])).collect(),
        pairs: (1..n).map(|i| pair(i - 1, i, 0.3, 400.0, 464, 16.0)).collect(),
        depolarizing_rate: 0.0,
        drift: DriftConfig { sigma: 0.0, ..DriftConfig::default() },
        seed: 1,
        queue_delay_s: 0.0,
        sampling: SamplingMode::Multinomial,
    }
}
