// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Vendor-side description of a device: default pulses, coupling and
//! readout figures, as a backend would publish them.

use serde::{Deserialize, Serialize};

use crate::circuit::CouplingMap;
use crate::pulse::{DragPulse, GaussianSquarePulse};

/// Readout confusion probabilities of one qubit.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Readout {
    /// P(read 1 | state 0).
    pub p1_given0: f64,
    /// P(read 0 | state 1).
    pub p0_given1: f64,
}

impl Readout {
    pub fn new(p1_given0: f64, p0_given1: f64) -> Self {
        Self { p1_given0, p0_given1 }
    }

    /// Undoes the confusion on a measured `P(1)`.
    pub fn correct_p1(&self, p1: f64) -> f64 {
        let denom = 1.0 - self.p1_given0 - self.p0_given1;
        if denom <= 0.0 {
            return p1;
        }
        (p1 - self.p1_given0) / denom
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitProperties {
    /// Vendor-calibrated `X` pulse.
    pub x_pulse: DragPulse,
    #[serde(default)]
    pub readout: Readout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrProperties {
    pub control: usize,
    pub target: usize,
    /// Vendor `CR(pi/4)` pulse.
    pub pulse: GaussianSquarePulse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendProperties {
    pub name: String,
    pub qubits: Vec<QubitProperties>,
    pub cr: Vec<CrProperties>,
    #[serde(default = "default_dt")]
    pub dt_ns: f64,
}

fn default_dt() -> f64 {
    crate::pulse::DT_NS
}

impl BackendProperties {
    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn coupling(&self) -> CouplingMap {
        CouplingMap::new(self.n_qubits(), self.cr.iter().map(|c| (c.control, c.target)))
            .expect("properties reference their own qubits")
    }

    pub fn qubit(&self, q: usize) -> Option<&QubitProperties> {
        self.qubits.get(q)
    }

    pub fn x_pulse(&self, q: usize) -> Option<DragPulse> {
        self.qubit(q).map(|p| p.x_pulse)
    }

    /// Half-amplitude copy of the `X` pulse.
    pub fn sx_pulse(&self, q: usize) -> Option<DragPulse> {
        self.x_pulse(q).map(|p| p.with_amp(p.amp() / 2.0).expect("half amplitude is valid"))
    }

    pub fn readout(&self, q: usize) -> Readout {
        self.qubit(q).map(|p| p.readout).unwrap_or_default()
    }

    pub fn cr_pulse(&self, c: usize, t: usize) -> Option<GaussianSquarePulse> {
        self.cr.iter().find(|p| p.control == c && p.target == t).map(|p| p.pulse)
    }

    pub fn has_cr(&self, c: usize, t: usize) -> bool {
        self.cr_pulse(c, t).is_some()
    }
}
