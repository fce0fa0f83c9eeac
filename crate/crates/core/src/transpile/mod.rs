// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Lowering of logical circuits to pulse schedules.
//!
//! The pass order is: route onto the coupling map, unroll to the basis of
//! the chosen [`Mode`], fix reversed two-qubit directions, unroll again and
//! finally attach pulses.

mod attach;
pub mod decompose;
pub mod route;
pub mod unroll;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use attach::{attach_pulses, cnot_into, rx_into, rzx_into};
pub use decompose::ToffoliVariant;
pub use route::{route, RoutedCircuit, ToffoliChoice};
pub use unroll::{basis_for, unroll, unroll_for_mode, BasisSet, EquivalenceLibrary, EquivalenceRule};

use crate::calibrate::CalibError;
use crate::circuit::{Circuit, CircuitError, GateKind, GateTag};
use crate::params::PulseLibrary;
use crate::pulse::{PulseError, Schedule};
use crate::target::BackendProperties;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TranspileError {
    #[error("gate '{0}' cannot be lowered to the basis")]
    UnsupportedGate(String),
    #[error("angle {0} outside (0, pi]")]
    AngleRange(f64),
    #[error("no path between physical qubits {from} and {to}")]
    Routing { from: usize, to: usize },
    #[error("circuit uses {circuit} qubits but the device has {device}")]
    TooManyQubits { circuit: usize, device: usize },
    #[error("no calibration for {0}")]
    CalibrationMissing(String),
    #[error("gate '{0}' is not in the basis of this mode")]
    NotInBasis(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Calibration(#[from] CalibError),
}

/// How single- and two-qubit rotations become pulses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Calibrated `Rx(θ)` via the sin² inversion and particle-filtered `Rzx(θ)`.
    Squeeze,
    /// Vendor X pulse scaled linearly by `θ/π`; CNOT-based two-qubit gates.
    Gokhale,
    /// Two fixed `sqrt(X)` pulses per rotation; CNOT-based two-qubit gates.
    Baseline,
    /// Baseline single-qubit gates with `Rzx(θ)` from unscaled vendor CR pulses.
    Earnest,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Squeeze, Mode::Gokhale, Mode::Baseline, Mode::Earnest];

    pub fn native_rzx(self) -> bool {
        matches!(self, Mode::Squeeze | Mode::Earnest)
    }

    pub fn default_toffoli(self) -> ToffoliChoice {
        if self.native_rzx() {
            ToffoliChoice::Auto
        } else {
            ToffoliChoice::Standard
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Squeeze => "squeeze",
            Mode::Gokhale => "gokhale",
            Mode::Baseline => "baseline",
            Mode::Earnest => "earnest",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mode '{s}' (expected squeeze|gokhale|baseline|earnest)"))
    }
}

/// Result of the full pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct Transpiled {
    pub schedule: Schedule,
    /// Basis-level circuit over physical qubits.
    pub circuit: Circuit,
    /// Physical qubits in measurement order.
    pub measured: Vec<usize>,
    pub routing: RoutedCircuit,
}

/// Replaces two-qubit gates lacking a forward control channel by their
/// `H`-conjugated reverse.
pub fn fix_directions(c: &Circuit, props: &BackendProperties) -> Result<Circuit, TranspileError> {
    let mut out = Circuit::new(c.n_qubits())?;
    for gate in c.gates() {
        match gate.qubits() {
            [a, b] if !props.has_cr(*a, *b) && props.has_cr(*b, *a) => {
                out.extend(unroll::reverse_direction(gate)?)?;
            }
            _ => {
                out.push(gate.clone())?;
            }
        }
    }
    Ok(out)
}

/// Routes, unrolls and attaches pulses.
pub fn transpile(
    c: &Circuit,
    props: &BackendProperties,
    lib: &PulseLibrary,
    mode: Mode,
    toffoli: Option<ToffoliChoice>,
) -> Result<Transpiled, TranspileError> {
    let routing = route(c, &props.coupling(), toffoli.unwrap_or(mode.default_toffoli()))?;
    let basis = basis_for(mode);
    let rules = EquivalenceLibrary::for_mode(mode);
    let lowered = unroll(&routing.circuit, &basis, &rules)?;
    let directed = fix_directions(&lowered, props)?;
    let circuit = unroll(&directed, &basis, &rules)?;
    let schedule = attach_pulses(&circuit, lib, props, mode)?;
    let measured = circuit.measured();
    Ok(Transpiled { schedule, circuit, measured, routing })
}

/// Keys of the library that a basis-level circuit needs in `mode`.
pub fn required_calibrations(c: &Circuit, mode: Mode) -> Vec<String> {
    let mut keys = std::collections::BTreeSet::new();
    if mode != Mode::Squeeze {
        return Vec::new();
    }
    for gate in c.gates() {
        match (gate.kind(), gate.qubits()) {
            (GateKind::Rx(_), [q]) => {
                keys.insert(format!("rx/{q}"));
            }
            (k, [a, b]) if matches!(k.tag(), GateTag::Rzx | GateTag::Cnot) => {
                keys.insert(format!("zx/{a}-{b}"));
            }
            _ => {}
        }
    }
    keys.into_iter().collect()
}
