// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Gate identities used by the unroller.
//!
//! Each `*_gates` helper emits gates on caller-supplied qubits; the public
//! `decompose_*` wrappers return a small local circuit for inspection.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::{Deserialize, Serialize};

use super::TranspileError;
use crate::circuit::{g, Circuit, Gate, GateTag};

fn local(n: usize, gates: Vec<Gate>) -> Circuit {
    Circuit::from_gates(n, gates).expect("template qubits are local")
}

/// Five-gate form with two fixed `sqrt(X)` pulses.
pub fn u3_baseline_gates(theta: f64, phi: f64, lambda: f64, q: usize) -> Vec<Gate> {
    vec![
        g::rz(lambda, q),
        g::sx(q),
        g::rz(theta + PI, q),
        g::sx(q),
        g::rz(phi + 3.0 * PI, q),
    ]
}

/// One `Rx(theta)` between frame changes offset by a quarter turn.
pub fn u3_squeeze_gates(theta: f64, phi: f64, lambda: f64, q: usize) -> Vec<Gate> {
    vec![g::rz(lambda - FRAC_PI_2, q), g::rx(theta, q), g::rz(phi + FRAC_PI_2, q)]
}

/// Single scaled `Rx(theta)`; shares the frame offsets of the squeeze form.
pub fn u3_gokhale_gates(theta: f64, phi: f64, lambda: f64, q: usize) -> Vec<Gate> {
    u3_squeeze_gates(theta, phi, lambda, q)
}

pub fn decompose_u3_baseline(theta: f64, phi: f64, lambda: f64) -> Circuit {
    local(1, u3_baseline_gates(theta, phi, lambda, 0))
}

pub fn decompose_u3_squeeze(theta: f64, phi: f64, lambda: f64) -> Circuit {
    local(1, u3_squeeze_gates(theta, phi, lambda, 0))
}

pub fn decompose_u3_gokhale(theta: f64, phi: f64, lambda: f64) -> Circuit {
    local(1, u3_gokhale_gates(theta, phi, lambda, 0))
}

pub fn negative_rx_gates(theta: f64, q: usize) -> Result<Vec<Gate>, TranspileError> {
    if !(theta > 0.0 && theta <= PI) {
        return Err(TranspileError::AngleRange(theta));
    }
    Ok(vec![g::rz(PI, q), g::rx(theta, q), g::rz(PI, q)])
}

/// `Rx(-theta)` for `0 < theta <= pi` from a positive rotation.
pub fn negative_rx(theta: f64) -> Result<Circuit, TranspileError> {
    Ok(local(1, negative_rx_gates(theta, 0)?))
}

/// `Rxx`, `Ryy`, `Rzz` or `CPhase` through a single `Rzx`.
pub fn two_qubit_rotation_gates(
    kind: GateTag,
    theta: f64,
    a: usize,
    b: usize,
) -> Result<Vec<Gate>, TranspileError> {
    let gates = match kind {
        GateTag::Rxx => vec![g::h(a), g::rzx(theta, a, b), g::h(a)],
        GateTag::Rzz => vec![g::h(b), g::rzx(theta, a, b), g::h(b)],
        GateTag::Ryy => vec![
            g::rx(FRAC_PI_2, a),
            g::rz(-FRAC_PI_2, b),
            g::rzx(theta, a, b),
            g::rx(-FRAC_PI_2, a),
            g::rz(FRAC_PI_2, b),
        ],
        GateTag::CPhase => {
            let mut v = vec![g::rz(theta / 2.0, a), g::rz(theta / 2.0, b)];
            v.extend(two_qubit_rotation_gates(GateTag::Rzz, -theta / 2.0, a, b)?);
            v
        }
        other => return Err(TranspileError::UnsupportedGate(other.name().into())),
    };
    Ok(gates)
}

pub fn decompose_two_qubit_rotation(kind: GateTag, theta: f64) -> Result<Circuit, TranspileError> {
    Ok(local(2, two_qubit_rotation_gates(kind, theta, 0, 1)?))
}

/// The same rotations through two CNOTs, as a CNOT-only basis requires.
pub fn two_qubit_rotation_cnot_gates(
    kind: GateTag,
    theta: f64,
    a: usize,
    b: usize,
) -> Result<Vec<Gate>, TranspileError> {
    let zz = |t: f64| vec![g::cx(a, b), g::rz(t, b), g::cx(a, b)];
    let gates = match kind {
        GateTag::Rzz => zz(theta),
        GateTag::Rxx => [vec![g::h(a), g::h(b)], zz(theta), vec![g::h(a), g::h(b)]].concat(),
        GateTag::Ryy => [
            vec![g::rx(FRAC_PI_2, a), g::rx(FRAC_PI_2, b)],
            zz(theta),
            vec![g::rx(-FRAC_PI_2, a), g::rx(-FRAC_PI_2, b)],
        ]
        .concat(),
        GateTag::Rzx => [vec![g::h(b)], zz(theta), vec![g::h(b)]].concat(),
        GateTag::CPhase => {
            [vec![g::rz(theta / 2.0, a), g::rz(theta / 2.0, b)], zz(-theta / 2.0)].concat()
        }
        other => return Err(TranspileError::UnsupportedGate(other.name().into())),
    };
    Ok(gates)
}

/// Controlled `X^(theta/pi)` from one `Rzx`; `theta = pi/2` is C(sqrt X).
pub fn csx_gates(theta: f64, c: usize, t: usize) -> Vec<Gate> {
    vec![g::rx(theta / 2.0, t), g::rzx(-theta / 2.0, c, t), g::rz(theta / 2.0, c)]
}

pub fn decompose_csx(theta: f64) -> Circuit {
    local(2, csx_gates(theta, 0, 1))
}

/// C(sqrt X) for a CNOT-only basis.
pub fn csx_cnot_gates(theta: f64, c: usize, t: usize) -> Vec<Gate> {
    [vec![g::h(t)], vec![g::cphase(theta, c, t)], vec![g::h(t)]].concat()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToffoliVariant {
    #[default]
    A,
    B,
}

/// Five two-qubit interactions; `B` swaps the commuting final pair.
pub fn toffoli_gates(variant: ToffoliVariant, a: usize, b: usize, t: usize) -> Vec<Gate> {
    let mut v = vec![g::csx(b, t), g::cx(a, b), g::csxdg(b, t)];
    match variant {
        ToffoliVariant::A => v.extend([g::cx(a, b), g::csx(a, t)]),
        ToffoliVariant::B => v.extend([g::csx(a, t), g::cx(a, b)]),
    }
    v
}

pub fn decompose_toffoli(variant: ToffoliVariant) -> Circuit {
    local(3, toffoli_gates(variant, 0, 1, 2))
}

/// Textbook six-CNOT Toffoli over `{H, T, Tdg, CNOT}`.
pub fn toffoli_standard_gates(a: usize, b: usize, t: usize) -> Vec<Gate> {
    vec![
        g::h(t),
        g::cx(b, t),
        g::tdg(t),
        g::cx(a, t),
        g::t(t),
        g::cx(b, t),
        g::tdg(t),
        g::cx(a, t),
        g::t(b),
        g::t(t),
        g::h(t),
        g::cx(a, b),
        g::t(a),
        g::tdg(b),
        g::cx(a, b),
    ]
}

pub fn decompose_toffoli_standard() -> Circuit {
    local(3, toffoli_standard_gates(0, 1, 2))
}

/// `H` as `Rz(pi/2) Rx(pi/2) Rz(pi/2)`.
pub fn h_gates(q: usize) -> Vec<Gate> {
    vec![g::rz(FRAC_PI_2, q), g::rx(FRAC_PI_2, q), g::rz(FRAC_PI_2, q)]
}

/// Single-qubit Clifford+T kinds as frame changes or a single `Rx`.
pub fn simple_single_qubit(kind: GateTag, q: usize) -> Option<Vec<Gate>> {
    let v = match kind {
        GateTag::X => vec![g::rx(PI, q)],
        GateTag::SqrtX => vec![g::rx(FRAC_PI_2, q)],
        GateTag::Z => vec![g::rz(PI, q)],
        GateTag::S => vec![g::rz(FRAC_PI_2, q)],
        GateTag::Sdg => vec![g::rz(-FRAC_PI_2, q)],
        GateTag::T => vec![g::rz(FRAC_PI_4, q)],
        GateTag::Tdg => vec![g::rz(-FRAC_PI_4, q)],
        GateTag::H => h_gates(q),
        _ => return None,
    };
    Some(v)
}
