// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Logical circuit IR, gate unitaries and coupling maps.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::math::{self, Matrix, C64, I, ONE, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircuitError {
    #[error("gate {kind} expects {expected} operands, got {got}")]
    Arity { kind: String, expected: usize, got: usize },
    #[error("gate {kind} expects {expected} parameters, got {got}")]
    Params { kind: String, expected: usize, got: usize },
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit circuit")]
    QubitRange { qubit: usize, n_qubits: usize },
    #[error("repeated operand {0}")]
    RepeatedOperand(usize),
    #[error("non-finite angle in {0}")]
    Angle(String),
    #[error("unknown gate kind '{0}'")]
    UnknownKind(String),
    #[error("operation not supported for {0}")]
    Unsupported(String),
    #[error("{n_qubits} qubits exceeds the oracle limit of {limit}")]
    Resource { n_qubits: usize, limit: usize },
    #[error("circuit must have at least one qubit")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateKind {
    Rx(f64),
    Rz(f64),
    Rzx(f64),
    Rxx(f64),
    Ryy(f64),
    Rzz(f64),
    CPhase(f64),
    X,
    SqrtX,
    H,
    T,
    Tdg,
    S,
    Sdg,
    Z,
    Cnot,
    CSqrtX,
    /// Inverse of [`GateKind::CSqrtX`].
    CSqrtXdg,
    Toffoli,
    U3(f64, f64, f64),
    Measure,
}

/// Parameter-free identity of a gate kind, used for basis sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateTag {
    Rx,
    Rz,
    Rzx,
    Rxx,
    Ryy,
    Rzz,
    CPhase,
    X,
    SqrtX,
    H,
    T,
    Tdg,
    S,
    Sdg,
    Z,
    Cnot,
    CSqrtX,
    CSqrtXdg,
    Toffoli,
    U3,
    Measure,
}

impl GateTag {
    pub fn name(self) -> &'static str {
        match self {
            GateTag::Rx => "rx",
            GateTag::Rz => "rz",
            GateTag::Rzx => "rzx",
            GateTag::Rxx => "rxx",
            GateTag::Ryy => "ryy",
            GateTag::Rzz => "rzz",
            GateTag::CPhase => "cp",
            GateTag::X => "x",
            GateTag::SqrtX => "sx",
            GateTag::H => "h",
            GateTag::T => "t",
            GateTag::Tdg => "tdg",
            GateTag::S => "s",
            GateTag::Sdg => "sdg",
            GateTag::Z => "z",
            GateTag::Cnot => "cx",
            GateTag::CSqrtX => "csx",
            GateTag::CSqrtXdg => "csxdg",
            GateTag::Toffoli => "ccx",
            GateTag::U3 => "u3",
            GateTag::Measure => "measure",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        let tag = match name.to_ascii_lowercase().as_str() {
            "rx" => GateTag::Rx,
            "rz" => GateTag::Rz,
            "rzx" => GateTag::Rzx,
            "rxx" => GateTag::Rxx,
            "ryy" => GateTag::Ryy,
            "rzz" => GateTag::Rzz,
            "cp" | "cphase" | "cu1" => GateTag::CPhase,
            "x" => GateTag::X,
            "sx" | "sqrtx" => GateTag::SqrtX,
            "h" => GateTag::H,
            "t" => GateTag::T,
            "tdg" => GateTag::Tdg,
            "s" => GateTag::S,
            "sdg" => GateTag::Sdg,
            "z" => GateTag::Z,
            "cx" | "cnot" => GateTag::Cnot,
            "csx" | "csqrtx" => GateTag::CSqrtX,
            "csxdg" => GateTag::CSqrtXdg,
            "ccx" | "toffoli" => GateTag::Toffoli,
            "u3" | "u" => GateTag::U3,
            "measure" => GateTag::Measure,
            _ => return None,
        };
        Some(tag)
    }

    pub fn arity(self) -> usize {
        match self {
            GateTag::Rzx
            | GateTag::Rxx
            | GateTag::Ryy
            | GateTag::Rzz
            | GateTag::CPhase
            | GateTag::Cnot
            | GateTag::CSqrtX
            | GateTag::CSqrtXdg => 2,
            GateTag::Toffoli => 3,
            _ => 1,
        }
    }

    pub fn n_params(self) -> usize {
        match self {
            GateTag::Rx
            | GateTag::Rz
            | GateTag::Rzx
            | GateTag::Rxx
            | GateTag::Ryy
            | GateTag::Rzz
            | GateTag::CPhase => 1,
            GateTag::U3 => 3,
            _ => 0,
        }
    }
}

impl fmt::Display for GateTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl GateKind {
    pub fn tag(&self) -> GateTag {
        match self {
            GateKind::Rx(_) => GateTag::Rx,
            GateKind::Rz(_) => GateTag::Rz,
            GateKind::Rzx(_) => GateTag::Rzx,
            GateKind::Rxx(_) => GateTag::Rxx,
            GateKind::Ryy(_) => GateTag::Ryy,
            GateKind::Rzz(_) => GateTag::Rzz,
            GateKind::CPhase(_) => GateTag::CPhase,
            GateKind::X => GateTag::X,
            GateKind::SqrtX => GateTag::SqrtX,
            GateKind::H => GateTag::H,
            GateKind::T => GateTag::T,
            GateKind::Tdg => GateTag::Tdg,
            GateKind::S => GateTag::S,
            GateKind::Sdg => GateTag::Sdg,
            GateKind::Z => GateTag::Z,
            GateKind::Cnot => GateTag::Cnot,
            GateKind::CSqrtX => GateTag::CSqrtX,
            GateKind::CSqrtXdg => GateTag::CSqrtXdg,
            GateKind::Toffoli => GateTag::Toffoli,
            GateKind::U3(..) => GateTag::U3,
            GateKind::Measure => GateTag::Measure,
        }
    }

    pub fn arity(&self) -> usize {
        self.tag().arity()
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            GateKind::Rx(a)
            | GateKind::Rz(a)
            | GateKind::Rzx(a)
            | GateKind::Rxx(a)
            | GateKind::Ryy(a)
            | GateKind::Rzz(a)
            | GateKind::CPhase(a) => vec![a],
            GateKind::U3(t, p, l) => vec![t, p, l],
            _ => vec![],
        }
    }

    pub fn from_tag(tag: GateTag, params: &[f64]) -> Result<Self, CircuitError> {
        if params.len() != tag.n_params() {
            return Err(CircuitError::Params {
                kind: tag.name().into(),
                expected: tag.n_params(),
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(CircuitError::Angle(tag.name().into()));
        }
        let p = |i: usize| params[i];
        Ok(match tag {
            GateTag::Rx => GateKind::Rx(p(0)),
            GateTag::Rz => GateKind::Rz(p(0)),
            GateTag::Rzx => GateKind::Rzx(p(0)),
            GateTag::Rxx => GateKind::Rxx(p(0)),
            GateTag::Ryy => GateKind::Ryy(p(0)),
            GateTag::Rzz => GateKind::Rzz(p(0)),
            GateTag::CPhase => GateKind::CPhase(p(0)),
            GateTag::X => GateKind::X,
            GateTag::SqrtX => GateKind::SqrtX,
            GateTag::H => GateKind::H,
            GateTag::T => GateKind::T,
            GateTag::Tdg => GateKind::Tdg,
            GateTag::S => GateKind::S,
            GateTag::Sdg => GateKind::Sdg,
            GateTag::Z => GateKind::Z,
            GateTag::Cnot => GateKind::Cnot,
            GateTag::CSqrtX => GateKind::CSqrtX,
            GateTag::CSqrtXdg => GateKind::CSqrtXdg,
            GateTag::Toffoli => GateKind::Toffoli,
            GateTag::U3 => GateKind::U3(p(0), p(1), p(2)),
            GateTag::Measure => GateKind::Measure,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGate", into = "RawGate")]
pub struct Gate {
    kind: GateKind,
    qubits: Vec<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct RawGate {
    kind: String,
    qubits: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    params: Vec<f64>,
}

impl TryFrom<RawGate> for Gate {
    type Error = CircuitError;
    fn try_from(r: RawGate) -> Result<Self, CircuitError> {
        let tag = GateTag::from_name(&r.kind).ok_or(CircuitError::UnknownKind(r.kind))?;
        Gate::new(GateKind::from_tag(tag, &r.params)?, r.qubits)
    }
}

impl From<Gate> for RawGate {
    fn from(g: Gate) -> Self {
        RawGate { kind: g.kind.tag().name().into(), params: g.kind.params(), qubits: g.qubits }
    }
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>) -> Result<Self, CircuitError> {
        let tag = kind.tag();
        if qubits.len() != tag.arity() {
            return Err(CircuitError::Arity {
                kind: tag.name().into(),
                expected: tag.arity(),
                got: qubits.len(),
            });
        }
        if kind.params().iter().any(|p| !p.is_finite()) {
            return Err(CircuitError::Angle(tag.name().into()));
        }
        for (i, q) in qubits.iter().enumerate() {
            if qubits[..i].contains(q) {
                return Err(CircuitError::RepeatedOperand(*q));
            }
        }
        Ok(Self { kind, qubits })
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits
    }

    pub fn tag(&self) -> GateTag {
        self.kind.tag()
    }

    /// Same gate with operands relabelled through `map`.
    pub fn remapped(&self, map: impl Fn(usize) -> usize) -> Gate {
        Gate { kind: self.kind, qubits: self.qubits.iter().map(|&q| map(q)).collect() }
    }

    /// A gate whose unitary is the inverse of this one up to global phase.
    pub fn inverse(&self) -> Result<Gate, CircuitError> {
        use GateKind::*;
        let kind = match self.kind {
            Rx(a) => Rx(-a),
            Rz(a) => Rz(-a),
            Rzx(a) => Rzx(-a),
            Rxx(a) => Rxx(-a),
            Ryy(a) => Ryy(-a),
            Rzz(a) => Rzz(-a),
            CPhase(a) => CPhase(-a),
            SqrtX => Rx(-FRAC_PI_2),
            T => Tdg,
            Tdg => T,
            S => Sdg,
            Sdg => S,
            CSqrtX => CSqrtXdg,
            CSqrtXdg => CSqrtX,
            U3(t, p, l) => U3(-t, -l, -p),
            k @ (X | H | Z | Cnot | Toffoli) => k,
            Measure => return Err(CircuitError::Unsupported("inverse of measure".into())),
        };
        Ok(Gate { kind, qubits: self.qubits.clone() })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.tag())?;
        let params = self.kind.params();
        if !params.is_empty() {
            let p: Vec<String> = params.iter().map(|x| format!("{x:.6}")).collect();
            write!(f, "({})", p.join(","))?;
        }
        let q: Vec<String> = self.qubits.iter().map(|x| x.to_string()).collect();
        write!(f, " {}", q.join(","))
    }
}

/// Shorthand constructors for the gate kinds used throughout the crate.
pub mod g {
    use super::{Gate, GateKind};

    fn mk(kind: GateKind, q: &[usize]) -> Gate {
        Gate::new(kind, q.to_vec()).expect("valid gate")
    }

    pub fn rx(theta: f64, q: usize) -> Gate {
        mk(GateKind::Rx(theta), &[q])
    }
    pub fn rz(theta: f64, q: usize) -> Gate {
        mk(GateKind::Rz(theta), &[q])
    }
    pub fn rzx(theta: f64, c: usize, t: usize) -> Gate {
        mk(GateKind::Rzx(theta), &[c, t])
    }
    pub fn rxx(theta: f64, a: usize, b: usize) -> Gate {
        mk(GateKind::Rxx(theta), &[a, b])
    }
    pub fn ryy(theta: f64, a: usize, b: usize) -> Gate {
        mk(GateKind::Ryy(theta), &[a, b])
    }
    pub fn rzz(theta: f64, a: usize, b: usize) -> Gate {
        mk(GateKind::Rzz(theta), &[a, b])
    }
    pub fn cphase(lambda: f64, a: usize, b: usize) -> Gate {
        mk(GateKind::CPhase(lambda), &[a, b])
    }
    pub fn x(q: usize) -> Gate {
        mk(GateKind::X, &[q])
    }
    pub fn sx(q: usize) -> Gate {
        mk(GateKind::SqrtX, &[q])
    }
    pub fn h(q: usize) -> Gate {
        mk(GateKind::H, &[q])
    }
    pub fn t(q: usize) -> Gate {
        mk(GateKind::T, &[q])
    }
    pub fn tdg(q: usize) -> Gate {
        mk(GateKind::Tdg, &[q])
    }
    pub fn s(q: usize) -> Gate {
        mk(GateKind::S, &[q])
    }
    pub fn sdg(q: usize) -> Gate {
        mk(GateKind::Sdg, &[q])
    }
    pub fn z(q: usize) -> Gate {
        mk(GateKind::Z, &[q])
    }
    pub fn cx(c: usize, t: usize) -> Gate {
        mk(GateKind::Cnot, &[c, t])
    }
    pub fn csx(c: usize, t: usize) -> Gate {
        mk(GateKind::CSqrtX, &[c, t])
    }
    pub fn csxdg(c: usize, t: usize) -> Gate {
        mk(GateKind::CSqrtXdg, &[c, t])
    }
    pub fn ccx(a: usize, b: usize, t: usize) -> Gate {
        mk(GateKind::Toffoli, &[a, b, t])
    }
    pub fn u3(theta: f64, phi: f64, lambda: f64, q: usize) -> Gate {
        mk(GateKind::U3(theta, phi, lambda), &[q])
    }
    pub fn measure(q: usize) -> Gate {
        mk(GateKind::Measure, &[q])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCircuit")]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
}

#[derive(Deserialize)]
struct RawCircuit {
    n_qubits: usize,
    #[serde(default)]
    gates: Vec<Gate>,
}

impl TryFrom<RawCircuit> for Circuit {
    type Error = CircuitError;
    fn try_from(r: RawCircuit) -> Result<Self, CircuitError> {
        Circuit::from_gates(r.n_qubits, r.gates)
    }
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Result<Self, CircuitError> {
        if n_qubits == 0 {
            return Err(CircuitError::Empty);
        }
        Ok(Self { n_qubits, gates: Vec::new() })
    }

    pub fn from_gates(n_qubits: usize, gates: Vec<Gate>) -> Result<Self, CircuitError> {
        let mut c = Self::new(n_qubits)?;
        for gate in gates {
            c.push(gate)?;
        }
        Ok(c)
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self, CircuitError> {
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(CircuitError::QubitRange { qubit: q, n_qubits: self.n_qubits });
        }
        self.gates.push(gate);
        Ok(self)
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> Result<&mut Self, CircuitError> {
        for gate in gates {
            self.push(gate)?;
        }
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn into_gates(self) -> Vec<Gate> {
        self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Gates reversed and individually inverted.
    pub fn inverse(&self) -> Result<Circuit, CircuitError> {
        let gates = self.gates.iter().rev().map(Gate::inverse).collect::<Result<_, _>>()?;
        Ok(Circuit { n_qubits: self.n_qubits, gates })
    }

    /// Appends `other` (which must not use more qubits).
    pub fn append(&mut self, other: &Circuit) -> Result<&mut Self, CircuitError> {
        self.extend(other.gates.iter().cloned())
    }

    /// Number of gates acting on two or more qubits.
    pub fn multi_qubit_count(&self) -> usize {
        self.gates.iter().filter(|g| g.qubits.len() >= 2).count()
    }

    /// Measured qubits in order of their measure gates.
    pub fn measured(&self) -> Vec<usize> {
        self.gates.iter().filter(|g| g.tag() == GateTag::Measure).map(|g| g.qubits[0]).collect()
    }

    /// The circuit without measure gates.
    pub fn without_measurements(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().filter(|g| g.tag() != GateTag::Measure).cloned().collect(),
        }
    }
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn phase(a: f64) -> C64 {
    C64::from_polar(1.0, a)
}

fn rx_matrix(theta: f64) -> Matrix {
    math::pauli_rotation(&math::pauli_x(), theta)
}

fn rz_matrix(theta: f64) -> Matrix {
    math::pauli_rotation(&math::pauli_z(), theta)
}

fn controlled(u: &Matrix) -> Matrix {
    let mut m = math::identity(4);
    for r in 0..2 {
        for col in 0..2 {
            m[(2 + r, 2 + col)] = u[(r, col)];
        }
    }
    m
}

/// Unitary of a single gate with operand 0 as the most significant bit.
pub fn gate_unitary(gate: &Gate) -> Result<Matrix, CircuitError> {
    kind_unitary(gate.kind)
}

pub fn kind_unitary(kind: GateKind) -> Result<Matrix, CircuitError> {
    use GateKind::*;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let m = match kind {
        Rx(a) => rx_matrix(a),
        Rz(a) => rz_matrix(a),
        Rzx(a) => math::pauli_rotation(&math::kron(&math::pauli_z(), &math::pauli_x()), a),
        Rxx(a) => math::pauli_rotation(&math::kron(&math::pauli_x(), &math::pauli_x()), a),
        Ryy(a) => math::pauli_rotation(&math::kron(&math::pauli_y(), &math::pauli_y()), a),
        Rzz(a) => math::pauli_rotation(&math::kron(&math::pauli_z(), &math::pauli_z()), a),
        CPhase(l) => {
            let mut m = math::identity(4);
            m[(3, 3)] = phase(l);
            m
        }
        X => math::pauli_x(),
        SqrtX => math::from_rows(&[&[c(0.5, 0.5), c(0.5, -0.5)], &[c(0.5, -0.5), c(0.5, 0.5)]]),
        H => math::from_rows(&[&[c(h, 0.0), c(h, 0.0)], &[c(h, 0.0), c(-h, 0.0)]]),
        T => math::from_rows(&[&[ONE, ZERO], &[ZERO, phase(FRAC_PI_4)]]),
        Tdg => math::from_rows(&[&[ONE, ZERO], &[ZERO, phase(-FRAC_PI_4)]]),
        S => math::from_rows(&[&[ONE, ZERO], &[ZERO, I]]),
        Sdg => math::from_rows(&[&[ONE, ZERO], &[ZERO, -I]]),
        Z => math::pauli_z(),
        Cnot => controlled(&math::pauli_x()),
        CSqrtX => controlled(&kind_unitary(SqrtX)?),
        CSqrtXdg => controlled(&kind_unitary(SqrtX)?.adjoint()),
        Toffoli => {
            let mut m = math::identity(8);
            m[(6, 6)] = ZERO;
            m[(7, 7)] = ZERO;
            m[(6, 7)] = ONE;
            m[(7, 6)] = ONE;
            m
        }
        U3(t, p, l) => {
            let (s, co) = (t / 2.0).sin_cos();
            math::from_rows(&[
                &[c(co, 0.0), -phase(l) * s],
                &[phase(p) * s, phase(p + l) * co],
            ])
        }
        Measure => return Err(CircuitError::Unsupported("unitary of measure".into())),
    };
    Ok(m)
}

/// Largest register handled by [`circuit_unitary`].
pub const ORACLE_QUBIT_LIMIT: usize = 4;

/// Full unitary of a circuit of at most four qubits.
pub fn circuit_unitary(c: &Circuit) -> Result<Matrix, CircuitError> {
    if c.n_qubits > ORACLE_QUBIT_LIMIT {
        return Err(CircuitError::Resource { n_qubits: c.n_qubits, limit: ORACLE_QUBIT_LIMIT });
    }
    let dim = 1usize << c.n_qubits;
    let gates: Vec<(Matrix, &[usize])> = c
        .gates
        .iter()
        .map(|g| Ok((gate_unitary(g)?, g.qubits())))
        .collect::<Result<_, CircuitError>>()?;
    let mut out = math::identity(dim);
    for col in 0..dim {
        let mut v: Vec<C64> = out.column(col).iter().copied().collect();
        for (m, q) in &gates {
            math::apply_gate(&mut v, m, q);
        }
        out.set_column(col, &nalgebra::DVector::from_vec(v));
    }
    Ok(out)
}

/// Ideal final state of a circuit from `|0...0>`, ignoring measure gates.
pub fn circuit_statevector(c: &Circuit) -> Result<Vec<C64>, CircuitError> {
    let mut v = vec![ZERO; 1usize << c.n_qubits];
    v[0] = ONE;
    for g in &c.gates {
        if g.tag() == GateTag::Measure {
            continue;
        }
        math::apply_gate(&mut v, &gate_unitary(g)?, g.qubits());
    }
    Ok(v)
}

/// Directed coupling graph of a device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawCoupling")]
pub struct CouplingMap {
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Deserialize)]
struct RawCoupling {
    n_qubits: usize,
    edges: Vec<(usize, usize)>,
}

impl TryFrom<RawCoupling> for CouplingMap {
    type Error = CircuitError;
    fn try_from(r: RawCoupling) -> Result<Self, CircuitError> {
        CouplingMap::new(r.n_qubits, r.edges)
    }
}

impl CouplingMap {
    pub fn new(
        n_qubits: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, CircuitError> {
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            for q in [a, b] {
                if q >= n_qubits {
                    return Err(CircuitError::QubitRange { qubit: q, n_qubits });
                }
            }
            if a == b {
                return Err(CircuitError::RepeatedOperand(a));
            }
            set.insert((a, b));
        }
        Ok(Self { n_qubits, edges: set })
    }

    /// Line `0-1-...-(n-1)` with both directions present.
    pub fn line(n_qubits: usize) -> Self {
        let edges = (1..n_qubits).flat_map(|i| [(i - 1, i), (i, i - 1)]);
        Self::new(n_qubits, edges).expect("line edges are valid")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, c: usize, t: usize) -> bool {
        self.edges.contains(&(c, t))
    }

    /// True when a control channel exists in either direction.
    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.has_edge(a, b) || self.has_edge(b, a)
    }

    pub fn neighbors(&self, q: usize) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| match (a == q, b == q) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }

    /// Undirected BFS shortest path from `a` to `b`, both included.
    pub fn shortest_path(&self, a: usize, b: usize) -> Option<Vec<usize>> {
        if a >= self.n_qubits || b >= self.n_qubits {
            return None;
        }
        let mut prev = vec![usize::MAX; self.n_qubits];
        let mut seen = vec![false; self.n_qubits];
        let mut queue = VecDeque::from([a]);
        seen[a] = true;
        while let Some(q) = queue.pop_front() {
            if q == b {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for n in self.neighbors(q) {
                if !seen[n] {
                    seen[n] = true;
                    prev[n] = q;
                    queue.push_back(n);
                }
            }
        }
        None
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub index: usize,
    pub gate: Gate,
}

/// Every gate that the coupling map cannot execute natively.
pub fn validate_coupling(c: &Circuit, m: &CouplingMap) -> Vec<Violation> {
    c.gates
        .iter()
        .enumerate()
        .filter(|(_, g)| match g.qubits() {
            [a, b] => !m.connected(*a, *b),
            q => q.len() > 2,
        })
        .map(|(index, g)| Violation { index, gate: g.clone() })
        .collect()
}
