// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Gate-by-gate swap insertion along BFS shortest paths.

use serde::{Deserialize, Serialize};

use super::decompose::{self, ToffoliVariant};
use super::TranspileError;
use crate::circuit::{g, Circuit, CouplingMap, Gate, GateTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToffoliChoice {
    /// Route both five-interaction variants, keep the one needing fewer swaps.
    #[default]
    Auto,
    A,
    B,
    /// Six-CNOT textbook form.
    Standard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedCircuit {
    /// Circuit over physical qubits.
    pub circuit: Circuit,
    /// `initial_layout[logical] = physical`.
    pub initial_layout: Vec<usize>,
    pub final_layout: Vec<usize>,
    pub swaps: usize,
    /// Variants picked for each Toffoli, in circuit order.
    pub toffoli_picks: Vec<ToffoliVariant>,
}

#[derive(Debug, Clone)]
struct State {
    layout: Vec<usize>,
    out: Vec<Gate>,
    swaps: usize,
}

impl State {
    fn swap(&mut self, p: usize, q: usize) {
        self.out.extend([g::cx(p, q), g::cx(q, p), g::cx(p, q)]);
        for slot in self.layout.iter_mut() {
            if *slot == p {
                *slot = q;
            } else if *slot == q {
                *slot = p;
            }
        }
        self.swaps += 1;
    }

    fn route_simple(&mut self, gate: &Gate, m: &CouplingMap) -> Result<(), TranspileError> {
        match gate.qubits() {
            [a, b] => {
                let (pa, pb) = (self.layout[*a], self.layout[*b]);
                if !m.connected(pa, pb) {
                    let path = m.shortest_path(pa, pb).ok_or(TranspileError::Routing {
                        from: pa,
                        to: pb,
                    })?;
                    for w in path[..path.len() - 1].windows(2) {
                        self.swap(w[0], w[1]);
                    }
                }
                let layout = &self.layout;
                self.out.push(gate.remapped(|q| layout[q]));
            }
            [_] => {
                let layout = &self.layout;
                self.out.push(gate.remapped(|q| layout[q]));
            }
            _ => return Err(TranspileError::UnsupportedGate(gate.tag().name().into())),
        }
        Ok(())
    }

    fn route_all(&mut self, gates: &[Gate], m: &CouplingMap) -> Result<(), TranspileError> {
        gates.iter().try_for_each(|gt| self.route_simple(gt, m))
    }
}

/// Makes `c` executable on `m`, expanding Toffolis according to `choice`.
pub fn route(
    c: &Circuit,
    m: &CouplingMap,
    choice: ToffoliChoice,
) -> Result<RoutedCircuit, TranspileError> {
    if c.n_qubits() > m.n_qubits() {
        return Err(TranspileError::TooManyQubits { circuit: c.n_qubits(), device: m.n_qubits() });
    }
    let initial: Vec<usize> = (0..c.n_qubits()).collect();
    let mut st = State { layout: initial.clone(), out: Vec::new(), swaps: 0 };
    let mut picks = Vec::new();
    for gate in c.gates() {
        if gate.tag() != GateTag::Toffoli {
            st.route_simple(gate, m)?;
            continue;
        }
        let q = gate.qubits();
        let variant_gates = |v| decompose::toffoli_gates(v, q[0], q[1], q[2]);
        match choice {
            ToffoliChoice::Standard => {
                st.route_all(&decompose::toffoli_standard_gates(q[0], q[1], q[2]), m)?
            }
            ToffoliChoice::A | ToffoliChoice::B => {
                let v = if choice == ToffoliChoice::A { ToffoliVariant::A } else { ToffoliVariant::B };
                st.route_all(&variant_gates(v), m)?;
                picks.push(v);
            }
            ToffoliChoice::Auto => {
                let mut a = st.clone();
                a.route_all(&variant_gates(ToffoliVariant::A), m)?;
                let mut b = st.clone();
                b.route_all(&variant_gates(ToffoliVariant::B), m)?;
                if b.swaps < a.swaps {
                    st = b;
                    picks.push(ToffoliVariant::B);
                } else {
                    st = a;
                    picks.push(ToffoliVariant::A);
                }
            }
        }
    }
    Ok(RoutedCircuit {
        circuit: Circuit::from_gates(m.n_qubits(), st.out)?,
        initial_layout: initial,
        final_layout: st.layout,
        swaps: st.swaps,
        toffoli_picks: picks,
    })
}
