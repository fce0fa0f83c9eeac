// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Rule-driven rewriting of circuits onto a basis gate set.

use std::collections::{BTreeMap, BTreeSet};

use super::decompose::{self, ToffoliVariant};
use super::{Mode, TranspileError};
use crate::circuit::{g, Circuit, Gate, GateKind, GateTag};

/// Replacement of one gate kind by a parameterised template.
#[derive(Clone, Copy)]
pub struct EquivalenceRule {
    pub pattern: GateTag,
    /// (two-qubit interactions, physical single-qubit pulses) of the
    /// replacement once fully lowered.
    pub cost: (usize, usize),
    template: fn(&Gate) -> Result<Vec<Gate>, TranspileError>,
}

impl std::fmt::Debug for EquivalenceRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EquivalenceRule")
            .field("pattern", &self.pattern)
            .field("cost", &self.cost)
            .finish()
    }
}

impl EquivalenceRule {
    pub fn apply(&self, gate: &Gate) -> Result<Vec<Gate>, TranspileError> {
        (self.template)(gate)
    }
}

pub type BasisSet = BTreeSet<GateTag>;

pub fn basis_for(mode: Mode) -> BasisSet {
    let mut b: BasisSet = [GateTag::Rx, GateTag::Rz, GateTag::Cnot, GateTag::Measure].into();
    if mode.native_rzx() {
        b.insert(GateTag::Rzx);
    }
    b
}

#[derive(Debug, Clone)]
pub struct EquivalenceLibrary {
    rules: BTreeMap<GateTag, EquivalenceRule>,
}

fn angle(gate: &Gate) -> f64 {
    gate.kind().params()[0]
}

fn qs(gate: &Gate) -> &[usize] {
    gate.qubits()
}

fn simple(gate: &Gate) -> Result<Vec<Gate>, TranspileError> {
    decompose::simple_single_qubit(gate.tag(), qs(gate)[0])
        .ok_or_else(|| TranspileError::UnsupportedGate(gate.tag().name().into()))
}

fn u3_parts(gate: &Gate) -> (f64, f64, f64, usize) {
    match gate.kind() {
        GateKind::U3(t, p, l) => (t, p, l, qs(gate)[0]),
        _ => unreachable!("rule registered for u3 only"),
    }
}

fn rot_rzx(gate: &Gate) -> Result<Vec<Gate>, TranspileError> {
    decompose::two_qubit_rotation_gates(gate.tag(), angle(gate), qs(gate)[0], qs(gate)[1])
}

fn rot_cnot(gate: &Gate) -> Result<Vec<Gate>, TranspileError> {
    decompose::two_qubit_rotation_cnot_gates(gate.tag(), angle(gate), qs(gate)[0], qs(gate)[1])
}

fn csx_sign(gate: &Gate) -> f64 {
    if gate.tag() == GateTag::CSqrtXdg {
        -1.0
    } else {
        1.0
    }
}

impl EquivalenceLibrary {
    pub fn for_mode(mode: Mode) -> Self {
        use std::f64::consts::FRAC_PI_2;
        let mut rules = Vec::new();
        let mut add = |pattern, cost, template| {
            rules.push(EquivalenceRule { pattern, cost, template });
        };
        for tag in [
            GateTag::X,
            GateTag::SqrtX,
            GateTag::Z,
            GateTag::S,
            GateTag::Sdg,
            GateTag::T,
            GateTag::Tdg,
            GateTag::H,
        ] {
            let pulses = usize::from(matches!(tag, GateTag::X | GateTag::SqrtX | GateTag::H));
            add(tag, (0, pulses), simple as fn(&Gate) -> _);
        }
        match mode {
            Mode::Squeeze => add(GateTag::U3, (0, 1), |gt| {
                let (t, p, l, q) = u3_parts(gt);
                Ok(decompose::u3_squeeze_gates(t, p, l, q))
            }),
            Mode::Gokhale => add(GateTag::U3, (0, 1), |gt| {
                let (t, p, l, q) = u3_parts(gt);
                Ok(decompose::u3_gokhale_gates(t, p, l, q))
            }),
            Mode::Baseline | Mode::Earnest => add(GateTag::U3, (0, 2), |gt| {
                let (t, p, l, q) = u3_parts(gt);
                Ok(decompose::u3_baseline_gates(t, p, l, q))
            }),
        }
        if mode.native_rzx() {
            for tag in [GateTag::Rxx, GateTag::Ryy, GateTag::Rzz, GateTag::CPhase] {
                add(tag, (1, 0), rot_rzx);
            }
            for tag in [GateTag::CSqrtX, GateTag::CSqrtXdg] {
                add(tag, (1, 1), |gt| {
                    let th = csx_sign(gt) * FRAC_PI_2;
                    Ok(decompose::csx_gates(th, qs(gt)[0], qs(gt)[1]))
                });
            }
            add(GateTag::Toffoli, (5, 3), |gt| {
                let q = qs(gt);
                Ok(decompose::toffoli_gates(ToffoliVariant::A, q[0], q[1], q[2]))
            });
        } else {
            for tag in [GateTag::Rxx, GateTag::Ryy, GateTag::Rzz, GateTag::CPhase, GateTag::Rzx] {
                add(tag, (2, 0), rot_cnot);
            }
            for tag in [GateTag::CSqrtX, GateTag::CSqrtXdg] {
                add(tag, (2, 2), |gt| {
                    let th = csx_sign(gt) * FRAC_PI_2;
                    Ok(decompose::csx_cnot_gates(th, qs(gt)[0], qs(gt)[1]))
                });
            }
            add(GateTag::Toffoli, (6, 2), |gt| {
                let q = qs(gt);
                Ok(decompose::toffoli_standard_gates(q[0], q[1], q[2]))
            });
        }
        Self { rules: rules.into_iter().map(|r| (r.pattern, r)).collect() }
    }

    pub fn rule(&self, tag: GateTag) -> Option<&EquivalenceRule> {
        self.rules.get(&tag)
    }

    pub fn rules(&self) -> impl Iterator<Item = &EquivalenceRule> {
        self.rules.values()
    }
}

const MAX_DEPTH: usize = 16;

fn lower(
    gate: &Gate,
    basis: &BasisSet,
    lib: &EquivalenceLibrary,
    depth: usize,
    out: &mut Vec<Gate>,
) -> Result<(), TranspileError> {
    if basis.contains(&gate.tag()) {
        out.push(gate.clone());
        return Ok(());
    }
    let rule = lib
        .rule(gate.tag())
        .filter(|_| depth < MAX_DEPTH)
        .ok_or_else(|| TranspileError::UnsupportedGate(gate.tag().name().into()))?;
    for sub in rule.apply(gate)? {
        lower(&sub, basis, lib, depth + 1, out)?;
    }
    Ok(())
}

/// Rewrites every gate outside `basis` until only basis kinds remain.
pub fn unroll(
    c: &Circuit,
    basis: &BasisSet,
    lib: &EquivalenceLibrary,
) -> Result<Circuit, TranspileError> {
    let mut out = Vec::with_capacity(c.len());
    for gate in c.gates() {
        lower(gate, basis, lib, 0, &mut out)?;
    }
    Ok(Circuit::from_gates(c.n_qubits(), out)?)
}

/// Unrolls with the basis and rules of `mode`.
pub fn unroll_for_mode(c: &Circuit, mode: Mode) -> Result<Circuit, TranspileError> {
    unroll(c, &basis_for(mode), &EquivalenceLibrary::for_mode(mode))
}

/// `H` conjugation for a two-qubit gate whose native direction is reversed.
pub fn reverse_direction(gate: &Gate) -> Result<Vec<Gate>, TranspileError> {
    let (a, b) = (gate.qubits()[0], gate.qubits()[1]);
    let flipped = match gate.kind() {
        GateKind::Cnot => g::cx(b, a),
        GateKind::Rzx(t) => g::rzx(t, b, a),
        _ => return Err(TranspileError::UnsupportedGate(gate.tag().name().into())),
    };
    Ok(vec![g::h(a), g::h(b), flipped, g::h(a), g::h(b)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::circuit_unitary;
    use crate::math::phase_distance;

    fn same(a: &Circuit, b: &Circuit) -> bool {
        phase_distance(&circuit_unitary(a).unwrap(), &circuit_unitary(b).unwrap()) < 1e-9
    }

    fn zoo() -> Circuit {
        Circuit::from_gates(
            3,
            vec![
                g::h(0),
                g::u3(0.3, -1.2, 2.2, 1),
                g::rxx(0.7, 0, 1),
                g::ryy(-0.4, 1, 2),
                g::rzz(1.1, 2, 0),
                g::cphase(0.9, 0, 2),
                g::csx(1, 0),
                g::csxdg(2, 1),
                g::ccx(0, 1, 2),
                g::t(2),
                g::sdg(0),
                g::x(1),
                g::sx(2),
                g::z(0),
                g::rzx(0.2, 1, 2),
            ],
        )
        .unwrap()
    }

    #[test]
    fn all_modes_preserve_unitary() {
        let c = zoo();
        for mode in Mode::ALL {
            let basis = basis_for(mode);
            let out = unroll_for_mode(&c, mode).unwrap();
            assert!(out.gates().iter().all(|gt| basis.contains(&gt.tag())), "{mode:?}");
            assert!(same(&c, &out), "{mode:?}");
        }
    }

    #[test]
    fn fixpoint_and_h() {
        let c = Circuit::from_gates(2, vec![g::rx(0.3, 0), g::cx(0, 1), g::rz(1.0, 1)]).unwrap();
        assert_eq!(unroll_for_mode(&c, Mode::Squeeze).unwrap(), c);
        let h = Circuit::from_gates(1, vec![g::h(0)]).unwrap();
        let basis: BasisSet = [GateTag::Rx, GateTag::Rz].into();
        let out = unroll(&h, &basis, &EquivalenceLibrary::for_mode(Mode::Squeeze)).unwrap();
        assert_eq!(out.len(), 3);
        assert!(same(&h, &out));
    }

    #[test]
    fn toffoli_interaction_counts() {
        let c = Circuit::from_gates(3, vec![g::ccx(0, 1, 2)]).unwrap();
        let sq = unroll_for_mode(&c, Mode::Squeeze).unwrap();
        assert_eq!(sq.multi_qubit_count(), 5);
        let base = unroll_for_mode(&c, Mode::Baseline).unwrap();
        assert_eq!(base.multi_qubit_count(), 6);
    }

    #[test]
    fn two_qubit_rotation_counts() {
        for mode in [Mode::Squeeze, Mode::Baseline] {
            let c = Circuit::from_gates(2, vec![g::rxx(0.5, 0, 1)]).unwrap();
            let n = unroll_for_mode(&c, mode).unwrap().multi_qubit_count();
            assert_eq!(n, if mode == Mode::Squeeze { 1 } else { 2 });
        }
    }

    #[test]
    fn unsupported_names_kind() {
        let c = Circuit::from_gates(3, vec![g::ccx(0, 1, 2)]).unwrap();
        let basis: BasisSet = [GateTag::Rx].into();
        let empty = EquivalenceLibrary { rules: BTreeMap::new() };
        let err = unroll(&c, &basis, &empty).unwrap_err();
        assert_eq!(err, TranspileError::UnsupportedGate("ccx".into()));
    }

    #[test]
    fn reversal_is_exact() {
        for gate in [g::cx(0, 1), g::rzx(0.77, 0, 1)] {
            let c = Circuit::from_gates(2, vec![gate.clone()]).unwrap();
            let r = Circuit::from_gates(2, reverse_direction(&gate).unwrap()).unwrap();
            assert!(same(&c, &r));
        }
    }
}
