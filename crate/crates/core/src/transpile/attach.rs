// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Basis gates to pulses.

use std::f64::consts::{FRAC_PI_2, PI};

use super::{Mode, TranspileError};
use crate::calibrate::{push_cnot, push_rzx};
use crate::circuit::{Circuit, GateKind};
use crate::math::normalize_angle;
use crate::params::PulseLibrary;
use crate::pulse::{DragPulse, GaussianSquarePulse, Schedule, ScheduleBuilder};
use crate::target::BackendProperties;

const ANGLE_EPS: f64 = 1e-12;

fn missing(what: String) -> TranspileError {
    TranspileError::CalibrationMissing(what)
}

fn x_pulse(props: &BackendProperties, q: usize) -> Result<DragPulse, TranspileError> {
    props.x_pulse(q).ok_or_else(|| missing(format!("x/{q}")))
}

fn sx_pulse(props: &BackendProperties, q: usize) -> Result<DragPulse, TranspileError> {
    props.sx_pulse(q).ok_or_else(|| missing(format!("x/{q}")))
}

/// `CR(pi/4)` pulse used for `(c, t)` in `mode`.
fn cr_pulse(
    c: usize,
    t: usize,
    lib: &PulseLibrary,
    props: &BackendProperties,
    mode: Mode,
) -> Result<GaussianSquarePulse, TranspileError> {
    match mode {
        Mode::Squeeze => Ok(lib.zx(c, t).ok_or_else(|| missing(format!("zx/{c}-{t}")))?.pulse()?),
        _ => props.cr_pulse(c, t).ok_or_else(|| missing(format!("cr/{c}-{t}"))),
    }
}

/// Positive rotation `0 < theta <= pi`.
fn positive_rx(
    b: &mut ScheduleBuilder,
    q: usize,
    theta: f64,
    lib: &PulseLibrary,
    props: &BackendProperties,
    mode: Mode,
) -> Result<(), TranspileError> {
    match mode {
        Mode::Squeeze => {
            let entry = lib.rx(q).ok_or_else(|| missing(format!("rx/{q}")))?;
            if let Some(p) = entry.pulse_for(theta)? {
                b.drag(q, p);
            }
        }
        Mode::Gokhale => {
            let x = x_pulse(props, q)?;
            b.drag(q, x.with_amp(theta / PI * x.amp())?);
        }
        Mode::Baseline | Mode::Earnest => {
            if (theta - PI).abs() < ANGLE_EPS {
                b.drag(q, x_pulse(props, q)?);
            } else if (theta - FRAC_PI_2).abs() < ANGLE_EPS {
                b.drag(q, sx_pulse(props, q)?);
            } else {
                // Rx(θ) = U3(θ, -π/2, π/2) in the two-pulse form
                let sx = sx_pulse(props, q)?;
                b.frame_change(q, FRAC_PI_2);
                b.drag(q, sx);
                b.frame_change(q, theta + PI);
                b.drag(q, sx);
                b.frame_change(q, normalize_angle(-FRAC_PI_2 + 3.0 * PI));
            }
        }
    }
    Ok(())
}

/// Appends `Rx(theta)` on `q`. Angles are reduced to `(-pi, pi]`; negative
/// ones become `Rz(pi) Rx(|θ|) Rz(pi)`.
pub fn rx_into(
    b: &mut ScheduleBuilder,
    q: usize,
    theta: f64,
    lib: &PulseLibrary,
    props: &BackendProperties,
    mode: Mode,
) -> Result<(), TranspileError> {
    let theta = normalize_angle(theta);
    if theta.abs() < ANGLE_EPS {
        return Ok(());
    }
    if theta < 0.0 {
        b.frame_change(q, PI);
        positive_rx(b, q, -theta, lib, props, mode)?;
        b.frame_change(q, PI);
        return Ok(());
    }
    positive_rx(b, q, theta, lib, props, mode)
}

/// Appends the echoed `Rzx(theta)` on the control channel `(c, t)`.
pub fn rzx_into(
    b: &mut ScheduleBuilder,
    c: usize,
    t: usize,
    theta: f64,
    lib: &PulseLibrary,
    props: &BackendProperties,
    mode: Mode,
) -> Result<(), TranspileError> {
    if !mode.native_rzx() {
        return Err(TranspileError::NotInBasis("rzx".into()));
    }
    let best = cr_pulse(c, t, lib, props, mode)?;
    push_rzx(b, c, t, normalize_angle(theta), &best, x_pulse(props, c)?)?;
    Ok(())
}

/// Appends an echoed-CR CNOT on `(c, t)`.
pub fn cnot_into(
    b: &mut ScheduleBuilder,
    c: usize,
    t: usize,
    lib: &PulseLibrary,
    props: &BackendProperties,
    mode: Mode,
) -> Result<(), TranspileError> {
    let best = cr_pulse(c, t, lib, props, mode)?;
    push_cnot(b, c, t, &best, x_pulse(props, c)?, sx_pulse(props, t)?);
    Ok(())
}

/// Lowers a basis-level, direction-fixed circuit to a schedule.
pub fn attach_pulses(
    c: &Circuit,
    lib: &PulseLibrary,
    props: &BackendProperties,
    mode: Mode,
) -> Result<Schedule, TranspileError> {
    if c.n_qubits() > props.n_qubits() {
        return Err(TranspileError::TooManyQubits { circuit: c.n_qubits(), device: props.n_qubits() });
    }
    let mut b = ScheduleBuilder::new();
    for gate in c.gates() {
        match (gate.kind(), gate.qubits()) {
            (GateKind::Rz(a), &[q]) => {
                if normalize_angle(a) != 0.0 {
                    b.frame_change(q, a);
                }
            }
            (GateKind::Rx(a), &[q]) => rx_into(&mut b, q, a, lib, props, mode)?,
            (GateKind::Rzx(a), &[c, t]) => rzx_into(&mut b, c, t, a, lib, props, mode)?,
            (GateKind::Cnot, &[c, t]) => cnot_into(&mut b, c, t, lib, props, mode)?,
            (GateKind::Measure, _) => {}
            _ => return Err(TranspileError::NotInBasis(gate.tag().name().into())),
        }
    }
    Ok(b.build())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_unitary, g};
    use crate::math::{embed, phase_distance};
    use crate::sim::{presets, DeviceModel};
    use crate::transpile::{transpile, unroll_for_mode};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (DeviceModel, BackendProperties, PulseLibrary) {
        let dev = DeviceModel::new(presets::ideal_line(3)).unwrap();
        let props = dev.properties();
        let lib = PulseLibrary::ideal(&props, 1.4);
        (dev, props, lib)
    }

    #[test]
    fn squeeze_pi_is_calibration_endpoint() {
        let (_, props, lib) = setup();
        let c = Circuit::from_gates(1, vec![g::rx(PI, 0)]).unwrap();
        let s = attach_pulses(&c, &lib, &props, Mode::Squeeze).unwrap();
        let e = lib.rx(0).unwrap();
        assert_eq!(s.pulse_count(), 1);
        assert_eq!(s.duration(), e.t0 as u64);
        match s.instructions()[0].op {
            crate::pulse::Op::Drag(p) => assert!((p.amp() - e.a0).abs() < 1e-12),
            _ => panic!("expected a drag pulse"),
        }
    }

    #[test]
    fn u3_durations_per_mode() {
        let (_, props, lib) = setup();
        let c = Circuit::from_gates(1, vec![g::u3(1.1, 0.4, -0.7, 0)]).unwrap();
        let dur = |m| transpile(&c, &props, &lib, m, None).unwrap().schedule.duration();
        assert_eq!(dur(Mode::Baseline), 320);
        assert_eq!(dur(Mode::Gokhale), 160);
        assert_eq!(dur(Mode::Squeeze), lib.rx(0).unwrap().t0 as u64);
    }

    #[test]
    fn missing_entry_names_key() {
        let (_, props, _) = setup();
        let c = Circuit::from_gates(2, vec![g::rx(0.3, 1)]).unwrap();
        let err = attach_pulses(&c, &PulseLibrary::default(), &props, Mode::Squeeze).unwrap_err();
        assert_eq!(err, TranspileError::CalibrationMissing("rx/1".into()));
    }

    #[test]
    fn schedules_match_circuits_noiselessly() {
        let (dev, props, lib) = setup();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut a = || rng.random_range(-PI..PI);
        let c = Circuit::from_gates(
            3,
            vec![
                g::u3(a(), a(), a(), 0),
                g::rx(a(), 1),
                g::rzx(a(), 0, 1),
                g::cx(1, 2),
                g::cx(1, 0),
                g::rzz(a(), 1, 2),
                g::h(2),
                g::csx(2, 1),
                g::cphase(a(), 0, 1),
            ],
        )
        .unwrap();
        let want = circuit_unitary(&c).unwrap();
        for mode in Mode::ALL {
            let t = transpile(&c, &props, &lib, mode, None).unwrap();
            assert_eq!(t.routing.swaps, 0);
            let u = dev.schedule_unitary(&t.schedule, &[0, 1, 2]).unwrap();
            assert!(phase_distance(&u, &want) < 1e-9, "{mode}");
        }
    }

    #[test]
    fn toffoli_on_triangle() {
        let mut cfg = presets::ideal_line(3);
        let extra = crate::sim::PairConfig { control: 0, target: 2, ..cfg.pairs[0].clone() };
        cfg.pairs.push(extra);
        let dev = DeviceModel::new(cfg).unwrap();
        let props = dev.properties();
        let lib = PulseLibrary::ideal(&props, 1.2);
        let c = Circuit::from_gates(3, vec![g::h(0), g::ccx(0, 1, 2), g::ccx(2, 0, 1)]).unwrap();
        let want = circuit_unitary(&c).unwrap();
        for mode in Mode::ALL {
            let t = transpile(&c, &props, &lib, mode, None).unwrap();
            assert_eq!(t.routing.swaps, 0);
            let u = dev.schedule_unitary(&t.schedule, &[0, 1, 2]).unwrap();
            assert!(phase_distance(&u, &want) < 1e-9, "{mode}");
        }
    }

    #[test]
    fn rzx_echo_duration() {
        let (_, props, lib) = setup();
        let c = Circuit::from_gates(2, vec![g::rzx(std::f64::consts::FRAC_PI_4, 0, 1)]).unwrap();
        let s = attach_pulses(&unroll_for_mode(&c, Mode::Earnest).unwrap(), &lib, &props, Mode::Earnest).unwrap();
        let half = crate::calibrate::cr_pulse_for_angle(&props.cr_pulse(0, 1).unwrap(), PI / 8.0).unwrap().unwrap();
        assert_eq!(s.pulse_count(), 4);
        assert_eq!(s.duration(), 2 * (half.duration() as u64 + 160));
    }

    #[test]
    fn negative_rotation_matches() {
        let (dev, props, lib) = setup();
        for mode in Mode::ALL {
            let mut b = ScheduleBuilder::new();
            rx_into(&mut b, 0, -0.8, &lib, &props, mode).unwrap();
            let u = dev.schedule_unitary(&b.build(), &[0]).unwrap();
            let want = embed(&crate::circuit::kind_unitary(GateKind::Rx(-0.8)).unwrap(), &[0], 1);
            assert!(phase_distance(&u, &want) < 1e-12, "{mode}");
        }
    }
}
