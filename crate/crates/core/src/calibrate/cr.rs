// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Cross-resonance reshaping and the `(c, k)` particle filter.
//!
//! `c` trades duration for amplitude at roughly constant area, `k` trims
//! the amplitude afterwards. A particle `(c, k)` is scored by running the
//! echoed CNOT built from `scale_cr(base, c, k)` on the four computational
//! basis states.

use std::f64::consts::FRAC_PI_4;

use rand::distr::weighted::WeightedIndex;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::CalibError;
use crate::pulse::{
    gs_area_formula, quantize_duration, DragPulse, EchoSign, GaussianSquarePulse, Schedule, ScheduleBuilder,
    GRANULARITY,
};
use crate::sim::{counts_to_probs, Backend, Experiment, JobRequest, BATCH_LIMIT};

const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

pub const PARTICLES_PER_ROUND: usize = 25;
const RESAMPLED: usize = PARTICLES_PER_ROUND - 2;
const GRID_C: [f64; 5] = [1.0, 1.2, 1.4, 1.6, 1.8];
const GRID_K: [f64; 5] = [0.9, 0.95, 1.0, 1.05, 1.1];
/// Spacing of the initial grid in `(c, k)`.
pub const GRID_SPACING: (f64, f64) = (0.2, 0.05);
const WEIGHT_POWER: i32 = 32;
const MIN_K: f64 = 1e-3;

/// Rescales a CR pulse: amplitude `cA`, width chosen to keep the area,
/// duration floored to the grid, then amplitude trimmed by `k`.
pub fn scale_cr(base: &GaussianSquarePulse, c: f64, k: f64) -> Result<GaussianSquarePulse, CalibError> {
    if !(c >= 1.0 && c.is_finite()) {
        return Err(CalibError::ScaleFactor(c));
    }
    let sigma = base.sigma();
    let scaled = c * base.amp();
    let amp = k * scaled;
    if !(amp.is_finite() && amp > 0.0) || amp > 1.0 {
        return Err(CalibError::AmplitudeOverflow(amp));
    }
    let width = (base.area() - sigma * scaled * SQRT_2PI) / scaled;
    if width < 0.0 {
        return Err(CalibError::WidthUnderflow(width));
    }
    let duration = quantize_duration(width + sigma * base.n_sigma())?;
    Ok(GaussianSquarePulse::new(amp, width, duration, sigma)?.with_sign(base.sign()))
}

fn grid_ceil(x: f64) -> u32 {
    let g = GRANULARITY as f64;
    ((x / g).ceil() * g).max(g) as u32
}

/// Same amplitude and flank length as `p`, width adjusted so the area is
/// `target`. Below the flanks-only area the width is 0 and the amplitude
/// shrinks instead.
pub fn reshape_to_area(p: &GaussianSquarePulse, target: f64) -> Result<GaussianSquarePulse, CalibError> {
    let (amp, sigma) = (p.amp(), p.sigma());
    let flank = p.duration() as f64 - p.width();
    let shrink = |d: u32| -> Result<GaussianSquarePulse, CalibError> {
        let full = gs_area_formula(amp, 0.0, d as f64, sigma);
        Ok(GaussianSquarePulse::new(amp * target / full, 0.0, d, sigma)?.with_sign(p.sign()))
    };
    let d_min = grid_ceil(flank);
    if target <= gs_area_formula(amp, 0.0, d_min as f64, sigma) {
        return shrink(d_min);
    }
    let w_guess = (target / amp - SQRT_2PI * sigma).max(0.0);
    let d = grid_ceil(w_guess + flank);
    let area = |w: f64| gs_area_formula(amp, w, d as f64, sigma);
    if area(0.0) >= target {
        return shrink(d);
    }
    let (mut lo, mut hi) = (0.0, d as f64 - 0.75 * flank);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if area(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(GaussianSquarePulse::new(amp, 0.5 * (lo + hi), d, sigma)?.with_sign(p.sign()))
}

/// The `CR(phi)` pulse derived from `best`, which implements `CR(pi/4)`.
/// Returns `None` for `phi = 0`.
pub fn cr_pulse_for_angle(best: &GaussianSquarePulse, phi: f64) -> Result<Option<GaussianSquarePulse>, CalibError> {
    if phi == 0.0 {
        return Ok(None);
    }
    let sign = if phi > 0.0 { EchoSign::Plus } else { EchoSign::Minus };
    let mag = phi.abs();
    let pulse = if (mag - FRAC_PI_4).abs() < 1e-12 {
        *best
    } else {
        reshape_to_area(best, mag / FRAC_PI_4 * best.area())?
    };
    Ok(Some(pulse.with_sign(sign)))
}

/// Appends `Rzx(theta)` as `CR(θ/2)`, `X_c`, `CR(-θ/2)`, `X_c`.
pub fn push_rzx(
    b: &mut ScheduleBuilder,
    control: usize,
    target: usize,
    theta: f64,
    best: &GaussianSquarePulse,
    x_control: DragPulse,
) -> Result<(), CalibError> {
    let first = cr_pulse_for_angle(best, theta / 2.0)?;
    let second = cr_pulse_for_angle(best, -theta / 2.0)?;
    if let Some(p) = first {
        b.cr(control, target, p);
    }
    b.drag(control, x_control);
    if let Some(p) = second {
        b.cr(control, target, p);
    }
    b.drag(control, x_control);
    Ok(())
}

/// Appends a CNOT: the echo for `Rzx(-pi/2)` followed by `Rz(pi/2)` on the
/// control and `sqrt(X)` on the target.
pub fn push_cnot(
    b: &mut ScheduleBuilder,
    control: usize,
    target: usize,
    best: &GaussianSquarePulse,
    x_control: DragPulse,
    sx_target: DragPulse,
) {
    let plus = best.with_sign(EchoSign::Plus);
    b.cr(control, target, plus.with_sign(EchoSign::Minus));
    b.drag(control, x_control);
    b.cr(control, target, plus);
    b.drag(control, x_control);
    b.frame_change(control, std::f64::consts::FRAC_PI_2);
    b.drag(target, sx_target);
}

/// Stand-alone `Rzx(theta)` schedule for `theta` in `[0, pi]`.
pub fn rzx_schedule(
    theta: f64,
    control: usize,
    target: usize,
    best: &GaussianSquarePulse,
    x_control: DragPulse,
) -> Result<Schedule, CalibError> {
    if !(0.0..=std::f64::consts::PI).contains(&theta) {
        return Err(CalibError::AngleRange(theta));
    }
    let mut b = ScheduleBuilder::new();
    push_rzx(&mut b, control, target, theta, best, x_control)?;
    Ok(b.build())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Particle {
    pub c: f64,
    pub k: f64,
    #[serde(default)]
    pub weight: f64,
    #[serde(default)]
    pub score: f64,
    /// Marks the unscaled `(1, 1)` reference carried in every generation.
    #[serde(default)]
    pub baseline: bool,
}

impl Particle {
    pub fn new(c: f64, k: f64) -> Self {
        Self { c, k, weight: 0.0, score: 0.0, baseline: false }
    }

    pub fn baseline() -> Self {
        Self { baseline: true, ..Self::new(1.0, 1.0) }
    }

    fn fresh(&self) -> Self {
        Self { weight: 0.0, score: 0.0, ..*self }
    }
}

/// The 5x5 grid without its `(1, 1)` cell, followed by the baseline.
pub fn initial_grid() -> Vec<Particle> {
    let mut out: Vec<Particle> = GRID_C
        .iter()
        .flat_map(|&c| GRID_K.iter().map(move |&k| Particle::new(c, k)))
        .filter(|p| !(p.c == 1.0 && p.k == 1.0))
        .collect();
    out.push(Particle::baseline());
    out
}

/// Normalised `score^32`; uniform when every score is zero.
pub fn resampling_weights(scores: &[f64]) -> Vec<f64> {
    let raw: Vec<f64> = scores.iter().map(|s| s.clamp(0.0, 1.0).powi(WEIGHT_POWER)).collect();
    let total: f64 = raw.iter().sum();
    if !(total > 0.0) {
        return vec![1.0 / scores.len() as f64; scores.len()];
    }
    raw.iter().map(|w| w / total).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    pub next: Vec<Particle>,
    /// Best scored particle; the baseline when a reset happened.
    pub best: Particle,
    pub baseline_score: f64,
    pub reset: bool,
    /// Resampling weights of the scored generation.
    pub weights: Vec<f64>,
}

/// One filter step over a scored generation.
pub fn particle_filter_round<R: Rng + ?Sized>(gen: &[Particle], rng: &mut R) -> RoundOutcome {
    let baseline = gen.iter().find(|p| p.baseline).copied().unwrap_or_else(Particle::baseline);
    let best = gen
        .iter()
        .filter(|p| !p.baseline)
        .copied()
        .max_by(|a, b| a.score.total_cmp(&b.score).then(a.c.total_cmp(&b.c)));
    let weights = resampling_weights(&gen.iter().map(|p| p.score).collect::<Vec<_>>());
    let best = match best {
        Some(b) if b.score >= baseline.score => b,
        _ => {
            return RoundOutcome {
                next: initial_grid(),
                best: baseline,
                baseline_score: baseline.score,
                reset: true,
                weights,
            }
        }
    };
    let index = WeightedIndex::new(&weights).expect("weights are finite and positive");
    let dc = Normal::new(0.0, GRID_SPACING.0 / 2.0).expect("valid normal");
    let dk = Normal::new(0.0, GRID_SPACING.1 / 2.0).expect("valid normal");
    let mut next: Vec<Particle> = (0..RESAMPLED)
        .map(|_| {
            let p = gen[index.sample(rng)];
            Particle::new((p.c + dc.sample(rng)).max(1.0), (p.k + dk.sample(rng)).max(MIN_K))
        })
        .collect();
    next.push(Particle { baseline: false, ..best.fresh() });
    next.push(Particle::baseline());
    RoundOutcome { next, best, baseline_score: baseline.score, reset: false, weights }
}

/// Four-state CNOT accuracy for each particle, in as few jobs as the batch
/// limit allows. Particles whose scaling fails score 0.
pub fn score_particles(
    backend: &dyn Backend,
    control: usize,
    target: usize,
    base: &GaussianSquarePulse,
    particles: &[Particle],
    shots: u64,
) -> Result<Vec<f64>, CalibError> {
    let props = backend.properties()?;
    let missing = || CalibError::Inconclusive(format!("qubits {control}/{target} not on device"));
    let x_c = props.x_pulse(control).ok_or_else(missing)?;
    let x_t = props.x_pulse(target).ok_or_else(missing)?;
    let sx_t = props.sx_pulse(target).ok_or_else(missing)?;
    let mut experiments = Vec::new();
    let mut owner = Vec::new();
    for (i, p) in particles.iter().enumerate() {
        let Ok(pulse) = scale_cr(base, p.c, p.k) else { continue };
        for state in 0..4 {
            let mut b = ScheduleBuilder::new();
            if state & 1 == 1 {
                b.drag(control, x_c);
            }
            if state & 2 == 2 {
                b.drag(target, x_t);
            }
            push_cnot(&mut b, control, target, &pulse, x_c, sx_t);
            experiments.push(Experiment { schedule: b.build(), measured: vec![control, target] });
            owner.push((i, state));
        }
    }
    let mut scores = vec![0.0; particles.len()];
    let mut k = 0;
    for chunk in experiments.chunks(BATCH_LIMIT) {
        let res = backend.submit(JobRequest { experiments: chunk.to_vec(), shots })?;
        for counts in &res.counts {
            let (i, state) = owner[k];
            let p = counts_to_probs(counts, 2);
            let ideal = state ^ ((state & 1) << 1);
            let l1: f64 = p.iter().enumerate().map(|(j, q)| (q - if j == ideal { 1.0 } else { 0.0 }).abs()).sum();
            scores[i] += (1.0 - 0.5 * l1) / 4.0;
            k += 1;
        }
    }
    Ok(scores)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrRoundReport {
    pub generation: u64,
    pub best: Particle,
    pub baseline_score: f64,
    pub reset: bool,
}

impl CrRoundReport {
    /// Whether the round produced something worth publishing.
    pub fn improved(&self) -> bool {
        !self.reset && !self.best.baseline && self.best.score > self.baseline_score
    }
}

/// Filter state for one control/target pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrCalibration {
    pub control: usize,
    pub target: usize,
    /// Vendor `CR(pi/4)` pulse.
    pub base: GaussianSquarePulse,
    pub particles: Vec<Particle>,
    pub best: Option<Particle>,
    pub generation: u64,
    pub rounds_since_reset: u64,
    pub resets: u64,
}

impl CrCalibration {
    pub fn new(control: usize, target: usize, base: GaussianSquarePulse) -> Self {
        Self {
            control,
            target,
            base,
            particles: initial_grid(),
            best: None,
            generation: 0,
            rounds_since_reset: 0,
            resets: 0,
        }
    }

    /// Scores the current generation on the backend and advances the filter.
    pub fn round<R: Rng + ?Sized>(
        &mut self,
        backend: &dyn Backend,
        rng: &mut R,
        shots: u64,
    ) -> Result<CrRoundReport, CalibError> {
        let scores = score_particles(backend, self.control, self.target, &self.base, &self.particles, shots)?;
        let scored: Vec<Particle> =
            self.particles.iter().zip(scores).map(|(p, s)| Particle { score: s, ..*p }).collect();
        let out = particle_filter_round(&scored, rng);
        self.generation += 1;
        if out.reset {
            self.resets += 1;
            self.rounds_since_reset = 0;
        } else {
            self.rounds_since_reset += 1;
            self.best = Some(out.best);
        }
        self.particles = out.next;
        Ok(CrRoundReport {
            generation: self.generation,
            best: out.best,
            baseline_score: out.baseline_score,
            reset: out.reset,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{kind_unitary, GateKind};
    use crate::math::phase_distance;
    use crate::sim::{presets, DeviceModel, SimBackend};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn base() -> GaussianSquarePulse {
        GaussianSquarePulse::new(0.3, 400.0, 464, 16.0).unwrap()
    }

    #[test]
    fn scale_by_two_matches_formula() {
        let b = base();
        let p = scale_cr(&b, 2.0, 1.0).unwrap();
        let w = (b.area() - 16.0 * 0.6 * SQRT_2PI) / 0.6;
        assert!((p.amp() - 0.6).abs() < 1e-12);
        assert!((p.width() - w).abs() < 1e-9);
        assert_eq!(p.duration(), 16 * ((w + 16.0 * 4.0) / 16.0).floor() as u32);
        // erf(n_sigma) is close to 1 and the floor trims at most one step
        assert!((p.area() - b.area()).abs() / b.area() < 1e-3);
    }

    #[test]
    fn identity_scaling_keeps_sigma_and_area() {
        let b = base();
        let p = scale_cr(&b, 1.0, 1.0).unwrap();
        assert_eq!(p.sigma(), b.sigma());
        // the floor shortens the flank by one grid step, costing only erf tail
        assert!((p.area() - b.area()).abs() / b.area() < 1e-4);
    }

    #[test]
    fn scale_errors() {
        let b = base();
        assert!(matches!(scale_cr(&b, 12.0, 0.2), Err(CalibError::WidthUnderflow(_))));
        assert!(matches!(scale_cr(&b, 3.0, 1.5), Err(CalibError::AmplitudeOverflow(_))));
        assert!(matches!(scale_cr(&b, 0.9, 1.0), Err(CalibError::ScaleFactor(_))));
    }

    proptest! {
        #[test]
        fn scaled_area_bound(c in 1.0f64..3.0, amp in 0.1f64..0.33, w in 100.0f64..600.0) {
            let d = 16 * ((w + 64.0) / 16.0).ceil() as u32;
            let b = GaussianSquarePulse::new(amp, w, d, 16.0).unwrap();
            let p = scale_cr(&b, c, 1.0).unwrap();
            // one 16-dt floor of flat top plus the dropped erf tail
            let bound = 16.0 * c * amp + b.area() * 1e-6;
            prop_assert!((p.area() - b.area()).abs() <= bound);
        }

        #[test]
        fn reshape_hits_target(frac in 0.01f64..2.0) {
            let b = base();
            let p = reshape_to_area(&b, frac * b.area()).unwrap();
            prop_assert!((p.area() - frac * b.area()).abs() < 1e-9 * b.area());
            prop_assert!(p.amp() <= b.amp() + 1e-15);
        }
    }

    #[test]
    fn quarter_turn_returns_best_unchanged() {
        let b = base();
        assert_eq!(cr_pulse_for_angle(&b, FRAC_PI_4).unwrap(), Some(b));
        assert_eq!(cr_pulse_for_angle(&b, -FRAC_PI_4).unwrap().unwrap().sign(), EchoSign::Minus);
        assert_eq!(cr_pulse_for_angle(&b, 0.0).unwrap(), None);
    }

    fn device() -> DeviceModel {
        DeviceModel::new(presets::ideal_line(2)).unwrap()
    }

    #[test]
    fn echo_gives_rzx() {
        let dev = device();
        let props = dev.properties();
        let best = props.cr_pulse(0, 1).unwrap();
        let x0 = props.x_pulse(0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let theta = rng.random_range(0.0..std::f64::consts::PI);
            let s = rzx_schedule(theta, 0, 1, &best, x0).unwrap();
            let u = dev.schedule_unitary(&s, &[0, 1]).unwrap();
            // schedule unitary uses bit order, the gate matrix operand order
            let want = crate::math::embed(&kind_unitary(GateKind::Rzx(theta)).unwrap(), &[0, 1], 2);
            assert!(phase_distance(&u, &want) < 1e-9, "theta {theta}");
        }
    }

    #[test]
    fn zero_angle_echo_is_identity() {
        let dev = device();
        let props = dev.properties();
        let s = rzx_schedule(0.0, 0, 1, &props.cr_pulse(0, 1).unwrap(), props.x_pulse(0).unwrap()).unwrap();
        assert_eq!(s.pulse_count(), 2);
        let u = dev.schedule_unitary(&s, &[0, 1]).unwrap();
        assert!(phase_distance(&u, &crate::math::identity(4)) < 1e-12);
    }

    #[test]
    fn cnot_structure_is_exact() {
        let dev = device();
        let props = dev.properties();
        let mut b = ScheduleBuilder::new();
        push_cnot(&mut b, 0, 1, &props.cr_pulse(0, 1).unwrap(), props.x_pulse(0).unwrap(), props.sx_pulse(1).unwrap());
        let u = dev.schedule_unitary(&b.build(), &[0, 1]).unwrap();
        let want = crate::math::embed(&kind_unitary(GateKind::Cnot).unwrap(), &[0, 1], 2);
        assert!(phase_distance(&u, &want) < 1e-12);
    }

    #[test]
    fn grid_has_25_with_baseline() {
        let g = initial_grid();
        assert_eq!(g.len(), PARTICLES_PER_ROUND);
        assert_eq!(g.iter().filter(|p| p.baseline).count(), 1);
        assert_eq!(g.iter().filter(|p| p.c == 1.0 && p.k == 1.0).count(), 1);
    }

    #[test]
    fn equal_scores_give_uniform_weights() {
        let w = resampling_weights(&[0.7; 25]);
        assert!(w.iter().all(|x| (x - 0.04).abs() < 1e-12));
        let w0 = resampling_weights(&[0.0; 4]);
        assert!(w0.iter().all(|x| (x - 0.25).abs() < 1e-12));
    }

    #[test]
    fn baseline_best_resets() {
        let mut gen = initial_grid();
        for p in gen.iter_mut() {
            p.score = if p.baseline { 0.99 } else { 0.5 };
        }
        let out = particle_filter_round(&gen, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(out.reset);
        assert_eq!(out.next, initial_grid());
    }

    #[test]
    fn ties_prefer_larger_c() {
        let mut gen = initial_grid();
        for p in gen.iter_mut() {
            p.score = if p.k == 1.0 { 0.9 } else { 0.1 };
        }
        let out = particle_filter_round(&gen, &mut ChaCha8Rng::seed_from_u64(1));
        assert!(!out.reset);
        assert_eq!((out.best.c, out.best.k), (1.8, 1.0));
    }

    proptest! {
        #[test]
        fn round_shape(seed in any::<u64>(), scores in proptest::collection::vec(0.0f64..1.0, 25)) {
            let mut gen = initial_grid();
            for (p, s) in gen.iter_mut().zip(&scores) {
                p.score = *s;
            }
            let out = particle_filter_round(&gen, &mut ChaCha8Rng::seed_from_u64(seed));
            prop_assert_eq!(out.next.len(), PARTICLES_PER_ROUND);
            prop_assert_eq!(out.next.iter().filter(|p| p.baseline).count(), 1);
            prop_assert!(out.next.iter().all(|p| p.c >= 1.0 && p.k > 0.0));
            prop_assert!((out.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if !out.reset {
                prop_assert!(out.best.score >= out.baseline_score);
            }
        }
    }

    #[test]
    fn scoring_on_noiseless_device() {
        let backend = SimBackend::new(presets::ideal_line(2)).unwrap();
        let b = backend.properties().unwrap().cr_pulse(0, 1).unwrap();
        let ps = [Particle::baseline(), Particle::new(1.0, 1.5), Particle::new(5.0, 1.0)];
        let s = score_particles(&backend, 0, 1, &b, &ps, 4000).unwrap();
        assert!(s[0] >= 0.999, "{s:?}");
        assert!(s[1] < s[0]);
        assert_eq!(s[2], 0.0);
    }
}
