// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Single-qubit calibration: fastest-pulse sweep, sample cleaning, the
//! `A1 sin²(ωA + φ) + δ` fit and its inversion.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::lm::{levenberg_marquardt, LeastSquares, LmOptions};
use super::CalibError;
use crate::params::{PulseLibrary, RxEntry};
use crate::pulse::{DragPulse, ScheduleBuilder};
use crate::sim::{counts_to_probs, Backend, Experiment, JobRequest};
use crate::transpile::{rx_into, Mode};

/// Two days, in seconds.
pub const TRAILING_WINDOW_S: f64 = 172_800.0;
/// Durations tried by the sweep, shortest first.
pub const SWEEP_DURATIONS: [u32; 7] = [64, 80, 96, 112, 128, 144, 160];
const AMP_STEP: f64 = 0.02;
const TARGET_P1: f64 = 0.995;
const MIN_FIT_POINTS: usize = 8;
const MIN_BIN: usize = 3;
const OUTLIER_STDS: f64 = 1.5;
/// How far the inversion argument may leave `[0, 1]` before it is treated
/// as a bad fit rather than rounding.
const INVERSION_SLACK: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibSample {
    /// Seconds on the device clock.
    pub timestamp: f64,
    pub amplitude: f64,
    /// Readout-corrected `P(1)`.
    pub p1: f64,
    pub shots: u64,
}

/// Parameters of `p1(A) = a1 sin²(omega A + phi) + delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinFit {
    pub a1: f64,
    pub omega: f64,
    pub phi: f64,
    pub delta: f64,
    /// Sum of squared residuals on the fitted points.
    #[serde(default)]
    pub residual: f64,
}

impl SinFit {
    /// Exact curve for a device whose `pi` rotation sits at `a0`.
    pub fn ideal(a0: f64) -> Self {
        Self { a1: 1.0, omega: FRAC_PI_2 / a0, phi: 0.0, delta: 0.0, residual: 0.0 }
    }

    pub fn eval(&self, amp: f64) -> f64 {
        self.a1 * (self.omega * amp + self.phi).sin().powi(2) + self.delta
    }

    pub fn is_valid(&self) -> bool {
        [self.a1, self.omega, self.phi, self.delta].iter().all(|x| x.is_finite())
            && self.a1 > 0.0
            && self.omega > 0.0
    }
}

fn bin_key(amp: f64) -> i64 {
    (amp * 1e9).round() as i64
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutlierReport {
    pub kept: Vec<CalibSample>,
    pub removed: usize,
    /// Amplitudes of bins too small to clean, passed through unchanged.
    pub flagged: Vec<f64>,
}

/// Drops samples further than 1.5 sample standard deviations from their
/// amplitude bin's mean.
pub fn remove_outliers(samples: &[CalibSample]) -> OutlierReport {
    let mut bins: BTreeMap<i64, Vec<CalibSample>> = BTreeMap::new();
    for s in samples {
        bins.entry(bin_key(s.amplitude)).or_default().push(*s);
    }
    let mut kept = Vec::with_capacity(samples.len());
    let mut flagged = Vec::new();
    for bin in bins.values() {
        if bin.len() < MIN_BIN {
            flagged.push(bin[0].amplitude);
            kept.extend_from_slice(bin);
            continue;
        }
        let n = bin.len() as f64;
        let mean = bin.iter().map(|s| s.p1).sum::<f64>() / n;
        let var = bin.iter().map(|s| (s.p1 - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let sd = var.sqrt();
        if sd == 0.0 {
            kept.extend_from_slice(bin);
            continue;
        }
        kept.extend(bin.iter().filter(|s| (s.p1 - mean).abs() <= OUTLIER_STDS * sd));
    }
    let removed = samples.len() - kept.len();
    OutlierReport { kept, removed, flagged }
}

/// Shot-weighted mean of `p1` per amplitude over `[now - window, now]`.
pub fn trailing_average(samples: &[CalibSample], now: f64, window: f64) -> Result<Vec<CalibSample>, CalibError> {
    let mut bins: BTreeMap<i64, (f64, f64, u64, f64)> = BTreeMap::new();
    for s in samples.iter().filter(|s| s.timestamp >= now - window && s.timestamp <= now) {
        let e = bins.entry(bin_key(s.amplitude)).or_insert((s.amplitude, 0.0, 0, f64::MIN));
        e.1 += s.p1 * s.shots as f64;
        e.2 += s.shots;
        e.3 = e.3.max(s.timestamp);
    }
    if bins.is_empty() {
        return Err(CalibError::EmptyWindow);
    }
    Ok(bins
        .into_values()
        .map(|(amplitude, weighted, shots, timestamp)| CalibSample {
            timestamp,
            amplitude,
            p1: weighted / shots as f64,
            shots,
        })
        .collect())
}

struct Sin2Problem<'a> {
    xs: &'a [f64],
    ys: &'a [f64],
}

impl LeastSquares for Sin2Problem<'_> {
    fn n_params(&self) -> usize {
        4
    }

    fn residuals(&self, p: &[f64]) -> Vec<f64> {
        self.xs
            .iter()
            .zip(self.ys)
            .map(|(x, y)| p[0] * (p[1] * x + p[2]).sin().powi(2) + p[3] - y)
            .collect()
    }

    fn jacobian(&self, p: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.xs.len(), 4, |i, j| {
            let x = self.xs[i];
            let u = p[1] * x + p[2];
            match j {
                0 => u.sin().powi(2),
                1 => p[0] * (2.0 * u).sin() * x,
                2 => p[0] * (2.0 * u).sin(),
                _ => 1.0,
            }
        })
    }
}

const LOWER: [f64; 4] = [0.1, 1e-6, -FRAC_PI_2, -0.2];
const UPPER: [f64; 4] = [1.2, 1e6, FRAC_PI_2, 0.2];

/// Levenberg-Marquardt fit of the sin² model to `(amplitude, p1)` points.
pub fn fit_sin2(points: &[(f64, f64)]) -> Result<SinFit, CalibError> {
    if points.len() < MIN_FIT_POINTS {
        return Err(CalibError::TooFewPoints { got: points.len(), need: MIN_FIT_POINTS });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut a_at_max = 0.0;
    for &(x, y) in points {
        if y > hi {
            hi = y;
            a_at_max = x;
        }
        lo = lo.min(y);
    }
    if a_at_max <= 0.0 {
        a_at_max = xs.iter().cloned().fold(0.0, f64::max);
    }
    let omega0 = if a_at_max > 0.0 { FRAC_PI_2 / a_at_max } else { 1.0 };
    let init = [hi - lo, omega0, 0.0, lo];
    let problem = Sin2Problem { xs: &xs, ys: &ys };
    let to_fit = |p: &[f64], cost: f64| SinFit { a1: p[0], omega: p[1], phi: p[2], delta: p[3], residual: cost };
    let fit = match levenberg_marquardt(&problem, &init, &LOWER, &UPPER, LmOptions::default()) {
        Ok(r) => to_fit(&r.params, r.cost),
        Err(r) => return Err(CalibError::FitFailed(to_fit(&r.params, r.cost))),
    };
    let (x_min, x_max) = xs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let curve: Vec<f64> = (0..=100).map(|i| fit.eval(x_min + (x_max - x_min) * i as f64 / 100.0)).collect();
    let span = curve.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - curve.iter().cloned().fold(f64::INFINITY, f64::min);
    if fit.a1 <= LOWER[0] + 1e-9 || span < 0.1 {
        return Err(CalibError::DegenerateFit(fit));
    }
    Ok(fit)
}

/// Drive amplitude producing `Rx(theta)` under `fit`, for `theta` in `[0, pi]`.
pub fn amplitude_for_theta(fit: &SinFit, theta: f64) -> Result<f64, CalibError> {
    if !(0.0..=PI + 1e-12).contains(&theta) {
        return Err(CalibError::AngleRange(theta));
    }
    if theta == 0.0 {
        return Ok(0.0);
    }
    let arg = ((theta / 2.0).sin().powi(2) - fit.delta) / fit.a1;
    if !arg.is_finite() || !(-INVERSION_SLACK..=1.0 + INVERSION_SLACK).contains(&arg) {
        return Err(CalibError::InversionDomain { theta, arg });
    }
    let a = (arg.clamp(0.0, 1.0).sqrt().asin() - fit.phi) / fit.omega;
    Ok(a.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub t0: u32,
    pub a0: f64,
    pub sigma: f64,
    pub beta: f64,
    /// Readout-corrected `P(1)` at `(a0, t0)`.
    pub p1: f64,
}

fn measure_p1(
    backend: &dyn Backend,
    qubit: usize,
    pulses: &[Option<DragPulse>],
    shots: u64,
) -> Result<(Vec<f64>, f64), CalibError> {
    let readout = backend.properties()?.readout(qubit);
    let experiments = pulses
        .iter()
        .map(|p| {
            let mut b = ScheduleBuilder::new();
            if let Some(p) = p {
                b.drag(qubit, *p);
            }
            Experiment { schedule: b.build(), measured: vec![qubit] }
        })
        .collect();
    let res = backend.submit(JobRequest { experiments, shots })?;
    let p1 = res
        .counts
        .iter()
        .map(|c| readout.correct_p1(counts_to_probs(c, 1)[1]).clamp(0.0, 1.0))
        .collect();
    Ok((p1, res.completed_at))
}

/// Finds the shortest duration on the 16-dt grid whose best amplitude
/// reaches the `P(1)` threshold, allowing for three binomial sigmas.
pub fn sweep_fastest_x(backend: &dyn Backend, qubit: usize, shots: u64) -> Result<SweepResult, CalibError> {
    let props = backend.properties()?;
    let beta = props.x_pulse(qubit).ok_or(CalibError::Infeasible { qubit })?.beta();
    let threshold = TARGET_P1 - 3.0 * (TARGET_P1 * (1.0 - TARGET_P1) / shots as f64).sqrt();
    let amps: Vec<f64> = (1..=50).map(|i| i as f64 * AMP_STEP).collect();
    for t in SWEEP_DURATIONS {
        let sigma = t as f64 / 4.0;
        let pulses: Vec<Option<DragPulse>> =
            amps.iter().map(|&a| DragPulse::new(a, t, sigma, beta).ok()).collect();
        let (p1, _) = measure_p1(backend, qubit, &pulses, shots)?;
        let (best, &p) = p1
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("non-empty grid");
        if p >= threshold {
            return Ok(SweepResult { t0: t, a0: amps[best], sigma, beta, p1: p });
        }
    }
    Err(CalibError::Infeasible { qubit })
}

/// Measures readout-corrected `P(1)` at each amplitude with a fixed
/// duration, stamped with the job's completion time.
pub fn collect_samples(
    backend: &dyn Backend,
    qubit: usize,
    sweep: &SweepResult,
    amplitudes: &[f64],
    shots: u64,
) -> Result<Vec<CalibSample>, CalibError> {
    let pulses: Vec<Option<DragPulse>> = amplitudes
        .iter()
        .map(|&a| {
            if a == 0.0 {
                Ok(None)
            } else {
                DragPulse::new(a, sweep.t0, sweep.sigma, sweep.beta).map(Some)
            }
        })
        .collect::<Result<_, _>>()?;
    let mut out = Vec::with_capacity(amplitudes.len());
    for (chunk_a, chunk_p) in amplitudes.chunks(crate::sim::BATCH_LIMIT).zip(pulses.chunks(crate::sim::BATCH_LIMIT)) {
        let (p1, at) = measure_p1(backend, qubit, chunk_p, shots)?;
        out.extend(chunk_a.iter().zip(p1).map(|(&amplitude, p1)| CalibSample { timestamp: at, amplitude, p1, shots }));
    }
    Ok(out)
}

/// Angles checked by [`validate_rx`]: `pi/8, 2pi/8, ..., pi`.
pub fn validation_angles() -> Vec<f64> {
    (1..=8).map(|i| i as f64 * PI / 8.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub candidate_error: f64,
    pub baseline_error: f64,
    pub incumbent_error: Option<f64>,
    pub accept: bool,
}

/// Compares the candidate entry with the vendor pulses and the current
/// entry by mean 1-norm error of `Rx(θ)|0>` in the Z basis. The candidate
/// is accepted only when strictly better than both.
pub fn validate_rx(
    backend: &dyn Backend,
    qubit: usize,
    candidate: &RxEntry,
    incumbent: Option<&RxEntry>,
    shots: u64,
) -> Result<ValidationReport, CalibError> {
    let inconclusive = |e: &dyn std::fmt::Display| CalibError::Inconclusive(e.to_string());
    let props = backend.properties().map_err(|e| inconclusive(&e))?;
    let angles = validation_angles();
    let empty = PulseLibrary::default();
    let mut experiments = Vec::new();
    let mut entries: Vec<&RxEntry> = vec![candidate];
    entries.extend(incumbent);
    for entry in &entries {
        for &theta in &angles {
            let mut b = ScheduleBuilder::new();
            if let Some(p) = entry.pulse_for(theta)? {
                b.drag(qubit, p);
            }
            experiments.push(Experiment { schedule: b.build(), measured: vec![qubit] });
        }
    }
    for &theta in &angles {
        let mut b = ScheduleBuilder::new();
        rx_into(&mut b, qubit, theta, &empty, &props, Mode::Baseline).map_err(|e| inconclusive(&e))?;
        experiments.push(Experiment { schedule: b.build(), measured: vec![qubit] });
    }
    let res = backend.submit(JobRequest { experiments, shots }).map_err(|e| inconclusive(&e))?;
    let errors: Vec<f64> = res
        .counts
        .iter()
        .zip(angles.iter().cycle())
        .map(|(c, theta)| {
            let p = counts_to_probs(c, 1);
            let ideal1 = (theta / 2.0).sin().powi(2);
            (p[0] - (1.0 - ideal1)).abs() + (p[1] - ideal1).abs()
        })
        .collect();
    let mean = |k: usize| errors[k * 8..(k + 1) * 8].iter().sum::<f64>() / 8.0;
    let candidate_error = mean(0);
    let incumbent_error = incumbent.map(|_| mean(1));
    let baseline_error = mean(entries.len());
    let accept = candidate_error < baseline_error && incumbent_error.is_none_or(|e| candidate_error < e);
    Ok(ValidationReport { candidate_error, baseline_error, incumbent_error, accept })
}
