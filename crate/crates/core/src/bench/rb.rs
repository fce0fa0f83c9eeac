// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Randomized benchmarking: random-unitary sequences mirrored by their
//! inverses, and the `P = alpha p^k + beta` decay fit.

use std::f64::consts::PI;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{execute, place, BenchError};
use crate::calibrate::lm::{levenberg_marquardt, LeastSquares, LmOptions};
use crate::circuit::{g, Circuit, Gate};
use crate::math::{Matrix, C64};
use crate::params::PulseLibrary;
use crate::sim::Backend;
use crate::target::BackendProperties;
use crate::transpile::Mode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RbFamily {
    Su2,
    Su4,
}

impl FromStr for RbFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "su2" => Ok(RbFamily::Su2),
            "su4" => Ok(RbFamily::Su4),
            _ => Err(format!("unknown RB family '{s}' (expected su2|su4)")),
        }
    }
}

/// Haar-random `dim x dim` unitary: QR of a complex Ginibre matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Matrix {
    let z = DMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) / 2f64.sqrt()
    });
    let (mut q, r) = z.qr().unpack();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `(theta, phi, lambda)` with `U3(theta, phi, lambda) = u` up to phase.
pub fn u3_angles(u: &Matrix) -> (f64, f64, f64) {
    let (a, b, c, d) = (u[(0, 0)], u[(0, 1)], u[(1, 0)], u[(1, 1)]);
    let theta = 2.0 * c.norm().atan2(a.norm());
    if c.norm() < 1e-12 {
        return (theta, 0.0, (d / a).arg());
    }
    if a.norm() < 1e-12 {
        return (theta, (c / -b).arg(), 0.0);
    }
    // a carries the global phase, c and -b add phi and lambda to it
    (theta, (c / a).arg(), (-b / a).arg())
}

/// Haar-random single-qubit gate as a `U3`.
pub fn haar_su2<R: Rng + ?Sized>(q: usize, rng: &mut R) -> Gate {
    let (t, p, l) = u3_angles(&haar_unitary(2, rng));
    g::u3(t, p, l, q)
}

/// Random two-qubit unitary in the local-interaction-local form
/// `(A ⊗ B) Rxx(a) Ryy(b) Rzz(c) (C ⊗ D)` with Haar local factors and
/// uniform interaction angles. Returned as gates in application order.
pub fn random_su4<R: Rng + ?Sized>(a: usize, b: usize, rng: &mut R) -> Vec<Gate> {
    let mut out = vec![haar_su2(a, rng), haar_su2(b, rng)];
    out.push(g::rxx(rng.random_range(0.0..PI), a, b));
    out.push(g::ryy(rng.random_range(0.0..PI), a, b));
    out.push(g::rzz(rng.random_range(0.0..PI), a, b));
    out.push(haar_su2(a, rng));
    out.push(haar_su2(b, rng));
    out
}

/// `depth` random gates followed by their inverses in reverse order, then
/// measurement of every qubit. SU(2) sequences run on every qubit of the
/// register side by side; SU(4) sequences act on qubits `(0, 1)`.
pub fn rb_generate(n_qubits: usize, family: RbFamily, depth: usize, seed: u64) -> Result<Circuit, BenchError> {
    if family == RbFamily::Su4 && n_qubits < 2 {
        return Err(BenchError::Resource("su4 needs two qubits".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut blocks: Vec<Vec<Gate>> = Vec::with_capacity(depth);
    for _ in 0..depth {
        blocks.push(match family {
            RbFamily::Su2 => (0..n_qubits).map(|q| haar_su2(q, &mut rng)).collect(),
            RbFamily::Su4 => random_su4(0, 1, &mut rng),
        });
    }
    let mut c = Circuit::new(n_qubits)?;
    for b in &blocks {
        c.extend(b.iter().cloned())?;
    }
    for b in blocks.iter().rev() {
        for gate in b.iter().rev() {
            c.push(gate.inverse()?)?;
        }
    }
    c.extend((0..n_qubits).map(g::measure))?;
    Ok(c)
}

/// Fitted decay `P(k) = alpha p^k + beta` and the derived error per gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RbFit {
    pub alpha: f64,
    pub beta: f64,
    pub p: f64,
    /// `1 - p - (1 - p) / 2^n`.
    pub epsilon: f64,
    /// Standard error of `p` from the fit covariance (0 for an exact fit).
    pub p_stderr: f64,
    pub n_qubits: usize,
}

impl RbFit {
    pub fn epsilon_stderr(&self) -> f64 {
        self.p_stderr * (1.0 - 1.0 / (1u64 << self.n_qubits) as f64)
    }
}

/// Error per gate for a decay constant `p` on `n` qubits.
pub fn epsilon_from_p(p: f64, n_qubits: usize) -> f64 {
    1.0 - p - (1.0 - p) / (1u64 << n_qubits) as f64
}

struct Decay<'a> {
    data: &'a [(f64, f64)],
}

impl LeastSquares for Decay<'_> {
    fn n_params(&self) -> usize {
        3
    }

    fn residuals(&self, x: &[f64]) -> Vec<f64> {
        self.data.iter().map(|&(k, y)| x[0] * x[2].powf(k) + x[1] - y).collect()
    }

    fn jacobian(&self, x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_fn(self.data.len(), 3, |i, j| {
            let k = self.data[i].0;
            match j {
                0 => x[2].powf(k),
                1 => 1.0,
                _ if k == 0.0 => 0.0,
                _ => x[0] * k * x[2].powf(k - 1.0),
            }
        })
    }
}

/// Least-squares fit of `(depth, P)` pairs. Needs at least four distinct
/// depths.
pub fn rb_fit(series: &[(usize, f64)], n_qubits: usize) -> Result<RbFit, BenchError> {
    let mut depths: Vec<usize> = series.iter().map(|s| s.0).collect();
    depths.sort_unstable();
    depths.dedup();
    if depths.len() < 4 {
        return Err(BenchError::FitFailed(format!("{} distinct depths, need 4", depths.len())));
    }
    let data: Vec<(f64, f64)> = series.iter().map(|&(k, y)| (k as f64, y)).collect();
    let (lo, hi) = data.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), d| (l.min(d.1), h.max(d.1)));
    if hi - lo < 1e-12 {
        // no decay at all: alpha and p are not identifiable, report p = 1
        return Ok(RbFit { alpha: 0.0, beta: lo, p: 1.0, epsilon: 0.0, p_stderr: 0.0, n_qubits });
    }
    let problem = Decay { data: &data };
    let floor = 1.0 / (1u64 << n_qubits) as f64;
    let first = data.iter().min_by(|a, b| a.0.total_cmp(&b.0)).unwrap().1;
    let (lower, upper) = ([-2.0, -1.0, 0.0], [2.0, 2.0, 1.0]);
    let mut best: Option<crate::calibrate::lm::LmReport> = None;
    for p0 in [0.9, 0.99, 0.999, 0.9999] {
        let init = [first - floor, floor, p0];
        let r = match levenberg_marquardt(&problem, &init, &lower, &upper, LmOptions::default()) {
            Ok(r) => r,
            Err(r) if r.cost.is_finite() => r,
            Err(_) => continue,
        };
        if best.as_ref().is_none_or(|b| r.cost < b.cost) {
            best = Some(r);
        }
    }
    let r = best.ok_or_else(|| BenchError::FitFailed("no start converged".into()))?;
    let (alpha, beta, p) = (r.params[0], r.params[1], r.params[2]);
    if !(p > 0.0 && p <= 1.0) {
        return Err(BenchError::FitFailed(format!("p = {p}")));
    }
    let dof = data.len().saturating_sub(3).max(1) as f64;
    let j = problem.jacobian(&r.params);
    let p_stderr = (&j.transpose() * &j)
        .try_inverse()
        .map(|cov| (cov[(2, 2)] * r.cost / dof).max(0.0).sqrt())
        .unwrap_or(f64::INFINITY);
    Ok(RbFit { alpha, beta, p, epsilon: epsilon_from_p(p, n_qubits), p_stderr, n_qubits })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RbSeries {
    pub mode: Mode,
    pub family: RbFamily,
    pub depths: Vec<usize>,
    /// Mean probability of reading all zeros at each depth.
    pub survival: Vec<f64>,
    /// Shot-noise standard error of each mean.
    pub survival_stderr: Vec<f64>,
    pub fit: Option<RbFit>,
}

/// Runs `sequences` random sequences per depth on physical `qubits` and
/// fits the decay.
#[allow(clippy::too_many_arguments)]
pub fn run_rb(
    backend: &dyn Backend,
    props: &BackendProperties,
    lib: &PulseLibrary,
    mode: Mode,
    family: RbFamily,
    qubits: &[usize],
    depths: &[usize],
    sequences: usize,
    shots: u64,
    seed: u64,
) -> Result<RbSeries, BenchError> {
    let n = match family {
        RbFamily::Su2 => qubits.len(),
        RbFamily::Su4 => 2,
    };
    let mut circuits = Vec::new();
    for (d, &k) in depths.iter().enumerate() {
        for s in 0..sequences {
            let c = rb_generate(n, family, k, seed ^ ((d as u64) << 32 | s as u64))?;
            circuits.push(place(&c, qubits, props.n_qubits())?);
        }
    }
    let probs = execute(backend, props, lib, mode, &circuits, shots)?;
    let mut survival = Vec::new();
    let mut survival_stderr = Vec::new();
    let mut series = Vec::new();
    for (d, &k) in depths.iter().enumerate() {
        let zeros: Vec<f64> = probs[d * sequences..(d + 1) * sequences].iter().map(|p| p[0]).collect();
        let mean = zeros.iter().sum::<f64>() / sequences as f64;
        let shot_var = zeros.iter().map(|p| p * (1.0 - p) / shots as f64).sum::<f64>();
        survival.push(mean);
        survival_stderr.push(shot_var.sqrt() / sequences as f64);
        series.extend(zeros.iter().map(|&p| (k, p)));
    }
    let fit = rb_fit(&series, n).ok();
    Ok(RbSeries { mode, family, depths: depths.to_vec(), survival, survival_stderr, fit })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{circuit_unitary, kind_unitary, GateKind};
    use crate::math::{identity, is_unitary, phase_distance};
    use proptest::prelude::*;

    fn synthetic(p: f64, alpha: f64, beta: f64) -> Vec<(usize, f64)> {
        [1, 2, 4, 8, 16, 32, 64, 128, 256].iter().map(|&k| (k, alpha * p.powi(k as i32) + beta)).collect()
    }

    #[test]
    fn recovers_noiseless_decay() {
        let f = rb_fit(&synthetic(0.99, 0.95, 0.03), 1).unwrap();
        assert!((f.p - 0.99).abs() < 1e-3 && (f.alpha - 0.95).abs() < 1e-3 && (f.beta - 0.03).abs() < 1e-3);
        assert!((f.epsilon - 0.005).abs() < 1e-6);
    }

    #[test]
    fn epsilon_formula() {
        assert_eq!(epsilon_from_p(1.0, 1), 0.0);
        assert!((epsilon_from_p(0.96, 2) - 0.03).abs() < 1e-15);
        let f = rb_fit(&synthetic(1.0, 0.5, 0.5), 1).unwrap();
        assert!(f.epsilon.abs() < 1e-9);
    }

    #[test]
    fn too_few_depths() {
        let s = vec![(1, 0.9), (2, 0.8), (4, 0.7), (4, 0.71)];
        assert!(matches!(rb_fit(&s, 1), Err(BenchError::FitFailed(_))));
    }

    #[test]
    fn haar_is_unitary_and_u3_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let u = haar_unitary(2, &mut rng);
            assert!(is_unitary(&u, 1e-12));
            let (t, p, l) = u3_angles(&u);
            assert!(phase_distance(&kind_unitary(GateKind::U3(t, p, l)).unwrap(), &u) < 1e-9);
        }
        assert!(is_unitary(&haar_unitary(4, &mut rng), 1e-12));
    }

    #[test]
    fn haar_first_moment() {
        // E|u00|^2 = 1/d for Haar measure
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let n = 20_000;
        let m: f64 = (0..n).map(|_| haar_unitary(2, &mut rng)[(0, 0)].norm_sqr()).sum::<f64>() / n as f64;
        assert!((m - 0.5).abs() < 0.01, "{m}");
    }

    #[test]
    fn sequences_are_identity_and_deterministic() {
        for fam in [RbFamily::Su2, RbFamily::Su4] {
            let c = rb_generate(2, fam, 7, 3).unwrap();
            let u = circuit_unitary(&c.without_measurements()).unwrap();
            assert!(phase_distance(&u, &identity(4)) < 1e-9);
            assert_eq!(c, rb_generate(2, fam, 7, 3).unwrap());
        }
        assert_eq!(rb_generate(1, RbFamily::Su2, 0, 1).unwrap().without_measurements().len(), 0);
        assert!(rb_generate(1, RbFamily::Su4, 1, 1).is_err());
    }

    #[test]
    fn su4_block_is_unitary_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c = Circuit::from_gates(2, random_su4(0, 1, &mut rng)).unwrap();
        assert!(is_unitary(&circuit_unitary(&c).unwrap(), 1e-12));
    }

    proptest! {
        #[test]
        fn fit_recovers_random_decays(p in 0.9f64..0.999, alpha in 0.5f64..0.98, beta in 0.0f64..0.4) {
            let f = rb_fit(&synthetic(p, alpha, beta), 1).unwrap();
            prop_assert!((f.p - p).abs() < 1e-3);
        }
    }
}
