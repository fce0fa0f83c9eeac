// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Simulated transmon backend.
//!
//! Pulses act through their area only: a drive pulse of area `a` on qubit
//! `q` is `Rx(pi * g_q * a / REF_q)` and a cross-resonance pulse of area `a`
//! is `Rzx(±(pi/4) * h * a / CREF)`, where `REF_q` and `CREF` are the areas
//! of the vendor pulses. Frame changes are exact `Rz` rotations. Gains drift
//! as Ornstein-Uhlenbeck processes around 1.

pub mod backend;
pub mod presets;

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_4, PI};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use backend::{Backend, BackendError, SimBackend};

use crate::circuit::{kind_unitary, GateKind};
use crate::math::{self, Matrix, C64, ONE, ZERO};
use crate::pulse::{Channel, DragPulse, GaussianSquarePulse, Op, PulseError, Schedule};
use crate::target::{BackendProperties, CrProperties, QubitProperties, Readout};

/// Most schedules accepted in one job.
pub const BATCH_LIMIT: usize = 100;
/// Most qubits a single experiment may touch.
pub const MAX_ACTIVE_QUBITS: usize = 12;
const MAX_MIXED_QUBITS: usize = 7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DeviceError {
    #[error("channel {0} does not exist on this device")]
    UnknownChannel(Channel),
    #[error("job holds {got} schedules, limit is {limit}")]
    BatchLimit { got: usize, limit: usize },
    #[error("shots must be positive")]
    Shots,
    #[error("experiment touches {0} qubits, more than the simulator supports")]
    TooManyQubits(usize),
    #[error("invalid device configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Pulse(#[from] PulseError),
}

fn d_160() -> u32 {
    160
}
fn d_sigma() -> f64 {
    40.0
}
fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitConfig {
    /// Amplitude of the vendor `X` pulse, which is exact at gain 1.
    pub x_amp: f64,
    #[serde(default = "d_160")]
    pub x_duration: u32,
    #[serde(default = "d_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub beta: f64,
    /// `[P(1|0), P(0|1)]`.
    #[serde(default)]
    pub readout: [f64; 2],
    /// Initial drive gain.
    #[serde(default = "one")]
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairConfig {
    pub control: usize,
    pub target: usize,
    /// Vendor `CR(pi/4)` pulse parameters, exact at gain 1.
    pub amp: f64,
    pub width: f64,
    pub duration: u32,
    pub sigma: f64,
    #[serde(default = "one")]
    pub gain: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DriftConfig {
    /// Stationary standard deviation of each gain.
    pub sigma: f64,
    pub reversion_time_s: f64,
    pub step_s: f64,
    /// Whether CR gains drift too.
    pub drift_cr: bool,
    /// Draw initial drive gains from the stationary distribution.
    pub stationary_start: bool,
}

impl Default for DriftConfig {
    fn default() -> Self {
        Self {
            sigma: 0.01,
            reversion_time_s: 12.0 * 3600.0,
            step_s: 60.0,
            drift_cr: false,
            stationary_start: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Multinomial draws from the outcome distribution.
    #[default]
    Multinomial,
    /// Deterministic counts by largest remainder.
    Expected,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceConfig {
    pub name: String,
    pub qubits: Vec<QubitConfig>,
    #[serde(default)]
    pub pairs: Vec<PairConfig>,
    /// Depolarizing rate per `dt` of pulse activity on a qubit.
    #[serde(default)]
    pub depolarizing_rate: f64,
    #[serde(default)]
    pub drift: DriftConfig,
    #[serde(default)]
    pub seed: u64,
    /// Simulated seconds added to the clock per submitted job.
    #[serde(default)]
    pub queue_delay_s: f64,
    #[serde(default)]
    pub sampling: SamplingMode,
}

impl DeviceConfig {
    pub fn validate(&self) -> Result<(), DeviceError> {
        let bad = |m: String| Err(DeviceError::Config(m));
        if self.qubits.is_empty() {
            return bad("device needs at least one qubit".into());
        }
        for (i, q) in self.qubits.iter().enumerate() {
            DragPulse::new(q.x_amp, q.x_duration, q.sigma, q.beta)?;
            if q.x_amp <= 0.0 {
                return bad(format!("qubit {i}: x_amp must be positive"));
            }
            if q.readout.iter().any(|p| !(0.0..0.5).contains(p)) {
                return bad(format!("qubit {i}: readout errors must lie in [0, 0.5)"));
            }
            if !(q.gain > 0.0 && q.gain.is_finite()) {
                return bad(format!("qubit {i}: gain must be positive"));
            }
        }
        for p in &self.pairs {
            if p.control >= self.qubits.len() || p.target >= self.qubits.len() || p.control == p.target {
                return bad(format!("pair ({}, {}) references invalid qubits", p.control, p.target));
            }
            GaussianSquarePulse::new(p.amp, p.width, p.duration, p.sigma)?;
            if !(p.gain > 0.0 && p.gain.is_finite()) {
                return bad(format!("pair ({}, {}): gain must be positive", p.control, p.target));
            }
        }
        if !(self.depolarizing_rate >= 0.0 && self.depolarizing_rate.is_finite()) {
            return bad("depolarizing_rate must be >= 0".into());
        }
        let d = &self.drift;
        if !(d.sigma >= 0.0 && d.reversion_time_s > 0.0 && d.step_s > 0.0) {
            return bad("drift needs sigma >= 0 and positive time constants".into());
        }
        if !(self.queue_delay_s >= 0.0) {
            return bad("queue_delay_s must be >= 0".into());
        }
        Ok(())
    }

    pub fn x_pulse(&self, q: usize) -> DragPulse {
        let c = &self.qubits[q];
        DragPulse::new(c.x_amp, c.x_duration, c.sigma, c.beta).expect("validated")
    }

    pub fn cr_pulse(&self, pair: &PairConfig) -> GaussianSquarePulse {
        GaussianSquarePulse::new(pair.amp, pair.width, pair.duration, pair.sigma).expect("validated")
    }

    /// What the vendor would publish about this device.
    pub fn properties(&self) -> BackendProperties {
        BackendProperties {
            name: self.name.clone(),
            qubits: (0..self.qubits.len())
                .map(|q| QubitProperties {
                    x_pulse: self.x_pulse(q),
                    readout: Readout::new(self.qubits[q].readout[0], self.qubits[q].readout[1]),
                })
                .collect(),
            cr: self
                .pairs
                .iter()
                .map(|p| CrProperties { control: p.control, target: p.target, pulse: self.cr_pulse(p) })
                .collect(),
            dt_ns: crate::pulse::DT_NS,
        }
    }

    pub fn from_json(s: &str) -> Result<Self, DeviceError> {
        let cfg: DeviceConfig =
            serde_json::from_str(s).map_err(|e| DeviceError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// A schedule plus the physical qubits to read out, in bit order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub schedule: Schedule,
    pub measured: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRequest {
    pub experiments: Vec<Experiment>,
    pub shots: u64,
}

/// Bitstring counts; the rightmost character is the first measured qubit.
pub type Counts = BTreeMap<String, u64>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobResult {
    pub counts: Vec<Counts>,
    /// Simulated clock when the job finished.
    pub completed_at: f64,
    /// Position of the job in the backend's execution order.
    pub sequence: u64,
}

/// Quantum state over a list of active physical qubits.
#[derive(Debug, Clone)]
pub enum SimState {
    Pure { qubits: Vec<usize>, amps: Vec<C64> },
    Mixed { qubits: Vec<usize>, rho: Matrix },
}

impl SimState {
    fn zero(qubits: Vec<usize>, mixed: bool) -> Self {
        let dim = 1usize << qubits.len();
        if mixed {
            let mut rho = Matrix::zeros(dim, dim);
            rho[(0, 0)] = ONE;
            SimState::Mixed { qubits, rho }
        } else {
            let mut amps = vec![ZERO; dim];
            amps[0] = ONE;
            SimState::Pure { qubits, amps }
        }
    }

    pub fn qubits(&self) -> &[usize] {
        match self {
            SimState::Pure { qubits, .. } | SimState::Mixed { qubits, .. } => qubits,
        }
    }

    fn local(&self, q: usize) -> usize {
        self.qubits().iter().position(|&x| x == q).expect("qubit is active")
    }

    fn apply(&mut self, gate: &Matrix, phys: &[usize]) {
        let local: Vec<usize> = phys.iter().map(|&q| self.local(q)).collect();
        match self {
            SimState::Pure { amps, .. } => math::apply_gate(amps, gate, &local),
            SimState::Mixed { rho, .. } => math::conjugate_density(rho, gate, &local),
        }
    }

    fn depolarize(&mut self, q: usize, p: f64) {
        if p <= 0.0 {
            return;
        }
        let l = self.local(q);
        if let SimState::Mixed { rho, .. } = self {
            let mut acc = rho.map(|z| z * (1.0 - 0.75 * p));
            for pauli in [math::pauli_x(), math::pauli_y(), math::pauli_z()] {
                let mut term = rho.clone();
                math::conjugate_density(&mut term, &pauli, &[l]);
                acc += term.map(|z| z * (0.25 * p));
            }
            *rho = acc;
        }
    }

    /// Born probabilities marginalised onto `measured`.
    pub fn probabilities(&self, measured: &[usize]) -> Vec<f64> {
        let full: Vec<f64> = match self {
            SimState::Pure { amps, .. } => amps.iter().map(|a| a.norm_sqr()).collect(),
            SimState::Mixed { rho, .. } => (0..rho.nrows()).map(|i| rho[(i, i)].re.max(0.0)).collect(),
        };
        let bits: Vec<usize> = measured.iter().map(|&q| self.local(q)).collect();
        let mut out = vec![0.0; 1usize << measured.len()];
        for (i, p) in full.iter().enumerate() {
            let k = bits.iter().enumerate().fold(0, |acc, (j, &b)| acc | ((i >> b & 1) << j));
            out[k] += p;
        }
        out
    }

    pub fn statevector(&self) -> Option<&[C64]> {
        match self {
            SimState::Pure { amps, .. } => Some(amps),
            SimState::Mixed { .. } => None,
        }
    }
}

/// Applies per-qubit readout confusion to an outcome distribution.
pub fn apply_confusion(probs: &[f64], readout: &[Readout]) -> Vec<f64> {
    let mut p = probs.to_vec();
    for (bit, r) in readout.iter().enumerate() {
        let mask = 1usize << bit;
        for i in 0..p.len() {
            if i & mask != 0 {
                continue;
            }
            let (p0, p1) = (p[i], p[i | mask]);
            p[i] = (1.0 - r.p1_given0) * p0 + r.p0_given1 * p1;
            p[i | mask] = r.p1_given0 * p0 + (1.0 - r.p0_given1) * p1;
        }
    }
    p
}

pub fn bitstring(outcome: usize, width: usize) -> String {
    if width == 0 {
        return String::new();
    }
    format!("{outcome:0width$b}")
}

/// Draws `shots` outcomes from `probs`.
pub fn sample_counts(
    probs: &[f64],
    width: usize,
    shots: u64,
    mode: SamplingMode,
    rng: &mut ChaCha8Rng,
) -> Counts {
    let total: f64 = probs.iter().sum();
    let norm: Vec<f64> = probs.iter().map(|p| (p / total).clamp(0.0, 1.0)).collect();
    let mut n = vec![0u64; norm.len()];
    match mode {
        SamplingMode::Multinomial => {
            let mut left = shots;
            let mut mass = 1.0;
            for (i, &p) in norm.iter().enumerate() {
                if left == 0 {
                    break;
                }
                if i == norm.len() - 1 || mass <= 0.0 {
                    n[i] = left;
                    break;
                }
                let q = (p / mass).clamp(0.0, 1.0);
                let k = Binomial::new(left, q).expect("valid binomial").sample(rng);
                n[i] = k;
                left -= k;
                mass -= p;
            }
        }
        SamplingMode::Expected => {
            let exact: Vec<f64> = norm.iter().map(|p| p * shots as f64).collect();
            let mut assigned = 0u64;
            for (slot, e) in n.iter_mut().zip(&exact) {
                *slot = e.floor() as u64;
                assigned += *slot;
            }
            let mut order: Vec<usize> = (0..exact.len()).collect();
            order.sort_by(|&a, &b| {
                let (ra, rb) = (exact[a] - exact[a].floor(), exact[b] - exact[b].floor());
                rb.total_cmp(&ra).then(a.cmp(&b))
            });
            for &i in order.iter().take(shots.saturating_sub(assigned) as usize) {
                n[i] += 1;
            }
        }
    }
    n.iter()
        .enumerate()
        .filter(|(_, &k)| k > 0)
        .map(|(i, &k)| (bitstring(i, width), k))
        .collect()
}

/// Converts counts back into a probability vector indexed by outcome.
pub fn counts_to_probs(counts: &Counts, width: usize) -> Vec<f64> {
    let total: u64 = counts.values().sum();
    let mut p = vec![0.0; 1usize << width];
    for (k, v) in counts {
        let idx = if width == 0 { 0 } else { usize::from_str_radix(k, 2).unwrap_or(0) };
        p[idx] += *v as f64 / total.max(1) as f64;
    }
    p
}

/// Simulated device: static configuration plus drifting state.
#[derive(Debug, Clone)]
pub struct DeviceModel {
    config: DeviceConfig,
    gains: Vec<f64>,
    cr_gains: Vec<f64>,
    ref_areas: Vec<f64>,
    cref_areas: Vec<f64>,
    clock: f64,
    sequence: u64,
    rng: ChaCha8Rng,
}

impl DeviceModel {
    pub fn new(config: DeviceConfig) -> Result<Self, DeviceError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut gains: Vec<f64> = config.qubits.iter().map(|q| q.gain).collect();
        if config.drift.stationary_start && config.drift.sigma > 0.0 {
            for g in gains.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut rng);
                *g = (1.0 + config.drift.sigma * z).max(1e-3);
            }
        }
        let cr_gains = config.pairs.iter().map(|p| p.gain).collect();
        let ref_areas = (0..config.qubits.len()).map(|q| config.x_pulse(q).area()).collect();
        let cref_areas = config.pairs.iter().map(|p| config.cr_pulse(p).area()).collect();
        Ok(Self { config, gains, cr_gains, ref_areas, cref_areas, clock: 0.0, sequence: 0, rng })
    }

    pub fn config(&self) -> &DeviceConfig {
        &self.config
    }

    pub fn properties(&self) -> BackendProperties {
        self.config.properties()
    }

    pub fn n_qubits(&self) -> usize {
        self.config.qubits.len()
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn gain(&self, q: usize) -> f64 {
        self.gains[q]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn set_gain(&mut self, q: usize, g: f64) {
        self.gains[q] = g;
    }

    fn pair_index(&self, c: usize, t: usize) -> Option<usize> {
        self.config.pairs.iter().position(|p| p.control == c && p.target == t)
    }

    pub fn cr_gain(&self, c: usize, t: usize) -> Option<f64> {
        self.pair_index(c, t).map(|i| self.cr_gains[i])
    }

    pub fn set_cr_gain(&mut self, c: usize, t: usize, h: f64) {
        if let Some(i) = self.pair_index(c, t) {
            self.cr_gains[i] = h;
        }
    }

    /// Reference area giving an exact `pi` rotation at gain 1.
    pub fn ref_area(&self, q: usize) -> f64 {
        self.ref_areas[q]
    }

    /// Reference area giving an exact `Rzx(pi/4)` at gain 1.
    pub fn cref_area(&self, c: usize, t: usize) -> Option<f64> {
        self.pair_index(c, t).map(|i| self.cref_areas[i])
    }

    fn ou_step(&mut self, dt: f64) {
        let d = self.config.drift;
        let decay = (-dt / d.reversion_time_s).exp();
        let kick = d.sigma * (1.0 - decay * decay).sqrt();
        for g in self.gains.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut self.rng);
            *g = (1.0 + (*g - 1.0) * decay + kick * z).max(1e-3);
        }
        if d.drift_cr {
            for h in self.cr_gains.iter_mut() {
                let z: f64 = StandardNormal.sample(&mut self.rng);
                *h = (1.0 + (*h - 1.0) * decay + kick * z).max(1e-3);
            }
        }
    }

    /// Moves the simulated clock forward, drifting gains in fixed steps.
    pub fn advance_time(&mut self, dt: f64) {
        if !(dt > 0.0) {
            return;
        }
        if self.config.drift.sigma > 0.0 {
            let step = self.config.drift.step_s;
            // step boundaries are anchored to absolute time
            let mut t = self.clock;
            let end = self.clock + dt;
            loop {
                let next = ((t / step).floor() + 1.0) * step;
                if next > end {
                    break;
                }
                self.ou_step(step);
                t = next;
            }
        }
        self.clock += dt;
    }

    fn active_qubits(&self, s: &Schedule, measured: &[usize]) -> Result<Vec<usize>, DeviceError> {
        let mut qs = s.qubits();
        qs.extend(measured.iter().copied());
        if let Some(&q) = qs.iter().find(|&&q| q >= self.n_qubits()) {
            return Err(DeviceError::UnknownChannel(Channel::drive(q)));
        }
        if qs.len() > MAX_ACTIVE_QUBITS {
            return Err(DeviceError::TooManyQubits(qs.len()));
        }
        Ok(qs.into_iter().collect())
    }

    /// Unitary of one instruction, or `None` for barriers.
    fn op_unitary(&self, channel: Channel, op: &Op) -> Result<Option<(Matrix, Vec<usize>)>, DeviceError> {
        let u = match (channel, op) {
            (_, Op::Barrier) => return Ok(None),
            (Channel::Drive { index }, Op::Drag(p)) if index < self.n_qubits() => {
                let angle = PI * self.gains[index] * p.area() / self.ref_areas[index];
                (kind_unitary(GateKind::Rx(angle)).expect("rx"), vec![index])
            }
            (Channel::Drive { index }, Op::Fc { angle }) if index < self.n_qubits() => {
                (kind_unitary(GateKind::Rz(*angle)).expect("rz"), vec![index])
            }
            (Channel::Control { pair }, Op::Gs(p)) => {
                let i = self.pair_index(pair[0], pair[1]).ok_or(DeviceError::UnknownChannel(channel))?;
                let angle = FRAC_PI_4 * self.cr_gains[i] * p.signed_area() / self.cref_areas[i];
                (kind_unitary(GateKind::Rzx(angle)).expect("rzx"), pair.to_vec())
            }
            _ => return Err(DeviceError::UnknownChannel(channel)),
        };
        Ok(Some(u))
    }

    /// Runs a schedule from `|0...0>` over the given active qubits.
    fn run(&self, s: &Schedule, qubits: Vec<usize>, noiseless: bool) -> Result<SimState, DeviceError> {
        let rate = self.config.depolarizing_rate;
        let mixed = !noiseless && rate > 0.0;
        if mixed && qubits.len() > MAX_MIXED_QUBITS {
            return Err(DeviceError::TooManyQubits(qubits.len()));
        }
        let mut state = SimState::zero(qubits, mixed);
        for ins in s.in_time_order() {
            if let Some((u, qs)) = self.op_unitary(ins.channel, &ins.op)? {
                state.apply(&u, &qs);
                if mixed && ins.op.is_physical() {
                    let p = 1.0 - (-rate * ins.op.duration() as f64).exp();
                    for q in qs {
                        state.depolarize(q, p);
                    }
                }
            }
        }
        Ok(state)
    }

    /// Final state of a schedule; noisy runs use a density matrix.
    pub fn evolve(&self, s: &Schedule, measured: &[usize], noiseless: bool) -> Result<SimState, DeviceError> {
        let qubits = self.active_qubits(s, measured)?;
        self.run(s, qubits, noiseless)
    }

    /// Outcome distribution over `measured`, including readout confusion
    /// unless `noiseless`.
    pub fn distribution(&self, s: &Schedule, measured: &[usize], noiseless: bool) -> Result<Vec<f64>, DeviceError> {
        let probs = self.evolve(s, measured, noiseless)?.probabilities(measured);
        if noiseless {
            return Ok(probs);
        }
        let readout: Vec<Readout> = measured
            .iter()
            .map(|&q| Readout::new(self.config.qubits[q].readout[0], self.config.qubits[q].readout[1]))
            .collect();
        Ok(apply_confusion(&probs, &readout))
    }

    /// Noiseless unitary of a schedule over `qubits` (operand 0 is bit 0).
    pub fn schedule_unitary(&self, s: &Schedule, qubits: &[usize]) -> Result<Matrix, DeviceError> {
        if let Some(q) = s.qubits().into_iter().find(|q| !qubits.contains(q)) {
            return Err(DeviceError::UnknownChannel(Channel::drive(q)));
        }
        let dim = 1usize << qubits.len();
        let mut out = Matrix::zeros(dim, dim);
        let steps: Vec<(Matrix, Vec<usize>)> = s
            .in_time_order()
            .into_iter()
            .filter_map(|ins| self.op_unitary(ins.channel, &ins.op).transpose())
            .collect::<Result<_, _>>()?;
        for col in 0..dim {
            let mut v = vec![ZERO; dim];
            v[col] = ONE;
            for (u, qs) in &steps {
                let local: Vec<usize> =
                    qs.iter().map(|q| qubits.iter().position(|x| x == q).expect("covered")).collect();
                math::apply_gate(&mut v, u, &local);
            }
            out.set_column(col, &nalgebra::DVector::from_vec(v));
        }
        Ok(out)
    }

    /// Executes a job: every schedule from `|0...0>`, then sampling.
    pub fn submit(&mut self, job: &JobRequest) -> Result<JobResult, DeviceError> {
        if job.experiments.len() > BATCH_LIMIT {
            return Err(DeviceError::BatchLimit { got: job.experiments.len(), limit: BATCH_LIMIT });
        }
        if job.shots == 0 {
            return Err(DeviceError::Shots);
        }
        let dists: Vec<Vec<f64>> = job
            .experiments
            .iter()
            .map(|e| self.distribution(&e.schedule, &e.measured, false))
            .collect::<Result<_, _>>()?;
        let mode = self.config.sampling;
        let counts = dists
            .iter()
            .zip(&job.experiments)
            .map(|(p, e)| sample_counts(p, e.measured.len(), job.shots, mode, &mut self.rng))
            .collect();
        self.advance_time(self.config.queue_delay_s);
        self.sequence += 1;
        Ok(JobResult { counts, completed_at: self.clock, sequence: self.sequence })
    }
}
