// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pulse envelopes, channels and schedules.
//!
//! Time is measured in integer `dt` ticks. Pulse durations are multiples of
//! [`GRANULARITY`]; frame changes are virtual and take no time.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;
use thiserror::Error;

use crate::math::C64;

/// Hardware timing granularity in `dt`.
pub const GRANULARITY: u32 = 16;
/// Length of one `dt` in nanoseconds (reporting only).
pub const DT_NS: f64 = 0.22;

const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PulseError {
    #[error("amplitude {0} outside the allowed range")]
    Amplitude(f64),
    #[error("duration {0} dt is not a positive multiple of 16")]
    Duration(u32),
    #[error("sigma must be positive and finite, got {0}")]
    Sigma(f64),
    #[error("width {width} outside [0, {duration}]")]
    Width { width: f64, duration: u32 },
    #[error("flank region {0} dt too short to hold the gaussian area")]
    Flank(f64),
    #[error("time {t} outside pulse support [0, {duration}]")]
    Domain { t: f64, duration: u32 },
    #[error("raw duration {0} must be positive")]
    RawDuration(f64),
    #[error("non-finite parameter")]
    NonFinite,
}

/// Floors a raw duration to the 16-dt grid, never returning less than 16.
pub fn quantize_duration(raw: f64) -> Result<u32, PulseError> {
    if !raw.is_finite() || raw <= 0.0 {
        return Err(PulseError::RawDuration(raw));
    }
    let g = GRANULARITY as f64;
    let q = (raw / g).floor() * g;
    if q >= u32::MAX as f64 {
        return Err(PulseError::RawDuration(raw));
    }
    Ok((q as u32).max(GRANULARITY))
}

fn check_duration(d: u32) -> Result<(), PulseError> {
    if d == 0 || !d.is_multiple_of(GRANULARITY) {
        return Err(PulseError::Duration(d));
    }
    Ok(())
}

fn check_sigma(s: f64) -> Result<(), PulseError> {
    if !(s.is_finite() && s > 0.0) {
        return Err(PulseError::Sigma(s));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDrag")]
pub struct DragPulse {
    amp: f64,
    duration: u32,
    sigma: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawDrag {
    amp: f64,
    duration: u32,
    sigma: f64,
    #[serde(default)]
    beta: f64,
}

impl TryFrom<RawDrag> for DragPulse {
    type Error = PulseError;
    fn try_from(r: RawDrag) -> Result<Self, PulseError> {
        DragPulse::new(r.amp, r.duration, r.sigma, r.beta)
    }
}

impl DragPulse {
    pub fn new(amp: f64, duration: u32, sigma: f64, beta: f64) -> Result<Self, PulseError> {
        if !beta.is_finite() {
            return Err(PulseError::NonFinite);
        }
        if !(0.0..=1.0).contains(&amp) {
            return Err(PulseError::Amplitude(amp));
        }
        check_duration(duration)?;
        check_sigma(sigma)?;
        Ok(Self { amp, duration, sigma, beta })
    }

    pub fn amp(&self) -> f64 {
        self.amp
    }
    pub fn duration(&self) -> u32 {
        self.duration
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_amp(&self, amp: f64) -> Result<Self, PulseError> {
        Self::new(amp, self.duration, self.sigma, self.beta)
    }

    fn edge(&self) -> f64 {
        let half = self.duration as f64 / 2.0;
        (-half * half / (2.0 * self.sigma * self.sigma)).exp()
    }

    /// Integral of the real (in-phase) envelope over `[0, d]`.
    ///
    /// The derivative quadrature integrates to zero, so this is also the
    /// rotation-relevant area.
    pub fn area(&self) -> f64 {
        Self::unit_area(self.duration, self.sigma) * self.amp
    }

    /// Area of a unit-amplitude DRAG envelope with the given shape.
    pub fn unit_area(duration: u32, sigma: f64) -> f64 {
        let d = duration as f64;
        let g0 = (-d * d / (8.0 * sigma * sigma)).exp();
        let gauss = SQRT_2PI * sigma * erf(d / (2.0 * std::f64::consts::SQRT_2 * sigma));
        (gauss - d * g0) / (1.0 - g0)
    }

    pub fn envelope_at(&self, t: f64) -> Result<C64, PulseError> {
        let d = self.duration as f64;
        if !(0.0..=d).contains(&t) {
            return Err(PulseError::Domain { t, duration: self.duration });
        }
        let x = t - d / 2.0;
        let s2 = self.sigma * self.sigma;
        let g = (-x * x / (2.0 * s2)).exp();
        let g0 = self.edge();
        let re = self.amp * (g - g0) / (1.0 - g0);
        let dg = self.amp * (-x / s2) * g / (1.0 - g0);
        Ok(C64::new(re, self.beta * dg))
    }
}

/// Echo sign of a cross-resonance pulse: phase 0 or phase pi.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EchoSign {
    #[default]
    Plus,
    Minus,
}

impl EchoSign {
    pub fn factor(self) -> f64 {
        match self {
            EchoSign::Plus => 1.0,
            EchoSign::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            EchoSign::Plus => EchoSign::Minus,
            EchoSign::Minus => EchoSign::Plus,
        }
    }
}

/// Flat-top pulse with gaussian rise and fall.
///
/// The flat top of length `width` is centred; each flank is a gaussian
/// segment whose spread is chosen so that the total area equals
/// `|A| (w + sqrt(2 pi) sigma erf(n_sigma))` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGs")]
pub struct GaussianSquarePulse {
    amp: f64,
    #[serde(default)]
    sign: EchoSign,
    width: f64,
    duration: u32,
    sigma: f64,
}

#[derive(Deserialize)]
struct RawGs {
    amp: f64,
    #[serde(default)]
    sign: EchoSign,
    width: f64,
    duration: u32,
    sigma: f64,
}

impl TryFrom<RawGs> for GaussianSquarePulse {
    type Error = PulseError;
    fn try_from(r: RawGs) -> Result<Self, PulseError> {
        GaussianSquarePulse::new(r.amp, r.width, r.duration, r.sigma).map(|p| p.with_sign(r.sign))
    }
}

impl GaussianSquarePulse {
    pub fn new(amp: f64, width: f64, duration: u32, sigma: f64) -> Result<Self, PulseError> {
        if !(amp.is_finite() && amp > 0.0 && amp <= 1.0) {
            return Err(PulseError::Amplitude(amp));
        }
        check_duration(duration)?;
        check_sigma(sigma)?;
        let d = duration as f64;
        if !(width.is_finite() && (0.0..=d).contains(&width)) {
            return Err(PulseError::Width { width, duration });
        }
        let p = Self { amp, sign: EchoSign::Plus, width, duration, sigma };
        if width < d && p.gaussian_part() >= d - width {
            return Err(PulseError::Flank(d - width));
        }
        Ok(p)
    }

    pub fn with_sign(mut self, sign: EchoSign) -> Self {
        self.sign = sign;
        self
    }

    pub fn amp(&self) -> f64 {
        self.amp
    }
    pub fn sign(&self) -> EchoSign {
        self.sign
    }
    pub fn width(&self) -> f64 {
        self.width
    }
    pub fn duration(&self) -> u32 {
        self.duration
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `(d - w) / sigma`.
    pub fn n_sigma(&self) -> f64 {
        (self.duration as f64 - self.width) / self.sigma
    }

    fn gaussian_part(&self) -> f64 {
        gaussian_part(self.width, self.duration as f64, self.sigma)
    }

    /// Pulse area `F`; the echo sign is not included.
    pub fn area(&self) -> f64 {
        gs_area_formula(self.amp, self.width, self.duration as f64, self.sigma)
    }

    /// Area including the echo sign.
    pub fn signed_area(&self) -> f64 {
        self.sign.factor() * self.area()
    }

    /// Sampler for the envelope; solves for the flank spread once.
    pub fn shape(&self) -> GsShape {
        GsShape::new(self.sign.factor() * self.amp, self.width, self.duration as f64, self.sigma)
    }

    pub fn envelope_at(&self, t: f64) -> Result<C64, PulseError> {
        if !(0.0..=self.duration as f64).contains(&t) {
            return Err(PulseError::Domain { t, duration: self.duration });
        }
        Ok(C64::new(self.shape().at(t), 0.0))
    }
}

/// Flank area per unit amplitude: `sqrt(2 pi) sigma erf((d - w) / sigma)`.
fn gaussian_part(width: f64, duration: f64, sigma: f64) -> f64 {
    SQRT_2PI * sigma * erf((duration - width) / sigma)
}

/// `|A| (w + sqrt(2 pi) sigma erf(n_sigma))` with `n_sigma = (d - w) / sigma`.
///
/// Takes a real duration so off-grid shapes can be evaluated too.
pub fn gs_area_formula(amp: f64, width: f64, duration: f64, sigma: f64) -> f64 {
    amp.abs() * (width + gaussian_part(width, duration, sigma))
}

/// Time-domain flat-top envelope with a precomputed flank spread.
#[derive(Debug, Clone, Copy)]
pub struct GsShape {
    amp: f64,
    rise_end: f64,
    fall_start: f64,
    flank_sigma: f64,
}

impl GsShape {
    /// `amp` may be negative to encode the echo sign.
    pub fn new(amp: f64, width: f64, duration: f64, sigma: f64) -> Self {
        let r = (duration - width) / 2.0;
        let target = gaussian_part(width, duration, sigma);
        let flank = |s: f64| SQRT_2PI * s * erf(r / (std::f64::consts::SQRT_2 * s));
        // flank() grows monotonically from 0 towards 2r
        let flank_sigma = if r <= 0.0 {
            sigma
        } else {
            let (mut lo, mut hi) = (1e-9 * r, r);
            let mut guard = 0;
            while flank(hi) < target && guard < 200 {
                hi *= 2.0;
                guard += 1;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if flank(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        Self { amp, rise_end: r, fall_start: r + width, flank_sigma }
    }

    pub fn flank_sigma(&self) -> f64 {
        self.flank_sigma
    }

    pub fn at(&self, t: f64) -> f64 {
        let x = if t < self.rise_end {
            self.rise_end - t
        } else if t > self.fall_start {
            t - self.fall_start
        } else {
            return self.amp;
        };
        let s = self.flank_sigma;
        self.amp * (-x * x / (2.0 * s * s)).exp()
    }
}

/// Free-function form of [`GaussianSquarePulse::area`].
pub fn gs_area(p: &GaussianSquarePulse) -> f64 {
    p.area()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Channel {
    Drive { index: usize },
    Control { pair: [usize; 2] },
}

impl Channel {
    pub fn drive(q: usize) -> Self {
        Channel::Drive { index: q }
    }

    pub fn control(c: usize, t: usize) -> Self {
        Channel::Control { pair: [c, t] }
    }

    /// Qubits whose state the channel acts on.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Channel::Drive { index } => vec![index],
            Channel::Control { pair } => pair.to_vec(),
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Channel::Drive { index } => write!(f, "d{index}"),
            Channel::Control { pair } => write!(f, "u{}-{}", pair[0], pair[1]),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Op {
    Drag(DragPulse),
    Gs(GaussianSquarePulse),
    Fc { angle: f64 },
    Barrier,
}

impl Op {
    pub fn duration(&self) -> u32 {
        match self {
            Op::Drag(p) => p.duration(),
            Op::Gs(p) => p.duration(),
            Op::Fc { .. } | Op::Barrier => 0,
        }
    }

    pub fn is_physical(&self) -> bool {
        matches!(self, Op::Drag(_) | Op::Gs(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instruction {
    pub channel: Channel,
    pub t0: u64,
    #[serde(flatten)]
    pub op: Op,
}

impl Instruction {
    pub fn end(&self) -> u64 {
        self.t0 + self.op.duration() as u64
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("instructions overlap on channel {channel} at t={t}")]
    Overlap { channel: Channel, t: u64 },
    #[error("declared duration {declared} does not match computed {computed}")]
    DurationMismatch { declared: u64, computed: u64 },
    #[error("non-finite frame change angle")]
    Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMeta {
    pub dt_ns: f64,
}

impl Default for ScheduleMeta {
    fn default() -> Self {
        Self { dt_ns: DT_NS }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "RawSchedule")]
pub struct Schedule {
    channels: Vec<Channel>,
    instructions: Vec<Instruction>,
    duration: u64,
    #[serde(default)]
    metadata: ScheduleMeta,
}

#[derive(Deserialize)]
struct RawSchedule {
    #[serde(default)]
    channels: Vec<Channel>,
    instructions: Vec<Instruction>,
    duration: Option<u64>,
}

impl TryFrom<RawSchedule> for Schedule {
    type Error = ScheduleError;
    fn try_from(r: RawSchedule) -> Result<Self, ScheduleError> {
        let mut s = Schedule::new(r.instructions)?;
        for c in r.channels {
            if !s.channels.contains(&c) {
                s.channels.push(c);
            }
        }
        s.channels.sort();
        if let Some(declared) = r.duration {
            if declared != s.duration {
                return Err(ScheduleError::DurationMismatch { declared, computed: s.duration });
            }
        }
        Ok(s)
    }
}

impl Schedule {
    /// Builds a schedule from explicitly timed instructions.
    pub fn new(instructions: Vec<Instruction>) -> Result<Self, ScheduleError> {
        let mut by_channel: Vec<(Channel, u64, u64)> = instructions
            .iter()
            .filter(|i| i.op.is_physical())
            .map(|i| (i.channel, i.t0, i.end()))
            .collect();
        by_channel.sort_by_key(|&(c, t0, _)| (c, t0));
        for w in by_channel.windows(2) {
            if w[0].0 == w[1].0 && w[1].1 < w[0].2 {
                return Err(ScheduleError::Overlap { channel: w[1].0, t: w[1].1 });
            }
        }
        if instructions
            .iter()
            .any(|i| matches!(i.op, Op::Fc { angle } if !angle.is_finite()))
        {
            return Err(ScheduleError::Angle);
        }
        let channels: BTreeSet<Channel> = instructions.iter().map(|i| i.channel).collect();
        let duration = instructions.iter().map(Instruction::end).max().unwrap_or(0);
        Ok(Self {
            channels: channels.into_iter().collect(),
            instructions,
            duration,
            metadata: ScheduleMeta::default(),
        })
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn duration(&self) -> u64 {
        self.duration
    }

    /// Number of non-virtual pulses.
    pub fn pulse_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.op.is_physical()).count()
    }

    /// Instructions sorted by start time, ties broken by insertion order.
    pub fn in_time_order(&self) -> Vec<&Instruction> {
        let mut v: Vec<(usize, &Instruction)> = self.instructions.iter().enumerate().collect();
        v.sort_by_key(|&(i, ins)| (ins.t0, i));
        v.into_iter().map(|(_, ins)| ins).collect()
    }

    /// All qubits touched by any channel.
    pub fn qubits(&self) -> BTreeSet<usize> {
        self.channels.iter().flat_map(Channel::qubits).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }
}

/// Total wall duration of a schedule in `dt`.
pub fn schedule_duration(s: &Schedule) -> u64 {
    s.duration()
}

/// As-soon-as-possible placement of pulses by qubit availability.
#[derive(Debug, Clone, Default)]
pub struct ScheduleBuilder {
    ready: Vec<u64>,
    instructions: Vec<Instruction>,
}

impl ScheduleBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn ready(&mut self, q: usize) -> u64 {
        if q >= self.ready.len() {
            self.ready.resize(q + 1, 0);
        }
        self.ready[q]
    }

    fn set_ready(&mut self, q: usize, t: u64) {
        self.ready(q);
        self.ready[q] = t;
    }

    pub fn drag(&mut self, q: usize, p: DragPulse) -> &mut Self {
        let t0 = self.ready(q);
        self.set_ready(q, t0 + p.duration() as u64);
        self.instructions.push(Instruction { channel: Channel::drive(q), t0, op: Op::Drag(p) });
        self
    }

    /// Plays a cross-resonance pulse on the control channel `(c, t)`,
    /// reserving both qubits for its duration.
    pub fn cr(&mut self, c: usize, t: usize, p: GaussianSquarePulse) -> &mut Self {
        let t0 = self.ready(c).max(self.ready(t));
        let end = t0 + p.duration() as u64;
        self.set_ready(c, end);
        self.set_ready(t, end);
        self.instructions.push(Instruction { channel: Channel::control(c, t), t0, op: Op::Gs(p) });
        self
    }

    pub fn frame_change(&mut self, q: usize, angle: f64) -> &mut Self {
        let t0 = self.ready(q);
        self.instructions.push(Instruction { channel: Channel::drive(q), t0, op: Op::Fc { angle } });
        self
    }

    /// Aligns the given qubits to their latest ready time.
    pub fn barrier(&mut self, qubits: &[usize]) -> &mut Self {
        let t = qubits.iter().map(|&q| self.ready(q)).max().unwrap_or(0);
        for &q in qubits {
            self.set_ready(q, t);
        }
        self
    }

    pub fn current_time(&mut self, q: usize) -> u64 {
        self.ready(q)
    }

    pub fn build(self) -> Schedule {
        Schedule::new(self.instructions).expect("builder never overlaps")
    }
}
