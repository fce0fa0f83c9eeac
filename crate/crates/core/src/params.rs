// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Calibrated pulse parameters as stored by the query server and consumed
//! by the transpiler.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::calibrate::{amplitude_for_theta, scale_cr, CalibError, SinFit};
use crate::pulse::{DragPulse, GaussianSquarePulse, GRANULARITY};
use crate::target::BackendProperties;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    Rx,
    Zx,
}

impl fmt::Display for ParamKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ParamKind::Rx => "rx",
            ParamKind::Zx => "zx",
        })
    }
}

impl FromStr for ParamKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "rx" => Ok(ParamKind::Rx),
            "zx" => Ok(ParamKind::Zx),
            _ => Err(format!("unknown parameter kind '{s}'")),
        }
    }
}

/// A qubit (`"3"`) or an ordered pair (`"0-1"`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKey {
    Qubit(usize),
    Pair(usize, usize),
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamKey::Qubit(q) => write!(f, "{q}"),
            ParamKey::Pair(c, t) => write!(f, "{c}-{t}"),
        }
    }
}

impl FromStr for ParamKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("malformed key '{s}'");
        match s.split_once('-') {
            None => s.parse().map(ParamKey::Qubit).map_err(|_| bad()),
            Some((a, b)) => {
                let (c, t) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
                if c == t {
                    return Err(bad());
                }
                Ok(ParamKey::Pair(c, t))
            }
        }
    }
}

impl Serialize for ParamKey {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ParamKey {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Calibrated single-qubit rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RxEntry {
    /// Amplitude of the fastest `pi` rotation.
    pub a0: f64,
    pub t0: u32,
    pub sigma: f64,
    #[serde(default)]
    pub beta: f64,
    pub fit: SinFit,
    /// Seconds on the device clock.
    pub timestamp: f64,
}

impl RxEntry {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.a0 > 0.0 && self.a0 <= 1.0) {
            return Err(format!("a0 {} outside (0, 1]", self.a0));
        }
        DragPulse::new(self.a0, self.t0, self.sigma, self.beta).map_err(|e| e.to_string())?;
        if !self.fit.is_valid() {
            return Err("fit needs finite parameters with a1 > 0 and omega > 0".into());
        }
        if !self.timestamp.is_finite() {
            return Err("timestamp must be finite".into());
        }
        Ok(())
    }

    /// Pulse for `Rx(theta)`, `theta` in `[0, pi]`; `None` when the
    /// inverted amplitude is zero.
    pub fn pulse_for(&self, theta: f64) -> Result<Option<DragPulse>, CalibError> {
        let amp = amplitude_for_theta(&self.fit, theta)?;
        if amp == 0.0 {
            return Ok(None);
        }
        Ok(Some(DragPulse::new(amp, self.t0, self.sigma, self.beta)?))
    }
}

/// Best `(c, k)` for a pair, with the vendor pulse it scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZxEntry {
    pub c: f64,
    pub k: f64,
    pub base: GaussianSquarePulse,
    #[serde(default)]
    pub score: f64,
    pub timestamp: f64,
}

impl ZxEntry {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.c >= 1.0 && self.k > 0.0 && self.timestamp.is_finite()) {
            return Err("need c >= 1, k > 0 and a finite timestamp".into());
        }
        self.pulse().map(|_| ()).map_err(|e| e.to_string())
    }

    /// The calibrated `CR(pi/4)` pulse.
    pub fn pulse(&self) -> Result<GaussianSquarePulse, CalibError> {
        scale_cr(&self.base, self.c, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamPayload {
    Rx(RxEntry),
    Zx(ZxEntry),
}

impl ParamPayload {
    pub fn kind(&self) -> ParamKind {
        match self {
            ParamPayload::Rx(_) => ParamKind::Rx,
            ParamPayload::Zx(_) => ParamKind::Zx,
        }
    }

    /// Parses a payload of a known kind and checks it.
    pub fn parse(kind: ParamKind, json: &str) -> Result<Self, String> {
        let p = match kind {
            ParamKind::Rx => ParamPayload::Rx(serde_json::from_str(json).map_err(|e| e.to_string())?),
            ParamKind::Zx => ParamPayload::Zx(serde_json::from_str(json).map_err(|e| e.to_string())?),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            ParamPayload::Rx(e) => e.validate(),
            ParamPayload::Zx(e) => e.validate(),
        }
    }

    /// Checks that the key shape matches the kind.
    pub fn fits_key(&self, key: ParamKey) -> bool {
        matches!((self, key), (ParamPayload::Rx(_), ParamKey::Qubit(_)) | (ParamPayload::Zx(_), ParamKey::Pair(..)))
    }
}

/// One stored parameter set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamRecord {
    pub kind: ParamKind,
    pub key: ParamKey,
    pub version: u64,
    pub payload: ParamPayload,
}

/// Everything the transpiler needs from calibration.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(into = "LibraryFile", try_from = "LibraryFile")]
pub struct PulseLibrary {
    pub rx: BTreeMap<usize, RxEntry>,
    pub zx: BTreeMap<(usize, usize), ZxEntry>,
}

#[derive(Serialize, Deserialize)]
struct RxItem {
    qubit: usize,
    #[serde(flatten)]
    entry: RxEntry,
}

#[derive(Serialize, Deserialize)]
struct ZxItem {
    control: usize,
    target: usize,
    #[serde(flatten)]
    entry: ZxEntry,
}

#[derive(Serialize, Deserialize)]
struct LibraryFile {
    #[serde(default)]
    rx: Vec<RxItem>,
    #[serde(default)]
    zx: Vec<ZxItem>,
}

impl From<PulseLibrary> for LibraryFile {
    fn from(l: PulseLibrary) -> Self {
        LibraryFile {
            rx: l.rx.into_iter().map(|(qubit, entry)| RxItem { qubit, entry }).collect(),
            zx: l.zx.into_iter().map(|((control, target), entry)| ZxItem { control, target, entry }).collect(),
        }
    }
}

impl TryFrom<LibraryFile> for PulseLibrary {
    type Error = String;
    fn try_from(f: LibraryFile) -> Result<Self, String> {
        let mut lib = PulseLibrary::default();
        for item in f.rx {
            item.entry.validate()?;
            lib.rx.insert(item.qubit, item.entry);
        }
        for item in f.zx {
            item.entry.validate()?;
            lib.zx.insert((item.control, item.target), item.entry);
        }
        Ok(lib)
    }
}

/// Fastest grid duration for which the ideal `pi` amplitude fits in `[0, 1]`,
/// with that amplitude. `sigma` is a quarter of the duration.
fn fastest_ideal(x: &DragPulse) -> Option<(u32, f64)> {
    (64..=160).step_by(GRANULARITY as usize).find_map(|t| {
        let a0 = x.area() / DragPulse::unit_area(t, t as f64 / 4.0);
        (a0 <= 1.0).then_some((t, a0))
    })
}

impl PulseLibrary {
    pub fn is_empty(&self) -> bool {
        self.rx.is_empty() && self.zx.is_empty()
    }

    pub fn len(&self) -> usize {
        self.rx.len() + self.zx.len()
    }

    pub fn rx(&self, q: usize) -> Option<&RxEntry> {
        self.rx.get(&q)
    }

    pub fn zx(&self, c: usize, t: usize) -> Option<&ZxEntry> {
        self.zx.get(&(c, t))
    }

    pub fn insert(&mut self, key: ParamKey, payload: ParamPayload) -> Result<(), String> {
        match (key, payload) {
            (ParamKey::Qubit(q), ParamPayload::Rx(e)) => {
                self.rx.insert(q, e);
            }
            (ParamKey::Pair(c, t), ParamPayload::Zx(e)) => {
                self.zx.insert((c, t), e);
            }
            (k, p) => return Err(format!("{} payload does not fit key {k}", p.kind())),
        }
        Ok(())
    }

    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a ParamRecord>) -> Self {
        let mut lib = PulseLibrary::default();
        for r in records {
            let _ = lib.insert(r.key, r.payload);
        }
        lib
    }

    /// Library an oracle would produce for `props` at gain 1: exact sin²
    /// curves at the fastest feasible duration and `(c, k)` whose scaled
    /// pulse has exactly the vendor area. Pairs where `c` cannot be applied
    /// fall back to `c = 1`.
    pub fn ideal(props: &BackendProperties, c: f64) -> Self {
        let mut lib = PulseLibrary::default();
        for (q, qp) in props.qubits.iter().enumerate() {
            if let Some((t0, a0)) = fastest_ideal(&qp.x_pulse) {
                lib.rx.insert(q, Self::ideal_rx(&qp.x_pulse, t0, a0));
            }
        }
        for cr in &props.cr {
            let entry = [c, 1.0].into_iter().find_map(|c| {
                let unit = scale_cr(&cr.pulse, c, 1.0).ok()?;
                let e = ZxEntry { c, k: cr.pulse.area() / unit.area(), base: cr.pulse, score: 1.0, timestamp: 0.0 };
                e.pulse().ok().map(|_| e)
            });
            if let Some(e) = entry {
                lib.zx.insert((cr.control, cr.target), e);
            }
        }
        lib
    }

    fn ideal_rx(x: &DragPulse, t0: u32, a0: f64) -> RxEntry {
        RxEntry { a0, t0, sigma: t0 as f64 / 4.0, beta: x.beta(), fit: SinFit::ideal(a0), timestamp: 0.0 }
    }

    /// Ideal entries at fixed per-qubit durations, e.g. from a published
    /// table. Fails for a qubit whose vendor pulse cannot be compressed that
    /// far.
    pub fn with_durations(props: &BackendProperties, durations: &[u32]) -> Result<Self, String> {
        let mut lib = PulseLibrary::default();
        for (q, &t0) in durations.iter().enumerate() {
            let x = props.x_pulse(q).ok_or_else(|| format!("qubit {q} not on device"))?;
            let a0 = x.area() / DragPulse::unit_area(t0, t0 as f64 / 4.0);
            let e = Self::ideal_rx(&x, t0, a0);
            e.validate().map_err(|m| format!("qubit {q}: {m}"))?;
            lib.rx.insert(q, e);
        }
        Ok(lib)
    }

    /// Entries that reproduce the vendor pulses exactly: each `X` at its own
    /// duration and every CR pulse unscaled. This is what a device looks
    /// like before any calibration has been accepted.
    pub fn vendor(props: &BackendProperties) -> Self {
        let durations: Vec<u32> = props.qubits.iter().map(|q| q.x_pulse.duration()).collect();
        let mut lib = Self::with_durations(props, &durations).unwrap_or_default();
        for cr in &props.cr {
            let e = ZxEntry { c: 1.0, k: 1.0, base: cr.pulse, score: 0.0, timestamp: 0.0 };
            if e.pulse().is_ok() {
                lib.zx.insert((cr.control, cr.target), e);
            }
        }
        lib
    }

    /// Copies entries of `other` whose keys are absent here.
    pub fn fill_missing(&mut self, other: &PulseLibrary) {
        for (q, e) in &other.rx {
            self.rx.entry(*q).or_insert(*e);
        }
        for (k, e) in &other.zx {
            self.zx.entry(*k).or_insert(*e);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::presets;

    #[test]
    fn key_roundtrip() {
        for k in [ParamKey::Qubit(3), ParamKey::Pair(0, 1)] {
            assert_eq!(k.to_string().parse::<ParamKey>().unwrap(), k);
        }
        assert!("1-1".parse::<ParamKey>().is_err());
        assert!("a".parse::<ParamKey>().is_err());
    }

    #[test]
    fn vendor_library_matches_vendor_pulses() {
        let props = presets::lima().properties();
        let lib = PulseLibrary::vendor(&props);
        assert_eq!(lib.rx.len(), 5);
        assert_eq!(lib.zx.len(), props.cr.len());
        for (q, qp) in props.qubits.iter().enumerate() {
            let p = lib.rx(q).unwrap().pulse_for(std::f64::consts::PI).unwrap().unwrap();
            assert_eq!(p.duration(), qp.x_pulse.duration());
            assert!((p.area() - qp.x_pulse.area()).abs() < 1e-9 * qp.x_pulse.area());
        }
        for cr in &props.cr {
            let p = lib.zx(cr.control, cr.target).unwrap().pulse().unwrap();
            assert!((p.area() - cr.pulse.area()).abs() < 1e-3 * cr.pulse.area());
        }
        let mut partial = PulseLibrary::default();
        partial.rx.insert(0, PulseLibrary::ideal(&props, 1.0).rx[&0]);
        let kept = partial.rx[&0];
        partial.fill_missing(&lib);
        assert_eq!(partial.rx[&0], kept);
        assert_eq!(partial.len(), lib.len());
    }

    #[test]
    fn library_json_roundtrip() {
        let props = presets::lima().properties();
        let lib = PulseLibrary::ideal(&props, 1.4);
        assert_eq!(lib.rx.len(), 5);
        assert_eq!(lib.zx.len(), 4);
        let back: PulseLibrary = serde_json::from_str(&serde_json::to_string(&lib).unwrap()).unwrap();
        assert_eq!(back, lib);
    }

    #[test]
    fn ideal_zx_preserves_vendor_area() {
        let props = presets::lima().properties();
        let lib = PulseLibrary::ideal(&props, 1.4);
        for cr in &props.cr {
            let e = lib.zx(cr.control, cr.target).unwrap();
            assert_eq!(e.c, 1.4);
            let p = e.pulse().unwrap();
            assert!((p.area() - cr.pulse.area()).abs() < 1e-9 * cr.pulse.area());
            assert!(p.duration() < cr.pulse.duration());
        }
    }

    #[test]
    fn payload_validation() {
        let bad = r#"{"a0": 1.5, "t0": 64, "sigma": 16, "fit": {"a1":1,"omega":1,"phi":0,"delta":0}, "timestamp": 0}"#;
        assert!(ParamPayload::parse(ParamKind::Rx, bad).is_err());
        let good = r#"{"a0": 0.5, "t0": 64, "sigma": 16, "fit": {"a1":1,"omega":3.14,"phi":0,"delta":0}, "timestamp": 0}"#;
        let p = ParamPayload::parse(ParamKind::Rx, good).unwrap();
        assert!(p.fits_key(ParamKey::Qubit(0)));
        assert!(!p.fits_key(ParamKey::Pair(0, 1)));
    }
}
