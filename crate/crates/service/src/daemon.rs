// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! The calibration daemon: cycles through qubits and pairs, measures, fits,
//! validates and publishes accepted parameters to the query server.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use pulsecal::calibrate::{
    amplitude_for_theta, collect_samples, fit_sin2, remove_outliers, score_particles, sweep_fastest_x,
    trailing_average, validate_rx, CalibError, CalibSample, CrCalibration, Particle, SinFit, SweepResult,
    ValidationReport, TRAILING_WINDOW_S,
};
use pulsecal::params::{ParamKey, ParamKind, ParamPayload, RxEntry, ZxEntry};
use pulsecal::sim::{presets, Backend, BackendError, DeviceConfig, SimBackend};

use crate::client::{ClientError, ParamSink};
use crate::db::{rx_file, zx_file, CalibDb, DbRecord};
use crate::remote::HttpBackend;

/// Where the daemon finds its backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendEndpoint {
    /// A remote backend server.
    Url(String),
    /// An in-process simulator built from a full device configuration.
    Device(Box<DeviceConfig>),
    /// An in-process simulator from a named preset (`lima`, `line-<n>`).
    Preset(String),
}

impl BackendEndpoint {
    /// Device configuration for in-process endpoints.
    pub fn device_config(&self) -> Result<Option<DeviceConfig>, DaemonError> {
        match self {
            BackendEndpoint::Url(_) => Ok(None),
            BackendEndpoint::Device(c) => Ok(Some((**c).clone())),
            BackendEndpoint::Preset(name) => preset(name).map(Some),
        }
    }

    /// Builds the backend: an [`HttpBackend`] for URLs, otherwise an
    /// in-process simulator.
    pub fn connect(&self) -> Result<Arc<dyn Backend>, DaemonError> {
        if let BackendEndpoint::Url(url) = self {
            return Ok(Arc::new(HttpBackend::new(url)?));
        }
        let cfg = self.device_config()?.expect("in-process endpoint");
        Ok(Arc::new(SimBackend::new(cfg).map_err(BackendError::from)?))
    }
}

/// Named device presets: `lima` or `line-<n>`.
pub fn preset(name: &str) -> Result<DeviceConfig, DaemonError> {
    if name == "lima" {
        return Ok(presets::lima());
    }
    if let Some(n) = name.strip_prefix("line-").and_then(|n| n.parse::<usize>().ok()) {
        if (1..=pulsecal::sim::MAX_ACTIVE_QUBITS).contains(&n) {
            return Ok(presets::ideal_line(n));
        }
    }
    Err(DaemonError::Config(format!("unknown preset '{name}' (expected lima or line-<n>)")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DaemonConfig {
    pub backend: BackendEndpoint,
    /// Query server base URL; `None` keeps parameters in process.
    pub query_url: Option<String>,
    /// Seconds between cycle starts.
    pub cadence_s: f64,
    pub calibrate_rx: bool,
    pub calibrate_cr: bool,
    pub sweep_shots: u64,
    pub sample_shots: u64,
    pub validation_shots: u64,
    pub cr_shots: u64,
    /// Amplitudes measured per qubit per cycle.
    pub sample_points: usize,
    pub seed: u64,
    /// Calibration database directory.
    pub data_dir: Option<PathBuf>,
    /// Qubits to calibrate; all device qubits when absent.
    pub qubits: Option<Vec<usize>>,
    /// Control/target pairs to calibrate; all CR channels when absent.
    pub pairs: Option<Vec<(usize, usize)>>,
    pub put_retries: u32,
    pub put_backoff_ms: u64,
    /// First delay after a skipped cycle; doubles per consecutive failure.
    pub failure_backoff_s: f64,
}

impl Default for DaemonConfig {
    fn default() -> Self {
        Self {
            backend: BackendEndpoint::Preset("lima".into()),
            query_url: None,
            cadence_s: 7200.0,
            calibrate_rx: true,
            calibrate_cr: true,
            sweep_shots: 1024,
            sample_shots: 1024,
            validation_shots: 4096,
            cr_shots: 1024,
            sample_points: 24,
            seed: 0,
            data_dir: None,
            qubits: None,
            pairs: None,
            put_retries: 4,
            put_backoff_ms: 50,
            failure_backoff_s: 60.0,
        }
    }
}

impl DaemonConfig {
    pub fn validate(&self) -> Result<(), DaemonError> {
        let bad = |m: &str| Err(DaemonError::Config(m.into()));
        if !(self.cadence_s.is_finite() && self.cadence_s > 0.0) {
            return bad("cadence_s must be positive");
        }
        if [self.sweep_shots, self.sample_shots, self.validation_shots, self.cr_shots].contains(&0) {
            return bad("shot budgets must be positive");
        }
        if self.sample_points < 8 {
            return bad("sample_points must be at least 8");
        }
        if !(self.failure_backoff_s.is_finite() && self.failure_backoff_s > 0.0) {
            return bad("failure_backoff_s must be positive");
        }
        Ok(())
    }

    pub fn from_json(s: &str) -> Result<Self, DaemonError> {
        let cfg: Self = serde_json::from_str(s).map_err(|e| DaemonError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Error)]
pub enum DaemonError {
    #[error("invalid daemon configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Backend(#[from] BackendError),
    #[error("database: {0}")]
    Db(#[from] std::io::Error),
}

/// What happened to a parameter set the daemon wanted to publish.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status")]
pub enum PutOutcome {
    /// Nothing was eligible for publication.
    None,
    Posted { version: u64 },
    /// The query server was unreachable; retried next cycle.
    Pending,
    Rejected { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RxReport {
    pub qubit: usize,
    pub samples_added: usize,
    pub outliers_removed: usize,
    pub fit: Option<SinFit>,
    pub candidate: Option<RxEntry>,
    pub validation: Option<ValidationReport>,
    pub outcome: PutOutcome,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrReport {
    pub control: usize,
    pub target: usize,
    pub generation: u64,
    pub best: Option<Particle>,
    pub baseline_score: Option<f64>,
    pub incumbent_score: Option<f64>,
    pub reset: bool,
    pub outcome: PutOutcome,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: u64,
    /// Device clock at the start and end of the cycle.
    pub started_at: f64,
    pub finished_at: f64,
    pub rx: Vec<RxReport>,
    pub cr: Vec<CrReport>,
    /// Why the whole cycle was skipped, if it was.
    pub skipped: Option<String>,
    /// Parameter sets still waiting for the query server.
    pub pending: usize,
}

impl CycleReport {
    /// Number of parameter sets published this cycle.
    pub fn updates(&self) -> usize {
        let posted = |o: &PutOutcome| matches!(o, PutOutcome::Posted { .. });
        self.rx.iter().filter(|r| posted(&r.outcome)).count() + self.cr.iter().filter(|r| posted(&r.outcome)).count()
    }
}

/// How the daemon waits between cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeMode {
    /// Sleep in wall-clock time and leave the backend clock alone.
    Wall,
    /// Advance the backend clock by the wait and sleep `wait / factor` wall
    /// seconds; an infinite factor does not sleep at all.
    Simulated { factor: f64 },
}

pub struct Daemon {
    cfg: DaemonConfig,
    backend: Arc<dyn Backend>,
    sink: Arc<dyn ParamSink>,
    db: CalibDb,
    sweeps: BTreeMap<usize, SweepResult>,
    samples: BTreeMap<usize, Vec<CalibSample>>,
    filters: BTreeMap<(usize, usize), CrCalibration>,
    /// Last payload published per key, used when the server is unreachable.
    published: BTreeMap<(ParamKind, ParamKey), ParamPayload>,
    pending: BTreeMap<(ParamKind, ParamKey), ParamPayload>,
    cycle: u64,
}

fn db_err(e: impl std::fmt::Display) -> String {
    format!("database: {e}")
}

impl Daemon {
    /// Builds a daemon and replays its database, if any.
    pub fn new(cfg: DaemonConfig, backend: Arc<dyn Backend>, sink: Arc<dyn ParamSink>) -> Result<Self, DaemonError> {
        cfg.validate()?;
        let db = CalibDb::open(cfg.data_dir.as_deref())?;
        let mut d = Self {
            cfg,
            backend,
            sink,
            db,
            sweeps: BTreeMap::new(),
            samples: BTreeMap::new(),
            filters: BTreeMap::new(),
            published: BTreeMap::new(),
            pending: BTreeMap::new(),
            cycle: 0,
        };
        d.replay()?;
        Ok(d)
    }

    fn replay(&mut self) -> Result<(), DaemonError> {
        let (qubits, pairs) = self.db.keys()?;
        for q in qubits {
            for r in self.db.read(&rx_file(q))? {
                match r.kind.as_str() {
                    "sweep" => {
                        if let Ok(s) = serde_json::from_value(r.params) {
                            self.sweeps.insert(q, s);
                        }
                    }
                    "sample" => {
                        if let Ok(s) = serde_json::from_value(r.params) {
                            self.samples.entry(q).or_default().push(s);
                        }
                    }
                    _ => {}
                }
            }
        }
        for (c, t) in pairs {
            let last = self.db.read(&zx_file(c, t))?.into_iter().rev().find(|r| r.kind == "round");
            if let Some(state) = last.and_then(|r| serde_json::from_value::<CrCalibration>(r.params).ok()) {
                self.filters.insert((c, t), state);
            }
        }
        self.cycle = self.db.cycles::<serde_json::Value>()?.len() as u64;
        Ok(())
    }

    pub fn config(&self) -> &DaemonConfig {
        &self.cfg
    }

    pub fn cycles_run(&self) -> u64 {
        self.cycle
    }

    pub fn filter(&self, control: usize, target: usize) -> Option<&CrCalibration> {
        self.filters.get(&(control, target))
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    fn record(&self, file: &str, timestamp: f64, kind: &str, params: &impl Serialize, score: Option<f64>) {
        let rec = DbRecord {
            timestamp,
            kind: kind.into(),
            params: serde_json::to_value(params).unwrap_or(serde_json::Value::Null),
            score,
        };
        if let Err(e) = self.db.append(file, &rec) {
            tracing::error!("{}", db_err(e));
        }
    }

    /// Publishes with bounded retries on transport errors. Rejections are
    /// final; exhausted retries leave the payload pending.
    fn publish(&mut self, kind: ParamKind, key: ParamKey, payload: ParamPayload) -> PutOutcome {
        for attempt in 0..=self.cfg.put_retries {
            match self.sink.put(kind, key, &payload) {
                Ok(version) => {
                    self.pending.remove(&(kind, key));
                    self.published.insert((kind, key), payload);
                    return PutOutcome::Posted { version };
                }
                Err(ClientError::Rejected { message, .. }) => {
                    self.pending.remove(&(kind, key));
                    return PutOutcome::Rejected { reason: message };
                }
                Err(e) => {
                    tracing::warn!("put {kind}/{key} attempt {attempt} failed: {e}");
                    if attempt < self.cfg.put_retries {
                        std::thread::sleep(Duration::from_millis(self.cfg.put_backoff_ms << attempt.min(10)));
                    }
                }
            }
        }
        self.pending.insert((kind, key), payload);
        PutOutcome::Pending
    }

    fn incumbent(&self, kind: ParamKind, key: ParamKey) -> Option<ParamPayload> {
        match self.sink.get(kind, key) {
            Ok(r) => r.map(|r| r.payload),
            Err(_) => self.published.get(&(kind, key)).cloned(),
        }
    }

    fn flush_pending(&mut self) {
        let queued: Vec<_> = std::mem::take(&mut self.pending).into_iter().collect();
        for ((kind, key), payload) in queued {
            let _ = self.publish(kind, key, payload);
        }
    }

    fn sample_amplitudes(&self, a0: f64) -> Vec<f64> {
        let n = self.cfg.sample_points;
        let mut amps: Vec<f64> = (1..=n).map(|i| (1.25 * a0 * i as f64 / n as f64).min(1.0)).collect();
        amps.dedup();
        amps
    }

    fn calibrate_rx(&mut self, q: usize, report: &mut RxReport) -> Result<(), CalibError> {
        let sweep = match self.sweeps.get(&q) {
            Some(s) => *s,
            None => {
                let s = sweep_fastest_x(&*self.backend, q, self.cfg.sweep_shots)?;
                self.record(&rx_file(q), self.backend.now()?, "sweep", &s, Some(s.p1));
                self.sweeps.insert(q, s);
                s
            }
        };
        let amps = self.sample_amplitudes(sweep.a0);
        let fresh = collect_samples(&*self.backend, q, &sweep, &amps, self.cfg.sample_shots)?;
        for s in &fresh {
            self.record(&rx_file(q), s.timestamp, "sample", s, None);
        }
        report.samples_added = fresh.len();
        let now = self.backend.now()?;
        let history = self.samples.entry(q).or_default();
        history.extend(fresh);
        history.retain(|s| s.timestamp >= now - TRAILING_WINDOW_S);
        let cleaned = remove_outliers(history);
        report.outliers_removed = cleaned.removed;
        let averaged = trailing_average(&cleaned.kept, now, TRAILING_WINDOW_S)?;
        let points: Vec<(f64, f64)> = averaged.iter().map(|s| (s.amplitude, s.p1)).collect();
        let fit = fit_sin2(&points)?;
        report.fit = Some(fit);
        let a0 = amplitude_for_theta(&fit, PI)?;
        let candidate = RxEntry { a0, t0: sweep.t0, sigma: sweep.sigma, beta: sweep.beta, fit, timestamp: now };
        report.candidate = Some(candidate);
        if let Err(m) = candidate.validate() {
            report.outcome = PutOutcome::Rejected { reason: m };
            return Ok(());
        }
        let incumbent = match self.incumbent(ParamKind::Rx, ParamKey::Qubit(q)) {
            Some(ParamPayload::Rx(e)) => Some(e),
            _ => None,
        };
        let v = validate_rx(&*self.backend, q, &candidate, incumbent.as_ref(), self.cfg.validation_shots)?;
        self.record(&rx_file(q), now, "fit", &candidate, Some(v.candidate_error));
        let accept = v.accept;
        report.validation = Some(v);
        if accept {
            report.outcome = self.publish(ParamKind::Rx, ParamKey::Qubit(q), ParamPayload::Rx(candidate));
        }
        Ok(())
    }

    fn round_rng(&self, c: usize, t: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(self.cycle << 16 ^ (c as u64) << 8 ^ t as u64);
        rng
    }

    fn calibrate_cr(&mut self, c: usize, t: usize, report: &mut CrReport) -> Result<(), CalibError> {
        let props = self.backend.properties()?;
        let base = props
            .cr_pulse(c, t)
            .ok_or_else(|| CalibError::Inconclusive(format!("no control channel {c}-{t}")))?;
        let mut rng = self.round_rng(c, t);
        let cal = self.filters.entry((c, t)).or_insert_with(|| CrCalibration::new(c, t, base));
        let round = cal.round(&*self.backend, &mut rng, self.cfg.cr_shots)?;
        let state = cal.clone();
        let now = self.backend.now()?;
        self.record(&zx_file(c, t), now, "round", &state, Some(round.best.score));
        report.generation = round.generation;
        report.best = Some(round.best);
        report.baseline_score = Some(round.baseline_score);
        report.reset = round.reset;
        if !round.improved() {
            return Ok(());
        }
        let key = ParamKey::Pair(c, t);
        let entry = ZxEntry { c: round.best.c, k: round.best.k, base, score: round.best.score, timestamp: now };
        if let Err(m) = entry.validate() {
            report.outcome = PutOutcome::Rejected { reason: m };
            return Ok(());
        }
        if let Some(ParamPayload::Zx(inc)) = self.incumbent(ParamKind::Zx, key) {
            let s = score_particles(&*self.backend, c, t, &inc.base, &[Particle::new(inc.c, inc.k)], self.cfg.cr_shots)?;
            report.incumbent_score = Some(s[0]);
            if round.best.score <= s[0] {
                return Ok(());
            }
        }
        report.outcome = self.publish(ParamKind::Zx, key, ParamPayload::Zx(entry));
        Ok(())
    }

    /// One pass over every configured qubit and pair.
    pub fn run_cycle(&mut self) -> CycleReport {
        let (started_at, props) = match self.backend.now().and_then(|t| Ok((t, self.backend.properties()?))) {
            Ok(v) => v,
            Err(e) => {
                let at = f64::NAN;
                return CycleReport {
                    cycle: self.cycle,
                    started_at: at,
                    finished_at: at,
                    rx: vec![],
                    cr: vec![],
                    skipped: Some(e.to_string()),
                    pending: self.pending.len(),
                };
            }
        };
        self.cycle += 1;
        self.flush_pending();
        let qubits = self.cfg.qubits.clone().unwrap_or_else(|| (0..props.n_qubits()).collect());
        let pairs = self.cfg.pairs.clone().unwrap_or_else(|| props.cr.iter().map(|p| (p.control, p.target)).collect());
        let mut rx = Vec::new();
        if self.cfg.calibrate_rx {
            for q in qubits {
                let mut r = RxReport {
                    qubit: q,
                    samples_added: 0,
                    outliers_removed: 0,
                    fit: None,
                    candidate: None,
                    validation: None,
                    outcome: PutOutcome::None,
                    error: None,
                };
                if let Err(e) = self.calibrate_rx(q, &mut r) {
                    r.error = Some(e.to_string());
                }
                rx.push(r);
            }
        }
        let mut cr = Vec::new();
        if self.cfg.calibrate_cr {
            for (c, t) in pairs {
                let mut r = CrReport {
                    control: c,
                    target: t,
                    generation: 0,
                    best: None,
                    baseline_score: None,
                    incumbent_score: None,
                    reset: false,
                    outcome: PutOutcome::None,
                    error: None,
                };
                if let Err(e) = self.calibrate_cr(c, t, &mut r) {
                    r.error = Some(e.to_string());
                }
                cr.push(r);
            }
        }
        let finished_at = self.backend.now().unwrap_or(f64::NAN);
        let report =
            CycleReport { cycle: self.cycle, started_at, finished_at, rx, cr, skipped: None, pending: self.pending.len() };
        if let Err(e) = self.db.append_cycle(&report) {
            tracing::error!("{}", db_err(e));
        }
        report
    }

    fn wait(&self, seconds: f64, mode: TimeMode, stop: &AtomicBool) -> Result<(), BackendError> {
        let wall = match mode {
            TimeMode::Wall => seconds,
            TimeMode::Simulated { factor } => {
                self.backend.advance_time(seconds)?;
                if factor.is_infinite() {
                    0.0
                } else {
                    seconds / factor
                }
            }
        };
        let until = Instant::now() + Duration::from_secs_f64(wall.max(0.0));
        while !stop.load(Ordering::SeqCst) && Instant::now() < until {
            std::thread::sleep((until - Instant::now()).min(Duration::from_millis(100)));
        }
        Ok(())
    }

    /// Runs cycles every `cadence_s` until `stop` is set or `max_cycles`
    /// have run. A cycle in flight always completes. Skipped cycles back off
    /// exponentially, capped at the cadence.
    pub fn run_forever(
        &mut self,
        mode: TimeMode,
        stop: &AtomicBool,
        max_cycles: Option<u64>,
        mut on_report: impl FnMut(&CycleReport),
    ) -> u64 {
        let mut failures = 0u32;
        let mut ran = 0u64;
        while !stop.load(Ordering::SeqCst) && max_cycles.is_none_or(|m| ran < m) {
            let report = self.run_cycle();
            ran += 1;
            on_report(&report);
            if stop.load(Ordering::SeqCst) || max_cycles.is_some_and(|m| ran >= m) {
                break;
            }
            let delay = if report.skipped.is_some() {
                failures += 1;
                (self.cfg.failure_backoff_s * 2f64.powi(failures as i32 - 1)).min(self.cfg.cadence_s)
            } else {
                failures = 0;
                (self.cfg.cadence_s - (report.finished_at - report.started_at)).max(0.0)
            };
            if let Err(e) = self.wait(delay, mode, stop) {
                tracing::warn!("could not advance backend clock: {e}");
                // fall back to a wall-clock wait so an outage cannot spin
                let _ = self.wait(delay.min(self.cfg.failure_backoff_s), TimeMode::Wall, stop);
            }
        }
        ran
    }
}
