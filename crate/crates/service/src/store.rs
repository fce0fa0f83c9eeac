// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Durable last-writer-wins parameter store.
//!
//! Every accepted put is appended to `params.jsonl` and fsynced before the
//! in-memory map changes, so an acknowledged version survives a restart.
//! Readers take a shared lock only long enough to clone a record.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use pulsecal::params::{ParamKey, ParamKind, ParamPayload, ParamRecord, PulseLibrary};

pub const LOG_FILE: &str = "params.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid payload: {0}")]
    Invalid(String),
    #[error("storage: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct LogLine {
    #[serde(flatten)]
    record: ParamRecord,
    /// Wall-clock seconds since the Unix epoch.
    updated_at: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KindHealth {
    pub records: usize,
    pub last_update: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub rx: KindHealth,
    pub zx: KindHealth,
}

#[derive(Default)]
struct State {
    records: BTreeMap<(ParamKind, ParamKey), ParamRecord>,
    last_update: BTreeMap<ParamKind, f64>,
}

pub struct ParamStore {
    state: RwLock<State>,
    log: Mutex<Option<File>>,
    dir: Option<PathBuf>,
}

fn wall_clock() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

impl ParamStore {
    /// Store without persistence.
    pub fn in_memory() -> Self {
        Self { state: RwLock::new(State::default()), log: Mutex::new(None), dir: None }
    }

    /// Opens `dir`, replaying its log. A torn final line from a crash
    /// mid-append is ignored.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, StoreError> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        let path = dir.join(LOG_FILE);
        let mut state = State::default();
        if path.exists() {
            for line in BufReader::new(File::open(&path)?).lines() {
                let line = line?;
                let Ok(l) = serde_json::from_str::<LogLine>(&line) else {
                    tracing::warn!("skipping unreadable log line in {}", path.display());
                    continue;
                };
                let kind = l.record.kind;
                let slot = (kind, l.record.key);
                if state.records.get(&slot).is_none_or(|r| r.version < l.record.version) {
                    state.records.insert(slot, l.record);
                }
                let t = state.last_update.entry(kind).or_insert(l.updated_at);
                *t = t.max(l.updated_at);
            }
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&path)?;
        // terminate a torn tail so the next append starts on its own line
        let bytes = fs::read(&path)?;
        if bytes.last().is_some_and(|&b| b != b'\n') {
            file.write_all(b"\n")?;
            file.sync_data()?;
        }
        Ok(Self { state: RwLock::new(state), log: Mutex::new(Some(file)), dir: Some(dir) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    /// Validates, persists and publishes a payload; returns the new version.
    pub fn put(&self, kind: ParamKind, key: ParamKey, payload: ParamPayload) -> Result<u64, StoreError> {
        if payload.kind() != kind {
            return Err(StoreError::Invalid(format!("payload is {} but path says {kind}", payload.kind())));
        }
        if !payload.fits_key(key) {
            return Err(StoreError::Invalid(format!("key {key} does not suit kind {kind}")));
        }
        payload.validate().map_err(StoreError::Invalid)?;
        // writers queue here; readers only wait for the final insert
        let mut log = self.log.lock().unwrap_or_else(|e| e.into_inner());
        let version = self.get(kind, key).map_or(1, |r| r.version + 1);
        let record = ParamRecord { kind, key, version, payload };
        let updated_at = wall_clock();
        if let Some(f) = log.as_mut() {
            let mut line = serde_json::to_vec(&LogLine { record: record.clone(), updated_at })
                .map_err(|e| StoreError::Invalid(e.to_string()))?;
            line.push(b'\n');
            f.write_all(&line)?;
            f.sync_data()?;
        }
        let mut st = self.state.write().unwrap_or_else(|e| e.into_inner());
        st.records.insert((kind, key), record);
        st.last_update.insert(kind, updated_at);
        Ok(version)
    }

    /// Parses a JSON payload for `kind` and stores it.
    pub fn put_json(&self, kind: ParamKind, key: ParamKey, body: &str) -> Result<u64, StoreError> {
        let payload = ParamPayload::parse(kind, body).map_err(StoreError::Invalid)?;
        self.put(kind, key, payload)
    }

    pub fn get(&self, kind: ParamKind, key: ParamKey) -> Option<ParamRecord> {
        self.state.read().unwrap_or_else(|e| e.into_inner()).records.get(&(kind, key)).cloned()
    }

    /// Every current record, taken under one read lock.
    pub fn records(&self) -> Vec<ParamRecord> {
        self.state.read().unwrap_or_else(|e| e.into_inner()).records.values().cloned().collect()
    }

    /// Point-in-time library of all current records.
    pub fn snapshot(&self) -> PulseLibrary {
        PulseLibrary::from_records(&self.records())
    }

    pub fn health(&self) -> Health {
        let st = self.state.read().unwrap_or_else(|e| e.into_inner());
        let of = |kind| KindHealth {
            records: st.records.keys().filter(|(k, _)| *k == kind).count(),
            last_update: st.last_update.get(&kind).copied(),
        };
        Health { status: "ok".into(), rx: of(ParamKind::Rx), zx: of(ParamKind::Zx) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pulsecal::calibrate::SinFit;
    use pulsecal::params::RxEntry;

    fn rx(a0: f64) -> ParamPayload {
        ParamPayload::Rx(RxEntry { a0, t0: 96, sigma: 24.0, beta: 0.0, fit: SinFit::ideal(a0), timestamp: 1.0 })
    }

    #[test]
    fn versions_and_last_writer_wins() {
        let s = ParamStore::in_memory();
        assert_eq!(s.put(ParamKind::Rx, ParamKey::Qubit(0), rx(0.4)).unwrap(), 1);
        assert_eq!(s.put(ParamKind::Rx, ParamKey::Qubit(0), rx(0.5)).unwrap(), 2);
        assert_eq!(s.get(ParamKind::Rx, ParamKey::Qubit(0)).unwrap().payload, rx(0.5));
        assert!(s.get(ParamKind::Rx, ParamKey::Qubit(1)).is_none());
    }

    #[test]
    fn invalid_payload_leaves_record() {
        let s = ParamStore::in_memory();
        s.put(ParamKind::Rx, ParamKey::Qubit(0), rx(0.4)).unwrap();
        assert!(s.put(ParamKind::Rx, ParamKey::Qubit(0), rx(-1.0)).is_err());
        assert!(s.put(ParamKind::Rx, ParamKey::Pair(0, 1), rx(0.4)).is_err());
        assert!(s.put_json(ParamKind::Rx, ParamKey::Qubit(0), "{\"a0\": 1").is_err());
        assert_eq!(s.get(ParamKind::Rx, ParamKey::Qubit(0)).unwrap().version, 1);
    }

    #[test]
    fn replay_after_restart_and_torn_tail() {
        let dir = tempfile::tempdir().unwrap();
        {
            let s = ParamStore::open(dir.path()).unwrap();
            s.put(ParamKind::Rx, ParamKey::Qubit(0), rx(0.4)).unwrap();
            s.put(ParamKind::Rx, ParamKey::Qubit(0), rx(0.45)).unwrap();
            s.put(ParamKind::Rx, ParamKey::Qubit(2), rx(0.3)).unwrap();
        }
        let mut f = OpenOptions::new().append(true).open(dir.path().join(LOG_FILE)).unwrap();
        f.write_all(b"{\"kind\":\"rx\",\"key\":\"0\",\"vers").unwrap();
        drop(f);
        let s = ParamStore::open(dir.path()).unwrap();
        let r = s.get(ParamKind::Rx, ParamKey::Qubit(0)).unwrap();
        assert_eq!((r.version, r.payload), (2, rx(0.45)));
        assert_eq!(s.put(ParamKind::Rx, ParamKey::Qubit(0), rx(0.5)).unwrap(), 3);
        assert_eq!(s.health().rx.records, 2);
        assert_eq!(s.snapshot().len(), 2);
        drop(s);
        let s = ParamStore::open(dir.path()).unwrap();
        assert_eq!(s.get(ParamKind::Rx, ParamKey::Qubit(0)).unwrap().version, 3);
    }
}
