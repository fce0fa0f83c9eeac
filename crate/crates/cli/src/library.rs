// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Where a tool gets its pulse library from.

use std::path::PathBuf;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use pulsecal::params::PulseLibrary;
use pulsecal::sim::Backend;
use pulsecal::transpile::Mode;
use pulsecal_service::{Daemon, DaemonConfig, ParamSink, ParamStore, QueryClient};

#[derive(Debug, Clone, PartialEq)]
pub enum LibrarySource {
    /// A library JSON file.
    File(PathBuf),
    /// Snapshot of a running query server.
    Query(String),
    /// The exact library for the backend's vendor pulses at gain 1.
    Ideal,
    /// One in-process calibration cycle against the backend. Keys whose
    /// candidates were rejected keep the vendor pulses.
    Calibrate { seed: u64 },
}

impl LibrarySource {
    /// Picks a source from the usual flags; `offline` wins over `query_url`.
    pub fn from_flags(offline: Option<PathBuf>, query_url: Option<String>, ideal: bool, seed: u64) -> Self {
        match (offline, query_url, ideal) {
            (Some(p), _, _) => LibrarySource::File(p),
            (None, Some(u), _) => LibrarySource::Query(u),
            (None, None, true) => LibrarySource::Ideal,
            (None, None, false) => LibrarySource::Calibrate { seed },
        }
    }

    pub fn load(&self, backend: &Arc<dyn Backend>) -> Result<PulseLibrary> {
        match self {
            LibrarySource::File(p) => {
                let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
                serde_json::from_str(&text).with_context(|| format!("parsing library {}", p.display()))
            }
            LibrarySource::Query(url) => Ok(QueryClient::new(url)?.snapshot()?),
            LibrarySource::Ideal => Ok(PulseLibrary::ideal(&backend.properties()?, 1.0)),
            LibrarySource::Calibrate { seed } => {
                let store = Arc::new(ParamStore::in_memory());
                let cfg = DaemonConfig { seed: *seed, ..DaemonConfig::default() };
                let mut daemon = Daemon::new(cfg, backend.clone(), store.clone())?;
                let report = daemon.run_cycle();
                if let Some(why) = report.skipped {
                    bail!("calibration cycle skipped: {why}");
                }
                let mut lib = store.as_ref().snapshot();
                lib.fill_missing(&PulseLibrary::vendor(&backend.properties()?));
                Ok(lib)
            }
        }
    }
}

/// Only squeeze mode reads calibrations; the others get an empty library.
pub fn library_for(modes: &[Mode], source: &LibrarySource, backend: &Arc<dyn Backend>) -> Result<PulseLibrary> {
    if modes.contains(&Mode::Squeeze) {
        source.load(backend)
    } else {
        Ok(PulseLibrary::default())
    }
}
