// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Append-only calibration database: one JSON-lines file per qubit or pair
//! plus a cycle log.

use std::fs::{self, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

pub const CYCLE_LOG: &str = "cycles.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DbRecord {
    /// Device clock at the time of the record.
    pub timestamp: f64,
    pub kind: String,
    pub params: serde_json::Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
}

/// Database rooted at a directory, or a no-op when `dir` is `None`.
#[derive(Debug, Clone, Default)]
pub struct CalibDb {
    dir: Option<PathBuf>,
}

pub fn rx_file(q: usize) -> String {
    format!("rx-{q}.jsonl")
}

pub fn zx_file(c: usize, t: usize) -> String {
    format!("zx-{c}-{t}.jsonl")
}

fn append_line(path: &Path, value: &impl Serialize) -> io::Result<()> {
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    let mut line = serde_json::to_vec(value).map_err(io::Error::other)?;
    line.push(b'\n');
    f.write_all(&line)?;
    f.sync_data()
}

fn read_lines<T: for<'de> Deserialize<'de>>(path: &Path) -> io::Result<Vec<T>> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for line in BufReader::new(fs::File::open(path)?).lines() {
        if let Ok(v) = serde_json::from_str(&line?) {
            out.push(v);
        }
    }
    Ok(out)
}

impl CalibDb {
    pub fn open(dir: Option<&Path>) -> io::Result<Self> {
        if let Some(d) = dir {
            fs::create_dir_all(d)?;
        }
        Ok(Self { dir: dir.map(Path::to_path_buf) })
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    pub fn append(&self, file: &str, rec: &DbRecord) -> io::Result<()> {
        match &self.dir {
            Some(d) => append_line(&d.join(file), rec),
            None => Ok(()),
        }
    }

    pub fn read(&self, file: &str) -> io::Result<Vec<DbRecord>> {
        match &self.dir {
            Some(d) => read_lines(&d.join(file)),
            None => Ok(Vec::new()),
        }
    }

    pub fn append_cycle(&self, report: &impl Serialize) -> io::Result<()> {
        match &self.dir {
            Some(d) => append_line(&d.join(CYCLE_LOG), report),
            None => Ok(()),
        }
    }

    pub fn cycles<T: for<'de> Deserialize<'de>>(&self) -> io::Result<Vec<T>> {
        match &self.dir {
            Some(d) => read_lines(&d.join(CYCLE_LOG)),
            None => Ok(Vec::new()),
        }
    }

    /// Qubits and pairs that have a file in the database.
    pub fn keys(&self) -> io::Result<(Vec<usize>, Vec<(usize, usize)>)> {
        let (mut qubits, mut pairs) = (Vec::new(), Vec::new());
        let Some(d) = &self.dir else { return Ok((qubits, pairs)) };
        for entry in fs::read_dir(d)? {
            let name = entry?.file_name().to_string_lossy().into_owned();
            let Some(stem) = name.strip_suffix(".jsonl") else { continue };
            if let Some(q) = stem.strip_prefix("rx-").and_then(|s| s.parse().ok()) {
                qubits.push(q);
            } else if let Some((c, t)) = stem.strip_prefix("zx-").and_then(|s| s.split_once('-')) {
                if let (Ok(c), Ok(t)) = (c.parse(), t.parse()) {
                    pairs.push((c, t));
                }
            }
        }
        qubits.sort_unstable();
        pairs.sort_unstable();
        Ok((qubits, pairs))
    }
}
