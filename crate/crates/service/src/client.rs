// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Blocking clients for the query server.

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use thiserror::Error;

use pulsecal::params::{ParamKey, ParamKind, ParamPayload, ParamRecord, PulseLibrary};

use crate::server::{ErrorBody, PutResponse};
use crate::store::{Health, ParamStore, StoreError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("query server unreachable: {0}")]
    Transport(String),
    #[error("rejected ({status}): {message}")]
    Rejected { status: u16, message: String },
    #[error("bad response: {0}")]
    Decode(String),
}

/// Where calibration results are read from and published to.
pub trait ParamSink: Send + Sync {
    fn get(&self, kind: ParamKind, key: ParamKey) -> Result<Option<ParamRecord>, ClientError>;
    fn put(&self, kind: ParamKind, key: ParamKey, payload: &ParamPayload) -> Result<u64, ClientError>;
    fn snapshot(&self) -> Result<PulseLibrary, ClientError>;
}

impl ParamSink for ParamStore {
    fn get(&self, kind: ParamKind, key: ParamKey) -> Result<Option<ParamRecord>, ClientError> {
        Ok(ParamStore::get(self, kind, key))
    }

    fn put(&self, kind: ParamKind, key: ParamKey, payload: &ParamPayload) -> Result<u64, ClientError> {
        ParamStore::put(self, kind, key, *payload).map_err(|e| match e {
            StoreError::Invalid(m) => ClientError::Rejected { status: 400, message: m },
            StoreError::Io(e) => ClientError::Transport(e.to_string()),
        })
    }

    fn snapshot(&self) -> Result<PulseLibrary, ClientError> {
        Ok(ParamStore::snapshot(self))
    }
}

impl<S: ParamSink + ?Sized> ParamSink for std::sync::Arc<S> {
    fn get(&self, kind: ParamKind, key: ParamKey) -> Result<Option<ParamRecord>, ClientError> {
        (**self).get(kind, key)
    }

    fn put(&self, kind: ParamKind, key: ParamKey, payload: &ParamPayload) -> Result<u64, ClientError> {
        (**self).put(kind, key, payload)
    }

    fn snapshot(&self) -> Result<PulseLibrary, ClientError> {
        (**self).snapshot()
    }
}

#[derive(Debug, Clone)]
pub struct QueryClient {
    base: String,
    http: Client,
}

fn transport(e: reqwest::Error) -> ClientError {
    ClientError::Transport(e.to_string())
}

fn rejected(resp: reqwest::blocking::Response) -> ClientError {
    let status = resp.status().as_u16();
    let message = resp
        .text()
        .ok()
        .and_then(|t| serde_json::from_str::<ErrorBody>(&t).map(|b| b.error).ok().or(Some(t)))
        .unwrap_or_default();
    ClientError::Rejected { status, message }
}

impl QueryClient {
    pub fn new(base_url: &str) -> Result<Self, ClientError> {
        let http = Client::builder().timeout(Duration::from_secs(10)).build().map_err(transport)?;
        Ok(Self { base: base_url.trim_end_matches('/').to_string(), http })
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    pub fn health(&self) -> Result<Health, ClientError> {
        let r = self.http.get(self.url("/v1/health")).send().map_err(transport)?;
        if !r.status().is_success() {
            return Err(rejected(r));
        }
        r.json().map_err(|e| ClientError::Decode(e.to_string()))
    }

    /// Raw PUT of a JSON body, for callers holding unparsed payloads.
    pub fn put_json(&self, kind: ParamKind, key: ParamKey, body: String) -> Result<u64, ClientError> {
        let r = self
            .http
            .put(self.url(&format!("/v1/params/{kind}/{key}")))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .map_err(transport)?;
        if !r.status().is_success() {
            return Err(rejected(r));
        }
        r.json::<PutResponse>().map(|p| p.version).map_err(|e| ClientError::Decode(e.to_string()))
    }
}

impl ParamSink for QueryClient {
    fn get(&self, kind: ParamKind, key: ParamKey) -> Result<Option<ParamRecord>, ClientError> {
        let r = self.http.get(self.url(&format!("/v1/params/{kind}/{key}"))).send().map_err(transport)?;
        match r.status() {
            StatusCode::NOT_FOUND => Ok(None),
            s if s.is_success() => r.json().map(Some).map_err(|e| ClientError::Decode(e.to_string())),
            _ => Err(rejected(r)),
        }
    }

    fn put(&self, kind: ParamKind, key: ParamKey, payload: &ParamPayload) -> Result<u64, ClientError> {
        let body = serde_json::to_string(payload).map_err(|e| ClientError::Decode(e.to_string()))?;
        self.put_json(kind, key, body)
    }

    fn snapshot(&self) -> Result<PulseLibrary, ClientError> {
        let r = self.http.get(self.url("/v1/snapshot")).send().map_err(transport)?;
        if !r.status().is_success() {
            return Err(rejected(r));
        }
        r.json().map_err(|e| ClientError::Decode(e.to_string()))
    }
}
