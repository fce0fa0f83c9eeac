// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! HTTP/JSON front end of the parameter store.
//!
//! | method | path | body | response |
//! |---|---|---|---|
//! | GET | `/v1/params/{kind}/{key}` | | `ParamRecord` or 404 |
//! | PUT | `/v1/params/{kind}/{key}` | payload | `{"version": n}` or 400 |
//! | GET | `/v1/snapshot` | | `PulseLibrary` |
//! | GET | `/v1/health` | | record counts and last updates |

use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde::{Deserialize, Serialize};

use pulsecal::params::{ParamKey, ParamKind};

use crate::http::{spawn, ServerHandle};
use crate::store::{ParamStore, StoreError};

#[derive(Debug, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct PutResponse {
    pub version: u64,
}

fn error(code: StatusCode, msg: impl ToString) -> Response {
    (code, Json(ErrorBody { error: msg.to_string() })).into_response()
}

fn parse_path(kind: &str, key: &str) -> Result<(ParamKind, ParamKey), Response> {
    let kind: ParamKind = kind.parse().map_err(|e| error(StatusCode::NOT_FOUND, e))?;
    let key: ParamKey = key.parse().map_err(|e| error(StatusCode::NOT_FOUND, e))?;
    Ok((kind, key))
}

async fn get_params(State(store): State<Arc<ParamStore>>, UrlPath((kind, key)): UrlPath<(String, String)>) -> Response {
    let (kind, key) = match parse_path(&kind, &key) {
        Ok(p) => p,
        Err(r) => return r,
    };
    match store.get(kind, key) {
        Some(r) => Json(r).into_response(),
        None => error(StatusCode::NOT_FOUND, format!("no {kind} parameters for {key}")),
    }
}

async fn put_params(
    State(store): State<Arc<ParamStore>>,
    UrlPath((kind, key)): UrlPath<(String, String)>,
    body: String,
) -> Response {
    let (kind, key) = match parse_path(&kind, &key) {
        Ok(p) => p,
        Err(r) => return r,
    };
    // the fsync blocks, keep it off the async workers
    match tokio::task::spawn_blocking(move || store.put_json(kind, key, &body)).await {
        Ok(Ok(version)) => Json(PutResponse { version }).into_response(),
        Ok(Err(StoreError::Invalid(m))) => error(StatusCode::BAD_REQUEST, m),
        Ok(Err(e)) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
        Err(e) => error(StatusCode::INTERNAL_SERVER_ERROR, e),
    }
}

async fn snapshot(State(store): State<Arc<ParamStore>>) -> Response {
    Json(store.snapshot()).into_response()
}

async fn health(State(store): State<Arc<ParamStore>>) -> Response {
    Json(store.health()).into_response()
}

pub fn router(store: Arc<ParamStore>) -> Router {
    Router::new()
        .route("/v1/params/{kind}/{key}", get(get_params).put(put_params))
        .route("/v1/snapshot", get(snapshot))
        .route("/v1/health", get(health))
        .with_state(store)
}

/// Starts a query server over `store` on `addr`.
pub fn spawn_query_server(store: Arc<ParamStore>, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    spawn(router(store), addr)
}

/// Opens (or creates) the store in `data_dir` and serves it on `addr`.
pub fn open_and_serve(data_dir: &Path, addr: SocketAddr) -> Result<(Arc<ParamStore>, ServerHandle), StoreError> {
    let store = Arc::new(ParamStore::open(data_dir)?);
    let handle = spawn_query_server(store.clone(), addr)?;
    Ok((store, handle))
}
