// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! JSON-over-HTTP transport for [`Backend`], so the daemon and the CLI can
//! target an in-process or a remote simulator the same way.
//!
//! Routes: `GET /v1/properties`, `POST /v1/jobs`, `GET /v1/time`,
//! `POST /v1/time/advance`.

use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use reqwest::blocking::Client;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use pulsecal::sim::{Backend, BackendError, DeviceError, JobRequest, JobResult};
use pulsecal::target::BackendProperties;

use crate::http::{spawn, ServerHandle};

#[derive(Debug, Serialize, Deserialize)]
pub struct RemoteError {
    pub error: String,
    /// `(got, limit)` when the job exceeded the batch limit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_limit: Option<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Clock {
    pub now: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Advance {
    pub dt: f64,
}

type Shared = Arc<dyn Backend>;

fn failure(e: BackendError) -> Response {
    let batch_limit = match e {
        BackendError::Device(DeviceError::BatchLimit { got, limit }) => Some((got, limit)),
        _ => None,
    };
    let code = match e {
        BackendError::Device(_) => StatusCode::BAD_REQUEST,
        _ => StatusCode::SERVICE_UNAVAILABLE,
    };
    (code, Json(RemoteError { error: e.to_string(), batch_limit })).into_response()
}

async fn blocking<T: Serialize + Send + 'static>(
    f: impl FnOnce() -> Result<T, BackendError> + Send + 'static,
) -> Response {
    match tokio::task::spawn_blocking(f).await {
        Ok(Ok(v)) => Json(v).into_response(),
        Ok(Err(e)) => failure(e),
        Err(e) => failure(BackendError::Transport(e.to_string())),
    }
}

async fn properties(State(b): State<Shared>) -> Response {
    blocking(move || b.properties()).await
}

async fn submit(State(b): State<Shared>, Json(job): Json<JobRequest>) -> Response {
    blocking(move || b.submit(job)).await
}

async fn now(State(b): State<Shared>) -> Response {
    blocking(move || b.now().map(|now| Clock { now })).await
}

async fn advance(State(b): State<Shared>, Json(a): Json<Advance>) -> Response {
    blocking(move || {
        b.advance_time(a.dt)?;
        b.now().map(|now| Clock { now })
    })
    .await
}

pub fn router(backend: Shared) -> Router {
    Router::new()
        .route("/v1/properties", get(properties))
        .route("/v1/jobs", post(submit))
        .route("/v1/time", get(now))
        .route("/v1/time/advance", post(advance))
        .with_state(backend)
}

/// Exposes `backend` over HTTP on `addr`.
pub fn spawn_backend_server(backend: Shared, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    spawn(router(backend), addr)
}

/// [`Backend`] reached over HTTP.
#[derive(Debug, Clone)]
pub struct HttpBackend {
    base: String,
    http: Client,
}

fn transport(e: impl ToString) -> BackendError {
    BackendError::Transport(e.to_string())
}

impl HttpBackend {
    pub fn new(base_url: &str) -> Result<Self, BackendError> {
        let http = Client::builder().timeout(Duration::from_secs(600)).build().map_err(transport)?;
        Ok(Self { base: base_url.trim_end_matches('/').to_string(), http })
    }

    fn decode<T: DeserializeOwned>(resp: reqwest::blocking::Response) -> Result<T, BackendError> {
        if resp.status().is_success() {
            return resp.json().map_err(transport);
        }
        let text = resp.text().map_err(transport)?;
        match serde_json::from_str::<RemoteError>(&text) {
            Ok(RemoteError { batch_limit: Some((got, limit)), .. }) => {
                Err(BackendError::Device(DeviceError::BatchLimit { got, limit }))
            }
            Ok(e) => Err(BackendError::Transport(e.error)),
            Err(_) => Err(BackendError::Transport(text)),
        }
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<T, BackendError> {
        Self::decode(self.http.get(format!("{}{path}", self.base)).send().map_err(transport)?)
    }

    fn post<B: Serialize, T: DeserializeOwned>(&self, path: &str, body: &B) -> Result<T, BackendError> {
        Self::decode(self.http.post(format!("{}{path}", self.base)).json(body).send().map_err(transport)?)
    }
}

impl Backend for HttpBackend {
    fn properties(&self) -> Result<BackendProperties, BackendError> {
        self.get("/v1/properties")
    }

    fn submit(&self, job: JobRequest) -> Result<JobResult, BackendError> {
        self.post("/v1/jobs", &job)
    }

    fn now(&self) -> Result<f64, BackendError> {
        self.get::<Clock>("/v1/time").map(|c| c.now)
    }

    fn advance_time(&self, dt: f64) -> Result<(), BackendError> {
        self.post::<_, Clock>("/v1/time/advance", &Advance { dt }).map(|_| ())
    }
}
