// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Services around the pulsecal library: the parameter query server, the
//! calibration daemon and an HTTP transport for backends.

pub mod client;
pub mod daemon;
pub mod db;
pub mod http;
pub mod remote;
pub mod server;
pub mod store;

pub use client::{ClientError, ParamSink, QueryClient};
pub use daemon::{BackendEndpoint, CycleReport, Daemon, DaemonConfig, DaemonError, PutOutcome, TimeMode};
pub use http::ServerHandle;
pub use remote::{spawn_backend_server, HttpBackend};
pub use server::{open_and_serve, spawn_query_server};
pub use store::{Health, ParamStore, StoreError};
