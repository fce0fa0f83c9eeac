// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Job-level access to a device, local or remote.

use std::sync::mpsc;
use std::thread;

use thiserror::Error;

use super::{DeviceConfig, DeviceError, DeviceModel, JobRequest, JobResult};
use crate::target::BackendProperties;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend worker has shut down")]
    Closed,
}

/// Anything that runs pulse jobs and exposes a simulated clock.
pub trait Backend: Send + Sync {
    fn properties(&self) -> Result<BackendProperties, BackendError>;
    fn submit(&self, job: JobRequest) -> Result<JobResult, BackendError>;
    /// Seconds on the device clock.
    fn now(&self) -> Result<f64, BackendError>;
    fn advance_time(&self, dt: f64) -> Result<(), BackendError>;
}

type Inspect = Box<dyn FnOnce(&mut DeviceModel) + Send>;

enum Command {
    Submit(JobRequest, mpsc::Sender<Result<JobResult, DeviceError>>),
    Inspect(Inspect),
}

/// In-process simulator. Jobs run one at a time on a worker thread in the
/// order they were received.
#[derive(Clone)]
pub struct SimBackend {
    tx: mpsc::Sender<Command>,
    properties: BackendProperties,
}

impl SimBackend {
    pub fn new(config: DeviceConfig) -> Result<Self, DeviceError> {
        let model = DeviceModel::new(config)?;
        Ok(Self::from_model(model))
    }

    pub fn from_model(mut model: DeviceModel) -> Self {
        let properties = model.properties();
        let (tx, rx) = mpsc::channel::<Command>();
        thread::Builder::new()
            .name("pulsecal-sim".into())
            .spawn(move || {
                for cmd in rx {
                    match cmd {
                        Command::Submit(job, reply) => {
                            let _ = reply.send(model.submit(&job));
                        }
                        Command::Inspect(f) => f(&mut model),
                    }
                }
            })
            .expect("spawn simulator thread");
        Self { tx, properties }
    }

    /// Runs `f` against the device between jobs.
    pub fn inspect<R, F>(&self, f: F) -> Result<R, BackendError>
    where
        R: Send + 'static,
        F: FnOnce(&mut DeviceModel) -> R + Send + 'static,
    {
        let (rtx, rrx) = mpsc::channel();
        let job: Inspect = Box::new(move |m| {
            let _ = rtx.send(f(m));
        });
        self.tx.send(Command::Inspect(job)).map_err(|_| BackendError::Closed)?;
        rrx.recv().map_err(|_| BackendError::Closed)
    }
}

impl Backend for SimBackend {
    fn properties(&self) -> Result<BackendProperties, BackendError> {
        Ok(self.properties.clone())
    }

    fn submit(&self, job: JobRequest) -> Result<JobResult, BackendError> {
        let (rtx, rrx) = mpsc::channel();
        self.tx.send(Command::Submit(job, rtx)).map_err(|_| BackendError::Closed)?;
        Ok(rrx.recv().map_err(|_| BackendError::Closed)??)
    }

    fn now(&self) -> Result<f64, BackendError> {
        self.inspect(|m| m.clock())
    }

    fn advance_time(&self, dt: f64) -> Result<(), BackendError> {
        self.inspect(move |m| m.advance_time(dt))
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn properties(&self) -> Result<BackendProperties, BackendError> {
        (**self).properties()
    }
    fn submit(&self, job: JobRequest) -> Result<JobResult, BackendError> {
        (**self).submit(job)
    }
    fn now(&self) -> Result<f64, BackendError> {
        (**self).now()
    }
    fn advance_time(&self, dt: f64) -> Result<(), BackendError> {
        (**self).advance_time(dt)
    }
}
