// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! SIGINT/SIGTERM handling for the long-running binaries.

use std::io;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{channel, Receiver};
use std::sync::Arc;

/// Set once the first termination signal arrives. A second signal exits
/// the process immediately.
pub struct Shutdown {
    flag: Arc<AtomicBool>,
    rx: Receiver<()>,
}

impl Shutdown {
    /// Registers the handlers before returning, so no signal is missed.
    pub fn install() -> io::Result<Self> {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build()?;
        #[cfg(unix)]
        let (mut term, mut int) = {
            use tokio::signal::unix::{signal, SignalKind};
            let _guard = rt.enter();
            (signal(SignalKind::terminate())?, signal(SignalKind::interrupt())?)
        };
        let flag = Arc::new(AtomicBool::new(false));
        let (tx, rx) = channel();
        let set = flag.clone();
        std::thread::Builder::new().name("signals".into()).spawn(move || {
            rt.block_on(async move {
                #[cfg(unix)]
                let mut next = async || {
                    tokio::select! {
                        _ = term.recv() => {}
                        _ = int.recv() => {}
                    }
                };
                #[cfg(not(unix))]
                let next = async || {
                    let _ = tokio::signal::ctrl_c().await;
                };
                next().await;
                tracing::info!("termination requested, finishing current work");
                set.store(true, Ordering::SeqCst);
                let _ = tx.send(());
                next().await;
                std::process::exit(130);
            })
        })?;
        Ok(Self { flag, rx })
    }

    pub fn flag(&self) -> &AtomicBool {
        &self.flag
    }

    pub fn requested(&self) -> bool {
        self.flag.load(Ordering::SeqCst)
    }

    /// Blocks until a termination signal arrives.
    pub fn wait(&self) {
        let _ = self.rx.recv();
    }
}
