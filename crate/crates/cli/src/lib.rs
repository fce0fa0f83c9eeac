// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Shared plumbing for the `transpile`, `calibd`, `bench`, `queryd` and
//! `simd` binaries.

pub mod args;
pub mod library;
pub mod plot;
pub mod shutdown;

/// Installs a stderr logger honouring `RUST_LOG`-style verbosity from `-v`
/// counts.
pub fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => tracing::Level::WARN,
        1 => tracing::Level::INFO,
        2 => tracing::Level::DEBUG,
        _ => tracing::Level::TRACE,
    };
    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).with_max_level(level).try_init();
}

// The guide's code listings run as doc-tests of this crate, which sees both
// library crates.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/pulses.md")]
    mod pulses {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/decompositions.md")]
    mod decompositions {}
    #[doc = include_str!("../../../book/src/simulator.md")]
    mod simulator {}
    #[doc = include_str!("../../../book/src/rx-calibration.md")]
    mod rx_calibration {}
    #[doc = include_str!("../../../book/src/cr-calibration.md")]
    mod cr_calibration {}
    #[doc = include_str!("../../../book/src/services.md")]
    mod services {}
    #[doc = include_str!("../../../book/src/benchmarks.md")]
    mod benchmarks {}
    #[doc = include_str!("../../../book/src/tools.md")]
    mod tools {}
}
