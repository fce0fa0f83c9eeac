// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Pulse-level compilation for fixed-frequency transmon devices.
//!
//! The crate builds parameterised `Rx(θ)` and `Rzx(θ)` pulses from live
//! calibration data, lowers logical circuits onto them and runs the result on
//! a simulated backend with drifting drive gains.

pub mod math;
pub mod pulse;
pub mod circuit;
pub mod calibrate;
pub mod params;
pub mod sim;
pub mod target;
pub mod transpile;
pub mod bench;
