// Copyright 2026 Pulsecal Contributors
// SPDX-License-Identifier: Apache-2.0

//! Calibration of parameterised `Rx(θ)` and `Rzx(θ)` pulses.

pub mod cr;
pub mod lm;
pub mod rx;

use thiserror::Error;

pub use cr::{
    cr_pulse_for_angle, initial_grid, particle_filter_round, push_cnot, push_rzx, reshape_to_area,
    resampling_weights, rzx_schedule, scale_cr, score_particles, CrCalibration, CrRoundReport, Particle,
    RoundOutcome, GRID_SPACING, PARTICLES_PER_ROUND,
};
pub use rx::{
    amplitude_for_theta, collect_samples, fit_sin2, remove_outliers, sweep_fastest_x, trailing_average,
    validate_rx, CalibSample, OutlierReport, SinFit, SweepResult, ValidationReport, TRAILING_WINDOW_S,
};

use crate::pulse::PulseError;
use crate::sim::BackendError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CalibError {
    #[error("no sweep point on qubit {qubit} reached the P(1) threshold")]
    Infeasible { qubit: usize },
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { got: usize, need: usize },
    #[error("no samples inside the averaging window")]
    EmptyWindow,
    #[error("sin² fit did not converge (best cost {})", .0.residual)]
    FitFailed(SinFit),
    #[error("sin² fit is degenerate (A1 = {})", .0.a1)]
    DegenerateFit(SinFit),
    #[error("inversion argument {arg} outside [0, 1] for theta {theta}")]
    InversionDomain { theta: f64, arg: f64 },
    #[error("angle {0} outside [0, pi]")]
    AngleRange(f64),
    #[error("scaled amplitude {0} exceeds 1")]
    AmplitudeOverflow(f64),
    #[error("scaled width {0} is negative")]
    WidthUnderflow(f64),
    #[error("scale factor c = {0} must be >= 1")]
    ScaleFactor(f64),
    #[error("validation inconclusive: {0}")]
    Inconclusive(String),
    #[error(transparent)]
    Pulse(#[from] PulseError),
    #[error(transparent)]
    Backend(#[from] BackendError),
}
