// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

/// Errors produced anywhere in the flux-gate pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("flux {phi} rad is outside the admissible domain [0, pi/2)")]
    FluxDomain { phi: f64 },

    #[error("invalid device parameters: {0}")]
    InvalidDevice(String),

    #[error("invalid level index {level} (levels per transmon: 3)")]
    InvalidLevel { level: usize },

    #[error("flux {phi} rad is outside the tracked range [{lo}, {hi}]")]
    Extrapolation { phi: f64, lo: f64, hi: f64 },

    #[error("eigenvector tracking became ambiguous near phi = {phi} rad")]
    Tracking { phi: f64 },

    #[error("invalid trajectory parameters: {0}")]
    InvalidTrajectory(String),

    #[error("degenerate pulse shape: {0}")]
    DegenerateShape(String),

    #[error(
        "constraint unreachable: increase tau or k (target {target:.6} rad, \
         achieved {achieved:.6} rad at the maximum amplitude {max_amplitude:.7} rad)"
    )]
    ConstraintUnreachable {
        target: f64,
        achieved: f64,
        max_amplitude: f64,
    },

    #[error("time step too large: {0}")]
    StepTooLarge(String),

    #[error("quadrature requires a uniform grid")]
    NonUniformGrid,

    #[error("every sweep point is infeasible (max achievable phase {max_phase:.6} rad)")]
    AllInfeasible { max_phase: f64 },

    #[error("invalid sweep specification: {0}")]
    InvalidSweep(String),

    #[error("{0}")]
    Invalid(String),

    #[error("configuration error: {0}")]
    Config(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
