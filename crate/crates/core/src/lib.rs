// SPDX-License-Identifier: Apache-2.0

//! Design and verification of adiabatic flux trajectories for the
//! controlled-Z gate on two capacitively coupled transmons.
//!
//! The crate is organised bottom-up:
//!
//! * [`device`] builds the flux-dependent two-qutrit Hamiltonian.
//! * [`spectrum`] tracks its labelled eigenvalues and avoided crossings.
//! * [`trajectory`] defines the pulse families and calibrates their amplitude
//!   against the conditional-phase constraint.
//! * [`metrics`] scores trajectories without simulation (diabaticity
//!   semi-norm, Euler–Lagrange residual, two-level leakage propagator).
//! * [`sweep`] explores family parameters on grids.
//! * [`evolution`] simulates the full nine-level dynamics, reconstructs the
//!   realised gate and compares rankings.

pub mod basis;
pub mod device;
pub mod error;
pub mod evolution;
pub mod format;
pub mod metrics;
pub mod numerics;
pub mod parallel;
pub mod spectrum;
pub mod sweep;
pub mod trajectory;

pub use error::{Error, Result};
