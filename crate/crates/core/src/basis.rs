// SPDX-License-Identifier: Apache-2.0

//! Two-qutrit product basis and the small matrix constants used to describe
//! its coupling blocks.

use nalgebra::{Matrix2, Matrix3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;

pub type C64 = Complex64;

/// Levels kept per transmon.
pub const LEVELS: usize = 3;
/// Dimension of the truncated two-transmon Hilbert space.
pub const DIM: usize = LEVELS * LEVELS;

/// Bare product state `|i,j⟩ = |i⟩₁ ⊗ |j⟩₂`; transmon 1 is the tuned one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BareState {
    pub i: u8,
    pub j: u8,
}

impl BareState {
    pub const fn new(i: u8, j: u8) -> Self {
        Self { i, j }
    }

    /// Position in lexicographic tensor order.
    pub const fn index(self) -> usize {
        self.i as usize * LEVELS + self.j as usize
    }

    pub const fn from_index(k: usize) -> Self {
        Self::new((k / LEVELS) as u8, (k % LEVELS) as u8)
    }

    /// Total excitation number, conserved by the exchange coupling.
    pub const fn excitations(self) -> u8 {
        self.i + self.j
    }

    pub fn all() -> impl Iterator<Item = BareState> {
        (0..DIM).map(Self::from_index)
    }

    /// Parses labels such as `"11"` or `"|2,0>"`.
    pub fn parse(s: &str) -> Option<Self> {
        let digits: Vec<u8> = s
            .chars()
            .filter(|c| c.is_ascii_digit())
            .map(|c| c as u8 - b'0')
            .collect();
        match digits.as_slice() {
            [i, j] if *i < 3 && *j < 3 => Some(Self::new(*i, *j)),
            _ => None,
        }
    }
}

impl fmt::Display for BareState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.i, self.j)
    }
}

pub const S00: BareState = BareState::new(0, 0);
pub const S01: BareState = BareState::new(0, 1);
pub const S02: BareState = BareState::new(0, 2);
pub const S10: BareState = BareState::new(1, 0);
pub const S11: BareState = BareState::new(1, 1);
pub const S12: BareState = BareState::new(1, 2);
pub const S20: BareState = BareState::new(2, 0);
pub const S21: BareState = BareState::new(2, 1);
pub const S22: BareState = BareState::new(2, 2);

/// Computational (two-qubit) states in standard order 00, 01, 10, 11.
pub const QUBIT_STATES: [BareState; 4] = [S00, S01, S10, S11];

/// The states carrying the adiabatic CZ phases: 01, 10, 11.
pub const PHASE_STATES: [BareState; 3] = [S01, S10, S11];

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

fn ci(im: f64) -> C64 {
    C64::new(0.0, im)
}

pub fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

/// Gell-Mann matrix `λ_k`, `k ∈ 1..=8`.
pub fn gell_mann(k: usize) -> Matrix3<C64> {
    let z = c(0.0);
    let o = c(1.0);
    match k {
        1 => Matrix3::new(z, o, z, o, z, z, z, z, z),
        2 => Matrix3::new(z, ci(-1.0), z, ci(1.0), z, z, z, z, z),
        3 => Matrix3::new(o, z, z, z, c(-1.0), z, z, z, z),
        4 => Matrix3::new(z, z, o, z, z, z, o, z, z),
        5 => Matrix3::new(z, z, ci(-1.0), z, z, z, ci(1.0), z, z),
        6 => Matrix3::new(z, z, z, z, z, o, z, o, z),
        7 => Matrix3::new(z, z, z, z, z, ci(-1.0), z, ci(1.0), z),
        8 => {
            let s = 1.0 / 3f64.sqrt();
            Matrix3::new(c(s), z, z, z, c(s), z, z, z, c(-2.0 * s))
        }
        _ => panic!("Gell-Mann index must be in 1..=8, got {k}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gell_mann_are_hermitian_traceless_and_normalised() {
        for k in 1..=8 {
            let l = gell_mann(k);
            assert_eq!(l, l.adjoint(), "lambda_{k}");
            assert!(l.trace().norm() < 1e-15);
            assert!(((l * l).trace().re - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn labels_round_trip() {
        for s in BareState::all() {
            assert_eq!(BareState::from_index(s.index()), s);
            assert_eq!(BareState::parse(&s.to_string()), Some(s));
        }
        assert_eq!(BareState::parse("|2,0>"), Some(S20));
        assert_eq!(BareState::parse("30"), None);
    }
}
