// SPDX-License-Identifier: Apache-2.0

//! Randomized property suites and acceptance checks for `fluxgate`.
//!
//! The property checks live in [`properties`] and run both as proptest unit
//! tests and, with a fixed seed, from the acceptance runner in
//! `tests/acceptance.rs`.

pub mod criteria;
pub mod properties;

/// Verdict of one acceptance criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    /// Measured values, one line.
    pub summary: String,
    /// Extra context printed under the verdict line.
    pub notes: Vec<String>,
}

impl Outcome {
    pub fn new(pass: bool, summary: String) -> Self {
        Self {
            pass,
            summary,
            notes: Vec::new(),
        }
    }

    pub fn note(&mut self, line: String) {
        self.notes.push(line);
    }
}
