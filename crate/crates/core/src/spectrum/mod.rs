// SPDX-License-Identifier: Apache-2.0

//! Flux-tracked spectrum of the coupled Hamiltonian.
//!
//! Eigenvalues are labelled by the bare state they coincide with at zero
//! flux and the labels are carried along the flux grid by maximum
//! eigenvector overlap, so each label follows its adiabatic branch through
//! avoided crossings.

mod crossings;

pub use crossings::{adiabatic_gap, find_crossing, find_crossings, Crossing, CrossingId, CrossingSet};

use std::f64::consts::FRAC_PI_2;

use crate::basis::{BareState, C64, DIM, S01, S10, S11};
use crate::device::{eigh, hamiltonian_raw, DeviceParams, Matrix9};
use crate::error::{Error, Result};
use crate::numerics::{linspace, MonotoneCubic};

/// Overlap below which a continuation step is subdivided.
const MIN_OVERLAP: f64 = 0.9;
/// Smallest flux step the adaptive continuation may take.
const MIN_STEP: f64 = 1e-6;
/// Default flux step for `∂ζ/∂φ`.
pub const DEFAULT_DZETA_STEP: f64 = 1e-4;

/// Labelled eigenvalue and eigenvector curves on an ascending flux grid.
#[derive(Debug, Clone)]
pub struct TrackedSpectrum {
    params: DeviceParams,
    phi: Vec<f64>,
    /// `energies[label][k]`, rad/ns.
    energies: Vec<Vec<f64>>,
    /// Eigenvectors per grid point; column `label.index()` belongs to `label`.
    vectors: Vec<Matrix9>,
    curves: Vec<MonotoneCubic>,
}

/// A finite-difference estimate and whether it had to be one-sided.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Derivative {
    pub value: f64,
    pub one_sided: bool,
}

impl TrackedSpectrum {
    /// Tracks all nine labels over `steps` uniform samples of `[0, phi_max]`.
    pub fn track(params: &DeviceParams, phi_max: f64, steps: usize) -> Result<Self> {
        if !(phi_max > 0.0 && phi_max < FRAC_PI_2) {
            return Err(Error::FluxDomain { phi: phi_max });
        }
        if steps < 2 {
            return Err(Error::Invalid("spectrum tracking needs at least 2 samples".into()));
        }
        let phi = linspace(0.0, phi_max, steps);
        let mut energies = (0..DIM).map(|_| Vec::with_capacity(steps)).collect::<Vec<_>>();
        let mut vectors = Vec::with_capacity(steps);

        let (vals0, vecs0) = eigh(&hamiltonian_raw(params, 0.0));
        let (vals, vecs) = label_against(&Matrix9::identity(), &vals0, &vecs0)
            .ok_or(Error::Tracking { phi: 0.0 })?;
        push(&mut energies, &mut vectors, &vals, vecs);

        for k in 1..steps {
            let prev = vectors.last().expect("seeded at phi = 0");
            let (vals, vecs) = advance(params, prev, phi[k - 1], phi[k])?;
            push(&mut energies, &mut vectors, &vals, vecs);
        }

        let curves = energies
            .iter()
            .map(|e| MonotoneCubic::new(phi.clone(), e.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { params: *params, phi, energies, vectors, curves })
    }

    /// Tracks `[0, A2]`, the admissible flux range for CZ trajectories.
    pub fn track_to_a2(params: &DeviceParams, steps: usize) -> Result<Self> {
        let a2 = find_crossing(params, CrossingId::A2)
            .ok_or_else(|| Error::Invalid("no |1,1>/|2,0> avoided crossing found".into()))?;
        Self::track(params, a2.phi, steps)
    }

    pub fn params(&self) -> &DeviceParams {
        &self.params
    }

    pub fn phi_grid(&self) -> &[f64] {
        &self.phi
    }

    pub fn phi_max(&self) -> f64 {
        self.phi[self.phi.len() - 1]
    }

    /// Sampled curve `ω_label(φ_k)`.
    pub fn energies(&self, label: BareState) -> &[f64] {
        &self.energies[label.index()]
    }

    pub fn vectors(&self, k: usize) -> &Matrix9 {
        &self.vectors[k]
    }

    /// Eigenvector of `label` at grid point `k`.
    pub fn vector(&self, label: BareState, k: usize) -> [C64; DIM] {
        let col = self.vectors[k].column(label.index());
        std::array::from_fn(|r| col[r])
    }

    /// Interpolated eigenvalue of `label` at `phi`.
    pub fn energy(&self, label: BareState, phi: f64) -> Result<f64> {
        self.curves[label.index()]
            .eval(phi)
            .ok_or(Error::Extrapolation { phi, lo: 0.0, hi: self.phi_max() })
    }

    /// Dressed idle-point energy `ω_label(0)`.
    pub fn idle_energy(&self, label: BareState) -> f64 {
        self.energies[label.index()][0]
    }

    /// `δ_label(φ) = ω_label(0) − ω_label(φ)`.
    pub fn delta(&self, label: BareState, phi: f64) -> Result<f64> {
        Ok(self.idle_energy(label) - self.energy(label, phi)?)
    }

    /// `ζ(φ) = δ₁₁(φ) − δ₁₀(φ) − δ₀₁(φ)`.
    pub fn zeta(&self, phi: f64) -> Result<f64> {
        Ok(self.delta(S11, phi)? - self.delta(S10, phi)? - self.delta(S01, phi)?)
    }

    /// `ζ` on every grid sample.
    pub fn zeta_samples(&self) -> Vec<f64> {
        let (e11, e10, e01) = (self.energies(S11), self.energies(S10), self.energies(S01));
        (0..self.phi.len())
            .map(|k| (e11[0] - e11[k]) - (e10[0] - e10[k]) - (e01[0] - e01[k]))
            .collect()
    }

    /// Central-difference `∂ζ/∂φ` with step `h`; one-sided second-order
    /// differences within `h` of either end of the tracked range.
    pub fn dzeta_dphi(&self, phi: f64, h: f64) -> Result<Derivative> {
        let (lo, hi) = (0.0, self.phi_max());
        if !(phi >= lo && phi <= hi) {
            return Err(Error::Extrapolation { phi, lo, hi });
        }
        let z = |x: f64| self.zeta(x);
        if phi - h >= lo && phi + h <= hi {
            return Ok(Derivative { value: (z(phi + h)? - z(phi - h)?) / (2.0 * h), one_sided: false });
        }
        let value = if phi - h < lo {
            (-3.0 * z(phi)? + 4.0 * z(phi + h)? - z(phi + 2.0 * h)?) / (2.0 * h)
        } else {
            (3.0 * z(phi)? - 4.0 * z(phi - h)? + z(phi - 2.0 * h)?) / (2.0 * h)
        };
        Ok(Derivative { value, one_sided: true })
    }

    /// Largest deviation from orthonormality of the stored eigenbases.
    pub fn max_orthonormality_defect(&self) -> f64 {
        self.vectors
            .iter()
            .map(|v| (v.adjoint() * v - Matrix9::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max))
            .fold(0.0, f64::max)
    }
}

fn push(energies: &mut [Vec<f64>], vectors: &mut Vec<Matrix9>, vals: &[f64; DIM], vecs: Matrix9) {
    for (curve, v) in energies.iter_mut().zip(vals) {
        curve.push(*v);
    }
    vectors.push(vecs);
}

// Continues the labelling from `prev` (at `a`) to `b`, halving the step
// whenever the overlap-based assignment is not confident.
fn advance(params: &DeviceParams, prev: &Matrix9, a: f64, b: f64) -> Result<([f64; DIM], Matrix9)> {
    let (vals, vecs) = eigh(&hamiltonian_raw(params, b));
    if let Some(assigned) = label_against(prev, &vals, &vecs) {
        return Ok(assigned);
    }
    if b - a <= MIN_STEP {
        return Err(Error::Tracking { phi: b });
    }
    let mid = 0.5 * (a + b);
    let (_, mid_vecs) = advance(params, prev, a, mid)?;
    advance(params, &mid_vecs, mid, b)
}

// Greedy maximum-overlap assignment of eigenvector columns to the label
// columns of `reference`. Returns label-ordered energies and vectors with
// each vector's phase aligned to its reference, or `None` when some label
// could only be matched below `MIN_OVERLAP`.
fn label_against(reference: &Matrix9, vals: &nalgebra::SVector<f64, DIM>, vecs: &Matrix9) -> Option<([f64; DIM], Matrix9)> {
    let overlaps = reference.adjoint() * vecs;
    let mut candidates: Vec<(f64, usize, usize)> = Vec::with_capacity(DIM * DIM);
    for label in 0..DIM {
        for col in 0..DIM {
            candidates.push((overlaps[(label, col)].norm(), label, col));
        }
    }
    candidates.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut label_of_col = [usize::MAX; DIM];
    let mut col_of_label = [usize::MAX; DIM];
    let mut taken = 0;
    for (ov, label, col) in candidates {
        if col_of_label[label] != usize::MAX || label_of_col[col] != usize::MAX {
            continue;
        }
        if ov < MIN_OVERLAP {
            return None;
        }
        col_of_label[label] = col;
        label_of_col[col] = label;
        taken += 1;
        if taken == DIM {
            break;
        }
    }

    let mut energies = [0.0; DIM];
    let mut out = Matrix9::zeros();
    for label in 0..DIM {
        let col = col_of_label[label];
        energies[label] = vals[col];
        let ov = overlaps[(label, col)];
        let phase = if ov.norm() > 0.0 { ov.conj() / ov.norm() } else { C64::new(1.0, 0.0) };
        out.set_column(label, &(vecs.column(col) * phase));
    }
    Some((energies, out))
}

/// Convenience wrapper mirroring [`TrackedSpectrum::track`].
pub fn track_spectrum(params: &DeviceParams, phi_max: f64, steps: usize) -> Result<TrackedSpectrum> {
    TrackedSpectrum::track(params, phi_max, steps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::*;
    use crate::device::{bare_energies, qubit_detuning};

    fn reference() -> TrackedSpectrum {
        TrackedSpectrum::track_to_a2(&DeviceParams::reference(), 2001).unwrap()
    }

    #[test]
    fn idle_labels_coincide_with_bare_states() {
        let s = reference();
        for label in BareState::all() {
            let v = s.vector(label, 0);
            assert!(v[label.index()].norm() >= 0.99, "{label}");
        }
    }

    #[test]
    fn decoupled_energies_are_bare_sums() {
        let p = DeviceParams::reference().with_coupling(0.0);
        let s = TrackedSpectrum::track(&p, 0.58, 301).unwrap();
        for (k, &phi) in s.phi_grid().iter().enumerate() {
            let bare = bare_energies(&p, phi);
            for label in BareState::all() {
                assert!((s.energies(label)[k] - bare[label.index()]).abs() <= 1e-12);
                let i0 = s.energies(BareState::new(label.i, 0))[k];
                let j0 = s.energies(BareState::new(0, label.j))[k];
                assert!((s.energies(label)[k] - (i0 + j0)).abs() <= 1e-12);
            }
        }
        for x in [0.0, 0.13, 0.4, 0.58] {
            assert!(s.zeta(x).unwrap().abs() < 1e-12);
            assert!(s.delta(S01, x).unwrap().abs() < 1e-12);
            let closed = qubit_detuning(&p, x);
            assert!((s.delta(S10, x).unwrap() - closed).abs() < 1e-6 * closed.max(1.0));
        }
        assert!(s.dzeta_dphi(0.3, DEFAULT_DZETA_STEP).unwrap().value.abs() < 1e-8);
    }

    #[test]
    fn dispersive_shift_of_11_matches_second_order_estimate() {
        let p = DeviceParams::reference();
        let s = reference();
        let shift = s.idle_energy(S11) - (p.omega1 + p.omega2);
        // Second-order repulsion from |2,0> (above) and |0,2> (below).
        let to_20 = 2.0 * p.g * p.g / (p.detuning() + p.alpha1);
        let to_02 = 2.0 * p.g * p.g / (p.detuning() - p.alpha2);
        let estimate = -to_20 + to_02;
        assert!(shift < 0.0);
        assert!((shift - estimate).abs() < 0.1 * estimate.abs(), "{shift} vs {estimate}");
    }

    #[test]
    fn zeta_vanishes_at_idle_and_grows_towards_a2() {
        let s = reference();
        assert_eq!(s.zeta(0.0).unwrap(), 0.0);
        for label in BareState::all() {
            assert_eq!(s.delta(label, 0.0).unwrap(), 0.0);
        }
        let grid = linspace(1e-3, s.phi_max(), 500);
        let z: Vec<f64> = grid.iter().map(|&x| s.zeta(x).unwrap()).collect();
        assert!(z.iter().all(|&v| v > 0.0));
        assert!(z.windows(2).all(|w| w[1] > w[0]));
        // Sum of 01 and 10 pulls away from 11 towards the crossing.
        let dev = |x: f64| {
            s.energy(S11, x).unwrap() - s.energy(S01, x).unwrap() - s.energy(S10, x).unwrap()
        };
        assert!(dev(s.phi_max()) < dev(0.3) && dev(0.3) < dev(0.0));
        for x in [0.1, 0.3, 0.5] {
            let d = s.dzeta_dphi(x, DEFAULT_DZETA_STEP).unwrap();
            assert!(!d.one_sided && d.value > 0.0);
        }
    }

    #[test]
    fn zeta_slope_at_origin_is_flat() {
        let s = reference();
        let d1 = s.dzeta_dphi(0.0, 2e-3).unwrap();
        let d2 = s.dzeta_dphi(0.0, 1e-3).unwrap();
        assert!(d1.one_sided);
        // Richardson extrapolation of the O(h^2) one-sided estimates.
        let extrapolated = (4.0 * d2.value - d1.value) / 3.0;
        assert!(extrapolated.abs() < 1e-4, "{extrapolated}");
        assert!(d2.value.abs() < 1e-3);
    }

    #[test]
    fn deltas_are_nonnegative_on_the_tracked_range() {
        let s = reference();
        for label in [S01, S10, S11, S20, S02] {
            for &x in s.phi_grid() {
                assert!(s.delta(label, x).unwrap() >= -1e-12, "{label} at {x}");
            }
        }
    }

    #[test]
    fn refinement_reproduces_samples_and_interpolant() {
        let p = DeviceParams::reference();
        let coarse = TrackedSpectrum::track(&p, 0.58, 1001).unwrap();
        let fine = TrackedSpectrum::track(&p, 0.58, 2001).unwrap();
        for label in BareState::all() {
            for k in 0..1001 {
                let a = coarse.energies(label)[k];
                let b = fine.energies(label)[2 * k];
                assert!((a - b).abs() <= 1e-9);
            }
        }
        for x in linspace(0.0, 0.58, 137) {
            assert!((coarse.zeta(x).unwrap() - fine.zeta(x).unwrap()).abs() < 1e-8);
        }
    }

    #[test]
    fn eigenbases_are_orthonormal() {
        assert!(reference().max_orthonormality_defect() <= 1e-12);
    }

    #[test]
    fn tracking_follows_adiabatic_branches_through_a2() {
        let p = DeviceParams::reference();
        let s = TrackedSpectrum::track(&p, 0.65, 201).unwrap();
        let last = s.phi_grid().len() - 1;
        // Past the crossing the upper branch (label 20) carries the |1,1> character.
        assert!(s.vector(S20, last)[S11.index()].norm() > 0.9);
        assert!(s.energies(S20)[last] > s.energies(S11)[last]);
    }

    #[test]
    fn out_of_range_requests_are_rejected() {
        let s = reference();
        assert!(matches!(s.zeta(s.phi_max() + 1e-6), Err(Error::Extrapolation { .. })));
        assert!(s.delta(S11, -1e-9).is_err());
        assert!(TrackedSpectrum::track(&DeviceParams::reference(), 1.6, 10).is_err());
        assert!(TrackedSpectrum::track(&DeviceParams::reference(), 0.5, 1).is_err());
    }
}
