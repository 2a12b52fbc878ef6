// SPDX-License-Identifier: Apache-2.0

//! Time-dependent simulation of the nine-level system and reconstruction
//! of the realised gate.
//!
//! Propagation uses the midpoint rule with an exact Hermitian exponential
//! per step. The rotating frame is generated by the uncoupled Hamiltonian at
//! zero flux, so a static decoupled system is the identity in that frame.

mod fidelity;
mod rank;

pub use fidelity::{
    aligned_entrywise_distance, cz_extended, fidelity_distance, z_correction, FidelityMode, FidelityTable,
    Restriction,
};
pub use rank::{
    classify_pair, concordance_table, kendall_tau_b, rank_check, KendallTau, PairRow, PairVerdict, RankConfig, RankReport, RankRow,
};

use nalgebra::{SMatrix, SVector};
use serde::Serialize;

use crate::basis::{BareState, C64, DIM, PHASE_STATES, S00, S01, S02, S10, S11, S12, S20, S21};
use crate::device::{bare_energies, eigh, hamiltonian_raw, DeviceParams, Matrix9};
use crate::error::{Error, Result};
use crate::numerics::simpson;
use crate::spectrum::TrackedSpectrum;
use crate::trajectory::Trajectory;

/// Default propagation step, ns.
pub const DEFAULT_DT: f64 = 1e-3;
/// Largest accepted `max|E|·dt`, rad.
pub const MAX_STEP_PHASE: f64 = 0.5;

pub type Matrix8 = SMatrix<C64, 8, 8>;

/// Gate basis: `|0,0⟩` followed by the coupled states in idle-energy order.
pub const B8: [BareState; 8] = [S00, S01, S10, S02, S11, S20, S12, S21];

#[derive(Debug, Clone, PartialEq)]
pub struct PropagatorResult {
    pub u_lab: Matrix9,
    /// `exp(iH₀τ)·U_lab·exp(−iH₀ε)` with `H₀` the uncoupled Hamiltonian at
    /// zero flux.
    pub u_rot: Matrix9,
    pub dt: f64,
    pub steps: usize,
    /// Largest entry of `|U†U − I|`.
    pub unitarity_defect: f64,
}

fn step_count(traj: &Trajectory, dt: f64) -> Result<(usize, f64)> {
    if !(dt > 0.0) {
        return Err(Error::StepTooLarge(format!("time step must be positive, got {dt}")));
    }
    let steps = ((traj.duration() / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((steps, traj.duration() / steps as f64))
}

/// Visits every step propagator `exp(−iH(t_mid)dt)` in time order.
fn for_each_step(
    traj: &Trajectory,
    params: &DeviceParams,
    dt: f64,
    mut visit: impl FnMut(usize, f64, &Matrix9),
) -> Result<(usize, f64)> {
    let (steps, h) = step_count(traj, dt)?;
    for n in 0..steps {
        let t_mid = traj.epsilon() + (n as f64 + 0.5) * h;
        let (vals, vecs) = eigh(&hamiltonian_raw(params, traj.phi_at(t_mid)));
        let top = vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if top * h > MAX_STEP_PHASE {
            return Err(Error::StepTooLarge(format!(
                "max|E|*dt = {:.3} exceeds {MAX_STEP_PHASE}; reduce dt below {:.3e} ns",
                top * h,
                MAX_STEP_PHASE / top
            )));
        }
        let phases = SVector::<C64, DIM>::from_fn(|k, _| C64::from_polar(1.0, -vals[k] * h));
        let step = vecs * Matrix9::from_diagonal(&phases) * vecs.adjoint();
        visit(n, traj.epsilon() + (n as f64 + 1.0) * h, &step);
    }
    Ok((steps, h))
}

fn frame(params: &DeviceParams, t: f64) -> SVector<C64, DIM> {
    let e0 = bare_energies(params, 0.0);
    SVector::from_fn(|k, _| C64::from_polar(1.0, e0[k] * t))
}

/// Full propagator over `[ε, τ]` with step close to `dt` (the interval is
/// split into an integer number of equal steps).
pub fn propagate(traj: &Trajectory, params: &DeviceParams, dt: f64) -> Result<PropagatorResult> {
    let mut u = Matrix9::identity();
    let (steps, h) = for_each_step(traj, params, dt, |_, _, step| u = step * u)?;
    let (fa, fb) = (frame(params, traj.tau()), frame(params, -traj.epsilon()));
    let u_rot = Matrix9::from_fn(|r, c| fa[r] * u[(r, c)] * fb[c]);
    let unitarity_defect = (u.adjoint() * u - Matrix9::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok(PropagatorResult { u_lab: u, u_rot, dt: h, steps, unitarity_defect })
}

/// Bare-state populations along the evolution of `initial`, recorded every
/// `every` steps (and at both ends).
pub fn population_history(
    traj: &Trajectory,
    params: &DeviceParams,
    dt: f64,
    initial: BareState,
    every: usize,
) -> Result<Vec<(f64, [f64; DIM])>> {
    let every = every.max(1);
    let mut psi = SVector::<C64, DIM>::zeros();
    psi[initial.index()] = C64::from(1.0);
    let pops = |v: &SVector<C64, DIM>| std::array::from_fn(|k| v[k].norm_sqr());
    let mut out = vec![(traj.epsilon(), pops(&psi))];
    let (steps, _) = step_count(traj, dt)?;
    for_each_step(traj, params, dt, |n, t, step| {
        psi = step * psi;
        if (n + 1) % every == 0 || n + 1 == steps {
            out.push((t, pops(&psi)));
        }
    })?;
    Ok(out)
}

/// Phases on the three states carrying the conditional phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseTriple {
    #[serde(rename = "01")]
    pub p01: f64,
    #[serde(rename = "10")]
    pub p10: f64,
    #[serde(rename = "11")]
    pub p11: f64,
}

impl PhaseTriple {
    pub fn get(&self, s: BareState) -> f64 {
        match (s.i, s.j) {
            (0, 1) => self.p01,
            (1, 0) => self.p10,
            (1, 1) => self.p11,
            _ => panic!("no phase stored for |{s}>"),
        }
    }

    fn from_fn(mut f: impl FnMut(BareState) -> f64) -> Self {
        Self { p01: f(S01), p10: f(S10), p11: f(S11) }
    }

    /// `Θ₁₁ − Θ₀₁ − Θ₁₀`.
    pub fn conditional(&self) -> f64 {
        self.p11 - self.p01 - self.p10
    }
}

/// Adiabatic phase bookkeeping for one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdiabaticPhases {
    /// `Θ_ij = ∫ δ_ij(φ(t)) dt`.
    pub theta: PhaseTriple,
    /// Idle dressing `χ_ij = ω_ij(0) − E_ij(0)` of the coupled levels.
    pub chi: PhaseTriple,
    /// Evolution time `τ − ε`.
    pub duration: f64,
}

impl AdiabaticPhases {
    /// Phases expected on the diagonal of the rotating-frame propagator:
    /// `Θ_ij − χ_ij·(τ − ε)`.
    pub fn predicted(&self) -> PhaseTriple {
        PhaseTriple::from_fn(|s| self.theta.get(s) - self.chi.get(s) * self.duration)
    }
}

pub fn adiabatic_phases(traj: &Trajectory, spectrum: &TrackedSpectrum) -> Result<AdiabaticPhases> {
    let h = traj.step()?;
    let mut theta = PhaseTriple { p01: 0.0, p10: 0.0, p11: 0.0 };
    for s in PHASE_STATES {
        let d = traj.phi_samples().iter().map(|&p| spectrum.delta(s, p)).collect::<Result<Vec<_>>>()?;
        let v = simpson(&d, h);
        match (s.i, s.j) {
            (0, 1) => theta.p01 = v,
            (1, 0) => theta.p10 = v,
            _ => theta.p11 = v,
        }
    }
    let e0 = bare_energies(spectrum.params(), 0.0);
    let chi = PhaseTriple::from_fn(|s| spectrum.idle_energy(s) - e0[s.index()]);
    Ok(AdiabaticPhases { theta, chi, duration: traj.duration() })
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let y = x.rem_euclid(tau);
    if y > std::f64::consts::PI {
        y - tau
    } else {
        y
    }
}

/// Realised gate on `B8` with phase, leakage and distance diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    pub basis: Vec<String>,
    /// `M[f][e] = ⟨f|U_rot|e⟩` over `B8`.
    #[serde(serialize_with = "ser_matrix8")]
    pub m: Matrix8,
    #[serde(serialize_with = "ser_matrix4")]
    pub m_qubit: nalgebra::Matrix4<C64>,
    pub theta_adiabatic: PhaseTriple,
    /// Adiabatic phases corrected for the idle dressing of the frame.
    pub theta_predicted: PhaseTriple,
    /// `arg M_kk` on the phase states, wrapped to `(−π, π]`.
    pub theta_simulated: PhaseTriple,
    /// Wrapped simulated minus predicted phase, per state.
    pub phase_error: PhaseTriple,
    pub conditional_phase_predicted: f64,
    pub conditional_phase_simulated: f64,
    /// `|⟨2,0|U_rot|1,1⟩|²`.
    pub leakage_20: f64,
    pub fidelity: FidelityTable,
    pub dt: f64,
    pub unitarity_defect: f64,
}

fn ser_c64(z: &C64) -> [f64; 2] {
    [z.re, z.im]
}

fn ser_matrix8<S: serde::Serializer>(m: &Matrix8, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = (0..8).map(|r| (0..8).map(|c| ser_c64(&m[(r, c)])).collect()).collect();
    rows.serialize(s)
}

fn ser_matrix4<S: serde::Serializer>(m: &nalgebra::Matrix4<C64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    let rows: Vec<Vec<[f64; 2]>> = (0..4).map(|r| (0..4).map(|c| ser_c64(&m[(r, c)])).collect()).collect();
    rows.serialize(s)
}

/// Restricts `U_rot` to `B8` and evaluates phases, leakage and distances.
pub fn reconstruct_gate(prop: &PropagatorResult, phases: &AdiabaticPhases) -> GateReport {
    let m = Matrix8::from_fn(|r, c| prop.u_rot[(B8[r].index(), B8[c].index())]);
    let m_qubit = nalgebra::Matrix4::from_fn(|r, c| m[(r, c)]);
    let predicted = phases.predicted();
    let pos = |s: BareState| B8.iter().position(|&b| b == s).expect("phase state in B8");
    let simulated = PhaseTriple::from_fn(|s| m[(pos(s), pos(s))].arg());
    let phase_error = PhaseTriple::from_fn(|s| wrap_phase(simulated.get(s) - predicted.get(s)));
    let fidelity = FidelityTable::evaluate(&m, &predicted);
    GateReport {
        basis: B8.iter().map(|s| s.to_string()).collect(),
        m,
        m_qubit,
        theta_adiabatic: phases.theta,
        theta_predicted: predicted,
        theta_simulated: simulated,
        phase_error,
        conditional_phase_predicted: predicted.conditional(),
        conditional_phase_simulated: wrap_phase(simulated.conditional()),
        leakage_20: prop.u_rot[(S20.index(), S11.index())].norm_sqr(),
        fidelity,
        dt: prop.dt,
        unitarity_defect: prop.unitarity_defect,
    }
}

/// Propagates, computes adiabatic phases and reconstructs the gate.
pub fn simulate_gate(traj: &Trajectory, spectrum: &TrackedSpectrum, dt: f64) -> Result<GateReport> {
    let prop = propagate(traj, spectrum.params(), dt)?;
    let phases = adiabatic_phases(traj, spectrum)?;
    Ok(reconstruct_gate(&prop, &phases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::{Family, PulseShape, TrajectoryParams};

    fn gaussian(sigma: f64, tau: f64, amp: f64) -> Trajectory {
        let shape = PulseShape::new(&TrajectoryParams::new(Family::Gaussian, sigma, None, tau)).unwrap();
        Trajectory::from_shape(shape, amp, 4001).unwrap()
    }

    #[test]
    fn static_decoupled_system_is_identity_in_frame() {
        let p = DeviceParams::reference().with_coupling(0.0);
        let traj = Trajectory::constant(0.0, 1e-3, 5.0, 11);
        let prop = propagate(&traj, &p, 1e-3).unwrap();
        assert!((prop.u_rot - Matrix9::identity()).iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn decoupled_gate_is_diagonal_with_adiabatic_phases() {
        let p = DeviceParams::reference().with_coupling(0.0);
        let s = TrackedSpectrum::track(&p, 0.7, 1401).unwrap();
        let traj = gaussian(2.0, 10.0, 0.5);
        let rep = simulate_gate(&traj, &s, 1e-3).unwrap();
        for r in 0..8 {
            for c in 0..8 {
                let z = rep.m[(r, c)].norm();
                if r == c {
                    assert!((z - 1.0).abs() <= 1e-9);
                } else {
                    assert!(z <= 1e-12);
                }
            }
        }
        for st in PHASE_STATES {
            assert!(rep.phase_error.get(st).abs() <= 1e-6, "{st}: {}", rep.phase_error.get(st));
        }
        let th = rep.theta_adiabatic;
        assert!((th.p11 - th.p10).abs() < 1e-9 && th.p01.abs() < 1e-12);
    }

    #[test]
    fn step_size_guard() {
        let p = DeviceParams::reference();
        let traj = gaussian(2.0, 20.0, 0.3);
        assert!(matches!(propagate(&traj, &p, 0.01), Err(Error::StepTooLarge(_))));
    }

    #[test]
    fn coupled_propagation_is_unitary_and_converged() {
        let p = DeviceParams::reference();
        let traj = gaussian(2.0, 8.0, 0.5);
        let a = propagate(&traj, &p, 1e-3).unwrap();
        let b = propagate(&traj, &p, 5e-4).unwrap();
        assert!(a.unitarity_defect <= 1e-9);
        let drift = (a.u_rot - b.u_rot).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(drift <= 1e-6, "{drift}");
    }

    #[test]
    fn populations_are_normalised() {
        let p = DeviceParams::reference();
        let hist = population_history(&gaussian(2.0, 5.0, 0.55), &p, 1e-3, S11, 100).unwrap();
        assert_eq!(hist.first().unwrap().1[S11.index()], 1.0);
        for (_, pops) in &hist {
            assert!((pops.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        }
        assert!((hist.last().unwrap().0 - 5.0).abs() < 1e-12);
    }

    #[test]
    fn wrap_phase_range() {
        assert!((wrap_phase(3.0 * std::f64::consts::PI) - std::f64::consts::PI).abs() < 1e-12);
        assert!((wrap_phase(-0.5) + 0.5).abs() < 1e-15);
    }
}
