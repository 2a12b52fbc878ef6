// SPDX-License-Identifier: Apache-2.0

//! Simulation-free scores for a flux trajectory: the diabaticity
//! semi-norm, the residual of the constrained Euler–Lagrange equation and a
//! two-level estimate of leakage into `|2,0⟩`.

use nalgebra::{Matrix2, Matrix3};
use serde::{Deserialize, Serialize};

use crate::basis::{gell_mann, C64};
use crate::basis::S11;
use crate::device::{qubit_detuning, qubit_detuning_slope, DeviceParams};
use crate::error::{Error, Result};
use crate::numerics::simpson;
use crate::spectrum::{TrackedSpectrum, DEFAULT_DZETA_STEP};
use crate::trajectory::Trajectory;

/// Flux below which the residual operator is considered singular.
pub const SINGULAR_FLUX: f64 = 1e-6;
/// Largest `(Δ + α₁)·dt` accepted by [`interaction_propagator`].
pub const MAX_PHASE_STEP: f64 = 0.1;

/// Which deviation function enters the norm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaSource {
    /// Decoupled qubit deviation `(ω₁ − α₁)(1 − √cos φ)`.
    #[default]
    ClosedForm,
    /// Tracked `δ₁₁` of the coupled spectrum.
    Coupled11,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MetricConfig {
    pub upsilon: f64,
    pub kappa: f64,
    pub lambda: f64,
    /// Time step for `φ̇`, `φ̈`, ns.
    pub fd_step: f64,
    /// Flux step for `∂ζ/∂φ`, rad.
    pub dzeta_step: f64,
    pub delta_source: DeltaSource,
    /// Step of the two-level leakage propagator, ns.
    pub leakage_dt: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            upsilon: 1.0,
            kappa: 1.0,
            lambda: 1.0,
            fd_step: 1e-3,
            dzeta_step: DEFAULT_DZETA_STEP,
            delta_source: DeltaSource::ClosedForm,
            leakage_dt: 0.01,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0) {
            return Err(Error::Invalid(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.fd_step > 0.0 && self.dzeta_step > 0.0 && self.leakage_dt > 0.0) {
            return Err(Error::Invalid("finite-difference and propagation steps must be positive".into()));
        }
        Ok(())
    }
}

/// `∫ [υ·δ(φ) + κ·(dδ(φ)/dt)²] dt` over the trajectory grid.
pub fn n_norm(traj: &Trajectory, spectrum: &TrackedSpectrum, config: &MetricConfig) -> Result<f64> {
    let (a, b) = n_norm_terms(traj, spectrum, config)?;
    Ok(config.upsilon * a + config.kappa * b)
}

/// The unweighted pieces `(∫δ dt, ∫δ̇² dt)` of the norm.
pub fn n_norm_terms(traj: &Trajectory, spectrum: &TrackedSpectrum, config: &MetricConfig) -> Result<(f64, f64)> {
    config.validate()?;
    let h = traj.step()?;
    let params = spectrum.params();
    let mut delta = Vec::with_capacity(traj.t_grid().len());
    let mut rate2 = Vec::with_capacity(traj.t_grid().len());
    for (&t, &phi) in traj.t_grid().iter().zip(traj.phi_samples()) {
        let (d, slope) = match config.delta_source {
            DeltaSource::ClosedForm => (qubit_detuning(params, phi), qubit_detuning_slope(params, phi)),
            DeltaSource::Coupled11 => {
                let e = 1e-6;
                let slope = if phi < e {
                    (spectrum.delta(S11, phi + e)? - spectrum.delta(S11, phi)?) / e
                } else {
                    (spectrum.delta(S11, phi + e)? - spectrum.delta(S11, phi - e)?) / (2.0 * e)
                };
                (spectrum.delta(S11, phi)?, slope)
            }
        };
        let rate = slope * traj.phi_dot(t, config.fd_step);
        delta.push(d);
        rate2.push(rate * rate);
    }
    Ok((simpson(&delta, h), simpson(&rate2, h)))
}

/// Sampled residual `D(φ)(t)` of the constrained Euler–Lagrange equation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualCurve {
    pub t: Vec<f64>,
    /// `None` where the sample is masked.
    pub d: Vec<Option<f64>>,
    /// `(∫ D² dt)^{1/2}` with masked samples contributing zero.
    pub l2: f64,
    /// Samples with `φ ≤ 1e-6` (cot φ singularity).
    pub singular: usize,
    /// Samples beyond the tracked spectrum, where `∂ζ/∂φ` is unavailable.
    pub out_of_range: usize,
}

/// Pointwise residual
/// `λ·cos φ·cot φ·∂ζ/∂φ − 2(υ/κ)·cos^{3/2} φ + (1 + cos² φ)·φ̇² − sin 2φ·φ̈`.
pub fn residual_operator(phi: f64, phi_dot: f64, phi_ddot: f64, dzeta: f64, config: &MetricConfig) -> f64 {
    let (s, c) = phi.sin_cos();
    config.lambda * c * (c / s) * dzeta - 2.0 * (config.upsilon / config.kappa) * (c * c * c).sqrt()
        + (1.0 + c * c) * phi_dot * phi_dot
        - (2.0 * phi).sin() * phi_ddot
}

pub fn el_residual(traj: &Trajectory, spectrum: &TrackedSpectrum, config: &MetricConfig) -> Result<ResidualCurve> {
    config.validate()?;
    let h = traj.step()?;
    let (mut singular, mut out_of_range) = (0, 0);
    let mut d = Vec::with_capacity(traj.t_grid().len());
    for (&t, &phi) in traj.t_grid().iter().zip(traj.phi_samples()) {
        if phi <= SINGULAR_FLUX {
            singular += 1;
            d.push(None);
            continue;
        }
        if phi > spectrum.phi_max() {
            out_of_range += 1;
            d.push(None);
            continue;
        }
        let dz = spectrum.dzeta_dphi(phi, config.dzeta_step)?.value;
        d.push(Some(residual_operator(phi, traj.phi_dot(t, config.fd_step), traj.phi_ddot(t, config.fd_step), dz, config)));
    }
    let sq: Vec<f64> = d.iter().map(|v| v.map_or(0.0, |x| x * x)).collect();
    Ok(ResidualCurve { t: traj.t_grid().to_vec(), d, l2: simpson(&sq, h).max(0.0).sqrt(), singular, out_of_range })
}

/// Two-level propagator on `(|1,1⟩, |2,0⟩)` in the idle rotating frame.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionPropagator {
    pub u: Matrix2<C64>,
    /// `|⟨2,0|U|1,1⟩|²`.
    pub transfer: f64,
    pub steps: usize,
    pub dt: f64,
}

/// Time-ordered product of midpoint step exponentials of
/// `[[−δ, √2g·e^{−i(Δ+α₁)t}], [√2g·e^{+i(Δ+α₁)t}, −2δ]]` over `[ε, τ]`.
pub fn interaction_propagator(traj: &Trajectory, params: &DeviceParams, steps: usize) -> Result<InteractionPropagator> {
    let steps = steps.max(1);
    let dt = traj.duration() / steps as f64;
    let omega = params.detuning() + params.alpha1;
    if omega.abs() * dt > MAX_PHASE_STEP {
        return Err(Error::StepTooLarge(format!(
            "(Delta + alpha1)*dt = {:.3e} exceeds {MAX_PHASE_STEP}; use at least {} steps",
            omega.abs() * dt,
            (omega.abs() * traj.duration() / MAX_PHASE_STEP).ceil()
        )));
    }
    let coupling = std::f64::consts::SQRT_2 * params.g;
    let mut u = Matrix2::<C64>::identity();
    for n in 0..steps {
        let t = traj.epsilon() + (n as f64 + 0.5) * dt;
        let delta = qubit_detuning(params, traj.phi_at(t));
        let off = C64::from_polar(coupling, -omega * t);
        u = expm_hermitian2(-delta, -2.0 * delta, off, dt) * u;
    }
    let transfer = u[(1, 0)].norm_sqr();
    Ok(InteractionPropagator { u, transfer, steps, dt })
}

/// `exp(−i·H·dt)` for `H = [[a, b], [b*, d]]`.
fn expm_hermitian2(a: f64, d: f64, b: C64, dt: f64) -> Matrix2<C64> {
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let r = (half * half + b.norm_sqr()).sqrt();
    let (s, c) = (r * dt).sin_cos();
    let sinc = if r > 0.0 { s / r } else { dt };
    let i = C64::i();
    let phase = C64::from_polar(1.0, -mean * dt);
    Matrix2::new(
            C64::from(c) - i * half * sinc,
            -i * b * sinc,
            -i * b.conj() * sinc,
            C64::from(c) + i * half * sinc,
        )
        * phase
}

/// Interaction-frame generator of the two-excitation block in the basis
/// `(|0,2⟩, |1,1⟩, |2,0⟩)`, coupling in units of `√2g`:
/// `cos((Δ−α₂)t)λ₁ + sin((Δ−α₂)t)λ₂ + cos((Δ+α₁)t)λ₆ + sin((Δ+α₁)t)λ₇ − diag(0, δ, 2δ)`.
pub fn interaction_frame_generator(params: &DeviceParams, phi: f64, t: f64) -> Matrix3<C64> {
    let delta = qubit_detuning(params, phi);
    let w1 = (params.detuning() - params.alpha2) * t;
    let w2 = (params.detuning() + params.alpha1) * t;
    let mut m = gell_mann(1) * C64::from(w1.cos())
        + gell_mann(2) * C64::from(w1.sin())
        + gell_mann(6) * C64::from(w2.cos())
        + gell_mann(7) * C64::from(w2.sin());
    m[(1, 1)] -= delta;
    m[(2, 2)] -= 2.0 * delta;
    m
}

/// Summary scores of one trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub n_norm: f64,
    /// `∫ζ dt`, absent when the trajectory leaves the tracked range.
    pub constraint_value: Option<f64>,
    /// Two-level `|⟨2,0|U_Ev|1,1⟩|²`.
    pub leakage_estimate: Option<f64>,
    pub residual_l2: f64,
    pub residual_singular: usize,
    pub residual_out_of_range: usize,
    #[serde(skip)]
    pub residual_curve: ResidualCurve,
}

pub fn evaluate(traj: &Trajectory, spectrum: &TrackedSpectrum, config: &MetricConfig) -> Result<MetricReport> {
    let n_norm = n_norm(traj, spectrum, config)?;
    let constraint_value = match traj.conditional_phase(spectrum) {
        Ok(v) => Some(v),
        Err(Error::Extrapolation { .. }) => None,
        Err(e) => return Err(e),
    };
    let steps = (traj.duration() / config.leakage_dt).ceil() as usize;
    let leakage_estimate = interaction_propagator(traj, spectrum.params(), steps).ok().map(|p| p.transfer);
    let residual_curve = el_residual(traj, spectrum, config)?;
    Ok(MetricReport {
        n_norm,
        constraint_value,
        leakage_estimate,
        residual_l2: residual_curve.l2,
        residual_singular: residual_curve.singular,
        residual_out_of_range: residual_curve.out_of_range,
        residual_curve,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{S02, S20};
    use crate::device::{bare_energies, interaction};
    use crate::trajectory::{Family, PulseShape, TrajectoryParams};

    fn spectrum() -> TrackedSpectrum {
        TrackedSpectrum::track_to_a2(&DeviceParams::reference(), 801).unwrap()
    }

    fn gaussian(sigma: f64, tau: f64, amp: f64) -> Trajectory {
        let shape = PulseShape::new(&TrajectoryParams::new(Family::Gaussian, sigma, None, tau)).unwrap();
        Trajectory::from_shape(shape, amp, 4001).unwrap()
    }

    #[test]
    fn zero_flux_has_zero_norm() {
        let s = spectrum();
        let traj = Trajectory::constant(0.0, 1e-3, 20.0, 401);
        assert_eq!(n_norm(&traj, &s, &MetricConfig::default()).unwrap(), 0.0);
    }

    #[test]
    fn norm_is_linear_in_kappa() {
        let s = spectrum();
        let traj = gaussian(2.0, 20.0, 0.5);
        let c1 = MetricConfig::default();
        let c2 = MetricConfig { kappa: 2.0, ..c1 };
        let (_, rate) = n_norm_terms(&traj, &s, &c1).unwrap();
        let diff = n_norm(&traj, &s, &c2).unwrap() - n_norm(&traj, &s, &c1).unwrap();
        assert!((diff - rate).abs() <= 1e-12 * rate.abs().max(1.0));
    }

    #[test]
    fn wider_gaussian_has_smaller_norm_in_the_rate_dominated_regime() {
        let s = spectrum();
        let c = MetricConfig::default();
        let narrow = n_norm(&gaussian(2.0, 20.0, 1.0), &s, &c).unwrap();
        let wider = n_norm(&gaussian(3.0, 20.0, 1.0), &s, &c).unwrap();
        assert!(wider < narrow, "{wider} vs {narrow}");
        // With unit weights the δ term takes over beyond σ ≈ 3; once the rate
        // term dominates the ordering extends to σ = 6.
        let rate_heavy = MetricConfig { kappa: 100.0, ..c };
        let wide = n_norm(&gaussian(6.0, 20.0, 1.0), &s, &rate_heavy).unwrap();
        let narrow = n_norm(&gaussian(2.0, 20.0, 1.0), &s, &rate_heavy).unwrap();
        assert!(wide < narrow, "{wide} vs {narrow}");
    }

    #[test]
    fn norm_converges_under_grid_doubling() {
        let s = spectrum();
        let c = MetricConfig::default();
        let traj = gaussian(3.0, 20.0, 0.5);
        let a = n_norm(&traj, &s, &c).unwrap();
        let b = n_norm(&traj.resampled(8001), &s, &c).unwrap();
        assert!((a - b).abs() <= 1e-8 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn coupled_delta_variant_is_close_to_closed_form() {
        let s = spectrum();
        let traj = gaussian(3.0, 20.0, 0.4);
        let closed = n_norm(&traj, &s, &MetricConfig::default()).unwrap();
        let coupled =
            n_norm(&traj, &s, &MetricConfig { delta_source: DeltaSource::Coupled11, ..Default::default() }).unwrap();
        assert!((closed - coupled).abs() < 0.1 * closed, "{closed} vs {coupled}");
    }

    #[test]
    fn residual_of_constant_flux_without_coupling() {
        let p = DeviceParams::reference().with_coupling(0.0);
        let s = TrackedSpectrum::track(&p, 0.7, 401).unwrap();
        let c = 0.4;
        let cfg = MetricConfig::default();
        let r = el_residual(&Trajectory::constant(c, 1e-3, 10.0, 101), &s, &cfg).unwrap();
        let expected = -2.0 * c.cos().powf(1.5);
        for v in &r.d {
            assert!((v.unwrap() - expected).abs() < 1e-9);
        }
    }

    #[test]
    fn lambda_scales_only_the_first_term() {
        let cfg = MetricConfig::default();
        let cfg2 = MetricConfig { lambda: 2.0, ..cfg };
        let (phi, pd, pdd, dz): (f64, f64, f64, f64) = (0.3, 0.2, -0.1, 0.5);
        let first = phi.cos() * phi.cos() / phi.sin() * dz;
        let diff = residual_operator(phi, pd, pdd, dz, &cfg2) - residual_operator(phi, pd, pdd, dz, &cfg);
        assert!((diff - first).abs() < 1e-14);
    }

    #[test]
    fn residual_masks_pulse_edges() {
        let s = spectrum();
        let r = el_residual(&gaussian(2.0, 20.0, 0.5), &s, &MetricConfig::default()).unwrap();
        assert!(r.singular >= 2);
        assert!(r.d[0].is_none() && r.d[r.d.len() - 1].is_none());
        assert!(r.l2.is_finite() && r.l2 > 0.0);
    }

    /// Integrates `D = 0` forward from interior data with RK4 and checks the
    /// residual of the resulting curve is far below that of a generic pulse.
    #[test]
    fn residual_vanishes_on_a_shooting_solution() {
        let s = spectrum();
        let cfg = MetricConfig::default();
        let accel = |phi: f64, v: f64| -> f64 {
            let dz = s.dzeta_dphi(phi, cfg.dzeta_step).unwrap().value;
            residual_operator(phi, v, 0.0, dz, &cfg) / (2.0 * phi).sin()
        };
        let h = 1e-3;
        let n = 200;
        let (mut phi, mut v) = (0.45, 0.5);
        let mut ys = vec![phi];
        for _ in 0..n {
            let (k1p, k1v) = (v, accel(phi, v));
            let (k2p, k2v) = (v + 0.5 * h * k1v, accel(phi + 0.5 * h * k1p, v + 0.5 * h * k1v));
            let (k3p, k3v) = (v + 0.5 * h * k2v, accel(phi + 0.5 * h * k2p, v + 0.5 * h * k2v));
            let (k4p, k4v) = (v + h * k3v, accel(phi + h * k3p, v + h * k3v));
            phi += h / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            ys.push(phi);
        }
        let mut sq = Vec::new();
        for k in 1..n {
            let pd = (ys[k + 1] - ys[k - 1]) / (2.0 * h);
            let pdd = (ys[k + 1] - 2.0 * ys[k] + ys[k - 1]) / (h * h);
            let dz = s.dzeta_dphi(ys[k], cfg.dzeta_step).unwrap().value;
            sq.push(residual_operator(ys[k], pd, pdd, dz, &cfg).powi(2));
        }
        let shooting = simpson(&sq, h).sqrt();
        // Reference over a window of the same length.
        let g = gaussian(3.75, 20.0, 0.5);
        let window: Vec<f64> = (0..=n)
            .map(|k| {
                let t = 7.0 + k as f64 * h;
                let phi = g.phi_at(t);
                let dz = s.dzeta_dphi(phi, cfg.dzeta_step).unwrap().value;
                residual_operator(phi, g.phi_dot(t, h), g.phi_ddot(t, h), dz, &cfg).powi(2)
            })
            .collect();
        let generic = simpson(&window, h).sqrt();
        assert!(shooting <= 1e-4 * generic, "{shooting} vs {generic}");
    }

    #[test]
    fn generator_at_origin() {
        let p = DeviceParams::reference();
        let m = interaction_frame_generator(&p, 0.0, 0.0);
        assert_eq!(m, gell_mann(1) + gell_mann(6));
        let m = interaction_frame_generator(&p, 0.3, 1.7);
        assert_eq!(m, m.adjoint());
    }

    #[test]
    fn generator_matches_frame_transform() {
        let p = DeviceParams::reference();
        let states = [S02, S11, S20];
        let v = interaction(&p);
        let e0 = bare_energies(&p, 0.0);
        let scale = std::f64::consts::SQRT_2 * p.g;
        for &(phi, t) in &[(0.0, 0.0), (0.2, 0.37), (0.5, 3.1), (0.58, 17.9)] {
            let m = interaction_frame_generator(&p, phi, t);
            let delta = qubit_detuning(&p, phi);
            for (r, a) in states.iter().enumerate() {
                for (c, b) in states.iter().enumerate() {
                    let rot = C64::from_polar(1.0, (e0[a.index()] - e0[b.index()]) * t);
                    let mut expect = v[(a.index(), b.index())] * rot / scale;
                    if r == c {
                        expect -= [0.0, delta, 2.0 * delta][r];
                    }
                    assert!((m[(r, c)] - expect).norm() <= 1e-10, "({r},{c}) at t={t}");
                }
            }
        }
    }

    #[test]
    fn two_level_propagator_matches_detuned_rabi() {
        let p = DeviceParams::reference();
        let tau = 20.0;
        let traj = Trajectory::constant(0.0, 0.0, tau, 3);
        let prop = interaction_propagator(&traj, &p, 20000).unwrap();
        let omega = 2.0 * std::f64::consts::SQRT_2 * p.g;
        let det = p.detuning() + p.alpha1;
        let r = (omega * omega + det * det).sqrt();
        let expect = omega * omega / (r * r) * (0.5 * r * tau).sin().powi(2);
        assert!((prop.transfer - expect).abs() < 1e-5, "{} vs {expect}", prop.transfer);
        assert!(prop.transfer < 0.5);
    }

    #[test]
    fn two_level_propagator_edge_cases() {
        let p = DeviceParams::reference();
        let empty = Trajectory::constant(0.0, 5.0, 5.0, 3);
        let id = interaction_propagator(&empty, &p.with_coupling(0.0), 10).unwrap();
        assert!((id.u - Matrix2::identity()).norm() < 1e-15);
        let traj = gaussian(2.0, 20.0, 0.5);
        assert!(matches!(interaction_propagator(&traj, &p, 50), Err(Error::StepTooLarge(_))));
        let u = interaction_propagator(&traj, &p, 2000).unwrap().u;
        assert!((u.adjoint() * u - Matrix2::identity()).norm() <= 1e-10);
    }

    #[test]
    fn report_for_out_of_range_pulse() {
        let s = spectrum();
        let rep = evaluate(&gaussian(3.0, 20.0, 1.0), &s, &MetricConfig::default()).unwrap();
        assert!(rep.constraint_value.is_none());
        assert!(rep.residual_out_of_range > 0);
        assert!(rep.leakage_estimate.is_some());
    }
}
