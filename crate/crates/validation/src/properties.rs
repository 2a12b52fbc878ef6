// SPDX-License-Identifier: Apache-2.0

//! Strategies and property checks shared by the proptest suites and the
//! acceptance runner.

use std::sync::OnceLock;

use fluxgate::basis::C64;
use fluxgate::device::{build_hamiltonian, eigh, DeviceParams, FluxPoint, Matrix9};
use fluxgate::metrics::{interaction_propagator, MetricConfig};
use fluxgate::parallel;
use fluxgate::spectrum::TrackedSpectrum;
use fluxgate::sweep::{run_sweep, Range, SweepMode, SweepSpec};
use fluxgate::trajectory::{Family, PulseShape, Trajectory, TrajectoryParams};
use nalgebra::Matrix2;
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};

pub const CASES: u32 = 100;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const ORTHONORMAL_TOL: f64 = 1e-10;
pub const UNITARY_TOL: f64 = 1e-10;
/// Largest `(Δ + α₁)·dt` used when picking interaction-frame step counts.
const U_EV_PHASE_STEP: f64 = 0.05;
const PROPERTY_SAMPLES: usize = 1001;
const SWEEP_SAMPLES: usize = 801;

/// Reference spectrum on `[0, A2]`, tracked once per process.
pub fn reference_spectrum() -> &'static TrackedSpectrum {
    static SPECTRUM: OnceLock<TrackedSpectrum> = OnceLock::new();
    SPECTRUM.get_or_init(|| {
        TrackedSpectrum::track_to_a2(&DeviceParams::reference(), 1001).expect("reference spectrum")
    })
}

/// Devices with the canonical idle ordering: `Δ > |α₁|` and
/// `ω₂ + α₂ < ω₁ + α₁`.
pub fn device_strategy() -> impl Strategy<Value = DeviceParams> {
    (
        4.5..5.3f64,
        -350.0..-150.0f64,
        -350.0..-150.0f64,
        5.0..40.0f64,
        0.1..1.0f64,
    )
        .prop_map(|(w2, a1, a2, g, extra)| {
            DeviceParams::from_lab_units(w2 + 1e-3 * a1.abs() + extra, w2, a1, a2, g)
                .expect("strategy device is valid")
        })
}

/// Valid parameters for family `Family::ALL[family]`; `a` and `b` in
/// `[0, 1)` pick the width and the offset.
pub fn params_for(family: usize, tau: f64, a: f64, b: f64) -> TrajectoryParams {
    let family = Family::ALL[family % Family::ALL.len()];
    let (sigma, mu) = match family {
        Family::Gaussian => (tau * (0.05 + 0.25 * a), None),
        Family::Mollifier => (tau * (0.1 + 0.35 * a), None),
        Family::MollifiedGaussian => {
            let s = tau * (0.05 + 0.1 * a);
            (s, Some(tau * (0.25 + 0.5 * b)))
        }
        Family::PrepulsedGaussian | Family::MollifierPrepulsedGaussian => {
            let s = tau * (0.03 + 0.04 * a);
            (s, Some(3.0 * s + b * (0.5 * tau - 7.0 * s)))
        }
    };
    TrajectoryParams::new(family, sigma, mu, tau)
}

pub fn params_strategy(tau: impl Strategy<Value = f64>) -> impl Strategy<Value = TrajectoryParams> {
    (0..Family::ALL.len(), tau, 0.0..1.0f64, 0.0..1.0f64)
        .prop_map(|(f, tau, a, b)| params_for(f, tau, a, b))
}

/// Parameters plus an amplitude as a fraction of the reference A2.
pub fn trajectory_strategy() -> impl Strategy<Value = (TrajectoryParams, f64)> {
    (params_strategy(10.0..60.0f64), 0.05..1.0f64)
}

pub fn sweep_strategy() -> impl Strategy<Value = SweepSpec> {
    (
        0..Family::ALL.len(),
        20.0..40.0f64,
        0.0..0.8f64,
        0.0..0.8f64,
    )
        .prop_map(|(f, tau, a, b)| {
            let lo = params_for(f, tau, a, b);
            let hi = params_for(f, tau, a + 0.2, b + 0.2);
            let mu = match (lo.mu, hi.mu) {
                (Some(x), Some(y)) => Some(Range::new(x, y, 2)),
                _ => None,
            };
            SweepSpec {
                samples: SWEEP_SAMPLES,
                ..SweepSpec::new(
                    lo.family,
                    Range::new(lo.sigma, hi.sigma, 2),
                    mu,
                    tau,
                    SweepMode::PeakNormalized,
                )
            }
        })
}

fn max_abs(m: &Matrix9) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn check_hermitian(params: &DeviceParams, phi: f64) -> Result<(), TestCaseError> {
    let flux = FluxPoint::new(phi).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let h = build_hamiltonian(params, flux);
    let dev = max_abs(&(h.matrix() - h.matrix().adjoint()));
    prop_assert!(
        dev <= HERMITIAN_TOL,
        "|H - H^dagger| = {dev:e} at phi = {phi}"
    );
    Ok(())
}

/// `V†V = I` and `V·diag(E)·V† = H` for the Hermitian eigensolver.
pub fn check_eigenbasis(params: &DeviceParams, phi: f64) -> Result<(), TestCaseError> {
    let flux = FluxPoint::new(phi).map_err(|e| TestCaseError::fail(e.to_string()))?;
    let h = build_hamiltonian(params, flux);
    let (vals, vecs) = eigh(h.matrix());
    let defect = max_abs(&(vecs.adjoint() * vecs - Matrix9::identity()));
    prop_assert!(
        defect <= ORTHONORMAL_TOL,
        "orthonormality defect {defect:e} at phi = {phi}"
    );
    let diag = Matrix9::from_diagonal(&vals.map(|v| C64::new(v, 0.0)));
    let recon = max_abs(&(vecs * diag * vecs.adjoint() - h.matrix())) / max_abs(h.matrix());
    prop_assert!(
        recon <= ORTHONORMAL_TOL,
        "relative reconstruction error {recon:e} at phi = {phi}"
    );
    Ok(())
}

fn sampled(params: &TrajectoryParams, fraction: f64) -> Result<Trajectory, TestCaseError> {
    let shape =
        PulseShape::new(params).map_err(|e| TestCaseError::fail(format!("{params:?}: {e}")))?;
    let amplitude = fraction * reference_spectrum().phi_max();
    Trajectory::from_shape(shape, amplitude, PROPERTY_SAMPLES)
        .map_err(|e| TestCaseError::fail(e.to_string()))
}

/// Endpoints pinned to zero, samples inside `[0, A2]`, peak at the amplitude.
pub fn check_trajectory(params: &TrajectoryParams, fraction: f64) -> Result<(), TestCaseError> {
    let traj = sampled(params, fraction)?;
    let violations = traj.invariant_violations(reference_spectrum().phi_max());
    prop_assert!(violations.is_empty(), "{params:?}: {violations:?}");
    let peak = traj.phi_samples().iter().copied().fold(0.0, f64::max);
    let a = traj.amplitude();
    prop_assert!(
        peak <= a * (1.0 + 1e-12) && peak >= a * (1.0 - 1e-3),
        "{params:?}: peak {peak} vs amplitude {a}"
    );
    Ok(())
}

pub fn check_interaction_unitary(
    params: &TrajectoryParams,
    fraction: f64,
) -> Result<(), TestCaseError> {
    let traj = sampled(params, fraction)?;
    let device = reference_spectrum().params();
    let omega = (device.detuning() + device.alpha1).abs();
    let steps = (omega * traj.duration() / U_EV_PHASE_STEP).ceil() as usize;
    let r = interaction_propagator(&traj, device, steps)
        .map_err(|e| TestCaseError::fail(e.to_string()))?;
    let defect = (r.u.adjoint() * r.u - Matrix2::<C64>::identity())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    prop_assert!(
        defect <= UNITARY_TOL,
        "{params:?}: U_Ev unitarity defect {defect:e}"
    );
    prop_assert!(
        (0.0..=1.0 + UNITARY_TOL).contains(&r.transfer),
        "transfer {} outside [0, 1]",
        r.transfer
    );
    Ok(())
}

/// Two runs, one of them single-threaded, must give byte-identical CSV.
pub fn check_sweep_determinism(spec: &SweepSpec) -> Result<(), TestCaseError> {
    let spectrum = reference_spectrum();
    let config = MetricConfig::default();
    let render = || {
        run_sweep(spec, spectrum, &config)
            .map(|r| r.to_csv())
            .map_err(|e| e.to_string())
    };
    let a = render();
    let b = parallel::with_workers(Some(1), render);
    prop_assert_eq!(a, b);
    Ok(())
}

/// Runs one property over `cases` draws from a fixed-seed generator.
pub fn run_property<S: Strategy>(
    strategy: S,
    cases: u32,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> Result<(), String> {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner =
        TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    runner.run(&strategy, test).map_err(|e| e.to_string())
}

/// Named suites, in the order the acceptance runner reports them.
pub fn suites(cases: u32) -> Vec<(&'static str, Result<(), String>)> {
    vec![
        (
            "hermiticity",
            run_property((device_strategy(), 0.0..1.5f64), cases, |(p, phi)| {
                check_hermitian(&p, phi)
            }),
        ),
        (
            "eigenvector orthonormality",
            run_property((device_strategy(), 0.0..1.5f64), cases, |(p, phi)| {
                check_eigenbasis(&p, phi)
            }),
        ),
        (
            "trajectory invariants",
            run_property(trajectory_strategy(), cases, |(p, f)| {
                check_trajectory(&p, f)
            }),
        ),
        (
            "U_Ev unitarity",
            run_property(trajectory_strategy(), cases, |(p, f)| {
                check_interaction_unitary(&p, f)
            }),
        ),
        (
            "sweep CSV determinism",
            run_property(sweep_strategy(), cases, |s| check_sweep_determinism(&s)),
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::strategy::ValueTree;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(CASES))]

        #[test]
        fn hamiltonian_is_hermitian(p in device_strategy(), phi in 0.0..1.5f64) {
            check_hermitian(&p, phi)?;
        }

        #[test]
        fn eigenbasis_is_orthonormal(p in device_strategy(), phi in 0.0..1.5f64) {
            check_eigenbasis(&p, phi)?;
        }

        #[test]
        fn trajectories_respect_invariants((p, f) in trajectory_strategy()) {
            check_trajectory(&p, f)?;
        }

        #[test]
        fn interaction_propagator_is_unitary((p, f) in trajectory_strategy()) {
            check_interaction_unitary(&p, f)?;
        }

        #[test]
        fn sweep_csv_is_deterministic(spec in sweep_strategy()) {
            check_sweep_determinism(&spec)?;
        }
    }

    #[test]
    fn strategy_devices_have_canonical_order() {
        let mut runner = TestRunner::deterministic();
        for _ in 0..20 {
            let p = device_strategy().new_tree(&mut runner).unwrap().current();
            assert!(p.detuning() > p.alpha1.abs());
            assert!(p.omega2 + p.alpha2 < p.omega1 + p.alpha1);
        }
    }

    #[test]
    fn generated_params_validate() {
        for f in 0..Family::ALL.len() {
            for (a, b) in [(0.0, 0.0), (0.999, 0.999), (0.5, 0.3)] {
                let p = params_for(f, 20.0, a, b);
                assert!(PulseShape::new(&p).is_ok(), "{p:?}");
            }
        }
    }
}
