// SPDX-License-Identifier: Apache-2.0

//! Browser bindings for the interactive demo page in `www/`.
//!
//! Every export returns a JSON string that the page parses and plots.

use fluxgate::basis::{BareState, S02, S11, S20};
use fluxgate::device::{DeviceConfig, DeviceParams};
use fluxgate::evolution::{population_history, simulate_gate};
use fluxgate::metrics::{evaluate, MetricConfig};
use fluxgate::spectrum::{find_crossings, TrackedSpectrum};
use fluxgate::trajectory::{calibrate_or_saturate, Family, PulseShape, Trajectory, TrajectoryParams};
use fluxgate::{Error, Result};
use serde_json::json;
use wasm_bindgen::prelude::*;

const SPECTRUM_STEPS: usize = 1201;
const PLOT_SAMPLES: usize = 801;
const MIN_DT: f64 = 1e-3;

fn device(g_mhz: f64) -> Result<DeviceParams> {
    DeviceConfig { g_mhz, ..DeviceConfig::reference() }.into_params()
}

fn opt(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Builds the trajectory; a non-finite amplitude means "calibrate, saturating
/// at A2 when π is out of reach".
fn build(
    spectrum: &TrackedSpectrum,
    family: &str,
    sigma: f64,
    mu: f64,
    tau: f64,
    amplitude: f64,
) -> Result<(Trajectory, Option<bool>)> {
    let family: Family = family.parse()?;
    let shape = PulseShape::new(&TrajectoryParams::new(family, sigma, opt(mu), tau))?;
    match opt(amplitude) {
        Some(a) => Ok((Trajectory::from_shape(shape, a, PLOT_SAMPLES)?, None)),
        None => {
            let cal = calibrate_or_saturate(&shape, spectrum, 0, PLOT_SAMPLES)?;
            Ok((cal.trajectory, Some(cal.reached)))
        }
    }
}

/// Tracked eigenfrequencies on `[0, phi_max]` plus the crossing table.
pub fn spectrum_json(g_mhz: f64, phi_max: f64) -> Result<String> {
    let params = device(g_mhz)?;
    let s = TrackedSpectrum::track(&params, phi_max, SPECTRUM_STEPS)?;
    let curves: serde_json::Map<String, serde_json::Value> =
        BareState::all().map(|b| (b.to_string(), json!(s.energies(b)))).collect();
    Ok(json!({
        "phi": s.phi_grid(),
        "curves": curves,
        "crossings": find_crossings(&params).to_json(),
    })
    .to_string())
}

/// Sampled trajectory with its norm, phase and two-level leakage estimate.
pub fn trajectory_json(
    g_mhz: f64,
    family: &str,
    sigma: f64,
    mu: f64,
    tau: f64,
    amplitude: f64,
    kappa: f64,
) -> Result<String> {
    let spectrum = TrackedSpectrum::track_to_a2(&device(g_mhz)?, SPECTRUM_STEPS)?;
    let (traj, reached) = build(&spectrum, family, sigma, mu, tau, amplitude)?;
    let report = evaluate(&traj, &spectrum, &MetricConfig { kappa, ..MetricConfig::default() })?;
    Ok(json!({
        "t": traj.t_grid(),
        "phi": traj.phi_samples(),
        "a2": spectrum.phi_max(),
        "amplitude": traj.amplitude(),
        "reached": reached,
        "n_norm": report.n_norm,
        "constraint_value": report.constraint_value,
        "leakage_estimate": report.leakage_estimate,
    })
    .to_string())
}

/// Nine-level propagation from `|1,1⟩`: population history and gate scores.
pub fn simulate_json(
    g_mhz: f64,
    family: &str,
    sigma: f64,
    mu: f64,
    tau: f64,
    amplitude: f64,
    dt: f64,
) -> Result<String> {
    if !(dt >= MIN_DT) {
        return Err(Error::Invalid(format!("dt must be at least {MIN_DT} ns")));
    }
    let params = device(g_mhz)?;
    let spectrum = TrackedSpectrum::track_to_a2(&params, SPECTRUM_STEPS)?;
    let (traj, reached) = build(&spectrum, family, sigma, mu, tau, amplitude)?;
    let every = ((traj.duration() / dt) as usize / 400).max(1);
    let hist = population_history(&traj, &params, dt, S11, every)?;
    let gate = simulate_gate(&traj, &spectrum, dt)?;
    let column = |s: BareState| hist.iter().map(|(_, p)| p[s.index()]).collect::<Vec<_>>();
    Ok(json!({
        "t": hist.iter().map(|(t, _)| *t).collect::<Vec<_>>(),
        "p11": column(S11),
        "p20": column(S20),
        "p02": column(S02),
        "amplitude": traj.amplitude(),
        "reached": reached,
        "leakage_20": gate.leakage_20,
        "conditional_phase": gate.conditional_phase_simulated,
        "fidelity": gate.fidelity,
    })
    .to_string())
}

fn js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn spectrum(g_mhz: f64, phi_max: f64) -> std::result::Result<String, JsError> {
    js(spectrum_json(g_mhz, phi_max))
}

#[wasm_bindgen]
pub fn trajectory(
    g_mhz: f64,
    family: &str,
    sigma: f64,
    mu: f64,
    tau: f64,
    amplitude: f64,
    kappa: f64,
) -> std::result::Result<String, JsError> {
    js(trajectory_json(g_mhz, family, sigma, mu, tau, amplitude, kappa))
}

#[wasm_bindgen]
pub fn simulate(
    g_mhz: f64,
    family: &str,
    sigma: f64,
    mu: f64,
    tau: f64,
    amplitude: f64,
    dt: f64,
) -> std::result::Result<String, JsError> {
    js(simulate_json(g_mhz, family, sigma, mu, tau, amplitude, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    const G: f64 = 24.7;

    #[test]
    fn spectrum_has_nine_curves() {
        let v: Value = serde_json::from_str(&spectrum_json(G, 0.9).unwrap()).unwrap();
        assert_eq!(v["curves"].as_object().unwrap().len(), 9);
        assert_eq!(v["phi"].as_array().unwrap().len(), SPECTRUM_STEPS);
        assert!(v["crossings"]["A2"]["phi"].as_f64().unwrap() > 0.5);
    }

    #[test]
    fn trajectory_reports_norm_and_saturation() {
        let v: Value = serde_json::from_str(&trajectory_json(G, "gaussian", 3.0, f64::NAN, 20.0, f64::NAN, 1.0).unwrap()).unwrap();
        assert_eq!(v["reached"], false);
        assert!(v["n_norm"].as_f64().unwrap() > 0.0);
        let phi = v["phi"].as_array().unwrap();
        assert_eq!(phi.first().unwrap().as_f64().unwrap(), 0.0);
    }

    #[test]
    fn simulation_conserves_population() {
        let v: Value =
            serde_json::from_str(&simulate_json(G, "mollifier", 4.0, f64::NAN, 10.0, 0.4, 2e-3).unwrap()).unwrap();
        let last = |k: &str| v[k].as_array().unwrap().last().unwrap().as_f64().unwrap();
        assert!(last("p11") + last("p20") + last("p02") <= 1.0 + 1e-9);
        // The frame change is diagonal, so the final |2,0> population is the
        // reported leakage.
        assert!((last("p20") - v["leakage_20"].as_f64().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn bad_input_is_an_error() {
        assert!(trajectory_json(G, "square", 2.0, f64::NAN, 20.0, 0.3, 1.0).is_err());
        assert!(simulate_json(G, "gaussian", 2.0, f64::NAN, 20.0, 0.3, 1e-4).is_err());
    }
}
