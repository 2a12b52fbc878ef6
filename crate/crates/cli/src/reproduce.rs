// SPDX-License-Identifier: Apache-2.0

//! Canned pipelines regenerating each figure or table data set.

use std::path::Path;

use fluxgate::basis::{S01, S10, S11};
use fluxgate::device::DeviceParams;
use fluxgate::evolution::{simulate_gate, FidelityMode, GateReport, Restriction, DEFAULT_DT};
use fluxgate::format::{fmt_f64, fmt_opt, to_json_string, Csv};
use fluxgate::metrics::{el_residual, MetricConfig};
use fluxgate::spectrum::{find_crossings, TrackedSpectrum};
use fluxgate::sweep::{run_sweep, Range, SweepMode, SweepSpec};
use fluxgate::trajectory::{AmplitudePolicy, Family, TrajectoryParams, DEFAULT_SAMPLES};
use fluxgate::{Error, Result};
use serde_json::{json, Value};

use crate::commands::{spectrum_csv, trajectory_csv, Realized};
use crate::output::OutDir;

pub const IDS: [&str; 5] = ["fig2", "fig3", "fig4", "fig5", "sec5-matrices"];

/// Flux window of the wide spectrum plot, rad; covers all five crossings.
pub const FIG2_PHI_MAX: f64 = 0.9;
/// Window of the five example trajectories, ns.
pub const FIG3_TAU: f64 = 40.0;
pub const FIG3_PARAMS: [(Family, f64, Option<f64>); 5] = [
    (Family::Gaussian, 2.0, None),
    (Family::Mollifier, 6.5, None),
    (Family::MollifiedGaussian, 2.5, Some(4.0)),
    (Family::PrepulsedGaussian, 1.3, Some(12.0)),
    (Family::MollifierPrepulsedGaussian, 2.0, Some(13.0)),
];
pub const FIG4_TAU: f64 = 20.0;
pub const FIG4_GAUSSIAN_SIGMA: Range = Range { lo: 0.5, hi: 2.75, n: 10 };
pub const FIG4_MOLLIFIER_SIGMA: Range = Range { lo: 1.0, hi: 5.0, n: 9 };
pub const FIG4_GAUSSIAN_EXTENDED: Range = Range { lo: 0.5, hi: 6.0, n: 23 };
pub const FIG4_MOLLIFIER_EXTENDED: Range = Range { lo: 1.0, hi: 9.5, n: 18 };
pub const FIG5_TAU: f64 = 60.0;
pub const FIG5_SIGMA: Range = Range { lo: 1.0, hi: 2.5, n: 7 };
pub const FIG5_MU: Range = Range { lo: 8.0, hi: 14.0, n: 7 };
pub const FIG5_RESIDUAL_SIGMA: f64 = 3.75;
pub const SEC5_TAU: f64 = 20.0;
pub const SEC5_GAUSSIAN_SIGMA: f64 = 3.75;
pub const SEC5_MOLLIFIER_SIGMA: f64 = 4.15;

pub fn run(id: &str, device: &DeviceParams, steps: usize, out_dir: &Path) -> Result<()> {
    let mut out = OutDir::create(out_dir)?;
    let parameters = match id {
        "fig2" => fig2(device, steps, &mut out)?,
        "fig3" => fig3(device, steps, &mut out)?,
        "fig4" => fig4(device, steps, &mut out)?,
        "fig5" => fig5(device, steps, &mut out)?,
        "sec5-matrices" | "sec5" => sec5(device, steps, &mut out)?,
        _ => return Err(Error::Invalid(format!("unknown reproduce id '{id}' (expected one of {})", IDS.join(", ")))),
    };
    let manifest = json!({
        "id": id,
        "device": device,
        "spectrum_steps": steps,
        "parameters": parameters,
        "files": out.files(),
    });
    out.write("MANIFEST.json", &to_json_string(&manifest)?)
}

fn fig2(device: &DeviceParams, steps: usize, out: &mut OutDir) -> Result<Value> {
    let wide = TrackedSpectrum::track(device, FIG2_PHI_MAX, 2 * steps)?;
    out.write("fig2_spectrum.csv", &spectrum_csv(&wide))?;
    out.write("fig2_crossings.json", &to_json_string(&find_crossings(device).to_json())?)?;

    let spectrum = TrackedSpectrum::track_to_a2(device, steps)?;
    let mut csv = Csv::new(&["phi", "omega11", "omega01_plus_omega10", "zeta"]);
    for (k, &phi) in spectrum.phi_grid().iter().enumerate() {
        let w11 = spectrum.energies(S11)[k];
        let sum = spectrum.energies(S01)[k] + spectrum.energies(S10)[k];
        csv.numeric_row(&[phi, w11, sum, spectrum.zeta(phi)?]);
    }
    out.write("fig2_zeta.csv", csv.as_str())?;
    Ok(json!({ "phi_max_wide": FIG2_PHI_MAX, "steps_wide": 2 * steps, "phi_max_zeta": spectrum.phi_max() }))
}

fn fig3(device: &DeviceParams, steps: usize, out: &mut OutDir) -> Result<Value> {
    let spectrum = TrackedSpectrum::track_to_a2(device, steps)?;
    let mut used = Vec::new();
    for (n, (family, sigma, mu)) in FIG3_PARAMS.iter().enumerate() {
        let params = TrajectoryParams::new(*family, *sigma, *mu, FIG3_TAU);
        let r = Realized::from_params(&params, None, 0, DEFAULT_SAMPLES, AmplitudePolicy::Saturate, &spectrum)?;
        out.write(&format!("fig3_traj{}.csv", n + 1), &trajectory_csv(&r.trajectory))?;
        out.write(&format!("fig3_traj{}.json", n + 1), &to_json_string(&r.sidecar(&spectrum))?)?;
        used.push(params);
    }
    Ok(json!({ "trajectories": used, "policy": AmplitudePolicy::Saturate }))
}

fn sweep_into(
    out: &mut OutDir,
    stem: &str,
    spec: &SweepSpec,
    spectrum: &TrackedSpectrum,
    metric: &MetricConfig,
) -> Result<()> {
    let result = run_sweep(spec, spectrum, metric)?;
    out.write(&format!("{stem}.csv"), &result.to_csv())?;
    out.write(&format!("{stem}_optimum.json"), &result.optimum_json()?)
}

fn fig4(device: &DeviceParams, steps: usize, out: &mut OutDir) -> Result<Value> {
    let spectrum = TrackedSpectrum::track_to_a2(device, steps)?;
    let metric = MetricConfig::default();
    let mut specs = Vec::new();
    for (stem, family, sigma) in [
        ("fig4_gaussian", Family::Gaussian, FIG4_GAUSSIAN_SIGMA),
        ("fig4_mollifier", Family::Mollifier, FIG4_MOLLIFIER_SIGMA),
        ("fig4_gaussian_extended", Family::Gaussian, FIG4_GAUSSIAN_EXTENDED),
        ("fig4_mollifier_extended", Family::Mollifier, FIG4_MOLLIFIER_EXTENDED),
    ] {
        let spec = SweepSpec::new(family, sigma, None, FIG4_TAU, SweepMode::PeakNormalized);
        sweep_into(out, stem, &spec, &spectrum, &metric)?;
        specs.push(json!({ "stem": stem, "spec": spec }));
    }
    Ok(json!({ "sweeps": specs, "metric": metric }))
}

fn fig5(device: &DeviceParams, steps: usize, out: &mut OutDir) -> Result<Value> {
    let spectrum = TrackedSpectrum::track_to_a2(device, steps)?;
    let metric = MetricConfig::default();
    let mut specs = Vec::new();
    for family in [Family::MollifiedGaussian, Family::PrepulsedGaussian, Family::MollifierPrepulsedGaussian] {
        let spec = SweepSpec::new(family, FIG5_SIGMA, Some(FIG5_MU), FIG5_TAU, SweepMode::PeakNormalized);
        let stem = format!("fig5_{}", family.name().replace('-', "_"));
        sweep_into(out, &stem, &spec, &spectrum, &metric)?;
        specs.push(json!({ "stem": stem, "spec": spec }));
    }

    let params = TrajectoryParams::new(Family::Gaussian, FIG5_RESIDUAL_SIGMA, None, SEC5_TAU);
    let r = Realized::from_params(&params, None, 0, DEFAULT_SAMPLES, AmplitudePolicy::Saturate, &spectrum)?;
    let curve = el_residual(&r.trajectory, &spectrum, &metric)?;
    let mut csv = Csv::new(&["t", "phi", "D"]);
    for (k, (t, d)) in curve.t.iter().zip(&curve.d).enumerate() {
        csv.row(&[fmt_f64(*t), fmt_f64(r.trajectory.phi_samples()[k]), fmt_opt(*d)]);
    }
    out.write("fig5_residual_gaussian.csv", csv.as_str())?;
    Ok(json!({
        "sweeps": specs,
        "metric": metric,
        "residual": { "params": params, "policy": AmplitudePolicy::Saturate, "amplitude": r.trajectory.amplitude(), "l2": curve.l2 },
    }))
}

/// Gate reports for the Gaussian/mollifier comparison pair.
pub fn sec5_reports(device: &DeviceParams, steps: usize) -> Result<Vec<(&'static str, Realized, GateReport)>> {
    let spectrum = TrackedSpectrum::track_to_a2(device, steps)?;
    let mut reports = Vec::new();
    for (name, family, sigma) in
        [("gaussian", Family::Gaussian, SEC5_GAUSSIAN_SIGMA), ("mollifier", Family::Mollifier, SEC5_MOLLIFIER_SIGMA)]
    {
        let params = TrajectoryParams::new(family, sigma, None, SEC5_TAU);
        let r = Realized::from_params(&params, None, 0, DEFAULT_SAMPLES, AmplitudePolicy::Saturate, &spectrum)?;
        let report = simulate_gate(&r.trajectory, &spectrum, DEFAULT_DT)?;
        reports.push((name, r, report));
    }
    Ok(reports)
}

fn sec5(device: &DeviceParams, steps: usize, out: &mut OutDir) -> Result<Value> {
    let spectrum = TrackedSpectrum::track_to_a2(device, steps)?;
    let reports = sec5_reports(device, steps)?;
    let mut summary = serde_json::Map::new();
    for (name, r, report) in &reports {
        let mut v = serde_json::to_value(report)?;
        v["trajectory"] = r.sidecar(&spectrum);
        out.write(&format!("sec5_{name}.json"), &to_json_string(&v)?)?;
        summary.insert(
            name.to_string(),
            json!({ "fidelity": report.fidelity, "leakage_20": report.leakage_20, "reached": r.reached }),
        );
    }
    let (g, m) = (&reports[0].2, &reports[1].2);
    let mut ordering = serde_json::Map::new();
    for mode in FidelityMode::ALL {
        for restriction in Restriction::ALL {
            ordering.insert(
                format!("{}_{}", mode.name(), restriction.name()),
                json!(m.fidelity.get(mode, restriction) < g.fidelity.get(mode, restriction)),
            );
        }
    }
    summary.insert("mollifier_below_gaussian".into(), Value::Object(ordering));
    summary.insert("mollifier_leaks_less".into(), json!(m.leakage_20 < g.leakage_20));
    out.write("sec5_summary.json", &to_json_string(&Value::Object(summary))?)?;
    Ok(json!({
        "tau": SEC5_TAU,
        "gaussian_sigma": SEC5_GAUSSIAN_SIGMA,
        "mollifier_sigma": SEC5_MOLLIFIER_SIGMA,
        "dt": DEFAULT_DT,
        "policy": AmplitudePolicy::Saturate,
    }))
}
