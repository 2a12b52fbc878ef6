// SPDX-License-Identifier: Apache-2.0

use std::path::Path;

use fluxgate::basis::BareState;
use fluxgate::device::DeviceParams;
use fluxgate::evolution::{population_history, rank_check, simulate_gate, RankConfig};
use fluxgate::format::{fmt_f64, fmt_opt, to_json_string, Csv};
use fluxgate::metrics::{evaluate, MetricConfig};
use fluxgate::spectrum::{find_crossings, TrackedSpectrum};
use fluxgate::sweep::{run_sweep, SweepSpec};
use fluxgate::trajectory::{phase_target, realize, PulseShape, Trajectory, TrajectoryParams};
use fluxgate::{Error, Result};
use serde_json::{json, Value};

use crate::output::{emit, OutDir};
use crate::{reproduce, Cli, Command, MetricArgs, TrajectoryArgs};

pub const DEVICE_ENV: &str = "FLUXGATE_DEVICE";

pub fn dispatch(cli: &Cli) -> Result<()> {
    let device = load_device(cli.device.as_deref())?;
    let steps = cli.spectrum_steps;
    match &cli.command {
        Command::Spectrum { phi_max, output } => {
            let spectrum = match phi_max {
                Some(p) => TrackedSpectrum::track(&device, *p, steps)?,
                None => TrackedSpectrum::track_to_a2(&device, steps)?,
            };
            emit(output.as_deref(), &spectrum_csv(&spectrum))
        }
        Command::Crossings { output } => emit(output.as_deref(), &to_json_string(&find_crossings(&device).to_json())?),
        Command::Trajectory { traj, out_dir } => {
            let spectrum = TrackedSpectrum::track_to_a2(&device, steps)?;
            let r = Realized::build(traj, &spectrum)?;
            let mut out = OutDir::create(out_dir)?;
            out.write("trajectory.csv", &trajectory_csv(&r.trajectory))?;
            out.write("trajectory.json", &to_json_string(&r.sidecar(&spectrum))?)
        }
        Command::Metrics { traj, metric, residual_csv, output } => {
            let spectrum = TrackedSpectrum::track_to_a2(&device, steps)?;
            let r = Realized::build(traj, &spectrum)?;
            let report = evaluate(&r.trajectory, &spectrum, &metric_config(metric))?;
            if let Some(path) = residual_csv {
                let mut csv = Csv::new(&["t", "D"]);
                for (t, d) in report.residual_curve.t.iter().zip(&report.residual_curve.d) {
                    csv.row(&[fmt_f64(*t), fmt_opt(*d)]);
                }
                emit(Some(path), csv.as_str())?;
            }
            let mut v = serde_json::to_value(&report)?;
            v["trajectory"] = r.sidecar(&spectrum);
            emit(output.as_deref(), &to_json_string(&v)?)
        }
        Command::Sweep { family, sigma, mu, tau, mode, refine, peak_amplitude, k, samples, metric, out_dir } => {
            let spectrum = TrackedSpectrum::track_to_a2(&device, steps)?;
            let spec = SweepSpec {
                refine: *refine,
                peak_amplitude: *peak_amplitude,
                k: *k,
                samples: *samples,
                ..SweepSpec::new(*family, *sigma, *mu, *tau, *mode)
            };
            let result = run_sweep(&spec, &spectrum, &metric_config(metric))?;
            let mut out = OutDir::create(out_dir)?;
            out.write("sweep.csv", &result.to_csv())?;
            out.write("optimum.json", &result.optimum_json()?)
        }
        Command::Simulate { traj, dt, fidelity_mode, restriction, populations, initial, every, output } => {
            let spectrum = TrackedSpectrum::track_to_a2(&device, steps)?;
            let r = Realized::build(traj, &spectrum)?;
            let report = simulate_gate(&r.trajectory, &spectrum, *dt)?;
            if let Some(path) = populations {
                let state = BareState::parse(initial)
                    .ok_or_else(|| Error::Invalid(format!("unknown initial state '{initial}'")))?;
                let hist = population_history(&r.trajectory, &device, *dt, state, *every)?;
                emit(Some(path), &populations_csv(&hist))?;
            }
            let mut v = serde_json::to_value(&report)?;
            v["fidelity_selected"] = json!({
                "mode": fidelity_mode,
                "restriction": restriction,
                "value": report.fidelity.get(*fidelity_mode, *restriction),
            });
            v["trajectory"] = r.sidecar(&spectrum);
            emit(output.as_deref(), &to_json_string(&v)?)
        }
        Command::RankCheck { samples_file, dt, fidelity_mode, restriction, policy, k, samples, metric, out_dir } => {
            let spectrum = TrackedSpectrum::track_to_a2(&device, steps)?;
            let params = read_samples(samples_file)?;
            let cfg = RankConfig {
                metric: metric_config(metric),
                dt: *dt,
                mode: *fidelity_mode,
                restriction: *restriction,
                policy: *policy,
                k: *k,
                samples: *samples,
            };
            let report = rank_check(&params, &spectrum, &cfg)?;
            let mut out = OutDir::create(out_dir)?;
            out.write("rank.csv", &report.to_csv())?;
            out.write("concordance.csv", &report.concordance_csv())?;
            out.write("rank_summary.json", &to_json_string(&rank_summary(&report))?)
        }
        Command::Reproduce { id, figure, out_dir } => {
            let id = match (id, figure) {
                (Some(id), _) => id.clone(),
                (None, Some(n)) => format!("fig{n}"),
                (None, None) => return Err(Error::Invalid("reproduce needs an id or --figure".into())),
            };
            reproduce::run(&id, &device, steps, out_dir)
        }
    }
}

/// Resolves `--device`, then `$FLUXGATE_DEVICE`, then the reference device.
pub fn load_device(arg: Option<&str>) -> Result<DeviceParams> {
    let env = std::env::var(DEVICE_ENV).ok().filter(|s| !s.is_empty());
    match arg.map(str::to_string).or(env).as_deref() {
        None | Some("default") => Ok(DeviceParams::reference()),
        Some(path) => DeviceParams::from_json_file(path)
            .map_err(|e| Error::Invalid(format!("device file {path}: {e}"))),
    }
}

pub fn metric_config(m: &MetricArgs) -> MetricConfig {
    MetricConfig {
        upsilon: m.upsilon,
        kappa: m.kappa,
        lambda: m.lambda,
        delta_source: m.delta_source,
        ..MetricConfig::default()
    }
}

/// A trajectory with the phase bookkeeping reported next to it.
pub struct Realized {
    pub trajectory: Trajectory,
    pub warnings: Vec<String>,
    pub k: u32,
    /// `None` for a fixed amplitude.
    pub reached: Option<bool>,
    pub policy: Option<String>,
}

impl Realized {
    pub fn build(args: &TrajectoryArgs, spectrum: &TrackedSpectrum) -> Result<Self> {
        let params = TrajectoryParams {
            epsilon: args.epsilon,
            prepulse_weight: args.prepulse_weight,
            ..TrajectoryParams::new(args.family, args.sigma, args.mu, args.tau)
        };
        Self::from_params(&params, args.amplitude, args.k, args.samples, args.policy, spectrum)
    }

    pub fn from_params(
        params: &TrajectoryParams,
        amplitude: Option<f64>,
        k: u32,
        samples: usize,
        policy: fluxgate::trajectory::AmplitudePolicy,
        spectrum: &TrackedSpectrum,
    ) -> Result<Self> {
        let shape = PulseShape::new(params)?;
        let warnings = shape.warnings().to_vec();
        match amplitude {
            Some(a) => Ok(Self {
                trajectory: Trajectory::from_shape(shape, a, samples)?,
                warnings,
                k,
                reached: None,
                policy: None,
            }),
            None => {
                let cal = realize(&shape, spectrum, k, samples, policy)?;
                Ok(Self {
                    trajectory: cal.trajectory,
                    warnings,
                    k,
                    reached: Some(cal.reached),
                    policy: Some(serde_json::to_value(policy)?.as_str().unwrap_or_default().to_string()),
                })
            }
        }
    }

    pub fn sidecar(&self, spectrum: &TrackedSpectrum) -> Value {
        let phase = self.trajectory.conditional_phase(spectrum).ok();
        let target = phase_target(self.k);
        json!({
            "params": self.trajectory.params(),
            "amplitude": self.trajectory.amplitude(),
            "calibrated": self.reached.is_some(),
            "policy": self.policy,
            "reached": self.reached,
            "constraint_value": phase,
            "constraint_target": target,
            "constraint_residual": phase.map(|p| p - target),
            "peak_time": self.trajectory.shape().map(|s| s.peak_time()),
            "samples": self.trajectory.t_grid().len(),
            "warnings": self.warnings,
            "invariant_violations": self.trajectory.invariant_violations(spectrum.phi_max()),
        })
    }
}

pub fn spectrum_csv(spectrum: &TrackedSpectrum) -> String {
    let mut csv = Csv::new(&["phi", "label", "omega_rad_per_ns"]);
    for (k, &phi) in spectrum.phi_grid().iter().enumerate() {
        for s in BareState::all() {
            csv.row(&[fmt_f64(phi), s.to_string(), fmt_f64(spectrum.energies(s)[k])]);
        }
    }
    csv.into_string()
}

pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut csv = Csv::new(&["t", "phi"]);
    for (t, p) in traj.t_grid().iter().zip(traj.phi_samples()) {
        csv.numeric_row(&[*t, *p]);
    }
    csv.into_string()
}

pub fn populations_csv(hist: &[(f64, [f64; 9])]) -> String {
    let header: Vec<String> =
        std::iter::once("t".to_string()).chain(BareState::all().map(|s| format!("p{s}"))).collect();
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    for (t, p) in hist {
        let row: Vec<f64> = std::iter::once(*t).chain(p.iter().copied()).collect();
        csv.numeric_row(&row);
    }
    csv.into_string()
}

pub fn read_samples(path: &Path) -> Result<Vec<TrajectoryParams>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn rank_summary(report: &fluxgate::evolution::RankReport) -> Value {
    json!({
        "kendall": report.kendall,
        "included": report.included,
        "excluded": report.excluded,
        "mode": report.mode,
        "restriction": report.restriction,
        "policy": report.policy,
        "exclusions": report.rows.iter().filter_map(|r| r.excluded.as_ref()).collect::<Vec<_>>(),
    })
}
