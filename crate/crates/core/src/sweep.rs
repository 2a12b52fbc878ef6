// SPDX-License-Identifier: Apache-2.0

//! Norm evaluation over `(σ, μ)` grids of a trajectory family, argmin
//! selection and local refinement.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::{fmt_f64, fmt_opt, to_json_string, Csv};
use crate::metrics::{n_norm, MetricConfig};
use crate::numerics::{golden_section_min, linspace};
use crate::parallel;
use crate::spectrum::TrackedSpectrum;
use crate::trajectory::{
    calibrate_or_saturate, Family, PulseShape, Trajectory, TrajectoryParams, DEFAULT_EPSILON, DEFAULT_SAMPLES,
};

/// Peak flux used by the peak-normalised mode, rad.
pub const DEFAULT_PEAK_AMPLITUDE: f64 = 1.0;
/// Parameter tolerance of [`refine_optimum`], ns.
pub const REFINE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    /// Shapes scaled to a fixed peak flux; no phase constraint.
    #[default]
    PeakNormalized,
    /// Amplitude calibrated to the π phase; unreachable points are flagged.
    PiCalibrated,
}

impl fmt::Display for SweepMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PeakNormalized => "peak_normalized",
            Self::PiCalibrated => "pi_calibrated",
        })
    }
}

impl FromStr for SweepMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "peak_normalized" | "peak" => Ok(Self::PeakNormalized),
            "pi_calibrated" | "pi" => Ok(Self::PiCalibrated),
            _ => Err(Error::InvalidSweep(format!("unknown sweep mode '{s}'"))),
        }
    }
}

/// Inclusive uniform range `lo:hi:n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Range {
    pub fn new(lo: f64, hi: f64, n: usize) -> Self {
        Self { lo, hi, n }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        if !(self.lo < self.hi) || self.n < 2 {
            return Err(Error::InvalidSweep(format!("{what} range needs lo < hi and n >= 2")));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        linspace(self.lo, self.hi, self.n)
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }
}

impl FromStr for Range {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSweep(format!("range '{s}' is not lo:hi:n"));
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts.as_slice() else { return Err(bad()) };
        Ok(Self {
            lo: lo.trim().parse().map_err(|_| bad())?,
            hi: hi.trim().parse().map_err(|_| bad())?,
            n: n.trim().parse().map_err(|_| bad())?,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub family: Family,
    pub sigma: Range,
    /// Required for the two-parameter families, ignored otherwise.
    #[serde(default)]
    pub mu: Option<Range>,
    pub tau: f64,
    #[serde(default)]
    pub mode: SweepMode,
    #[serde(default)]
    pub refine: bool,
    #[serde(default = "default_peak")]
    pub peak_amplitude: f64,
    #[serde(default)]
    pub k: u32,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

fn default_peak() -> f64 {
    DEFAULT_PEAK_AMPLITUDE
}
fn default_samples() -> usize {
    DEFAULT_SAMPLES
}
fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl SweepSpec {
    pub fn new(family: Family, sigma: Range, mu: Option<Range>, tau: f64, mode: SweepMode) -> Self {
        Self {
            family,
            sigma,
            mu,
            tau,
            mode,
            refine: false,
            peak_amplitude: DEFAULT_PEAK_AMPLITUDE,
            k: 0,
            samples: DEFAULT_SAMPLES,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sigma.validate("sigma")?;
        if self.family.uses_mu() {
            self.mu.ok_or_else(|| Error::InvalidSweep(format!("family {} needs a mu range", self.family)))?.validate("mu")?;
        }
        if !(self.tau > 0.0) {
            return Err(Error::InvalidSweep(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.peak_amplitude > 0.0 && self.peak_amplitude < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidSweep("peak amplitude must lie in (0, pi/2)".into()));
        }
        if self.samples < 3 {
            return Err(Error::InvalidSweep("at least 3 time samples are needed".into()));
        }
        Ok(())
    }

    fn params(&self, sigma: f64, mu: Option<f64>) -> TrajectoryParams {
        TrajectoryParams { epsilon: self.epsilon, ..TrajectoryParams::new(self.family, sigma, mu, self.tau) }
    }

    fn mu_values(&self) -> Vec<Option<f64>> {
        match (self.family.uses_mu(), self.mu) {
            (true, Some(r)) => r.values().into_iter().map(Some).collect(),
            _ => vec![None],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub sigma: f64,
    pub mu: Option<f64>,
    pub n_norm: Option<f64>,
    /// `∫ζ dt` when the trajectory stays in the tracked range.
    pub constraint_value: Option<f64>,
    pub amplitude: Option<f64>,
    pub feasible: bool,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinedOptimum {
    pub sigma: f64,
    pub mu: Option<f64>,
    pub n_norm: f64,
    /// Whether refinement improved on the grid argmin.
    pub improved: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    /// Ordered by `σ`, then `μ`.
    pub points: Vec<SweepPoint>,
    pub argmin: SweepPoint,
    pub refined: Option<RefinedOptimum>,
}

/// Evaluates one grid point; invalid or unreachable points come back
/// flagged rather than as errors.
pub fn evaluate_point(
    spec: &SweepSpec,
    sigma: f64,
    mu: Option<f64>,
    spectrum: &TrackedSpectrum,
    config: &MetricConfig,
) -> SweepPoint {
    let mut point =
        SweepPoint { sigma, mu, n_norm: None, constraint_value: None, amplitude: None, feasible: false, note: None };
    let traj = match build(spec, sigma, mu, spectrum) {
        Ok((traj, reached)) => {
            if !reached {
                point.note = Some("phase target unreachable".into());
            }
            point.feasible = reached;
            traj
        }
        Err(e) => {
            point.note = Some(e.to_string());
            return point;
        }
    };
    point.amplitude = Some(traj.amplitude());
    point.constraint_value = traj.conditional_phase(spectrum).ok();
    match n_norm(&traj, spectrum, config) {
        Ok(v) if v.is_finite() => point.n_norm = Some(v),
        Ok(_) => {
            point.feasible = false;
            point.note = Some("non-finite norm".into());
        }
        Err(e) => {
            point.feasible = false;
            point.note = Some(e.to_string());
        }
    }
    point
}

fn build(spec: &SweepSpec, sigma: f64, mu: Option<f64>, spectrum: &TrackedSpectrum) -> Result<(Trajectory, bool)> {
    let shape = PulseShape::new(&spec.params(sigma, mu))?;
    match spec.mode {
        SweepMode::PeakNormalized => Ok((Trajectory::from_shape(shape, spec.peak_amplitude, spec.samples)?, true)),
        SweepMode::PiCalibrated => {
            let cal = calibrate_or_saturate(&shape, spectrum, spec.k, spec.samples)?;
            Ok((cal.trajectory, cal.reached))
        }
    }
}

fn better(a: &SweepPoint, b: &SweepPoint) -> bool {
    match (a.feasible, a.n_norm, b.feasible, b.n_norm) {
        (true, Some(x), true, Some(y)) => x < y,
        (true, Some(_), _, _) => true,
        _ => false,
    }
}

pub fn run_sweep(spec: &SweepSpec, spectrum: &TrackedSpectrum, config: &MetricConfig) -> Result<SweepResult> {
    spec.validate()?;
    config.validate()?;
    let grid: Vec<(f64, Option<f64>)> =
        spec.sigma.values().into_iter().flat_map(|s| spec.mu_values().into_iter().map(move |m| (s, m))).collect();
    let points = parallel::map(&grid, |&(s, m)| evaluate_point(spec, s, m, spectrum, config));

    let Some(argmin) = points.iter().filter(|p| p.feasible && p.n_norm.is_some()).fold(None, |best: Option<&SweepPoint>, p| {
        match best {
            Some(b) if !better(p, b) => Some(b),
            _ => Some(p),
        }
    }) else {
        return Err(match spec.mode {
            SweepMode::PiCalibrated => {
                let max_phase = points.iter().filter_map(|p| p.constraint_value).fold(f64::NEG_INFINITY, f64::max);
                Error::AllInfeasible { max_phase }
            }
            SweepMode::PeakNormalized => Error::InvalidSweep("no grid point yields a valid trajectory".into()),
        });
    };
    let argmin = argmin.clone();
    let mut result = SweepResult { spec: *spec, points, argmin, refined: None };
    if spec.refine {
        result.refined = Some(refine_optimum(&result, spectrum, config));
    }
    Ok(result)
}

/// Golden-section descent, one coordinate at a time, inside the box
/// `start ± half_width`, until no coordinate moves by more than `tol`.
pub fn coordinate_descent(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    half_width: &[f64],
    bounds: &[(f64, f64)],
    tol: f64,
) -> (Vec<f64>, f64) {
    let mut x = start.to_vec();
    let mut fx = f(&x);
    for _ in 0..50 {
        let mut moved: f64 = 0.0;
        for d in 0..x.len() {
            let lo = (start[d] - half_width[d]).max(bounds[d].0);
            let hi = (start[d] + half_width[d]).min(bounds[d].1);
            let line = |v: f64| {
                let mut y = x.clone();
                y[d] = v;
                f(&y)
            };
            let (v, fv) = golden_section_min(line, lo, hi, 0.1 * tol);
            if fv < fx {
                moved = moved.max((v - x[d]).abs());
                x[d] = v;
                fx = fv;
            }
        }
        if moved <= tol {
            break;
        }
    }
    (x, fx)
}

/// Refines the grid argmin within one grid cell per coordinate. The result is
/// never worse than the grid argmin; non-finite norms fall back to it.
pub fn refine_optimum(result: &SweepResult, spectrum: &TrackedSpectrum, config: &MetricConfig) -> RefinedOptimum {
    let spec = &result.spec;
    let base = &result.argmin;
    let base_norm = base.n_norm.unwrap_or(f64::INFINITY);
    let uses_mu = spec.family.uses_mu() && base.mu.is_some();
    let objective = |x: &[f64]| {
        let p = evaluate_point(spec, x[0], if uses_mu { Some(x[1]) } else { None }, spectrum, config);
        match (p.feasible, p.n_norm) {
            (true, Some(v)) if v.is_finite() => v,
            _ => f64::INFINITY,
        }
    };
    let mut start = vec![base.sigma];
    let mut width = vec![spec.sigma.step()];
    let mut bounds = vec![(spec.sigma.lo, spec.sigma.hi)];
    if let (true, Some(mu), Some(r)) = (uses_mu, base.mu, spec.mu) {
        start.push(mu);
        width.push(r.step());
        bounds.push((r.lo, r.hi));
    }
    let (x, fx) = coordinate_descent(objective, &start, &width, &bounds, REFINE_TOL);
    if fx.is_finite() && fx < base_norm {
        RefinedOptimum { sigma: x[0], mu: if uses_mu { Some(x[1]) } else { None }, n_norm: fx, improved: true }
    } else {
        RefinedOptimum { sigma: base.sigma, mu: base.mu, n_norm: base_norm, improved: false }
    }
}

impl SweepResult {
    /// Long-format table `sigma,mu,n_norm,constraint_value,amplitude,feasible`.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&["sigma", "mu", "n_norm", "constraint_value", "amplitude", "feasible"]);
        for p in &self.points {
            csv.row(&[
                fmt_f64(p.sigma),
                fmt_opt(p.mu),
                fmt_opt(p.n_norm),
                fmt_opt(p.constraint_value),
                fmt_opt(p.amplitude),
                p.feasible.to_string(),
            ]);
        }
        csv.into_string()
    }

    /// Argmin and optional refined optimum as sorted-key JSON.
    pub fn optimum_json(&self) -> Result<String> {
        to_json_string(&serde_json::json!({
            "family": self.spec.family,
            "tau": self.spec.tau,
            "mode": self.spec.mode,
            "argmin": self.argmin,
            "refined": self.refined,
            "feasible_points": self.points.iter().filter(|p| p.feasible).count(),
            "total_points": self.points.len(),
        }))
    }

    /// Norms along `μ` for the grid row closest to `sigma`.
    pub fn mu_row(&self, sigma: f64) -> Vec<(f64, Option<f64>)> {
        let nearest = self
            .points
            .iter()
            .map(|p| p.sigma)
            .min_by(|a, b| (a - sigma).abs().total_cmp(&(b - sigma).abs()))
            .unwrap_or(sigma);
        self.points.iter().filter(|p| p.sigma == nearest).map(|p| (p.mu.unwrap_or(f64::NAN), p.n_norm)).collect()
    }
}
