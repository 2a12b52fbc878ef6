// SPDX-License-Identifier: Apache-2.0

//! Parametric flux trajectories and their amplitude calibration.
//!
//! A trajectory is `φ(t) = A·s(t)` on `T′ = [ε, τ]`, where `s` is a
//! peak-normalised family shape that vanishes at both ends of `T′` and `A`
//! is the physical amplitude. Calibration picks `A` so that the conditional
//! phase `∫ ζ(φ(t)) dt` equals `π + 2πk`.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bisect_increasing, golden_section_min, linspace, simpson, simpson_fn, uniform_step};
use crate::spectrum::TrackedSpectrum;

/// Default number of uniform time samples on `T′`.
pub const DEFAULT_SAMPLES: usize = 4001;
/// Default start of the time domain, ns.
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Panels used for the mollifier convolution integral.
pub const CONVOLUTION_PANELS: usize = 2000;
/// Residual tolerance of the phase calibration, rad.
pub const CALIBRATION_TOL: f64 = 1e-8;
const PEAK_SCAN_MIN: usize = 201;
const PEAK_SCAN_MAX: usize = 4001;

pub const GAUSSIAN_PREPULSE_WEIGHT: f64 = 1.0 / 3.0;
pub const MOLLIFIER_PREPULSE_WEIGHT: f64 = 1.0 / 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
    Mollifier,
    MollifiedGaussian,
    PrepulsedGaussian,
    MollifierPrepulsedGaussian,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Self::Gaussian,
        Self::Mollifier,
        Self::MollifiedGaussian,
        Self::PrepulsedGaussian,
        Self::MollifierPrepulsedGaussian,
    ];

    /// Families with the extra shift parameter `μ`.
    pub fn uses_mu(self) -> bool {
        matches!(self, Self::MollifiedGaussian | Self::PrepulsedGaussian | Self::MollifierPrepulsedGaussian)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Mollifier => "mollifier",
            Self::MollifiedGaussian => "mollified-gaussian",
            Self::PrepulsedGaussian => "prepulsed-gaussian",
            Self::MollifierPrepulsedGaussian => "mollifier-prepulsed-gaussian",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .enumerate()
            .find(|(k, f)| f.name() == key || (k + 1).to_string() == key)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::InvalidTrajectory(format!("unknown family '{s}'")))
    }
}

/// Family choice plus its shape parameters. Times in ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrajectoryParams {
    pub family: Family,
    pub sigma: f64,
    /// Shift parameter; ignored by the single-parameter families, which are
    /// centred at `τ/2`.
    #[serde(default)]
    pub mu: Option<f64>,
    pub tau: f64,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Overrides the fixed prepulse weights (1/3 Gaussian, 1/6 mollifier).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prepulse_weight: Option<f64>,
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl TrajectoryParams {
    pub fn new(family: Family, sigma: f64, mu: Option<f64>, tau: f64) -> Self {
        Self { family, sigma, mu, tau, epsilon: DEFAULT_EPSILON, prepulse_weight: None }
    }

    pub fn center(&self) -> f64 {
        0.5 * self.tau
    }

    /// Effective shift: `μ` for the two-parameter families, `τ/2` otherwise.
    pub fn mu_or_center(&self) -> f64 {
        if self.family.uses_mu() {
            self.mu.unwrap_or_else(|| self.center())
        } else {
            self.center()
        }
    }

    pub fn prepulse_weight(&self) -> f64 {
        self.prepulse_weight.unwrap_or(match self.family {
            Family::MollifierPrepulsedGaussian => MOLLIFIER_PREPULSE_WEIGHT,
            _ => GAUSSIAN_PREPULSE_WEIGHT,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidTrajectory(m));
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return bad(format!("sigma must be positive, got {}", self.sigma));
        }
        if !(self.epsilon >= 0.0) {
            return bad(format!("epsilon must be >= 0, got {}", self.epsilon));
        }
        if !(self.tau > 2.0 * self.epsilon && self.tau.is_finite()) {
            return bad(format!("tau must exceed 2*epsilon, got {}", self.tau));
        }
        if self.family.uses_mu() && self.mu.is_none() {
            return bad(format!("family {} requires mu", self.family));
        }
        let window = match self.family {
            Family::Mollifier => Some(self.center()),
            Family::MollifiedGaussian | Family::MollifierPrepulsedGaussian => Some(self.mu_or_center()),
            _ => None,
        };
        if let Some(c) = window {
            if c - self.sigma < 0.0 || c + self.sigma > self.tau {
                return bad(format!(
                    "mollifier support [{}, {}] leaves [0, {}]",
                    c - self.sigma,
                    c + self.sigma,
                    self.tau
                ));
            }
        }
        Ok(())
    }
}

/// Endpoint-zeroed Gaussian on `[0, τ]`, peak-normalised at `center`:
/// `[e^{−(t−c)²/2σ²} − L(t)] / [1 − L(c)]` with `L` the straight line through
/// the raw endpoint values (the constant `e^{−c²/2σ²}` when `c = τ/2`).
pub fn shape_gaussian(t: f64, sigma: f64, center: f64, tau: f64) -> Result<f64> {
    gaussian_on(t, sigma, center, 0.0, tau)
}

fn gauss(t: f64, sigma: f64, center: f64) -> f64 {
    let x = (t - center) / sigma;
    (-0.5 * x * x).exp()
}

fn gaussian_on(t: f64, sigma: f64, center: f64, t0: f64, t1: f64) -> Result<f64> {
    let (g0, g1) = (gauss(t0, sigma, center), gauss(t1, sigma, center));
    let line = |x: f64| g0 + (g1 - g0) * (x - t0) / (t1 - t0);
    let denom = 1.0 - line(center);
    if denom < 1e-12 {
        return Err(Error::DegenerateShape(format!(
            "Gaussian of width {sigma} is too flat to zero its endpoints"
        )));
    }
    Ok((gauss(t, sigma, center) - line(t)) / denom)
}

/// Peak-normalised mollifier bump `e·exp(1/(x² − 1))`, `x = (t − c)/σ`,
/// and exactly zero for `|x| ≥ 1`.
pub fn shape_mollifier(t: f64, sigma: f64, center: f64) -> f64 {
    let x = (t - center) / sigma;
    let q = x * x - 1.0;
    if q >= 0.0 {
        0.0
    } else {
        (1.0 / q + 1.0).exp()
    }
}

/// Raw convolution of the centred Gaussian shape on `[0, τ]` with a
/// mollifier kernel of width `sigma_m` placed so that the result peaks near
/// `mu`. Not normalised.
pub fn mollified_gaussian_raw(t: f64, sigma_g: f64, sigma_m: f64, tau: f64, mu: f64) -> Result<f64> {
    let shift = mu - 0.5 * tau;
    let lo = (t - shift - sigma_m).max(0.0);
    let hi = (t - shift + sigma_m).min(tau);
    if hi <= lo {
        return Ok(0.0);
    }
    // Validate once; the integrand itself cannot fail afterwards.
    shape_gaussian(0.5 * tau, sigma_g, 0.5 * tau, tau)?;
    Ok(simpson_fn(
        |tp| {
            let g = shape_gaussian(tp, sigma_g, 0.5 * tau, tau).unwrap_or(0.0);
            g * shape_mollifier(t - tp, sigma_m, shift)
        },
        lo,
        hi,
        CONVOLUTION_PANELS,
    ))
}

/// Which prepulse to place in front of the main Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrepulseKind {
    Gaussian,
    Mollifier,
}

impl PrepulseKind {
    pub fn default_weight(self) -> f64 {
        match self {
            Self::Gaussian => GAUSSIAN_PREPULSE_WEIGHT,
            Self::Mollifier => MOLLIFIER_PREPULSE_WEIGHT,
        }
    }
}

/// Unnormalised prepulsed composite `w·p(t; σ, μ) + G(t; σ, τ/2)` on `[0, τ]`.
pub fn prepulsed_raw(t: f64, sigma: f64, tau: f64, mu: f64, kind: PrepulseKind, weight: f64) -> Result<f64> {
    let main = shape_gaussian(t, sigma, 0.5 * tau, tau)?;
    let pre = match kind {
        PrepulseKind::Gaussian => shape_gaussian(t, sigma, mu, tau)?,
        PrepulseKind::Mollifier => shape_mollifier(t, sigma, mu),
    };
    Ok(weight * pre + main)
}

#[derive(Debug, Clone)]
enum Kernel {
    Gaussian { sigma: f64, center: f64 },
    Mollifier { sigma: f64, center: f64 },
    Mollified { sigma: f64, tau: f64, mu: f64 },
    Prepulsed { sigma: f64, tau: f64, mu: f64, kind: PrepulseKind, weight: f64 },
}

impl Kernel {
    fn raw(&self, t: f64) -> f64 {
        match *self {
            Kernel::Gaussian { sigma, center } => gauss(t, sigma, center),
            Kernel::Mollifier { sigma, center } => shape_mollifier(t, sigma, center),
            Kernel::Mollified { sigma, tau, mu } => {
                mollified_gaussian_raw(t, sigma, sigma, tau, mu).unwrap_or(0.0)
            }
            Kernel::Prepulsed { sigma, tau, mu, kind, weight } => {
                prepulsed_raw(t, sigma, tau, mu, kind, weight).unwrap_or(0.0)
            }
        }
    }
}

/// A family shape prepared for evaluation on `T′ = [ε, τ]`: the raw family
/// curve minus the straight line through its values at `ε` and `τ`,
/// scaled to unit peak, clamped at zero, and zero outside `T′`.
#[derive(Debug, Clone)]
pub struct PulseShape {
    params: TrajectoryParams,
    kernel: Kernel,
    base: (f64, f64),
    scale: f64,
    peak_time: f64,
    warnings: Vec<String>,
}

impl PulseShape {
    pub fn new(params: &TrajectoryParams) -> Result<Self> {
        params.validate()?;
        let (sigma, tau, mu) = (params.sigma, params.tau, params.mu_or_center());
        let mut warnings = Vec::new();
        let kernel = match params.family {
            Family::Gaussian => Kernel::Gaussian { sigma, center: params.center() },
            Family::Mollifier => Kernel::Mollifier { sigma, center: params.center() },
            Family::MollifiedGaussian => Kernel::Mollified { sigma, tau, mu },
            Family::PrepulsedGaussian | Family::MollifierPrepulsedGaussian => {
                let kind = if params.family == Family::PrepulsedGaussian {
                    PrepulseKind::Gaussian
                } else {
                    PrepulseKind::Mollifier
                };
                if kind == PrepulseKind::Gaussian && (mu - 3.0 * sigma < 0.0 || mu + 3.0 * sigma > tau) {
                    warnings.push(format!("Gaussian prepulse at mu={mu} overlaps the domain boundary"));
                }
                Kernel::Prepulsed { sigma, tau, mu, kind, weight: params.prepulse_weight() }
            }
        };
        // Prepulsed shapes already zero the ends of [0, τ] through their
        // Gaussian components; the remaining line only removes the tiny
        // value at ε.
        let t0 = params.epsilon;
        let base = (kernel.raw(t0), kernel.raw(tau));
        let mut shape = Self { params: *params, kernel, base, scale: 1.0, peak_time: params.center(), warnings };

        let (peak_time, peak, lowest) = shape.locate_peak();
        if !(peak > 1e-12) {
            return Err(Error::DegenerateShape(format!(
                "{} shape has no positive peak after endpoint zeroing",
                params.family
            )));
        }
        if params.family == Family::MollifiedGaussian {
            let edge = base.0.max(base.1);
            if edge > 1e-6 * peak {
                shape.warnings.push(format!(
                    "convolution support exceeds the domain (edge value {:.3e} of peak)",
                    edge / peak
                ));
            }
        }
        shape.scale = 1.0 / peak;
        shape.peak_time = peak_time;
        if lowest < -1e-12 * peak {
            shape.warnings.push("negative shape values clamped to zero".into());
        }
        Ok(shape)
    }

    fn unclamped(&self, t: f64) -> f64 {
        let (t0, t1) = (self.params.epsilon, self.params.tau);
        let line = self.base.0 + (self.base.1 - self.base.0) * (t - t0) / (t1 - t0);
        (self.kernel.raw(t) - line) * self.scale
    }

    /// Scans at a step of at most `σ/8`, refines the best sample by golden
    /// section and returns `(peak time, peak, lowest scanned value)`.
    fn locate_peak(&self) -> (f64, f64, f64) {
        let (t0, t1) = (self.params.epsilon, self.params.tau);
        let n = ((8.0 * (t1 - t0) / self.params.sigma).ceil() as usize + 1).clamp(PEAK_SCAN_MIN, PEAK_SCAN_MAX);
        let grid = linspace(t0, t1, n);
        let step = grid[1] - grid[0];
        let values: Vec<f64> = grid.iter().map(|&t| self.unclamped(t)).collect();
        let (k, _) = values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
        let lowest = values.iter().copied().fold(f64::INFINITY, f64::min);
        let (t, neg) = golden_section_min(
            |t| -self.unclamped(t),
            (grid[k] - step).max(t0),
            (grid[k] + step).min(t1),
            1e-10,
        );
        (t, -neg, lowest)
    }

    /// Shape value in `[0, 1]`.
    pub fn value(&self, t: f64) -> f64 {
        if t < self.params.epsilon || t > self.params.tau {
            return 0.0;
        }
        self.unclamped(t).clamp(0.0, 1.0)
    }

    pub fn params(&self) -> &TrajectoryParams {
        &self.params
    }

    pub fn peak_time(&self) -> f64 {
        self.peak_time
    }

    /// Non-fatal conditions raised while preparing the shape.
    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Shape samples on `samples` uniform points of `T′`.
    pub fn sample(&self, samples: usize) -> (Vec<f64>, Vec<f64>) {
        let t = linspace(self.params.epsilon, self.params.tau, samples);
        let s = t.iter().map(|&x| self.value(x)).collect();
        (t, s)
    }
}

#[derive(Debug, Clone)]
enum Waveform {
    Shaped { shape: PulseShape, amplitude: f64 },
    Constant(f64),
}

/// A sampled flux trajectory on a uniform grid of `T′ = [ε, τ]`.
#[derive(Debug, Clone)]
pub struct Trajectory {
    waveform: Waveform,
    epsilon: f64,
    tau: f64,
    t_grid: Vec<f64>,
    phi_samples: Vec<f64>,
}

impl Trajectory {
    pub fn from_shape(shape: PulseShape, amplitude: f64, samples: usize) -> Result<Self> {
        if !(0.0..std::f64::consts::FRAC_PI_2).contains(&amplitude) {
            return Err(Error::InvalidTrajectory(format!("amplitude {amplitude} outside [0, pi/2)")));
        }
        let (eps, tau) = (shape.params.epsilon, shape.params.tau);
        Ok(Self::build(Waveform::Shaped { shape, amplitude }, eps, tau, samples))
    }

    /// Constant flux on `[ε, τ]`; a diagnostic reference, not a CZ pulse.
    pub fn constant(phi: f64, epsilon: f64, tau: f64, samples: usize) -> Self {
        Self::build(Waveform::Constant(phi), epsilon, tau, samples)
    }

    fn build(waveform: Waveform, epsilon: f64, tau: f64, samples: usize) -> Self {
        let mut traj = Self { waveform, epsilon, tau, t_grid: linspace(epsilon, tau, samples.max(3)), phi_samples: Vec::new() };
        traj.phi_samples = traj.t_grid.iter().map(|&t| traj.phi_at(t)).collect();
        traj
    }

    /// Flux at arbitrary `t` (zero outside `T′` for shaped pulses).
    pub fn phi_at(&self, t: f64) -> f64 {
        match &self.waveform {
            Waveform::Shaped { shape, amplitude } => amplitude * shape.value(t),
            Waveform::Constant(c) => *c,
        }
    }

    /// `φ̇(t)` by second-order differences with step `h`, one-sided within
    /// `h` of the domain ends.
    pub fn phi_dot(&self, t: f64, h: f64) -> f64 {
        let f = |x: f64| self.phi_at(x);
        if t - h < self.epsilon {
            (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)
        } else if t + h > self.tau {
            (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h)
        } else {
            (f(t + h) - f(t - h)) / (2.0 * h)
        }
    }

    /// `φ̈(t)` with the same stencil policy as [`Trajectory::phi_dot`].
    pub fn phi_ddot(&self, t: f64, h: f64) -> f64 {
        let f = |x: f64| self.phi_at(x);
        let h2 = h * h;
        if t - h < self.epsilon {
            (2.0 * f(t) - 5.0 * f(t + h) + 4.0 * f(t + 2.0 * h) - f(t + 3.0 * h)) / h2
        } else if t + h > self.tau {
            (2.0 * f(t) - 5.0 * f(t - h) + 4.0 * f(t - 2.0 * h) - f(t - 3.0 * h)) / h2
        } else {
            (f(t + h) - 2.0 * f(t) + f(t - h)) / h2
        }
    }

    /// Same waveform on a different number of samples.
    pub fn resampled(&self, samples: usize) -> Self {
        Self::build(self.waveform.clone(), self.epsilon, self.tau, samples)
    }

    pub fn params(&self) -> Option<&TrajectoryParams> {
        match &self.waveform {
            Waveform::Shaped { shape, .. } => Some(&shape.params),
            Waveform::Constant(_) => None,
        }
    }

    pub fn shape(&self) -> Option<&PulseShape> {
        match &self.waveform {
            Waveform::Shaped { shape, .. } => Some(shape),
            Waveform::Constant(_) => None,
        }
    }

    pub fn amplitude(&self) -> f64 {
        match &self.waveform {
            Waveform::Shaped { amplitude, .. } => *amplitude,
            Waveform::Constant(c) => *c,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn duration(&self) -> f64 {
        self.tau - self.epsilon
    }

    pub fn t_grid(&self) -> &[f64] {
        &self.t_grid
    }

    pub fn phi_samples(&self) -> &[f64] {
        &self.phi_samples
    }

    pub fn step(&self) -> Result<f64> {
        uniform_step(&self.t_grid)
    }

    /// `∫_{T′} ζ(φ(t)) dt` by composite Simpson on the sample grid.
    pub fn conditional_phase(&self, spectrum: &TrackedSpectrum) -> Result<f64> {
        let h = self.step()?;
        let z = self.phi_samples.iter().map(|&p| spectrum.zeta(p)).collect::<Result<Vec<_>>>()?;
        Ok(simpson(&z, h))
    }

    /// Violations of the codomain, endpoint and continuity invariants.
    pub fn invariant_violations(&self, phi_max: f64) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(p) = self.phi_samples.iter().find(|&&p| !(0.0..=phi_max + 1e-12).contains(&p)) {
            out.push(format!("sample {p} outside [0, {phi_max}]"));
        }
        if matches!(self.waveform, Waveform::Shaped { .. }) {
            let (first, last) = (self.phi_samples[0], self.phi_samples[self.phi_samples.len() - 1]);
            if first.abs() > 1e-9 || last.abs() > 1e-9 {
                out.push(format!("endpoint values {first:e}, {last:e} exceed 1e-9"));
            }
        }
        // Continuity: adjacent jumps bounded by a fine-difference slope bound.
        if let Ok(h) = self.step() {
            let bound = self
                .t_grid
                .iter()
                .map(|&t| ((self.phi_at(t + 1e-4 * h) - self.phi_at(t - 1e-4 * h)) / (2e-4 * h)).abs())
                .fold(0.0, f64::max);
            let jump = self.phi_samples.windows(2).map(|w| (w[1] - w[0]).abs()).fold(0.0, f64::max);
            if jump > 1.5 * bound * h + 1e-12 {
                out.push(format!("adjacent jump {jump:e} exceeds slope bound {:e}", bound * h));
            }
        }
        out
    }
}

/// Calibrated (or best-effort) trajectory with its phase bookkeeping.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub trajectory: Trajectory,
    /// Achieved `∫ζ dt`, rad.
    pub phase: f64,
    /// Target `π + 2πk`, rad.
    pub target: f64,
    /// `phase − target`.
    pub residual: f64,
    /// `false` when the target was out of reach and the amplitude was
    /// saturated at the codomain ceiling instead.
    pub reached: bool,
}

/// What to do when the phase target is out of reach.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudePolicy {
    /// Fail with [`Error::ConstraintUnreachable`].
    #[default]
    Strict,
    /// Fall back to the codomain ceiling, see [`calibrate_or_saturate`].
    Saturate,
}

impl FromStr for AmplitudePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict" => Ok(Self::Strict),
            "saturate" => Ok(Self::Saturate),
            _ => Err(Error::Invalid(format!("unknown amplitude policy '{s}'"))),
        }
    }
}

/// Calibrates under the given policy.
pub fn realize(
    shape: &PulseShape,
    spectrum: &TrackedSpectrum,
    k: u32,
    samples: usize,
    policy: AmplitudePolicy,
) -> Result<Calibration> {
    match policy {
        AmplitudePolicy::Strict => calibrate_amplitude(shape, spectrum, k, samples),
        AmplitudePolicy::Saturate => calibrate_or_saturate(shape, spectrum, k, samples),
    }
}

pub fn phase_target(k: u32) -> f64 {
    PI + TAU * k as f64
}

/// Finds `A ∈ (0, φ_max]` with `∫ζ(A·s(t))dt = π + 2πk` by bisection, where
/// `φ_max` is the upper end of the tracked spectrum (A2 by default).
pub fn calibrate_amplitude(shape: &PulseShape, spectrum: &TrackedSpectrum, k: u32, samples: usize) -> Result<Calibration> {
    let cal = calibrate_or_saturate(shape, spectrum, k, samples)?;
    if cal.reached {
        Ok(cal)
    } else {
        Err(Error::ConstraintUnreachable {
            target: cal.target,
            achieved: cal.phase,
            max_amplitude: spectrum.phi_max(),
        })
    }
}

/// Like [`calibrate_amplitude`], but when the target exceeds the phase
/// available at the codomain ceiling the amplitude is saturated there (the
/// admissible amplitude with the smallest residual) and `reached` is false.
pub fn calibrate_or_saturate(shape: &PulseShape, spectrum: &TrackedSpectrum, k: u32, samples: usize) -> Result<Calibration> {
    let target = phase_target(k);
    let a_max = spectrum.phi_max();
    let t = linspace(shape.params.epsilon, shape.params.tau, samples.max(3));
    let h = uniform_step(&t)?;
    let s: Vec<f64> = t.iter().map(|&x| shape.value(x)).collect();
    let phase_at = |a: f64| -> f64 {
        let z: Vec<f64> = s.iter().map(|&v| spectrum.zeta((a * v).min(a_max)).unwrap_or(f64::NAN)).collect();
        simpson(&z, h)
    };

    let max_phase = phase_at(a_max);
    let (amplitude, reached) = if max_phase < target - CALIBRATION_TOL {
        (a_max, false)
    } else {
        let (a, r) = bisect_increasing(phase_at, target, 0.0, a_max, 0.1 * CALIBRATION_TOL);
        if r.abs() > CALIBRATION_TOL {
            return Err(Error::Invalid(format!("calibration stalled with residual {r:e}")));
        }
        (a, true)
    };
    let trajectory = Trajectory::from_shape(shape.clone(), amplitude, samples)?;
    let phase = trajectory.conditional_phase(spectrum)?;
    Ok(Calibration { trajectory, phase, target, residual: phase - target, reached })
}
