// SPDX-License-Identifier: Apache-2.0

//! Coupled two-transmon device model.
//!
//! Transmon 1 is flux-tunable and transmon 2 is static. Each transmon is
//! truncated to three levels with Duffing level energies
//! `ω^j = j·ω_q + (α/2)·j·(j−1)`, and the tuned qubit frequency follows the
//! symmetric-SQUID form `ω_q(φ) = (ω₁ − α₁)·√cos φ + α₁`. The capacitive
//! coupling is kept in its rotating-wave exchange form
//! `g·(a⊗a† + a†⊗a)`.
//!
//! Units: every frequency is angular (rad/ns) and every time is in ns.
//! Configuration files use GHz and MHz and are converted on ingestion.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::path::Path;

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::basis::{gell_mann, pauli_x, BareState, C64, DIM, LEVELS};
use crate::error::{Error, Result};

pub type Matrix9 = SMatrix<C64, DIM, DIM>;
pub type Vector9 = SVector<f64, DIM>;

/// Physical parameters of the coupled pair, in rad/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub omega1: f64,
    pub omega2: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub g: f64,
}

impl DeviceParams {
    /// Validates and builds a parameter set.
    ///
    /// `g = 0` is accepted as the decoupled reference model.
    pub fn new(omega1: f64, omega2: f64, alpha1: f64, alpha2: f64, g: f64) -> Result<Self> {
        let p = Self { omega1, omega2, alpha1, alpha2, g };
        p.validate()?;
        Ok(p)
    }

    /// Builds from ordinary (non-angular) units: qubit frequencies in GHz,
    /// anharmonicities and coupling in MHz.
    pub fn from_lab_units(
        omega1_ghz: f64,
        omega2_ghz: f64,
        alpha1_mhz: f64,
        alpha2_mhz: f64,
        g_mhz: f64,
    ) -> Result<Self> {
        Self::new(
            TAU * omega1_ghz,
            TAU * omega2_ghz,
            TAU * alpha1_mhz * 1e-3,
            TAU * alpha2_mhz * 1e-3,
            TAU * g_mhz * 1e-3,
        )
    }

    /// The reference device: 5.889 / 5.031 GHz qubits, −324.3 / −234.7 MHz
    /// anharmonicities and 24.7 MHz coupling.
    pub fn reference() -> Self {
        Self::from_lab_units(5.889, 5.031, -324.3, -234.7, 24.7).expect("reference device is valid")
    }

    pub fn with_coupling(self, g: f64) -> Self {
        Self { g, ..self }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.omega1, self.omega2, self.alpha1, self.alpha2, self.g];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidDevice("parameters must be finite".into()));
        }
        if !(self.omega1 > self.omega2 && self.omega2 > 0.0) {
            return Err(Error::InvalidDevice("require omega1 > omega2 > 0".into()));
        }
        if !(self.alpha1 < 0.0 && self.alpha2 < 0.0) {
            return Err(Error::InvalidDevice("anharmonicities must be negative".into()));
        }
        if self.g < 0.0 || self.g >= self.detuning() {
            return Err(Error::InvalidDevice("require 0 <= g < omega1 - omega2".into()));
        }
        Ok(())
    }

    /// Idle-point detuning `Δ = ω₁ − ω₂`.
    pub fn detuning(&self) -> f64 {
        self.omega1 - self.omega2
    }

    /// Scale factor `ω₁ − α₁` of the √cos φ frequency law.
    pub fn tuning_scale(&self) -> f64 {
        self.omega1 - self.alpha1
    }

    /// Loads a JSON device file (GHz/MHz keys, unknown keys rejected).
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        let cfg: DeviceConfig = serde_json::from_str(text)?;
        cfg.into_params()
    }
}

impl Default for DeviceParams {
    fn default() -> Self {
        Self::reference()
    }
}

/// On-disk device description.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceConfig {
    pub omega1_ghz: f64,
    pub omega2_ghz: f64,
    pub alpha1_mhz: f64,
    pub alpha2_mhz: f64,
    pub g_mhz: f64,
    /// Coherence times are accepted for completeness and ignored.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t1_us: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t2_us: Option<serde_json::Value>,
}

impl DeviceConfig {
    pub fn into_params(self) -> Result<DeviceParams> {
        DeviceParams::from_lab_units(
            self.omega1_ghz,
            self.omega2_ghz,
            self.alpha1_mhz,
            self.alpha2_mhz,
            self.g_mhz,
        )
    }

    pub fn reference() -> Self {
        Self {
            omega1_ghz: 5.889,
            omega2_ghz: 5.031,
            alpha1_mhz: -324.3,
            alpha2_mhz: -234.7,
            g_mhz: 24.7,
            t1_us: Some(serde_json::json!([25.5, 48.8])),
            t2_us: Some(serde_json::json!([13.3, 28.4])),
        }
    }
}

/// Reduced external flux in radians, restricted to `[0, π/2)`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FluxPoint(f64);

impl FluxPoint {
    pub fn new(phi: f64) -> Result<Self> {
        if (0.0..FRAC_PI_2).contains(&phi) {
            Ok(Self(phi))
        } else {
            Err(Error::FluxDomain { phi })
        }
    }

    pub const ZERO: FluxPoint = FluxPoint(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transmon {
    /// Transmon 1, tuned by flux.
    Tuned,
    /// Transmon 2, fixed frequency.
    Static,
}

/// Tuned qubit frequency `ω_q(φ)`.
pub fn qubit_frequency(params: &DeviceParams, phi: FluxPoint) -> f64 {
    qubit_frequency_raw(params, phi.value())
}

pub(crate) fn qubit_frequency_raw(params: &DeviceParams, phi: f64) -> f64 {
    params.tuning_scale() * phi.cos().sqrt() + params.alpha1
}

/// Deviation of the tuned qubit frequency from its idle value,
/// `δ(φ) = (ω₁ − α₁)(1 − √cos φ)`.
pub fn qubit_detuning(params: &DeviceParams, phi: f64) -> f64 {
    params.tuning_scale() * (1.0 - phi.cos().sqrt())
}

/// `dδ/dφ` of [`qubit_detuning`].
pub fn qubit_detuning_slope(params: &DeviceParams, phi: f64) -> f64 {
    params.tuning_scale() * phi.sin() / (2.0 * phi.cos().sqrt())
}

/// Energy of level `level` of one transmon at flux `phi`.
pub fn level_frequency(params: &DeviceParams, transmon: Transmon, level: usize, phi: FluxPoint) -> Result<f64> {
    if level >= LEVELS {
        return Err(Error::InvalidLevel { level });
    }
    let (wq, alpha) = match transmon {
        Transmon::Tuned => (qubit_frequency(params, phi), params.alpha1),
        Transmon::Static => (params.omega2, params.alpha2),
    };
    Ok(duffing(wq, alpha, level))
}

fn duffing(wq: f64, alpha: f64, level: usize) -> f64 {
    let j = level as f64;
    j * wq + 0.5 * alpha * j * (j - 1.0)
}

/// Uncoupled energies of the nine product states at flux `phi`.
pub fn bare_energies(params: &DeviceParams, phi: f64) -> Vector9 {
    let wq = qubit_frequency_raw(params, phi);
    Vector9::from_fn(|k, _| {
        let s = BareState::from_index(k);
        duffing(wq, params.alpha1, s.i as usize) + duffing(params.omega2, params.alpha2, s.j as usize)
    })
}

/// Hermitian 9×9 Hamiltonian in the lexicographic `|i,j⟩` basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianMatrix(pub Matrix9);

impl HamiltonianMatrix {
    pub fn matrix(&self) -> &Matrix9 {
        &self.0
    }

    pub fn element(&self, row: BareState, col: BareState) -> C64 {
        self.0[(row.index(), col.index())]
    }

    /// Eigenvalues in ascending order with matching eigenvector columns.
    pub fn eigh(&self) -> (Vector9, Matrix9) {
        eigh(&self.0)
    }
}

/// Ascending Hermitian eigendecomposition.
pub fn eigh(m: &Matrix9) -> (Vector9, Matrix9) {
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..DIM).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = Vector9::from_fn(|k, _| eig.eigenvalues[order[k]]);
    let vectors = Matrix9::from_fn(|r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Rotating-wave exchange coupling `g(a⊗a† + a†⊗a)` on two qutrits.
pub fn interaction(params: &DeviceParams) -> Matrix9 {
    let mut h = Matrix9::zeros();
    for col in BareState::all() {
        // a⊗a†: lower transmon 1, raise transmon 2.
        if col.i > 0 && col.j < 2 {
            let row = BareState::new(col.i - 1, col.j + 1);
            let amp = (col.i as f64).sqrt() * ((col.j + 1) as f64).sqrt();
            h[(row.index(), col.index())] += C64::new(params.g * amp, 0.0);
        }
        // a†⊗a: raise transmon 1, lower transmon 2.
        if col.i < 2 && col.j > 0 {
            let row = BareState::new(col.i + 1, col.j - 1);
            let amp = ((col.i + 1) as f64).sqrt() * (col.j as f64).sqrt();
            h[(row.index(), col.index())] += C64::new(params.g * amp, 0.0);
        }
    }
    h
}

pub fn build_hamiltonian(params: &DeviceParams, phi: FluxPoint) -> HamiltonianMatrix {
    HamiltonianMatrix(hamiltonian_raw(params, phi.value()))
}

pub(crate) fn hamiltonian_raw(params: &DeviceParams, phi: f64) -> Matrix9 {
    let mut h = interaction(params);
    let diag = bare_energies(params, phi);
    for k in 0..DIM {
        h[(k, k)] += C64::new(diag[k], 0.0);
    }
    h
}

/// Outcome of comparing the restricted coupling with its block form.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockCheck {
    pub holds: bool,
    pub max_deviation: f64,
    /// Interaction subspace basis, sorted by idle-point energy.
    pub order: Vec<BareState>,
}

/// Seven-state interaction subspace: all qutrit pairs except 00 and 22.
pub fn interaction_subspace() -> Vec<BareState> {
    BareState::all()
        .filter(|s| s.index() != 0 && s.index() != DIM - 1)
        .collect()
}

/// Restricts the exchange coupling to the seven-state subspace, orders it
/// by idle-point energy and compares it entrywise with
/// `diag(g·σ₁, g√2(λ₁ + λ₆), 2g·σ₁)`.
pub fn check_block_structure(params: &DeviceParams) -> BlockCheck {
    let energies = bare_energies(params, 0.0);
    let mut order = interaction_subspace();
    order.sort_by(|a, b| energies[a.index()].total_cmp(&energies[b.index()]));

    let h_int = interaction(params);
    let restricted = SMatrix::<C64, 7, 7>::from_fn(|r, c| h_int[(order[r].index(), order[c].index())]);

    let g = params.g;
    let mut expected = SMatrix::<C64, 7, 7>::zeros();
    let sx = pauli_x();
    let central = (gell_mann(1) + gell_mann(6)) * C64::new(g * 2f64.sqrt(), 0.0);
    for r in 0..2 {
        for c in 0..2 {
            expected[(r, c)] = sx[(r, c)] * g;
            expected[(5 + r, 5 + c)] = sx[(r, c)] * (2.0 * g);
        }
    }
    for r in 0..3 {
        for c in 0..3 {
            expected[(2 + r, 2 + c)] = central[(r, c)];
        }
    }
    let max_deviation = (restricted - expected).iter().map(|z| z.norm()).fold(0.0, f64::max);
    BlockCheck {
        holds: max_deviation <= 1e-12,
        max_deviation,
        order,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::*;
    use std::f64::consts::PI;

    fn phi(x: f64) -> FluxPoint {
        FluxPoint::new(x).unwrap()
    }

    #[test]
    fn qubit_frequency_at_idle_is_omega1() {
        let p = DeviceParams::reference();
        assert_eq!(qubit_frequency(&p, FluxPoint::ZERO), TAU * 5.889);
    }

    #[test]
    fn qubit_frequency_matches_high_precision_value_at_pi_over_3() {
        // Independent 40-digit evaluation of (ω₁−α₁)·√(1/2) + α₁.
        let oracle = 25.567_327_564_541_037_108_116_9;
        let p = DeviceParams::reference();
        let w = qubit_frequency(&p, phi(PI / 3.0));
        assert!((w - oracle).abs() < 1e-12, "{w}");
        assert!((w / TAU - 4.0692).abs() < 5e-5);
    }

    #[test]
    fn qubit_frequency_decreases_strictly() {
        let p = DeviceParams::reference();
        assert!(qubit_frequency(&p, phi(0.3)) > qubit_frequency(&p, phi(0.4)));
        let grid = crate::numerics::linspace(0.0, FRAC_PI_2 - 0.01, 1000);
        let w: Vec<f64> = grid.iter().map(|&x| qubit_frequency(&p, phi(x))).collect();
        assert!(w.windows(2).all(|v| v[1] < v[0]));
    }

    #[test]
    fn flux_domain_is_enforced() {
        assert!(FluxPoint::new(-1e-12).is_err());
        assert!(FluxPoint::new(FRAC_PI_2).is_err());
        assert!(FluxPoint::new(f64::NAN).is_err());
        assert!(FluxPoint::new(0.0).is_ok());
    }

    #[test]
    fn level_frequencies() {
        let p = DeviceParams::reference();
        let z = FluxPoint::ZERO;
        assert_eq!(level_frequency(&p, Transmon::Tuned, 0, z).unwrap(), 0.0);
        let two = level_frequency(&p, Transmon::Tuned, 2, z).unwrap();
        let w = qubit_frequency(&p, z);
        assert!((two - (w + (w + p.alpha1))).abs() < 1e-12);
        assert!((two - (2.0 * TAU * 5.889 - TAU * 0.3243)).abs() < 1e-12);
        for x in [0.0, 0.2, 0.55] {
            let w2 = level_frequency(&p, Transmon::Static, 1, phi(x)).unwrap();
            assert!((w2 - TAU * 5.031).abs() < 1e-12);
        }
        assert!(matches!(
            level_frequency(&p, Transmon::Tuned, 3, z),
            Err(Error::InvalidLevel { level: 3 })
        ));
    }

    #[test]
    fn hamiltonian_matrix_elements() {
        let p = DeviceParams::reference();
        let h = build_hamiltonian(&p, phi(0.2));
        assert!((h.element(S10, S01) - C64::new(p.g, 0.0)).norm() < 1e-15);
        assert!((h.element(S20, S11) - C64::new(p.g * 2f64.sqrt(), 0.0)).norm() < 1e-15);
        assert!((h.element(S21, S12) - C64::new(2.0 * p.g, 0.0)).norm() < 1e-15);
        let hint = interaction(&p);
        for s in BareState::all() {
            assert_eq!(hint[(S00.index(), s.index())], C64::new(0.0, 0.0));
            assert_eq!(hint[(s.index(), S00.index())], C64::new(0.0, 0.0));
            assert_eq!(hint[(S22.index(), s.index())], C64::new(0.0, 0.0));
            assert_eq!(hint[(s.index(), S22.index())], C64::new(0.0, 0.0));
        }
    }

    #[test]
    fn uncoupled_hamiltonian_is_diagonal_bare_sums() {
        let p = DeviceParams::reference().with_coupling(0.0);
        let h = build_hamiltonian(&p, FluxPoint::ZERO);
        let (vals, _) = h.eigh();
        assert!((h.element(S11, S11).re - (p.omega1 + p.omega2)).abs() < 1e-12);
        let mut bare: Vec<f64> = bare_energies(&p, 0.0).iter().copied().collect();
        bare.sort_by(f64::total_cmp);
        for (a, b) in vals.iter().zip(&bare) {
            assert!((a - b).abs() <= 1e-12);
        }
    }

    #[test]
    fn block_structure_reference_zero_and_doubled_coupling() {
        let p = DeviceParams::reference();
        let check = check_block_structure(&p);
        assert!(check.holds && check.max_deviation <= 1e-12);
        assert_eq!(check.order, vec![S01, S10, S02, S11, S20, S12, S21]);

        let zero = check_block_structure(&p.with_coupling(0.0));
        assert_eq!(zero.max_deviation, 0.0);

        let doubled = p.with_coupling(2.0 * p.g);
        let a = interaction(&p);
        let b = interaction(&doubled);
        assert!((b - a * C64::new(2.0, 0.0)).norm() == 0.0);
        assert!(check_block_structure(&doubled).holds);
    }

    #[test]
    fn device_json_parsing_is_strict() {
        let ok = r#"{"omega1_ghz":5.889,"omega2_ghz":5.031,"alpha1_mhz":-324.3,
                     "alpha2_mhz":-234.7,"g_mhz":24.7,"t1_us":[25.5,48.8],"t2_us":13.3}"#;
        assert_eq!(DeviceParams::from_json_str(ok).unwrap(), DeviceParams::reference());
        let unknown = r#"{"omega1_ghz":5.889,"omega2_ghz":5.031,"alpha1_mhz":-324.3,
                          "alpha2_mhz":-234.7,"g_mhz":24.7,"flux_bias":0.1}"#;
        assert!(matches!(DeviceParams::from_json_str(unknown), Err(Error::Config(_))));
        let invalid = r#"{"omega1_ghz":5.0,"omega2_ghz":5.5,"alpha1_mhz":-324.3,
                          "alpha2_mhz":-234.7,"g_mhz":24.7}"#;
        assert!(matches!(DeviceParams::from_json_str(invalid), Err(Error::InvalidDevice(_))));
    }

    #[test]
    fn idle_coupling_ratio_is_dispersive() {
        let p = DeviceParams::reference();
        let ratio = p.omega1 / p.g;
        assert!((200.0..280.0).contains(&ratio), "{ratio}");
    }
}
