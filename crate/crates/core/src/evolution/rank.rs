// SPDX-License-Identifier: Apache-2.0

//! Comparison of the norm ordering with the simulated gate-distance
//! ordering.

use serde::{Deserialize, Serialize};

use super::{simulate_gate, FidelityMode, Restriction, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::format::{fmt_f64, fmt_opt, Csv};
use crate::metrics::{n_norm, MetricConfig};
use crate::parallel;
use crate::spectrum::TrackedSpectrum;
use crate::trajectory::{realize, AmplitudePolicy, PulseShape, TrajectoryParams, DEFAULT_SAMPLES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RankConfig {
    pub metric: MetricConfig,
    pub dt: f64,
    pub mode: FidelityMode,
    pub restriction: Restriction,
    pub policy: AmplitudePolicy,
    pub k: u32,
    pub samples: usize,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self {
            metric: MetricConfig::default(),
            dt: DEFAULT_DT,
            mode: FidelityMode::PhaseOptimized,
            restriction: Restriction::Qubit4,
            policy: AmplitudePolicy::Strict,
            k: 0,
            samples: DEFAULT_SAMPLES,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub params: TrajectoryParams,
    pub amplitude: Option<f64>,
    /// Whether the phase target was met (false under saturation).
    pub reached: Option<bool>,
    pub n_norm: Option<f64>,
    pub fidelity: Option<f64>,
    pub leakage_20: Option<f64>,
    /// Reason the sample was left out of the ranking.
    pub excluded: Option<String>,
}

/// Kendall rank correlation with explicit tie counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KendallTau {
    /// `τ_b`; absent when either ranking is constant.
    pub tau_b: Option<f64>,
    pub pairs: usize,
    pub concordant: usize,
    pub discordant: usize,
    pub ties_x: usize,
    pub ties_y: usize,
    pub ties_both: usize,
}

fn tied(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// How one pair of samples is ordered by the two rankings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairVerdict {
    Concordant,
    Discordant,
    TiedX,
    TiedY,
    TiedBoth,
}

impl PairVerdict {
    pub fn name(self) -> &'static str {
        match self {
            Self::Concordant => "concordant",
            Self::Discordant => "discordant",
            Self::TiedX => "tied_x",
            Self::TiedY => "tied_y",
            Self::TiedBoth => "tied_both",
        }
    }
}

pub fn classify_pair(xi: f64, xj: f64, yi: f64, yj: f64) -> PairVerdict {
    match (tied(xi, xj), tied(yi, yj)) {
        (true, true) => PairVerdict::TiedBoth,
        (true, false) => PairVerdict::TiedX,
        (false, true) => PairVerdict::TiedY,
        (false, false) if (xi < xj) == (yi < yj) => PairVerdict::Concordant,
        (false, false) => PairVerdict::Discordant,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairRow {
    pub i: usize,
    pub j: usize,
    pub verdict: PairVerdict,
}

/// Every unordered pair `i < j` with its verdict.
pub fn concordance_table(x: &[f64], y: &[f64]) -> Vec<PairRow> {
    let n = x.len().min(y.len());
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| PairRow { i, j, verdict: classify_pair(x[i], x[j], y[i], y[j]) })
        .collect()
}

/// `τ_b = (C − D) / √((n₀ − n₁)(n₀ − n₂))` where `n₁`, `n₂` count pairs tied
/// in `x` and in `y` (pairs tied in both count in each).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> KendallTau {
    let n = x.len().min(y.len());
    let (mut c, mut d, mut tx, mut ty, mut tb) = (0, 0, 0, 0, 0);
    for row in concordance_table(x, y) {
        match row.verdict {
            PairVerdict::Concordant => c += 1,
            PairVerdict::Discordant => d += 1,
            PairVerdict::TiedX => tx += 1,
            PairVerdict::TiedY => ty += 1,
            PairVerdict::TiedBoth => tb += 1,
        }
    }
    let n0 = n * n.saturating_sub(1) / 2;
    let n1 = tx + tb;
    let n2 = ty + tb;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    let tau_b = (denom > 0.0).then(|| (c as f64 - d as f64) / denom);
    KendallTau { tau_b, pairs: n0, concordant: c, discordant: d, ties_x: tx, ties_y: ty, ties_both: tb }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankReport {
    /// Included rows ordered by norm, then excluded rows in input order.
    pub rows: Vec<RankRow>,
    pub kendall: KendallTau,
    pub included: usize,
    pub excluded: usize,
    pub mode: FidelityMode,
    pub restriction: Restriction,
    pub policy: AmplitudePolicy,
}

fn evaluate(p: &TrajectoryParams, spectrum: &TrackedSpectrum, cfg: &RankConfig) -> Result<RankRow> {
    let shape = PulseShape::new(p)?;
    let cal = realize(&shape, spectrum, cfg.k, cfg.samples, cfg.policy)?;
    let norm = n_norm(&cal.trajectory, spectrum, &cfg.metric)?;
    let gate = simulate_gate(&cal.trajectory, spectrum, cfg.dt)?;
    Ok(RankRow {
        params: *p,
        amplitude: Some(cal.trajectory.amplitude()),
        reached: Some(cal.reached),
        n_norm: Some(norm),
        fidelity: Some(gate.fidelity.get(cfg.mode, cfg.restriction)),
        leakage_20: Some(gate.leakage_20),
        excluded: None,
    })
}

/// Calibrates and simulates every sample, then compares the norm ordering
/// with the gate-distance ordering. Samples that fail (for example an
/// unreachable phase target under the strict policy) are excluded and listed.
pub fn rank_check(samples: &[TrajectoryParams], spectrum: &TrackedSpectrum, cfg: &RankConfig) -> Result<RankReport> {
    if samples.len() < 2 {
        return Err(Error::Invalid("rank check needs at least two samples".into()));
    }
    cfg.metric.validate()?;
    let rows = parallel::map(samples, |p| {
        evaluate(p, spectrum, cfg).unwrap_or_else(|e| RankRow {
            params: *p,
            amplitude: None,
            reached: None,
            n_norm: None,
            fidelity: None,
            leakage_20: None,
            excluded: Some(e.to_string()),
        })
    });
    let (mut inc, exc): (Vec<_>, Vec<_>) = rows.into_iter().partition(|r| r.excluded.is_none());
    inc.sort_by(|a, b| a.n_norm.unwrap().total_cmp(&b.n_norm.unwrap()));
    let x: Vec<f64> = inc.iter().map(|r| r.n_norm.unwrap()).collect();
    let y: Vec<f64> = inc.iter().map(|r| r.fidelity.unwrap()).collect();
    let kendall = kendall_tau_b(&x, &y);
    let (included, excluded) = (inc.len(), exc.len());
    inc.extend(exc);
    Ok(RankReport {
        rows: inc,
        kendall,
        included,
        excluded,
        mode: cfg.mode,
        restriction: cfg.restriction,
        policy: cfg.policy,
    })
}

impl RankReport {
    fn included_rows(&self) -> &[RankRow] {
        &self.rows[..self.included]
    }

    /// Pairwise verdicts over the included rows (indices into `rows`).
    pub fn concordance(&self) -> Vec<PairRow> {
        let inc = self.included_rows();
        let x: Vec<f64> = inc.iter().map(|r| r.n_norm.unwrap_or(f64::NAN)).collect();
        let y: Vec<f64> = inc.iter().map(|r| r.fidelity.unwrap_or(f64::NAN)).collect();
        concordance_table(&x, &y)
    }

    /// One row per sample: rank by norm (blank when excluded) and scores.
    pub fn to_csv(&self) -> String {
        let mut csv = Csv::new(&[
            "rank", "family", "sigma", "mu", "tau", "amplitude", "reached", "n_norm", "fidelity", "leakage_20", "excluded",
        ]);
        for (k, r) in self.rows.iter().enumerate() {
            csv.row(&[
                if k < self.included { (k + 1).to_string() } else { String::new() },
                r.params.family.to_string(),
                fmt_f64(r.params.sigma),
                fmt_opt(r.params.mu),
                fmt_f64(r.params.tau),
                fmt_opt(r.amplitude),
                r.reached.map(|b| b.to_string()).unwrap_or_default(),
                fmt_opt(r.n_norm),
                fmt_opt(r.fidelity),
                fmt_opt(r.leakage_20),
                r.excluded.as_deref().unwrap_or("").replace([',', '\n'], ";"),
            ]);
        }
        csv.into_string()
    }

    /// Pairwise table `i,j,n_norm_i,n_norm_j,fidelity_i,fidelity_j,verdict`.
    pub fn concordance_csv(&self) -> String {
        let inc = self.included_rows();
        let mut csv = Csv::new(&["i", "j", "n_norm_i", "n_norm_j", "fidelity_i", "fidelity_j", "verdict"]);
        for p in self.concordance() {
            csv.row(&[
                (p.i + 1).to_string(),
                (p.j + 1).to_string(),
                fmt_opt(inc[p.i].n_norm),
                fmt_opt(inc[p.j].n_norm),
                fmt_opt(inc[p.i].fidelity),
                fmt_opt(inc[p.j].fidelity),
                p.verdict.name().to_string(),
            ]);
        }
        csv.into_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force oracle: sign products over all pairs.
    fn tau_oracle(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len();
        let (mut s, mut nx, mut ny) = (0.0, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let a = (x[i] - x[j]).signum() * if x[i] == x[j] { 0.0 } else { 1.0 };
                let b = (y[i] - y[j]).signum() * if y[i] == y[j] { 0.0 } else { 1.0 };
                s += a * b;
                nx += a * a;
                ny += b * b;
            }
        }
        s / (nx * ny).sqrt()
    }

    #[test]
    fn perfect_orders() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(kendall_tau_b(&x, &[10.0, 20.0, 30.0, 40.0]).tau_b, Some(1.0));
        assert_eq!(kendall_tau_b(&x, &[4.0, 3.0, 2.0, 1.0]).tau_b, Some(-1.0));
    }

    #[test]
    fn ties_match_oracle() {
        let x = [1.0, 2.0, 2.0, 3.0, 5.0, 5.0];
        let y = [2.0, 1.0, 1.0, 4.0, 3.0, 6.0];
        let k = kendall_tau_b(&x, &y);
        assert!((k.tau_b.unwrap() - tau_oracle(&x, &y)).abs() < 1e-14);
        assert_eq!(k.ties_both, 1);
        assert_eq!(k.concordant + k.discordant + k.ties_x + k.ties_y + k.ties_both, k.pairs);
    }

    #[test]
    fn duplicated_sample_is_a_reported_tie() {
        let k = kendall_tau_b(&[1.0, 1.0], &[0.5, 0.5]);
        assert_eq!(k.tau_b, None);
        assert_eq!(k.ties_both, 1);
    }

    #[test]
    fn table_counts_match_tau() {
        let x = [3.0, 1.0, 2.0, 2.0];
        let y = [0.1, 0.3, 0.2, 0.4];
        let t = concordance_table(&x, &y);
        let k = kendall_tau_b(&x, &y);
        assert_eq!(t.len(), 6);
        assert_eq!(t.iter().filter(|p| p.verdict == PairVerdict::Discordant).count(), k.discordant);
        assert_eq!(t.iter().filter(|p| p.verdict == PairVerdict::TiedX).count(), k.ties_x);
    }
}
