// SPDX-License-Identifier: Apache-2.0

//! `fluxgate` command-line entry point.

mod commands;
mod output;
mod reproduce;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fluxgate::evolution::{FidelityMode, Restriction, DEFAULT_DT};
use fluxgate::metrics::DeltaSource;
use fluxgate::sweep::{Range, SweepMode};
use fluxgate::trajectory::{AmplitudePolicy, Family, DEFAULT_EPSILON, DEFAULT_SAMPLES};

/// Default number of flux samples used to track the spectrum.
pub const SPECTRUM_STEPS: usize = 2001;

#[derive(Debug, Parser)]
#[command(name = "fluxgate", version, about = "Flux-trajectory design for the adiabatic CZ gate")]
#[command(arg_required_else_help = true)]
pub struct Cli {
    /// Device JSON file, or `default` for the built-in reference device.
    /// Falls back to $FLUXGATE_DEVICE.
    #[arg(long, global = true)]
    pub device: Option<String>,

    /// Worker threads for sweeps and batch simulations.
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Flux samples used to track the spectrum on [0, A2].
    #[arg(long, global = true, default_value_t = SPECTRUM_STEPS)]
    pub spectrum_steps: usize,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tracked eigenfrequencies as CSV `phi,label,omega_rad_per_ns`.
    Spectrum {
        /// Upper flux bound in rad (defaults to A2).
        #[arg(long)]
        phi_max: Option<f64>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Avoided-crossing locations and gaps as JSON.
    Crossings {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Sampled trajectory as CSV `t,phi` plus a JSON sidecar.
    Trajectory {
        #[command(flatten)]
        traj: TrajectoryArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Norm, constraint value, leakage estimate and residual summary as JSON.
    Metrics {
        #[command(flatten)]
        traj: TrajectoryArgs,
        #[command(flatten)]
        metric: MetricArgs,
        /// Also write the residual curve as CSV `t,D`.
        #[arg(long)]
        residual_csv: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Norm over a (sigma, mu) grid; writes sweep.csv and optimum.json.
    Sweep {
        #[arg(long)]
        family: Family,
        /// `lo:hi:n`
        #[arg(long)]
        sigma: Range,
        /// `lo:hi:n`, for the two-parameter families.
        #[arg(long)]
        mu: Option<Range>,
        #[arg(long, default_value_t = 20.0)]
        tau: f64,
        /// `peak_normalized` or `pi_calibrated`.
        #[arg(long, default_value = "peak_normalized")]
        mode: SweepMode,
        #[arg(long)]
        refine: bool,
        #[arg(long, default_value_t = fluxgate::sweep::DEFAULT_PEAK_AMPLITUDE)]
        peak_amplitude: f64,
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Full nine-level propagation; emits the gate report as JSON.
    Simulate {
        #[command(flatten)]
        traj: TrajectoryArgs,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        /// Distance reported as `fidelity_selected`.
        #[arg(long, default_value = "phase_optimized")]
        fidelity_mode: FidelityMode,
        #[arg(long, default_value = "full8")]
        restriction: Restriction,
        /// Per-step populations as CSV `t,p00,...,p22`.
        #[arg(long)]
        populations: Option<PathBuf>,
        /// Initial bare state for the population history.
        #[arg(long, default_value = "11")]
        initial: String,
        /// Record populations every this many steps.
        #[arg(long, default_value_t = 100)]
        every: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compares the norm ordering with the simulated distance ordering.
    RankCheck {
        /// JSON list of trajectory parameter objects.
        #[arg(long)]
        samples_file: PathBuf,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long, default_value = "phase_optimized")]
        fidelity_mode: FidelityMode,
        #[arg(long, default_value = "qubit4")]
        restriction: Restriction,
        #[arg(long, default_value = "strict")]
        policy: AmplitudePolicy,
        #[arg(long, default_value_t = 0)]
        k: u32,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Regenerates a canned figure or table data set plus a MANIFEST.
    Reproduce {
        /// fig2, fig3, fig4, fig5 or sec5-matrices.
        id: Option<String>,
        /// Figure number, as an alternative to the positional id.
        #[arg(long, conflicts_with = "id")]
        figure: Option<u32>,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct TrajectoryArgs {
    #[arg(long)]
    pub family: Family,
    #[arg(long)]
    pub sigma: f64,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 20.0)]
    pub tau: f64,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Phase branch: target pi + 2 pi k.
    #[arg(long, default_value_t = 0)]
    pub k: u32,
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    pub samples: usize,
    /// `strict` fails when pi is out of reach; `saturate` stops at A2.
    #[arg(long, default_value = "strict")]
    pub policy: AmplitudePolicy,
    /// Fixed peak flux in rad instead of calibration.
    #[arg(long)]
    pub amplitude: Option<f64>,
    #[arg(long)]
    pub prepulse_weight: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct MetricArgs {
    #[arg(long, default_value_t = 1.0)]
    pub upsilon: f64,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// `closed_form` or `coupled11`.
    #[arg(long, default_value = "closed_form", value_parser = parse_delta_source)]
    pub delta_source: DeltaSource,
}

fn parse_delta_source(s: &str) -> Result<DeltaSource, String> {
    serde_json::from_value(serde_json::Value::String(s.replace('-', "_")))
        .map_err(|_| format!("unknown delta source '{s}' (expected closed_form or coupled11)"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let workers = cli.workers;
    match fluxgate::parallel::with_workers(workers, || commands::dispatch(&cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
