//! Command options, the TOML configuration file and their merge.
//!
//! Precedence: command-line flag, then `LOGLIP_*` environment variable (both
//! handled by clap), then the configuration file, then built-in defaults.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::output::Format;
use crate::Failure;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionArg {
    Double,
    Extended,
}

impl From<PrecisionArg> for loglip_core::Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => loglip_core::Precision::Double,
            PrecisionArg::Extended => loglip_core::Precision::Extended,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    /// Exact sums whenever both indices are exact integers.
    Auto,
    Exact,
    Asymptotic,
}

macro_rules! overlay {
    ($ty:ident { $($field:ident),+ $(,)? }) => {
        impl $ty {
            /// Fills every option not given on the command line from `file`.
            pub fn overlay(&mut self, file: &$ty) {
                $(
                    if self.$field.is_none() {
                        self.$field = file.$field.clone();
                    }
                )+
            }
        }
    };
}

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GlobalOpts {
    /// Output directory.
    #[arg(long, global = true, env = "LOGLIP_OUT")]
    pub out: Option<PathBuf>,
    /// Table format.
    #[arg(long, global = true, value_enum, env = "LOGLIP_FORMAT")]
    pub format: Option<Format>,
    /// Seed for every random sample.
    #[arg(long, global = true, env = "LOGLIP_SEED")]
    pub seed: Option<u64>,
    /// Summation precision for the sequences.
    #[arg(long, global = true, value_enum, env = "LOGLIP_PRECISION")]
    pub precision: Option<PrecisionArg>,
}
overlay!(GlobalOpts { out, format, seed, precision });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightsOpts {
    /// Exponent λ > 1 [default: 2].
    #[arg(long, env = "LOGLIP_LAMBDA")]
    pub lambda: Option<f64>,
    /// Smallest y of the grid [default: 0.3].
    #[arg(long, env = "LOGLIP_Y_MIN")]
    pub y_min: Option<f64>,
    /// Largest y of the grid [default: 1].
    #[arg(long, env = "LOGLIP_Y_MAX")]
    pub y_max: Option<f64>,
    /// Grid points [default: 50].
    #[arg(long, env = "LOGLIP_POINTS")]
    pub points: Option<usize>,
    /// Base finite-difference step [default: 1e-4].
    #[arg(long, env = "LOGLIP_STEP")]
    pub step: Option<f64>,
    /// Richardson halvings of the step [default: 2].
    #[arg(long, env = "LOGLIP_LEVELS")]
    pub levels: Option<usize>,
    /// Largest admissible relative ODE residual [default: 1e-6].
    #[arg(long, env = "LOGLIP_TOLERANCE")]
    pub tolerance: Option<f64>,
    /// Random triples for the scaling identity [default: 100].
    #[arg(long, env = "LOGLIP_IDENTITY_SAMPLES")]
    pub identity_samples: Option<usize>,
}
overlay!(WeightsOpts { lambda, y_min, y_max, points, step, levels, tolerance, identity_samples });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CounterexampleOpts {
    /// Rows of the sequence table [default: 1960].
    #[arg(long, env = "LOGLIP_N_MAX")]
    pub n_max: Option<usize>,
    /// Largest member index k >= 2; series run over 2..=k [default: 5].
    #[arg(long, env = "LOGLIP_K")]
    pub k: Option<u32>,
    /// Exponents δ in ]0,1[ for the divergence ratios [default: 0.1,0.5,0.9].
    #[arg(long, value_delimiter = ',', env = "LOGLIP_DELTA")]
    pub delta: Option<Vec<f64>>,
    /// Time offset σ for the norm at t_{2,k} - σ [default: 1].
    #[arg(long, env = "LOGLIP_SIGMA")]
    pub sigma: Option<f64>,
    /// Summation mode for the index pairs [default: auto].
    #[arg(long, value_enum, env = "LOGLIP_MODE")]
    pub mode: Option<ModeArg>,
    /// Random points of the residual audit [default: 1000].
    #[arg(long, env = "LOGLIP_AUDIT_POINTS")]
    pub audit_points: Option<usize>,
    /// Segments n0, n0+1, ... covered by the audit [default: 21].
    #[arg(long, env = "LOGLIP_AUDIT_SEGMENTS")]
    pub audit_segments: Option<usize>,
}
overlay!(CounterexampleOpts { n_max, k, delta, sigma, mode, audit_points, audit_segments });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyOpts {
    /// First segment [default: the family's start index n0].
    #[arg(long, env = "LOGLIP_START")]
    pub start: Option<usize>,
    /// Number of consecutive segments [default: 5].
    #[arg(long, env = "LOGLIP_SEGMENTS")]
    pub segments: Option<usize>,
    /// Time steps per segment [default: 1000].
    #[arg(long, env = "LOGLIP_SAMPLES")]
    pub samples: Option<usize>,
    /// Use this γ instead of the measured γ₀ = C + nB²/(4k).
    #[arg(long, env = "LOGLIP_GAMMA")]
    pub gamma: Option<f64>,
}
overlay!(EnergyOpts { start, segments, samples, gamma });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InequalityOpts {
    /// Segments to test [default: 1,2,3].
    #[arg(long, value_delimiter = ',', env = "LOGLIP_SEGMENT_LIST")]
    pub segments: Option<Vec<usize>>,
    /// Window start in segment time s [default: 0.5].
    #[arg(long, env = "LOGLIP_S_START")]
    pub s_start: Option<f64>,
    /// Simpson node counts [default: 32,64].
    #[arg(long, value_delimiter = ',', env = "LOGLIP_NODES")]
    pub nodes: Option<Vec<usize>>,
    /// Spatial grids for the norms [default: 64,128].
    #[arg(long, value_delimiter = ',', env = "LOGLIP_GRIDS")]
    pub grids: Option<Vec<usize>>,
    /// Evaluation times in ]0, σ] [default: 8].
    #[arg(long, env = "LOGLIP_S_POINTS")]
    pub s_points: Option<usize>,
    /// Relative spread allowed across resolutions [default: 0.1].
    #[arg(long, env = "LOGLIP_TOLERANCE")]
    pub tolerance: Option<f64>,
    /// Override of the recipe's λ_min.
    #[arg(long, env = "LOGLIP_LAMBDA")]
    pub lambda: Option<f64>,
    /// Override of β = σ + τ.
    #[arg(long, env = "LOGLIP_BETA")]
    pub beta: Option<f64>,
    /// Override of τ = σ/4.
    #[arg(long, env = "LOGLIP_TAU")]
    pub tau: Option<f64>,
    /// Override of the recipe's γ_min.
    #[arg(long, env = "LOGLIP_GAMMA")]
    pub gamma: Option<f64>,
}
overlay!(InequalityOpts { segments, s_start, nodes, grids, s_points, tolerance, lambda, beta, tau, gamma });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogboundOpts {
    /// Largest member index; data run over 2..=k [default: 5].
    #[arg(long, env = "LOGLIP_K")]
    pub k: Option<u32>,
    /// Exponents δ in ]0,1[ [default: 0.1,0.5,0.9].
    #[arg(long, value_delimiter = ',', env = "LOGLIP_DELTA")]
    pub delta: Option<Vec<f64>>,
    /// Time offset σ for ‖u(σ)‖ [default: 1].
    #[arg(long, env = "LOGLIP_SIGMA")]
    pub sigma: Option<f64>,
    /// λ for the per-datum feasibility of β (needs --tau).
    #[arg(long, env = "LOGLIP_LAMBDA")]
    pub lambda: Option<f64>,
    /// τ for the feasibility check.
    #[arg(long, env = "LOGLIP_TAU")]
    pub tau: Option<f64>,
    /// α = 1/σ for the feasibility check [default: 1].
    #[arg(long, env = "LOGLIP_ALPHA")]
    pub alpha: Option<f64>,
}
overlay!(LogboundOpts { k, delta, sigma, lambda, tau, alpha });

#[derive(Args, Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleOpts {
    /// Segment to integrate [default: 1].
    #[arg(long, env = "LOGLIP_SEGMENT")]
    pub segment: Option<usize>,
    /// Grid points per axis [default: 128].
    #[arg(long, env = "LOGLIP_GRID")]
    pub grid: Option<usize>,
    /// Time steps across the window [default: 200].
    #[arg(long, env = "LOGLIP_STEPS")]
    pub steps: Option<usize>,
    /// Largest natural-log decay across the window [default: 12].
    #[arg(long, env = "LOGLIP_MAX_LOG_DECAY")]
    pub max_log_decay: Option<f64>,
    /// Largest admissible relative error [default: 1e-6].
    #[arg(long, env = "LOGLIP_TOLERANCE")]
    pub tolerance: Option<f64>,
}
overlay!(OracleOpts { segment, grid, steps, max_log_decay, tolerance });

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyFile {
    pub energy: EnergyOpts,
    pub inequality: InequalityOpts,
    pub logbound: LogboundOpts,
    pub oracle: OracleOpts,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    #[serde(flatten)]
    pub global: GlobalOpts,
    pub weights: WeightsOpts,
    pub counterexample: CounterexampleOpts,
    pub verify: VerifyFile,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::Usage(format!("config {}: {e}", path.display())))
    }
}

/// Global settings after defaults are applied.
#[derive(Clone, Debug, Serialize)]
pub struct Resolved {
    pub out: PathBuf,
    pub format: Format,
    pub seed: u64,
    pub precision: PrecisionArg,
}

impl GlobalOpts {
    pub fn resolve(&self) -> Resolved {
        Resolved {
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            format: self.format.unwrap_or(Format::Csv),
            seed: self.seed.unwrap_or(20_240_601),
            precision: self.precision.unwrap_or(PrecisionArg::Extended),
        }
    }
}
