//! Verification engines: a spectral integrator oracle, energy monotonicity,
//! the weighted energy inequality with a fitted constant, and logarithmic
//! stability bounds on the counterexample data.

pub mod energy;
pub mod fit;
pub mod logbound;
pub mod sources;
pub mod spectral;
pub mod inequality;

pub use energy::{energy_monotonicity, EnergyTrace, MonotonicityReport, Violation, MONOTONICITY_TOLERANCE};
pub use fit::{stability_ratio, FitReport, FittedConstant, Resolution};
pub use logbound::{fit_logbound, Feasibility, HolderRow, LogBoundFit, LogNormPoint, LogPowerRow};
pub use sources::{FamilyWindow, MeasuredBounds, NormSource, SingleMode, ZeroSolution};
pub use spectral::{
    family_oracle, oracle_start, relative_l2_error, spectral_solve, Coefficients, FamilyCoefficients, OracleReport,
    StepControl, Trajectory,
    UniformCoefficients,
};
pub use inequality::{inequality_report, verify_inequality, InequalityFit, InequalityPoint};
