//! Fitted constants with their resolution study.

use serde::{Deserialize, Serialize};

use crate::logscalar::LogScalar;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedConstant {
    pub name: String,
    pub value: LogScalar,
}

/// One run of a fit: its discretisation and the constant it produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub label: String,
    pub time_nodes: usize,
    pub grid: Option<usize>,
    pub value: LogScalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub name: String,
    pub constants: Vec<FittedConstant>,
    /// Largest quadrature error estimate among the runs (relative).
    pub residual: f64,
    pub resolutions: Vec<Resolution>,
    /// `max / min` of the fitted value over `resolutions`.
    pub stability_ratio: f64,
    pub degenerate: bool,
    pub notes: Vec<String>,
}

impl FitReport {
    pub fn constant(&self, name: &str) -> Option<LogScalar> {
        self.constants.iter().find(|c| c.name == name).map(|c| c.value)
    }

    /// True when at least two resolutions agree to within `tol` (ratio `1 + tol`).
    pub fn stable_within(&self, tol: f64) -> bool {
        self.resolutions.len() >= 2 && self.stability_ratio <= 1.0 + tol
    }
}

/// `max / min` of positive values; 1 when every value is zero, infinite when
/// only some are.
pub fn stability_ratio(values: &[LogScalar]) -> f64 {
    let zeros = values.iter().filter(|v| v.is_zero()).count();
    if zeros == values.len() {
        return 1.0;
    }
    if zeros > 0 {
        return f64::INFINITY;
    }
    let hi = values.iter().fold(f64::NEG_INFINITY, |m, v| m.max(v.ln_abs()));
    let lo = values.iter().fold(f64::INFINITY, |m, v| m.min(v.ln_abs()));
    (hi - lo).exp()
}
