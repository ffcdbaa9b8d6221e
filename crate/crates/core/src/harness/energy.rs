//! Energy traces and the monotonicity of `E(t) = e^{2γt} ‖u(t)‖²`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::sources::NormSource;
use super::spectral::Trajectory;
use crate::error::{domain, Error, Result};
use crate::logscalar::LogScalar;
use crate::quadrature::QuadratureConfig;
use crate::weights::{phi_log, WeightParams};

/// Relative drop per step tolerated by [`energy_monotonicity`].
pub const MONOTONICITY_TOLERANCE: f64 = 1e-10;

/// Norms of one solution on a time grid, relative to `e^{reference_ln}`.
///
/// `hs` holds `‖u‖_{H^{1-αt}}` and `ln_weight` the logarithm
/// `2γt - 2βΦ_λ((t+τ)/β)` of the weight; without weight parameters the
/// exponent is 1 and the weight is 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub reference_ln: f64,
    pub l2: Vec<LogScalar>,
    pub hs: Vec<LogScalar>,
    pub ln_weight: Vec<LogScalar>,
}

fn weight_log(p: &WeightParams, t: f64, cfg: &QuadratureConfig) -> Result<LogScalar> {
    let y = (t + p.tau) / p.beta;
    let phi = phi_log(p.lambda, y.min(1.0), cfg)?;
    Ok(LogScalar::from_f64(2.0 * p.gamma * t) + phi * (-2.0 * p.beta))
}

fn exponent(p: Option<&WeightParams>, t: f64) -> f64 {
    p.map_or(1.0, |p| (1.0 - p.alpha * t).clamp(0.0, 1.0))
}

impl EnergyTrace {
    pub fn sample<S: NormSource + ?Sized>(
        source: &S,
        times: &[f64],
        params: Option<&WeightParams>,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        let mut tr = EnergyTrace {
            times: times.to_vec(),
            reference_ln: source.reference_ln(),
            l2: Vec::with_capacity(times.len()),
            hs: Vec::with_capacity(times.len()),
            ln_weight: Vec::with_capacity(times.len()),
        };
        for &t in times {
            tr.l2.push(source.l2_norm_scaled(t)?);
            tr.hs.push(source.hs_norm_sq_scaled(t, exponent(params, t))?.sqrt());
            tr.ln_weight.push(match params {
                Some(p) => weight_log(p, t, cfg)?,
                None => LogScalar::ZERO,
            });
        }
        tr.validate()?;
        Ok(tr)
    }

    /// Trace of a numerical trajectory whose fields carry the factor `e^{-frame}`.
    pub fn from_trajectory(
        traj: &Trajectory,
        frame: f64,
        params: Option<&WeightParams>,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        let mut tr = EnergyTrace {
            times: traj.times.clone(),
            reference_ln: frame,
            l2: Vec::with_capacity(traj.times.len()),
            hs: Vec::with_capacity(traj.times.len()),
            ln_weight: Vec::with_capacity(traj.times.len()),
        };
        for (&t, f) in traj.times.iter().zip(&traj.fields) {
            tr.l2.push(LogScalar::from_f64(f.l2_norm_spectral()));
            tr.hs.push(LogScalar::from_f64(f.sobolev_norm(exponent(params, t))?));
            tr.ln_weight.push(match params {
                Some(p) => weight_log(p, t, cfg)?,
                None => LogScalar::ZERO,
            });
        }
        tr.validate()?;
        Ok(tr)
    }

    /// The same samples in reversed time `t' = t_last - t`, e.g. to read a
    /// forward (numerical) solution as a solution of the backward equation.
    pub fn reversed(&self) -> Self {
        let end = *self.times.last().expect("validated traces are non-empty");
        let rev = |v: &Vec<LogScalar>| v.iter().rev().copied().collect::<Vec<_>>();
        EnergyTrace {
            times: self.times.iter().rev().map(|t| end - t).collect(),
            reference_ln: self.reference_ln,
            l2: rev(&self.l2),
            hs: rev(&self.hs),
            ln_weight: rev(&self.ln_weight),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.times.len();
        if n < 2 || self.l2.len() != n || self.hs.len() != n || self.ln_weight.len() != n {
            return Err(Error::Grid("energy trace columns must be aligned and hold two or more rows".into()));
        }
        if self.times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(domain("EnergyTrace", "times must increase strictly"));
        }
        if self.l2.iter().chain(&self.hs).any(|v| v.sign() < 0) {
            return Err(domain("EnergyTrace", "norms must be nonnegative"));
        }
        Ok(())
    }

    /// CSV with absolute norms in log10; `ln_weight_log10` is `log10` of the
    /// weight's natural logarithm.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::Format(e.to_string());
        wr.write_record(["t", "l2_log10", "hs_log10", "ln_weight_log10"]).map_err(io)?;
        let shift = LogScalar::from_ln(self.reference_ln);
        for i in 0..self.times.len() {
            wr.write_record([
                format!("{:.17e}", self.times[i]),
                format!("{:.17e}", (self.l2[i] * shift).log10_abs()),
                format!("{:.17e}", (self.hs[i] * shift).log10_abs()),
                format!("{:.17e}", self.ln_weight[i].log10_abs()),
            ])
            .map_err(io)?;
        }
        wr.flush().map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub t0: f64,
    pub t1: f64,
    /// `ln(E(t1)/E(t0))`.
    pub log_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub gamma: f64,
    pub tolerance: f64,
    pub intervals: usize,
    /// Smallest `ln(E(t_{i+1})/E(t_i))` over the trace.
    pub min_log_ratio: f64,
    pub violations: Vec<Violation>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `E(t_{i+1}) >= (1 - 1e-10) E(t_i)` on consecutive samples.
pub fn energy_monotonicity(trace: &EnergyTrace, gamma: f64) -> Result<MonotonicityReport> {
    trace.validate()?;
    if !gamma.is_finite() {
        return Err(domain("energy_monotonicity", "gamma must be finite"));
    }
    let floor = (-MONOTONICITY_TOLERANCE).ln_1p();
    let mut rep = MonotonicityReport {
        gamma,
        tolerance: MONOTONICITY_TOLERANCE,
        intervals: trace.times.len() - 1,
        min_log_ratio: f64::INFINITY,
        violations: Vec::new(),
    };
    for i in 0..rep.intervals {
        let (u0, u1) = (trace.l2[i], trace.l2[i + 1]);
        let log_ratio = match (u0.is_zero(), u1.is_zero()) {
            (true, true) => 0.0,
            (true, false) => f64::INFINITY,
            (false, true) => f64::NEG_INFINITY,
            (false, false) => {
                2.0 * gamma * (trace.times[i + 1] - trace.times[i]) + 2.0 * (u1.ln_abs() - u0.ln_abs())
            }
        };
        rep.min_log_ratio = rep.min_log_ratio.min(log_ratio);
        if log_ratio < floor {
            rep.violations.push(Violation {
                t0: trace.times[i],
                t1: trace.times[i + 1],
                log_ratio,
            });
        }
    }
    Ok(rep)
}
