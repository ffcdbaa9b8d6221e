//! Hölder and logarithmic stability bounds fitted to norm data.
//!
//! Each datum carries `ln‖u(0)‖`, `ln sup‖u‖` and `ln(1 + ‖u(σ)‖)` as
//! LogScalars, since on the counterexample family the logarithms themselves
//! reach `e^{700}`.

use serde::{Deserialize, Serialize};

use super::fit::{FitReport, FittedConstant, Resolution};
use crate::counterexample::NormDatum;
use crate::error::{domain, Error, Result};
use crate::logscalar::LogScalar;
use crate::quadrature::QuadratureConfig;
use crate::weights::{capital_lambda_inv_log, WeightParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogNormPoint {
    pub label: String,
    /// `ln ‖u(0)‖` (negative for small data).
    pub ln_initial: LogScalar,
    /// `ln sup_{[0,σ̄]} ‖u‖` or a lower bound for it.
    pub ln_sup: LogScalar,
    /// `ln(1 + ‖u(σ)‖)`.
    pub ln1p_at_sigma: LogScalar,
}

impl From<&NormDatum> for LogNormPoint {
    fn from(d: &NormDatum) -> Self {
        LogNormPoint {
            label: format!("k={}", d.k),
            ln_initial: d.ln_initial,
            ln_sup: d.ln_sup_lower,
            ln1p_at_sigma: d.ln1p_at_sigma,
        }
    }
}

/// Required `ln M` in `sup‖u‖ <= M ‖u(0)‖^δ`, per datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderRow {
    pub delta: f64,
    pub ln_m_required: Vec<LogScalar>,
    pub strictly_increasing: bool,
}

/// Fit of `ln Y_i <= ln M̄ - N X_i` with `X_i = |ln‖u_i(0)‖|^δ`.
///
/// `n_star` is the largest `N` for which the required `ln M̄` is
/// non-increasing along the data; the reported pair uses `N = n_star / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogPowerRow {
    pub delta: f64,
    pub n_star: LogScalar,
    pub n: LogScalar,
    pub ln_m_bar: LogScalar,
    /// `Y_i + N X_i`, whose maximum is `ln M̄`.
    pub ln_m_required: Vec<LogScalar>,
    pub finite: bool,
}

/// `β = τ Λ_λ^{-1}(ln‖u(0)‖ / τ)` and whether it reaches `σ + τ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub beta: f64,
    pub feasible: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogBoundFit {
    pub points: Vec<LogNormPoint>,
    pub holder: Vec<HolderRow>,
    /// With the factor `1 + ‖u(σ)‖`.
    pub log_power: Vec<LogPowerRow>,
    /// Without it (solutions bounded on the whole interval).
    pub bounded_log_power: Vec<LogPowerRow>,
    pub feasibility: Vec<Feasibility>,
    /// Fewer than three data points: every bound fits trivially.
    pub degenerate: bool,
}

fn log_power(delta: f64, xs: &[LogScalar], ys: &[LogScalar]) -> LogPowerRow {
    let mut n_star = LogScalar::from_ln(f64::MAX);
    for i in 1..xs.len() {
        let slope = (ys[i - 1] - ys[i]) / (xs[i] - xs[i - 1]);
        n_star = n_star.min(slope);
    }
    let finite = n_star.sign() > 0 && n_star.is_finite();
    let n = if xs.len() < 2 {
        LogScalar::from_f64(1.0)
    } else if finite {
        n_star * 0.5
    } else {
        LogScalar::ZERO
    };
    let req: Vec<LogScalar> = xs.iter().zip(ys).map(|(x, y)| *y + n * *x).collect();
    let ln_m_bar = req.iter().copied().fold(req[0], LogScalar::max);
    LogPowerRow {
        delta,
        n_star,
        n,
        ln_m_bar,
        ln_m_required: req,
        finite: finite && ln_m_bar.is_finite(),
    }
}

/// Fits both bound shapes for every `δ`. Data must have distinct `‖u(0)‖` and
/// are sorted by decreasing `‖u(0)‖`.
pub fn fit_logbound(points: &[LogNormPoint], deltas: &[f64], weights: Option<&WeightParams>) -> Result<LogBoundFit> {
    if points.is_empty() {
        return Err(Error::Data("fit_logbound needs at least one datum".into()));
    }
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(domain("fit_logbound", "every delta must lie in ]0, 1["));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| b.ln_initial.partial_cmp(&a.ln_initial).expect("finite logs"));
    for w in pts.windows(2) {
        if w[0].ln_initial == w[1].ln_initial {
            return Err(Error::Data(format!(
                "data {} and {} share the same initial norm",
                w[0].label, w[1].label
            )));
        }
    }
    if pts.iter().any(|p| !p.ln_initial.is_finite() || !p.ln_sup.is_finite()) {
        return Err(Error::Data("norm logarithms must be finite".into()));
    }
    let mut fit = LogBoundFit {
        holder: Vec::new(),
        log_power: Vec::new(),
        bounded_log_power: Vec::new(),
        feasibility: Vec::new(),
        degenerate: pts.len() < 3,
        points: Vec::new(),
    };
    for &delta in deltas {
        let req: Vec<LogScalar> = pts.iter().map(|p| p.ln_sup - p.ln_initial * delta).collect();
        fit.holder.push(HolderRow {
            delta,
            strictly_increasing: req.windows(2).all(|w| w[1] > w[0]),
            ln_m_required: req,
        });
        let xs: Vec<LogScalar> = pts.iter().map(|p| p.ln_initial.abs().powf(delta)).collect();
        let ys: Vec<LogScalar> = pts.iter().map(|p| p.ln_sup - p.ln1p_at_sigma).collect();
        fit.log_power.push(log_power(delta, &xs, &ys));
        let ys: Vec<LogScalar> = pts.iter().map(|p| p.ln_sup).collect();
        fit.bounded_log_power.push(log_power(delta, &xs, &ys));
    }
    if let Some(w) = weights {
        w.validate()?;
        let cfg = QuadratureConfig::default();
        for p in &pts {
            if p.ln_initial.sign() >= 0 {
                fit.feasibility.push(Feasibility {
                    beta: w.tau,
                    feasible: false,
                });
                continue;
            }
            let y = capital_lambda_inv_log(w.lambda, p.ln_initial * (1.0 / w.tau), &cfg)?;
            let beta = w.tau * y;
            fit.feasibility.push(Feasibility {
                beta,
                feasible: beta >= w.sigma + w.tau,
            });
        }
    }
    fit.points = pts;
    Ok(fit)
}

impl LogBoundFit {
    pub fn row(&self, delta: f64) -> Option<(&HolderRow, &LogPowerRow)> {
        let i = self.holder.iter().position(|h| h.delta == delta)?;
        Some((&self.holder[i], &self.log_power[i]))
    }

    /// `(M̄, N, δ)` at `delta`, with the spread of `ln M̄` against other fits
    /// of the same data (e.g. another summation precision).
    pub fn report(&self, delta: f64, others: &[(&str, &LogBoundFit)]) -> Result<FitReport> {
        let (holder, lp) = self
            .row(delta)
            .ok_or_else(|| domain("LogBoundFit::report", format!("delta {delta} was not fitted")))?;
        let mut resolutions = vec![Resolution {
            label: "primary".into(),
            time_nodes: 0,
            grid: None,
            value: lp.ln_m_bar.abs(),
        }];
        for (label, f) in others {
            let (_, o) = f
                .row(delta)
                .ok_or_else(|| domain("LogBoundFit::report", format!("delta {delta} missing in {label}")))?;
            resolutions.push(Resolution {
                label: (*label).to_string(),
                time_nodes: 0,
                grid: None,
                value: o.ln_m_bar.abs(),
            });
        }
        let values: Vec<LogScalar> = resolutions.iter().map(|r| r.value).collect();
        let mut notes = Vec::new();
        if self.degenerate {
            notes.push("fewer than three data points: any bound fits".to_string());
        }
        if !holder.strictly_increasing {
            notes.push("required Hölder constant is not strictly increasing".to_string());
        }
        Ok(FitReport {
            name: "logarithmic stability bound".into(),
            constants: vec![
                FittedConstant {
                    name: "ln_M_bar".into(),
                    value: lp.ln_m_bar,
                },
                FittedConstant {
                    name: "N".into(),
                    value: lp.n,
                },
                FittedConstant {
                    name: "N_star".into(),
                    value: lp.n_star,
                },
                FittedConstant {
                    name: "delta".into(),
                    value: LogScalar::from_f64(delta),
                },
            ],
            residual: 0.0,
            stability_ratio: super::fit::stability_ratio(&values),
            resolutions,
            degenerate: self.degenerate,
            notes,
        })
    }
}
