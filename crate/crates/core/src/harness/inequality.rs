//! The weighted energy inequality on concrete solutions, with fitted `M`.
//!
//! Every term carries `e^{-2βΦ_λ(y0)}`, `y0 = τ/β`, which is divided out.
//! Writing `ψ0 = ψ_λ(y0)` and `D(t) = 2β ∫_{y0}^{y(t)} ψ_λ`, the scaled sides are
//!
//! * `L̂(s) = 2ψ0 ∫_0^s e^{2γt - D(t)} f(t) dt`,
//! * `R̂(s) = (s+τ) e^{2γs - D(s)} f(s) / ψ0 + τ ‖u(0)‖²`,
//!
//! with `f(t) = ‖u(t)‖²_{H^{1-αt}}`, and `M = L̂ / (2ψ0² R̂)`. The product
//! `M̃ = M ψ0²` is order one and is what the resolution study compares.
//!
//! While `ψ_λ(y(t)) > γ` the weight falls through a layer of width about
//! `1/(2ψ0)`; that part is integrated in `v = D(t)`, where the layer becomes
//! `e^{-v}`. Beyond the turning point the weight is slowly varying and plain
//! Simpson in `t` applies.

use std::cell::RefCell;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::fit::{stability_ratio, FitReport, FittedConstant, Resolution};
use super::sources::NormSource;
use crate::coefficients::ConstantRecipe;
use crate::error::{domain, Result};
use crate::logscalar::LogScalar;
use crate::quadrature::{simpson_weights, QuadratureConfig};
use crate::weights::{psi_integral_offset, psi_ln, psi_log_ratio, WeightParams};

/// The layer integral stops at `v = V_CUT`; `e^{-V_CUT}` is below any
/// resolvable contribution.
const V_CUT: f64 = 40.0;

/// Largest `ln` of a double; beyond it `e^{-D}` is represented saturated.
const LN_MAX: f64 = 709.78;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityPoint {
    pub s: f64,
    pub lhs_scaled: LogScalar,
    pub rhs_scaled: LogScalar,
    /// `M ψ0²` at this `s`.
    pub m_tilde: LogScalar,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityFit {
    pub params: WeightParams,
    pub nodes: usize,
    pub ln_psi0: f64,
    pub turning_time: f64,
    pub points: Vec<InequalityPoint>,
    /// `sup_s M̃(s)`.
    pub m_tilde: LogScalar,
    /// `M = M̃ / ψ0²`.
    pub m: LogScalar,
    /// Relative change of `L̂` at the last `s` when the node count is halved.
    pub richardson: f64,
    /// Some `e^{-D}` fell below the double exponent range and was clamped.
    pub saturated: bool,
}

struct Ctx<'a, S: NormSource + ?Sized> {
    src: &'a S,
    p: WeightParams,
    y0: f64,
    ln_psi0: f64,
    cfg: QuadratureConfig,
    cache: RefCell<HashMap<u64, LogScalar>>,
}

impl<S: NormSource + ?Sized> Ctx<'_, S> {
    /// `f(t) = ‖u(t)‖²_{H^{1-αt}}`, scaled.
    fn f(&self, t: f64) -> Result<LogScalar> {
        if let Some(v) = self.cache.borrow().get(&t.to_bits()) {
            return Ok(*v);
        }
        let s = (1.0 - self.p.alpha * t).clamp(0.0, 1.0);
        let v = self.src.hs_norm_sq_scaled(t, s)?;
        self.cache.borrow_mut().insert(t.to_bits(), v);
        Ok(v)
    }

    /// `D` between `y0 + u0` and `y0 + u0 + u`, as a LogScalar.
    fn d_from(&self, y: f64, u: f64) -> Result<LogScalar> {
        Ok(psi_integral_offset(self.p.lambda, y, u, &self.cfg)? * (2.0 * self.p.beta))
    }

    /// `t` with `D(t) = v` on `[0, t_max]`.
    fn time_of(&self, v: f64, t_max: f64) -> Result<f64> {
        let b = self.p.beta;
        let slope_ln = (2.0 * b).ln() + self.ln_psi0;
        if v == 0.0 || v.ln() - slope_ln + b.ln() < -LN_MAX {
            return Ok(0.0);
        }
        let u_max = t_max / b;
        // D is increasing and concave in u: Newton from below is monotone.
        let mut u = (v.ln() - slope_ln).exp().min(u_max);
        for _ in 0..100 {
            let d = self.d_from(self.y0, u)?.to_f64();
            let rho = psi_log_ratio(self.p.lambda, self.y0, u)?;
            let step = (v - d) * (-(slope_ln + rho)).exp();
            let next = (u + step).min(u_max);
            if (next - u).abs() <= 4.0 * f64::EPSILON * next {
                u = next;
                break;
            }
            u = next;
        }
        Ok(u * b)
    }
}

fn exp_neg(d: LogScalar) -> (LogScalar, bool) {
    if d.is_zero() {
        return (LogScalar::from_f64(1.0), false);
    }
    if d.ln_abs() < LN_MAX {
        (LogScalar::from_ln(-d.to_f64()), false)
    } else {
        (LogScalar::from_ln(-f64::MAX), true)
    }
}

fn check_inputs<S: NormSource + ?Sized>(
    src: &S,
    p: &WeightParams,
    recipe: Option<&ConstantRecipe>,
    s_grid: &[f64],
    nodes: usize,
) -> Result<()> {
    p.validate()?;
    if let Some(r) = recipe {
        if p.lambda < r.lambda_min {
            return Err(domain(
                "verify_inequality",
                format!("lambda = {} is below lambda_min = {}", p.lambda, r.lambda_min),
            ));
        }
        if p.gamma < r.gamma_min {
            return Err(domain(
                "verify_inequality",
                format!("gamma = {} is below gamma_min = {}", p.gamma, r.gamma_min),
            ));
        }
        if (p.sigma - r.sigma).abs() > 1e-12 * r.sigma {
            return Err(domain("verify_inequality", "sigma differs from the recipe's sigma"));
        }
    }
    if p.sigma > src.horizon() * (1.0 + 1e-12) {
        return Err(domain(
            "verify_inequality",
            format!("sigma = {} exceeds the solution's horizon {}", p.sigma, src.horizon()),
        ));
    }
    if s_grid.is_empty() || s_grid.iter().any(|&s| !(s > 0.0 && s <= p.sigma)) {
        return Err(domain("verify_inequality", "s grid must be non-empty and inside ]0, sigma]"));
    }
    if nodes < 4 || nodes % 2 != 0 {
        return Err(domain("verify_inequality", "node count must be even and >= 4"));
    }
    Ok(())
}

/// `sup M̃(s)` and the scaled sides of the inequality on `s_grid`, with
/// `nodes` Simpson intervals for each part of each integral.
pub fn verify_inequality<S: NormSource + ?Sized>(
    src: &S,
    params: &WeightParams,
    recipe: Option<&ConstantRecipe>,
    s_grid: &[f64],
    nodes: usize,
) -> Result<InequalityFit> {
    check_inputs(src, params, recipe, s_grid, nodes)?;
    let p = *params;
    let y0 = p.tau / p.beta;
    let ctx = Ctx {
        src,
        p,
        y0,
        ln_psi0: psi_ln(p.lambda, y0)?,
        cfg: QuadratureConfig::default(),
        cache: RefCell::new(HashMap::new()),
    };
    let turning = if p.gamma > 1.0 {
        let y_star = (1.0 + p.gamma.ln()).powf(-1.0 / p.lambda);
        (p.beta * y_star - p.tau).max(0.0)
    } else {
        f64::INFINITY
    };
    let l2_0 = src.hs_norm_sq_scaled(0.0, 0.0)?;
    let mut saturated = false;
    let mut points = Vec::with_capacity(s_grid.len());
    let mut richardson = 0.0;
    for (idx, &s) in s_grid.iter().enumerate() {
        let (lhs, sat) = scaled_lhs(&ctx, s, turning, nodes)?;
        saturated |= sat;
        if idx + 1 == s_grid.len() {
            let (coarse, _) = scaled_lhs(&ctx, s, turning, nodes / 2 + (nodes / 2) % 2)?;
            if !lhs.is_zero() {
                richardson = ((coarse - lhs) / lhs).to_f64().abs();
            }
        }
        let (e, sat) = exp_neg(ctx.d_from(y0, s / p.beta)?);
        saturated |= sat;
        let first = LogScalar::from_ln((s + p.tau).ln() + 2.0 * p.gamma * s - ctx.ln_psi0) * e * ctx.f(s)?;
        let rhs = first + l2_0 * p.tau;
        let m_tilde = if rhs.is_zero() {
            if !lhs.is_zero() {
                return Err(domain("verify_inequality", "right-hand side vanishes while the left does not"));
            }
            LogScalar::ZERO
        } else {
            lhs / (rhs * 2.0)
        };
        points.push(InequalityPoint {
            s,
            lhs_scaled: lhs,
            rhs_scaled: rhs,
            m_tilde,
        });
    }
    let m_tilde = points.iter().fold(LogScalar::ZERO, |m, q| m.max(q.m_tilde));
    Ok(InequalityFit {
        params: p,
        nodes,
        ln_psi0: ctx.ln_psi0,
        turning_time: turning,
        points,
        m_tilde,
        m: if m_tilde.is_zero() {
            LogScalar::ZERO
        } else {
            m_tilde.scale_ln(-2.0 * ctx.ln_psi0)
        },
        richardson,
        saturated,
    })
}

/// `L̂(s)` and whether a clamped exponential entered it.
fn scaled_lhs<S: NormSource + ?Sized>(ctx: &Ctx<'_, S>, s: f64, turning: f64, nodes: usize) -> Result<(LogScalar, bool)> {
    let p = &ctx.p;
    let t_star = turning.min(s);
    let mut total = LogScalar::ZERO;
    let mut saturated = false;
    if t_star > 0.0 {
        let v_end = ctx.d_from(ctx.y0, t_star / p.beta)?;
        let v_max = if v_end.ln_abs() > V_CUT.ln() { V_CUT } else { v_end.to_f64() };
        if v_max > 0.0 {
            let h = v_max / nodes as f64;
            for (i, w) in simpson_weights(nodes, h).into_iter().enumerate() {
                let v = h * i as f64;
                let t = ctx.time_of(v, t_star)?;
                let rho = psi_log_ratio(p.lambda, ctx.y0, t / p.beta)?;
                let g = ctx.f(t)?.scale_ln(-v + 2.0 * p.gamma * t - rho);
                total = total + g * w;
            }
        }
    }
    if s > t_star {
        let y_star = ctx.y0 + t_star / p.beta;
        let h = (s - t_star) / nodes as f64;
        let mut acc = LogScalar::ZERO;
        for (i, w) in simpson_weights(nodes, h).into_iter().enumerate() {
            let t = t_star + h * i as f64;
            let d = ctx.d_from(y_star, (t - t_star) / p.beta)?.to_f64();
            acc = acc + ctx.f(t)?.scale_ln(2.0 * p.gamma * t - d) * w;
        }
        let (e, sat) = exp_neg(ctx.d_from(ctx.y0, t_star / p.beta)?);
        saturated |= sat;
        total = total + acc * e.scale_ln(std::f64::consts::LN_2 + ctx.ln_psi0);
    }
    Ok((total, saturated))
}

/// Runs [`verify_inequality`] for every source and node count and reports
/// `M̃` with its spread across runs.
pub fn inequality_report(
    runs: &[(String, Option<usize>, &dyn NormSource)],
    params: &WeightParams,
    recipe: Option<&ConstantRecipe>,
    s_grid: &[f64],
    node_counts: &[usize],
) -> Result<(FitReport, Vec<InequalityFit>)> {
    if runs.is_empty() || node_counts.is_empty() {
        return Err(domain("inequality_report", "need at least one source and one node count"));
    }
    let mut fits = Vec::new();
    let mut resolutions = Vec::new();
    for (label, grid, src) in runs {
        for &n in node_counts {
            let fit = verify_inequality(*src, params, recipe, s_grid, n)?;
            resolutions.push(Resolution {
                label: label.clone(),
                time_nodes: n,
                grid: *grid,
                value: fit.m_tilde,
            });
            fits.push(fit);
        }
    }
    let values: Vec<LogScalar> = resolutions.iter().map(|r| r.value).collect();
    let best = &fits[node_counts
        .iter()
        .enumerate()
        .max_by_key(|(_, n)| **n)
        .map(|(i, _)| i)
        .unwrap_or(0)];
    let mut notes = Vec::new();
    if fits.iter().any(|f| f.saturated) {
        notes.push("exp(-D) below the double exponent range was clamped".to_string());
    }
    if best.m_tilde.is_zero() {
        notes.push("zero solution: M = 0 by convention".to_string());
    }
    Ok((
        FitReport {
            name: "weighted energy inequality".into(),
            constants: vec![
                FittedConstant {
                    name: "M".into(),
                    value: best.m,
                },
                FittedConstant {
                    name: "M_psi0_sq".into(),
                    value: best.m_tilde,
                },
                FittedConstant {
                    name: "ln_psi0".into(),
                    value: LogScalar::from_f64(best.ln_psi0),
                },
            ],
            residual: fits.iter().fold(0.0f64, |m, f| m.max(f.richardson)),
            stability_ratio: stability_ratio(&values),
            resolutions,
            degenerate: best.m_tilde.is_zero(),
            notes,
        },
        fits,
    ))
}
