//! The Log-Lipschitz modulus and the weight functions built on it.
//!
//! `psi(λ, y) = exp(y^{-λ} - 1)` grows super-exponentially as `y → 0`, so the
//! primitives come in two flavours: plain `f64` versions for the range where
//! the integrand fits a double, and LogScalar versions that factor
//! `psi(λ, y0)` out of every integral and keep only the bounded remainder.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::logscalar::LogScalar;
use crate::quadrature::{integrate, QuadResult, QuadratureConfig};

/// Parameters of the weight `e^{2γt} e^{-2βΦ_λ((t+τ)/β)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub lambda: f64,
    pub beta: f64,
    pub tau: f64,
    pub gamma: f64,
    pub alpha: f64,
    pub sigma: f64,
}

/// Returns `(alpha', sigma)` with `alpha' * sigma == 1.0` exactly in binary64.
///
/// `alpha'` differs from `alpha` by at most a couple of ulps.
pub fn exact_reciprocal_pair(alpha: f64) -> (f64, f64) {
    let mut a = alpha;
    for _ in 0..8 {
        let s = 1.0 / a;
        for c in [s, s.next_down(), s.next_up()] {
            if c * a == 1.0 {
                return (a, c);
            }
        }
        a = a.next_up();
    }
    (alpha, 1.0 / alpha)
}

impl WeightParams {
    /// Builds the tuple with `sigma = 1/alpha` and checks the standing hypotheses.
    pub fn new(lambda: f64, beta: f64, tau: f64, gamma: f64, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(domain("WeightParams", format!("alpha must be positive, got {alpha}")));
        }
        let (alpha, sigma) = exact_reciprocal_pair(alpha);
        let p = WeightParams {
            lambda,
            beta,
            tau,
            gamma,
            alpha,
            sigma,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 1.0) {
            return Err(domain("WeightParams", format!("lambda must exceed 1, got {}", self.lambda)));
        }
        if !(self.tau > 0.0 && self.tau < 0.5 * self.sigma) {
            return Err(domain(
                "WeightParams",
                format!("tau must lie in ]0, sigma/2[ with sigma = {}, got {}", self.sigma, self.tau),
            ));
        }
        if !(self.beta >= self.sigma + self.tau) {
            return Err(domain(
                "WeightParams",
                format!(
                    "beta must be >= sigma + tau = {}, got {}",
                    self.sigma + self.tau,
                    self.beta
                ),
            ));
        }
        if !(self.gamma > 0.0) {
            return Err(domain("WeightParams", format!("gamma must be positive, got {}", self.gamma)));
        }
        if self.alpha * self.sigma != 1.0 {
            return Err(domain("WeightParams", "alpha * sigma must equal 1"));
        }
        Ok(())
    }
}

/// `μ(s) = s(1 + |log s|)`.
pub fn mu(s: f64) -> Result<f64> {
    if !(s > 0.0) {
        return Err(domain("mu", format!("s must be positive, got {s}")));
    }
    Ok(s * (1.0 + s.ln().abs()))
}

/// `θ(τ) = log(1 + log τ)`, the primitive of `1/μ` over `[1/τ, 1]`.
pub fn theta(tau: f64) -> Result<f64> {
    if !(tau >= 1.0) {
        return Err(domain("theta", format!("argument must be >= 1, got {tau}")));
    }
    Ok(tau.ln().ln_1p())
}

/// `θ(τ)` by direct adaptive quadrature of `1/μ`.
pub fn theta_by_quadrature(tau: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    if !(tau >= 1.0) {
        return Err(domain("theta_by_quadrature", format!("argument must be >= 1, got {tau}")));
    }
    integrate(|s| 1.0 / (s * (1.0 + s.ln().abs())), 1.0 / tau, 1.0, cfg)
}

fn check_lambda(op: &'static str, lambda: f64) -> Result<()> {
    if !(lambda > 1.0 && lambda.is_finite()) {
        return Err(domain(op, format!("lambda must exceed 1, got {lambda}")));
    }
    Ok(())
}

fn check_unit(op: &'static str, y: f64) -> Result<()> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(domain(op, format!("y must lie in ]0,1], got {y}")));
    }
    Ok(())
}

/// `log ψ_λ(y) = y^{-λ} - 1`, exact in the log domain.
pub fn psi_ln(lambda: f64, y: f64) -> Result<f64> {
    check_lambda("psi", lambda)?;
    check_unit("psi", y)?;
    Ok(psi_ln_raw(lambda, y))
}

#[inline]
fn psi_ln_raw(lambda: f64, y: f64) -> f64 {
    (-lambda * y.ln()).exp_m1()
}

/// `ψ_λ(y) = exp(y^{-λ} - 1)` as a LogScalar (never overflows).
pub fn psi(lambda: f64, y: f64) -> Result<LogScalar> {
    Ok(LogScalar::from_ln(psi_ln(lambda, y)?))
}

/// `ψ_λ(y)` as a double; fails once the value leaves the binary64 range.
pub fn psi_f64(lambda: f64, y: f64) -> Result<f64> {
    let l = psi_ln(lambda, y)?;
    if l > f64::MAX.ln() {
        return Err(domain("psi_f64", format!("psi overflows binary64 at y = {y}")));
    }
    Ok(l.exp())
}

/// Smallest `y` for which `ψ_λ(y)` stays below `e^{700}`.
pub fn y_min(lambda: f64) -> f64 {
    701f64.powf(-1.0 / lambda)
}

/// `log(ψ_λ(y0 + u) / ψ_λ(y0))` computed without cancellation.
#[inline]
fn psi_ratio_ln(lambda: f64, y0: f64, y0_pow: f64, u: f64) -> f64 {
    y0_pow * (-lambda * (u / y0).ln_1p()).exp_m1()
}

/// `∫_{y0}^{y1} ψ_λ` as a LogScalar, for `0 < y0 <= y1`.
pub fn psi_integral(lambda: f64, y0: f64, y1: f64, cfg: &QuadratureConfig) -> Result<LogScalar> {
    if !(y0 > 0.0 && y1 >= y0) {
        return Err(domain("psi_integral", format!("need 0 < y0 <= y1, got [{y0}, {y1}]")));
    }
    psi_integral_offset(lambda, y0, y1 - y0, cfg)
}

/// `∫_{y0}^{y0+u} ψ_λ` with the offset `u >= 0` given directly, so offsets
/// far below the spacing of doubles near `y0` keep their value.
///
/// The integrand is written as `ψ_λ(y0) · exp(y0^{-λ}((1+u/y0)^{-λ} - 1))`,
/// whose second factor lies in `]0, 1]`; only that factor is integrated.
pub fn psi_integral_offset(lambda: f64, y0: f64, u: f64, cfg: &QuadratureConfig) -> Result<LogScalar> {
    check_lambda("psi_integral", lambda)?;
    if !(y0 > 0.0 && u >= 0.0 && u.is_finite()) {
        return Err(domain("psi_integral", format!("need y0 > 0 and u >= 0, got y0 = {y0}, u = {u}")));
    }
    if u == 0.0 {
        return Ok(LogScalar::ZERO);
    }
    let y0_pow = (-lambda * y0.ln()).exp();
    // Decay rate of the bounded factor at y0; integrate in w = kappa * u so the
    // boundary layer has unit width whatever the size of y0^{-λ}.
    let kappa = lambda * y0_pow / y0;
    let w_max = kappa * u;
    let g = |w: f64| psi_ratio_ln(lambda, y0, y0_pow, w / kappa).exp();
    let w_cut = w_max.min(60.0);
    let head = integrate(g, 0.0, w_cut, cfg)?.value;
    let mut total = head;
    if w_cut < w_max {
        let tail_cfg = QuadratureConfig {
            abs_tol: (cfg.rel_tol * head * 0.1).max(f64::MIN_POSITIVE),
            ..*cfg
        };
        total += integrate(g, w_cut, w_max, &tail_cfg)?.value;
    }
    Ok(LogScalar::from_ln(psi_ln_raw(lambda, y0)) * LogScalar::from_f64(total / kappa))
}

/// `log(ψ_λ(y0 + u) / ψ_λ(y0))`, free of cancellation for tiny `u`.
pub fn psi_log_ratio(lambda: f64, y0: f64, u: f64) -> Result<f64> {
    check_lambda("psi_log_ratio", lambda)?;
    if !(y0 > 0.0 && u >= 0.0) {
        return Err(domain("psi_log_ratio", "need y0 > 0 and u >= 0"));
    }
    Ok(psi_ratio_ln(lambda, y0, (-lambda * y0.ln()).exp(), u))
}

/// `Φ_λ(y) = ∫_1^y ψ_λ` as a (non-positive) LogScalar, valid on all of `]0, 1]`.
pub fn phi_log(lambda: f64, y: f64, cfg: &QuadratureConfig) -> Result<LogScalar> {
    check_lambda("phi", lambda)?;
    check_unit("phi", y)?;
    if y == 1.0 {
        return Ok(LogScalar::ZERO);
    }
    Ok(-psi_integral(lambda, y, 1.0, cfg)?)
}

/// `Φ_λ(y)` as a double for `y >= y_min(λ)`.
pub fn phi(lambda: f64, y: f64, cfg: &QuadratureConfig) -> Result<QuadResult> {
    check_lambda("phi", lambda)?;
    check_unit("phi", y)?;
    if y == 1.0 {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    if y < y_min(lambda) {
        return Err(domain(
            "phi",
            format!("y = {y} is below y_min = {}; use phi_log", y_min(lambda)),
        ));
    }
    let r = integrate(|z| psi_ln_raw(lambda, z).exp(), y, 1.0, cfg)?;
    Ok(QuadResult {
        value: -r.value,
        ..r
    })
}

/// `Λ_λ(y) = y Φ_λ(1/y)` for `y >= 1`, as a LogScalar.
pub fn capital_lambda(lambda: f64, y: f64, cfg: &QuadratureConfig) -> Result<LogScalar> {
    check_lambda("capital_lambda", lambda)?;
    if !(y >= 1.0 && y.is_finite()) {
        return Err(domain("capital_lambda", format!("y must be >= 1, got {y}")));
    }
    if y == 1.0 {
        return Ok(LogScalar::ZERO);
    }
    Ok(phi_log(lambda, 1.0 / y, cfg)? * LogScalar::from_f64(y))
}

/// Inverse of `Λ_λ` on `z <= 0`, by bisection inside a doubling bracket from `y = 1`.
pub fn capital_lambda_inv(lambda: f64, z: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(z <= 0.0 && z.is_finite()) {
        return Err(domain("capital_lambda_inv", format!("z must be <= 0, got {z}")));
    }
    capital_lambda_inv_log(lambda, LogScalar::from_f64(z), cfg)
}

/// Above this `ln|z|` the inverse uses the layer asymptotics of `Λ_λ`.
const LAMBDA_INV_ASYMPTOTIC: f64 = 600.0;

/// [`capital_lambda_inv`] for arguments whose magnitude overflows a double.
///
/// For `ln|z|` beyond a few hundred, `|Λ_λ(y)| = e^{y^λ - 1} / (λ y^λ) (1 + O(y^{-λ}))`,
/// so `v = y^λ` solves `v - ln v = ln|z| + 1 + ln λ`; the neglected term moves
/// `ln y` by less than `1e-5 / λ`.
pub fn capital_lambda_inv_log(lambda: f64, z: LogScalar, cfg: &QuadratureConfig) -> Result<f64> {
    check_lambda("capital_lambda_inv", lambda)?;
    if z.sign() > 0 || !z.is_finite() {
        return Err(domain("capital_lambda_inv", format!("z must be finite and <= 0, got {z}")));
    }
    if z.is_zero() {
        return Ok(1.0);
    }
    if z.ln_abs() > LAMBDA_INV_ASYMPTOTIC {
        return lambda_inv_asymptotic(lambda, z.ln_abs());
    }
    let target = z;
    let mut lo = 1.0f64;
    let mut hi = 2.0f64;
    let mut doublings = 0;
    while capital_lambda(lambda, hi, cfg)? > target {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 1000 {
            return Err(Error::Bracket {
                lo,
                hi,
                f_lo: (capital_lambda(lambda, lo, cfg)? - z).to_f64(),
                f_hi: (capital_lambda(lambda, hi, cfg)? - z).to_f64(),
            });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || (hi - lo) <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if capital_lambda(lambda, mid, cfg)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn lambda_inv_asymptotic(lambda: f64, ln_abs_z: f64) -> Result<f64> {
    let rhs = ln_abs_z + 1.0 + lambda.ln();
    let mut v = rhs;
    for _ in 0..100 {
        let next = rhs + v.ln();
        let done = (next - v).abs() <= 4.0 * f64::EPSILON * v;
        v = next;
        if done {
            break;
        }
    }
    let y = (v.ln() / lambda).exp();
    if !y.is_finite() {
        return Err(domain("capital_lambda_inv", format!("inverse overflows binary64 for ln|z| = {ln_abs_z}")));
    }
    Ok(y)
}

/// `-(1/z) ψ_λ(1/Λ_λ^{-1}(z))` for `z < 0`.
pub fn divergence_probe(lambda: f64, z: f64, cfg: &QuadratureConfig) -> Result<LogScalar> {
    if !(z < 0.0) {
        return Err(domain("divergence_probe", format!("z must be negative, got {z}")));
    }
    let y = capital_lambda_inv(lambda, z, cfg)?;
    Ok(psi(lambda, 1.0 / y)? / LogScalar::from_f64(-z))
}

/// Relative log-domain residual of `ψ_λ(ζy) = exp(ζ^{-λ}-1) ψ_λ(y)^{ζ^{-λ}}`.
pub fn scaling_identity_residual(lambda: f64, zeta: f64, y: f64) -> Result<f64> {
    check_lambda("scaling_identity_residual", lambda)?;
    if !(zeta >= 1.0) {
        return Err(domain("scaling_identity_residual", format!("zeta must be >= 1, got {zeta}")));
    }
    if !(y > 0.0 && zeta * y <= 1.0) {
        return Err(domain("scaling_identity_residual", "need 0 < y <= 1/zeta"));
    }
    let lz = zeta.ln();
    let ly = y.ln();
    let lhs = (-lambda * (lz + ly)).exp_m1();
    let rhs = (-lambda * lz).exp_m1() + (-lambda * lz).exp() * (-lambda * ly).exp_m1();
    Ok((lhs - rhs).abs() / lhs.abs().max(1.0))
}

/// Finite-difference check of `yΦ'' + λΦ'(1 + |log(1/Φ')|) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeCheck {
    pub y: f64,
    pub h: f64,
    pub d1: f64,
    pub d2: f64,
    pub residual: f64,
    pub relative: f64,
}

/// Central differences of `Φ_λ` at `y` with base step `h`, refined by
/// Richardson extrapolation over `levels` halvings (`levels = 0` is the plain stencil).
///
/// Differences are formed from the integrals of `ψ_λ` over `[y-h, y]` and
/// `[y, y+h]`, never from differences of large values of `Φ_λ`.
pub fn phi_derivatives(
    lambda: f64,
    y: f64,
    h: f64,
    levels: usize,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64)> {
    check_lambda("phi_derivatives", lambda)?;
    if !(h > 0.0 && y - h * 1.0 > 0.0) {
        return Err(domain("phi_derivatives", "need 0 < h < y"));
    }
    let stencil = |hh: f64| -> Result<(f64, f64)> {
        let left = psi_integral(lambda, y - hh, y, cfg)?.to_f64();
        let right = psi_integral(lambda, y, y + hh, cfg)?.to_f64();
        Ok(((left + right) / (2.0 * hh), (right - left) / (hh * hh)))
    };
    let mut table1 = Vec::with_capacity(levels + 1);
    let mut table2 = Vec::with_capacity(levels + 1);
    for l in 0..=levels {
        let (a, b) = stencil(h / f64::from(1u32 << l))?;
        table1.push(a);
        table2.push(b);
    }
    for m in 1..=levels {
        let f = 4f64.powi(m as i32);
        for i in (m..=levels).rev() {
            table1[i] = (f * table1[i] - table1[i - 1]) / (f - 1.0);
            table2[i] = (f * table2[i] - table2[i - 1]) / (f - 1.0);
        }
    }
    Ok((table1[levels], table2[levels]))
}

/// Residual of the weight ODE at `y` using [`phi_derivatives`].
pub fn ode_residual(
    lambda: f64,
    y: f64,
    h: f64,
    levels: usize,
    cfg: &QuadratureConfig,
) -> Result<OdeCheck> {
    let (d1, d2) = phi_derivatives(lambda, y, h, levels, cfg)?;
    let residual = y * d2 + lambda * d1 * (1.0 + (1.0 / d1).ln().abs());
    Ok(OdeCheck {
        y,
        h,
        d1,
        d2,
        residual,
        relative: residual.abs() / (y * d2).abs(),
    })
}

/// Step rule `h = max(1e-6, 1e-4 y)` for derivative checks.
pub fn default_step(y: f64) -> f64 {
    (1e-4 * y).max(1e-6)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn mu_examples() {
        assert_eq!(mu(1.0).unwrap(), 1.0);
        assert!((mu((-1f64).exp()).unwrap() - 2.0 / std::f64::consts::E).abs() < 1e-16);
        assert!((mu(0.5).unwrap() - 0.846_573_590_279_972_6).abs() < 1e-15);
        assert!(mu(0.0).is_err());
        assert!(mu(-1.0).is_err());
    }

    #[test]
    fn theta_examples() {
        assert_eq!(theta(1.0).unwrap(), 0.0);
        assert!((theta(std::f64::consts::E).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(theta(0.5).is_err());
    }

    #[test]
    fn psi_examples() {
        assert_eq!(psi_f64(2.0, 1.0).unwrap(), 1.0);
        assert!((psi_f64(2.0, 0.5).unwrap() - 3f64.exp()).abs() < 1e-12);
        // theta(psi(y)) = -lambda log y
        let back = theta(psi_f64(2.0, 0.5).unwrap()).unwrap();
        assert!((back + 2.0 * 0.5f64.ln()).abs() < 1e-14);
        assert!(psi(2.0, 0.0).is_err());
        assert!(psi(2.0, 1.5).is_err());
        assert!(psi(1.0, 0.5).is_err());
        // Deep in the overflow range the LogScalar form is still exact.
        assert!((psi(2.0, 1e-10).unwrap().ln_abs() - (1e20 - 1.0)).abs() < 1e5);
    }

    #[test]
    fn phi_anchor_and_sign() {
        assert_eq!(phi(2.0, 1.0, &cfg()).unwrap().value, 0.0);
        assert!(phi_log(2.0, 1.0, &cfg()).unwrap().is_zero());
        assert!(phi(2.0, 0.8, &cfg()).unwrap().value < 0.0);
        assert!(phi(2.0, 1e-3, &cfg()).is_err());
        let deep = phi_log(2.0, 1e-3, &cfg()).unwrap();
        assert_eq!(deep.sign(), -1);
        assert!(deep.is_finite());
    }

    #[test]
    fn log_and_plain_phi_agree() {
        for &(lambda, y) in &[(2.0, 0.8), (2.0, 0.3), (5.0, 0.5), (3.0, 0.15)] {
            let a = phi(lambda, y, &cfg()).unwrap().value;
            let b = phi_log(lambda, y, &cfg()).unwrap().to_f64();
            assert!((a - b).abs() <= 1e-12 * a.abs(), "{lambda} {y}: {a} vs {b}");
        }
    }

    #[test]
    fn capital_lambda_examples() {
        assert!(capital_lambda(2.0, 1.0, &cfg()).unwrap().is_zero());
        let z = capital_lambda(2.0, 3.0, &cfg()).unwrap().to_f64();
        let y = capital_lambda_inv(2.0, z, &cfg()).unwrap();
        assert!((y - 3.0).abs() < 1e-12);
        assert_eq!(capital_lambda_inv(2.0, 0.0, &cfg()).unwrap(), 1.0);
        assert!(capital_lambda_inv(2.0, 1.0, &cfg()).is_err());
    }

    #[test]
    fn huge_arguments_use_layer_asymptotics() {
        for &lambda in &[2.0, 5.0] {
            for &l in &[450.0, 599.0] {
                let exact = capital_lambda_inv_log(lambda, LogScalar::from_parts(-1, l), &cfg()).unwrap();
                let asym = lambda_inv_asymptotic(lambda, l).unwrap();
                assert!((asym / exact - 1.0).abs() < 1e-5 / lambda, "{lambda} {l}: {asym} vs {exact}");
            }
        }
        let y = capital_lambda_inv_log(2.0, LogScalar::from_parts(-1, 1e300), &cfg()).unwrap();
        assert!((y.ln() / (0.5 * 1e300f64.ln()) - 1.0).abs() < 1e-12);
        assert!(capital_lambda_inv_log(2.0, LogScalar::from_parts(1, 3.0), &cfg()).is_err());
    }

    #[test]
    fn offset_integral_survives_subulp_offsets() {
        let (lambda, y0) = (3.0, 0.4);
        let u = 1e-30;
        let i = psi_integral_offset(lambda, y0, u, &cfg()).unwrap();
        let expect = psi_ln(lambda, y0).unwrap() + u.ln();
        assert!((i.ln_abs() - expect).abs() < 1e-12);
        assert!(psi_integral(lambda, y0, y0 + u, &cfg()).unwrap().is_zero());
        let a = psi_integral_offset(lambda, y0, 0.2, &cfg()).unwrap();
        let b = psi_integral(lambda, y0, 0.6, &cfg()).unwrap();
        assert!((a.ln_abs() - b.ln_abs()).abs() < 1e-12);
        assert!(psi_log_ratio(lambda, y0, 1e-300).unwrap() < 0.0);
    }

    #[test]
    fn exact_reciprocal_pairs() {
        for &a in &[3.0, 49.0, 0.1, 7.77e-9, 1.234e12] {
            let (a2, s) = exact_reciprocal_pair(a);
            assert_eq!(a2 * s, 1.0);
            assert!((a2 - a).abs() <= 4.0 * f64::EPSILON * a);
        }
    }

    #[test]
    fn weight_params_preconditions() {
        assert!(WeightParams::new(2.0, 1.5, 0.25, 1.0, 1.0).is_ok());
        assert!(WeightParams::new(1.0, 1.5, 0.25, 1.0, 1.0).is_err());
        assert!(WeightParams::new(2.0, 1.1, 0.25, 1.0, 1.0).is_err());
        assert!(WeightParams::new(2.0, 1.5, 0.5, 1.0, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn psi_decreasing_phi_increasing(lambda in 1.1f64..8.0, y1 in 0.2f64..1.0, y2 in 0.2f64..1.0) {
            prop_assume!((y1 - y2).abs() > 1e-6);
            let (lo, hi) = if y1 < y2 { (y1, y2) } else { (y2, y1) };
            prop_assert!(psi_ln(lambda, lo).unwrap() > psi_ln(lambda, hi).unwrap());
            prop_assert!(phi_log(lambda, lo, &cfg()).unwrap() < phi_log(lambda, hi, &cfg()).unwrap());
        }

        #[test]
        fn phi_is_concave(lambda in 1.5f64..6.0, y1 in 0.25f64..1.0, y2 in 0.25f64..1.0, t in 0.0f64..1.0) {
            let mid = t * y1 + (1.0 - t) * y2;
            let c = cfg();
            let f = |y: f64| phi_log(lambda, y, &c).unwrap().to_f64();
            let chord = t * f(y1) + (1.0 - t) * f(y2);
            prop_assert!(f(mid) >= chord - 1e-10 * chord.abs().max(1.0));
        }

        #[test]
        fn scaling_identity_holds(lambda in 2.0f64..10.0, zeta in 1.0f64..20.0, frac in 1e-3f64..1.0) {
            let y = frac / zeta;
            prop_assert!(scaling_identity_residual(lambda, zeta, y).unwrap() <= 1e-12);
        }
    }
}
