//! Log-Lipschitz constants, the Osgood test, time mollification and the
//! constant recipe of the weighted energy estimate.

use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, QuadratureConfig};
use crate::weights::{exact_reciprocal_pair, mu};

/// Sup norms and structural constants of the coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBounds {
    pub a_ll: f64,
    pub a_sup: f64,
    pub b_sup: f64,
    pub c_sup: f64,
    pub ellipticity: f64,
    pub horizon: f64,
}

impl CoefficientBounds {
    pub fn new(a_ll: f64, a_sup: f64, b_sup: f64, c_sup: f64, ellipticity: f64, horizon: f64) -> Result<Self> {
        let b = CoefficientBounds {
            a_ll,
            a_sup,
            b_sup,
            c_sup,
            ellipticity,
            horizon,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_ll", self.a_ll),
            ("a_sup", self.a_sup),
            ("b_sup", self.b_sup),
            ("c_sup", self.c_sup),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(domain("CoefficientBounds", format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.ellipticity > 0.0 && self.ellipticity <= 1.0) {
            return Err(domain(
                "CoefficientBounds",
                format!("ellipticity must lie in ]0,1], got {}", self.ellipticity),
            ));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(domain("CoefficientBounds", format!("horizon must be positive, got {}", self.horizon)));
        }
        Ok(())
    }
}

/// A scalar coefficient sampled at strictly increasing times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub v: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t: Vec<f64>, v: Vec<f64>) -> Result<Self> {
        if t.len() != v.len() {
            return Err(Error::Data(format!("{} times but {} values", t.len(), v.len())));
        }
        if t.len() < 2 {
            return Err(Error::Data("at least two samples are required".into()));
        }
        if t.iter().chain(&v).any(|x| !x.is_finite()) {
            return Err(Error::Data("samples must be finite".into()));
        }
        if let Some(i) = t.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::Data(format!("times must increase strictly (index {})", i + 1)));
        }
        Ok(TimeSeries { t, v })
    }

    pub fn from_fn<F: Fn(f64) -> f64>(t0: f64, t1: f64, samples: usize, f: F) -> Result<Self> {
        if samples < 2 || !(t1 > t0) {
            return Err(domain("TimeSeries::from_fn", "need t1 > t0 and at least two samples"));
        }
        let h = (t1 - t0) / (samples - 1) as f64;
        let t: Vec<f64> = (0..samples).map(|i| t0 + h * i as f64).collect();
        let v = t.iter().map(|&x| f(x)).collect();
        Self::new(t, v)
    }

    /// CSV with columns `t,value` and a header row.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let mut t = Vec::new();
        let mut v = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(|e| Error::Format(e.to_string()))?;
            if rec.len() < 2 {
                return Err(Error::Format("expected columns t,value".into()));
            }
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("bad number {s:?}: {e}")))
            };
            t.push(parse(&rec[0])?);
            v.push(parse(&rec[1])?);
        }
        Self::new(t, v)
    }

    pub fn min_spacing(&self) -> f64 {
        self.t.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    pub fn max_spacing(&self) -> f64 {
        self.t.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }
}

/// Discrete `sup |a(t)-a(s)| / μ(|t-s|)` over sample pairs with `0 < |t-s| <= 1`.
///
/// Exact over all pairs. Index lags are scanned in increasing order and the
/// scan stops once `(max a - min a) / μ(lag · h_min)` cannot beat the best ratio.
pub fn loglip_constant(series: &TimeSeries) -> Result<f64> {
    if series.max_spacing() > 1.0 {
        return Err(domain("loglip_constant", "sample spacing must not exceed 1"));
    }
    let (t, v) = (&series.t, &series.v);
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if range == 0.0 {
        return Ok(0.0);
    }
    let h_min = series.min_spacing();
    let mut best = 0.0f64;
    for d in 1..t.len() {
        let lag_floor = d as f64 * h_min;
        if lag_floor > 1.0 || range / mu(lag_floor)? <= best {
            break;
        }
        for i in 0..t.len() - d {
            let lag = t[i + d] - t[i];
            if lag > 1.0 {
                continue;
            }
            let r = (v[i + d] - v[i]).abs() / mu(lag)?;
            if r > best {
                best = r;
            }
        }
    }
    Ok(best)
}

/// Verdict of the Osgood test on the sampled range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OsgoodVerdict {
    Diverging,
    Converging,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OsgoodReport {
    pub epsilons: Vec<f64>,
    /// `I(ε) = ∫_ε^1 ds / m(s)`.
    pub partial_integrals: Vec<f64>,
    /// Slope of `I` against `log(1 + log(1/ε))` over the last two grid points.
    pub terminal_slope: f64,
    pub verdict: OsgoodVerdict,
}

/// Partial Osgood integrals on a decreasing grid of `ε` in `]0, 1[`.
///
/// Integrals are taken in `x = log(1/s)` so grids reaching `1e-300` stay
/// well resolved. The verdict is `Diverging` when `I` still grows at least
/// half as fast as the Log-Lipschitz reference `log(1 + log(1/ε))` at the
/// end of the grid.
pub fn osgood_check<F: Fn(f64) -> f64>(modulus: F, epsilons: &[f64], cfg: &QuadratureConfig) -> Result<OsgoodReport> {
    if epsilons.len() < 2 {
        return Err(domain("osgood_check", "need at least two epsilons"));
    }
    if epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(domain("osgood_check", "epsilons must decrease strictly inside ]0,1["));
    }
    let integrand = |x: f64| {
        let s = (-x).exp();
        s / modulus(s)
    };
    let mut partial = Vec::with_capacity(epsilons.len());
    let mut acc = 0.0;
    let mut x_prev = 0.0;
    for &e in epsilons {
        let x = -e.ln();
        let piece = integrate(integrand, x_prev, x, cfg)?;
        if !piece.value.is_finite() {
            return Err(domain("osgood_check", format!("modulus is not positive near s = {e}")));
        }
        acc += piece.value;
        partial.push(acc);
        x_prev = x;
    }
    let k = epsilons.len();
    let reference = |e: f64| (-e.ln()).ln_1p();
    let terminal_slope =
        (partial[k - 1] - partial[k - 2]) / (reference(epsilons[k - 1]) - reference(epsilons[k - 2]));
    Ok(OsgoodReport {
        epsilons: epsilons.to_vec(),
        partial_integrals: partial,
        terminal_slope,
        verdict: if terminal_slope >= 0.5 {
            OsgoodVerdict::Diverging
        } else {
            OsgoodVerdict::Converging
        },
    })
}

const KERNEL_TABLE: usize = 4096;

/// The bump `ρ(s) = c exp(-1/(1 - 4s²))` on `]-1/2, 1/2[` with unit mass.
#[derive(Clone, Debug)]
pub struct MollifierKernel {
    norm: f64,
    /// `‖ρ'‖_{L¹} = 2ρ(0)` for a symmetric unimodal bump.
    pub l1_norm_of_derivative: f64,
    cdf: Vec<f64>,
}

fn bump(s: f64) -> f64 {
    let q = 1.0 - 4.0 * s * s;
    if q <= 0.0 {
        0.0
    } else {
        (-1.0 / q).exp()
    }
}

impl MollifierKernel {
    pub fn new() -> Result<Self> {
        let cfg = QuadratureConfig::new(1e-17, 1e-15, 4000)?;
        let h = 1.0 / KERNEL_TABLE as f64;
        let mut cdf = Vec::with_capacity(KERNEL_TABLE + 1);
        let mut acc = crate::summation::Neumaier::new();
        cdf.push(0.0);
        for i in 0..KERNEL_TABLE {
            let a = -0.5 + h * i as f64;
            acc.add(integrate(bump, a, a + h, &cfg)?.value);
            cdf.push(acc.value());
        }
        let norm = acc.value();
        for c in &mut cdf {
            *c /= norm;
        }
        Ok(MollifierKernel {
            norm,
            l1_norm_of_derivative: 2.0 * bump(0.0) / norm,
            cdf,
        })
    }

    pub fn rho(&self, s: f64) -> f64 {
        bump(s) / self.norm
    }

    /// `∫_{-1/2}^{x} ρ`, by cubic Hermite interpolation of a fine table.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= -0.5 {
            return 0.0;
        }
        if x >= 0.5 {
            return 1.0;
        }
        let h = 1.0 / KERNEL_TABLE as f64;
        let u = (x + 0.5) / h;
        let i = (u.floor() as usize).min(KERNEL_TABLE - 1);
        let s = u - i as f64;
        let x0 = -0.5 + h * i as f64;
        let (y0, y1) = (self.cdf[i], self.cdf[i + 1]);
        let (d0, d1) = (self.rho(x0) * h, self.rho(x0 + h) * h);
        let s2 = s * s;
        let s3 = s2 * s;
        (2.0 * s3 - 3.0 * s2 + 1.0) * y0 + (s3 - 2.0 * s2 + s) * d0 + (-2.0 * s3 + 3.0 * s2) * y1 + (s3 - s2) * d1
    }
}

/// Values and time derivatives of `a_ε` at the sample times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mollified {
    pub epsilon: f64,
    pub t: Vec<f64>,
    pub value: Vec<f64>,
    pub derivative: Vec<f64>,
}

/// `a_ε = a * ρ_ε` for the piecewise-constant coefficient with cells centred
/// on the samples, extended by constants outside the sampled interval.
///
/// Cell masses come from the kernel CDF. The derivative is exact for that
/// coefficient: jumps across interior cell edges weighted by `ρ_ε`.
pub fn mollify(series: &TimeSeries, epsilon: f64, kernel: &MollifierKernel) -> Result<Mollified> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(domain("mollify", format!("epsilon must lie in ]0,1], got {epsilon}")));
    }
    let (t, v) = (&series.t, &series.v);
    let m = t.len();
    // Interior edges e_1..e_{m-1}; e_j separates cells j-1 and j.
    let edges: Vec<f64> = t.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let mut value = Vec::with_capacity(m);
    let mut derivative = Vec::with_capacity(m);
    for &ti in t {
        let lo = edges.partition_point(|&e| e < ti - 0.5 * epsilon);
        let hi = edges.partition_point(|&e| e <= ti + 0.5 * epsilon);
        // Mass of the cell left of edge j is cdf((t - e_{j-1})/ε) - cdf((t - e_j)/ε);
        // summing a_j times cell masses telescopes into edge jumps.
        let mut acc = crate::summation::Neumaier::new();
        acc.add(v[lo]);
        let mut dacc = crate::summation::Neumaier::new();
        for j in lo..hi {
            let jump = v[j + 1] - v[j];
            let u = (ti - edges[j]) / epsilon;
            acc.add(jump * kernel.cdf(u));
            dacc.add(jump * kernel.rho(u) / epsilon);
        }
        value.push(acc.value());
        derivative.push(dacc.value());
    }
    Ok(Mollified {
        epsilon,
        t: t.clone(),
        value,
        derivative,
    })
}

/// Outcome of the three mollification bounds at one `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MollificationCheck {
    pub epsilon: f64,
    pub a_ll: f64,
    pub min_value: f64,
    pub max_value: f64,
    pub ellipticity_holds: bool,
    pub sup_difference: f64,
    pub difference_bound: f64,
    pub difference_holds: bool,
    pub sup_derivative: f64,
    pub derivative_bound: f64,
    pub derivative_holds: bool,
}

impl MollificationCheck {
    pub fn all_hold(&self) -> bool {
        self.ellipticity_holds && self.difference_holds && self.derivative_holds
    }
}

/// Checks `k <= a_ε <= 1/k`, `|a_ε - a| <= A_LL μ(ε)` and
/// `|∂_t a_ε| <= A_LL ‖ρ'‖_{L¹} μ(ε)/ε` on the sample grid.
///
/// The cell model needs cells no wider than `ε`.
pub fn check_mollification(
    series: &TimeSeries,
    epsilon: f64,
    kernel: &MollifierKernel,
    a_ll: f64,
    ellipticity: f64,
) -> Result<MollificationCheck> {
    if series.max_spacing() > epsilon {
        return Err(domain(
            "check_mollification",
            format!("sample spacing {} exceeds epsilon {epsilon}", series.max_spacing()),
        ));
    }
    let m = mollify(series, epsilon, kernel)?;
    let min_value = m.value.iter().copied().fold(f64::INFINITY, f64::min);
    let max_value = m.value.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sup_difference = m
        .value
        .iter()
        .zip(&series.v)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let sup_derivative = m.derivative.iter().map(|d| d.abs()).fold(0.0, f64::max);
    let me = mu(epsilon)?;
    let difference_bound = a_ll * me;
    let derivative_bound = a_ll * kernel.l1_norm_of_derivative * me / epsilon;
    // Rounding slack relative to the coefficient scale.
    let scale = series.v.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-12 * scale;
    Ok(MollificationCheck {
        epsilon,
        a_ll,
        min_value,
        max_value,
        ellipticity_holds: min_value >= ellipticity - tol && max_value <= 1.0 / ellipticity + tol,
        sup_difference,
        difference_bound,
        difference_holds: sup_difference <= difference_bound + tol,
        sup_derivative,
        derivative_bound,
        derivative_holds: sup_derivative <= derivative_bound + tol / epsilon,
    })
}

/// The explicit constants of the weighted energy estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantRecipe {
    pub alpha1: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub k_prime: f64,
    pub nu_bar1: f64,
    pub lambda_min: f64,
    pub gamma_min: f64,
    pub tau: f64,
    /// `(α log2 C + 2C²)/(α log 2)`.
    pub gamma_lower_order: f64,
    /// `4(α²(log2)²ν̄₁² + 2α log2 n^{1/2} B ν̄₁ 2^{ν̄₁})(σ+τ)`.
    pub gamma_low_frequency: f64,
    /// `4(2nA_LL‖ρ'‖ + 32n²A_LL² + 8nB² + 2C²)(σ+τ)`.
    pub gamma_mollification: f64,
    /// Optional fitted piece from measured commutator constants.
    pub gamma_empirical: Option<f64>,
    /// True when `gamma_min` is set by the empirical piece.
    pub gamma_is_empirical: bool,
}

pub fn constant_recipe(
    bounds: &CoefficientBounds,
    tau: f64,
    kernel_derivative_l1: f64,
    n_dims: usize,
    gamma_empirical: Option<f64>,
) -> Result<ConstantRecipe> {
    bounds.validate()?;
    if n_dims == 0 {
        return Err(domain("constant_recipe", "space dimension must be positive"));
    }
    if !(kernel_derivative_l1 >= 0.0) {
        return Err(domain("constant_recipe", "kernel derivative norm must be >= 0"));
    }
    let n = n_dims as f64;
    let ln2 = std::f64::consts::LN_2;
    let (a_ll, b, c, k) = (bounds.a_ll, bounds.b_sup, bounds.c_sup, bounds.ellipticity);
    let w = 1.0 + 2.0 * ln2;
    let alpha1 = 16.0 / (k * ln2)
        * (2.0 * w * n * a_ll * kernel_derivative_l1 + 32.0 * w * w * n * n * a_ll * a_ll + 32.0 * n * b * b);
    let (alpha, sigma) = exact_reciprocal_pair(alpha1.max(1.0 / bounds.horizon));
    if !(tau > 0.0 && tau < 0.5 * sigma) {
        return Err(domain(
            "constant_recipe",
            format!("tau must lie in ]0, sigma/2[ with sigma = {sigma}, got {tau}"),
        ));
    }
    let k_prime = k.min(16.0);
    let nu_bar1 = ((16.0 * alpha * ln2 + 32.0 * n.sqrt() * b) / k).ln() / ln2;
    let lambda_min = f64::max(2.0, 48.0 * alpha * (sigma + tau) / k_prime);
    let gamma_lower_order = (alpha * ln2 * c + 2.0 * c * c) / (alpha * ln2);
    let gamma_low_frequency = 4.0
        * (alpha * alpha * ln2 * ln2 * nu_bar1 * nu_bar1
            + alpha * 2.0 * ln2 * n.sqrt() * b * nu_bar1 * nu_bar1.exp2())
        * (sigma + tau);
    let gamma_mollification = 4.0
        * (2.0 * n * a_ll * kernel_derivative_l1 + 32.0 * n * n * a_ll * a_ll + 8.0 * n * b * b + 2.0 * c * c)
        * (sigma + tau);
    let explicit = gamma_lower_order.max(gamma_low_frequency).max(gamma_mollification);
    let gamma_min = explicit.max(gamma_empirical.unwrap_or(0.0));
    Ok(ConstantRecipe {
        alpha1,
        alpha,
        sigma,
        k_prime,
        nu_bar1,
        lambda_min,
        gamma_min,
        tau,
        gamma_lower_order,
        gamma_low_frequency,
        gamma_mollification,
        gamma_empirical,
        gamma_is_empirical: gamma_empirical.is_some_and(|g| g > explicit),
    })
}
