//! Pseudo-spectral integrator for
//! `∂_t v = ∂_1² v + l(t) ∂_2² v - b_1 ∂_1 v - b_2 ∂_2 v - c v` on the 2-torus.
//!
//! The diagonal part is integrated exactly (Lawson integrating factor with
//! `∫ l` by adaptive quadrature); `b` and `c` are explicit through classical
//! RK4, so the scheme is unconditionally stable for the heat part.

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::counterexample::{CounterexampleFamily, Trig};
use crate::dyadic::{fft_in_place, frequency, PeriodicField};
use crate::error::{domain, Error, Result};
use crate::quadrature::{integrate, QuadratureConfig};

/// Time-dependent coefficients of the forward equation.
pub trait Coefficients {
    /// The `x2` diffusion `l(t)`.
    fn l(&self, t: f64) -> Result<f64>;

    fn l_integral(&self, t0: f64, t1: f64) -> Result<f64> {
        let mut failure = None;
        let r = integrate(
            |t| match self.l(t) {
                Ok(v) => v,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            },
            t0,
            t1,
            &QuadratureConfig::default(),
        )?;
        match failure {
            Some(e) => Err(e),
            None => Ok(r.value),
        }
    }

    /// Fills `b1`, `b2`, `c` at the `n × n` grid points; `false` means all vanish.
    fn lower_order(&self, t: f64, n: usize, b1: &mut [f64], b2: &mut [f64], c: &mut [f64]) -> Result<bool>;
}

/// Coefficients that do not depend on space: `l(t)`, constant `b`, and `c(t)`.
pub struct UniformCoefficients<L, C> {
    pub l: L,
    pub b: [f64; 2],
    pub c: C,
}

impl<L: Fn(f64) -> f64, C: Fn(f64) -> f64> Coefficients for UniformCoefficients<L, C> {
    fn l(&self, t: f64) -> Result<f64> {
        Ok((self.l)(t))
    }

    fn lower_order(&self, t: f64, _n: usize, b1: &mut [f64], b2: &mut [f64], c: &mut [f64]) -> Result<bool> {
        let cv = (self.c)(t);
        b1.fill(self.b[0]);
        b2.fill(self.b[1]);
        c.fill(cv);
        Ok(self.b != [0.0, 0.0] || cv != 0.0)
    }
}

/// The counterexample operator on one segment, in its own time.
pub struct FamilyCoefficients<'a> {
    family: &'a CounterexampleFamily,
    segment: usize,
    tables: Option<(usize, AxisTables)>,
}

struct AxisTables {
    x: Vec<f64>,
    c1: Vec<f64>,
    s1: Vec<f64>,
    c2: Vec<f64>,
    s2: Vec<f64>,
}

impl AxisTables {
    fn new(n: usize, k1: f64, k2: f64) -> Self {
        let h = std::f64::consts::TAU / n as f64;
        let x: Vec<f64> = (0..n).map(|i| h * i as f64).collect();
        let (s1, c1) = x.iter().map(|&v| (k1 * v).sin_cos()).unzip();
        let (s2, c2) = x.iter().map(|&v| (k2 * v).sin_cos()).unzip();
        AxisTables { x, c1, s1, c2, s2 }
    }
}

impl<'a> FamilyCoefficients<'a> {
    pub fn new(family: &'a CounterexampleFamily, segment: usize) -> Result<Self> {
        family.slice(segment, family.table().a(segment))?;
        Ok(FamilyCoefficients {
            family,
            segment,
            tables: None,
        })
    }

    /// Precomputes the per-axis trigonometric tables for an `n`-point grid.
    pub fn with_grid(mut self, n: usize) -> Self {
        let k1 = (self.segment * self.segment) as f64;
        let k2 = ((self.segment + 1) * (self.segment + 1)) as f64;
        self.tables = Some((n, AxisTables::new(n, k1, k2)));
        self
    }

    /// The exact solution on the grid, divided by `exp(frame)`.
    pub fn exact_field(&self, t: f64, n: usize, frame: f64) -> Result<PeriodicField> {
        let st = self.family.slice(self.segment, t)?;
        let shift = (st.frame() - frame).exp();
        PeriodicField::from_fn_2d(n, |x1, x2| st.fields(&st.trig(x1, x2)).u * shift)
    }
}

impl Coefficients for FamilyCoefficients<'_> {
    fn l(&self, t: f64) -> Result<f64> {
        Ok(self.family.slice(self.segment, t)?.l)
    }

    fn lower_order(&self, t: f64, n: usize, b1: &mut [f64], b2: &mut [f64], c: &mut [f64]) -> Result<bool> {
        let st = self.family.slice(self.segment, t)?;
        if st.is_free() {
            return Ok(false);
        }
        let owned;
        let tab = match &self.tables {
            Some((m, tab)) if *m == n => tab,
            _ => {
                owned = AxisTables::new(n, st.k1, st.k2);
                &owned
            }
        };
        for i in 0..n {
            for j in 0..n {
                let tr = Trig {
                    cos: [tab.c1[i], tab.c1[j], tab.c2[i]],
                    sin: [tab.s1[i], tab.s1[j], tab.s2[i]],
                };
                let v = st.lower_order_f64(&tr, tab.x[i], tab.x[j])?;
                let idx = i * n + j;
                b1[idx] = v[0];
                b2[idx] = v[1];
                c[idx] = v[2];
            }
        }
        Ok(true)
    }
}

/// Step-size policy: the step never exceeds `max_step` nor the explicit
/// stability estimate `safety / (max|c| + max|b| k_max)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub max_step: f64,
    pub safety: f64,
    pub max_steps: usize,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl {
            max_step: 1e-3,
            safety: 1.0,
            max_steps: 1_000_000,
        }
    }
}

/// Solution snapshots at the requested output times.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub fields: Vec<PeriodicField>,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &PeriodicField {
        self.fields.last().expect("a trajectory holds at least the initial field")
    }
}

struct Workspace {
    n: usize,
    xi1: Vec<f64>,
    xi2: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
    b1: Vec<f64>,
    b2: Vec<f64>,
    c: Vec<f64>,
    buf: Vec<Complex64>,
    buf2: Vec<Complex64>,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let total = n * n;
        let mut xi1 = Vec::with_capacity(total);
        let mut xi2 = Vec::with_capacity(total);
        let mut d1 = Vec::with_capacity(total);
        let mut d2 = Vec::with_capacity(total);
        // Derivatives drop the Nyquist mode so that they stay real.
        let deriv = |k: usize| if 2 * k == n { 0.0 } else { frequency(k, n) };
        for k1 in 0..n {
            for k2 in 0..n {
                xi1.push(frequency(k1, n).powi(2));
                xi2.push(frequency(k2, n).powi(2));
                d1.push(deriv(k1));
                d2.push(deriv(k2));
            }
        }
        Workspace {
            n,
            xi1,
            xi2,
            d1,
            d2,
            b1: vec![0.0; total],
            b2: vec![0.0; total],
            c: vec![0.0; total],
            buf: vec![Complex64::default(); total],
            buf2: vec![Complex64::default(); total],
        }
    }

    /// `-b·∇v - c v` in spectral form; zero when the coefficients vanish.
    fn explicit<C: Coefficients>(&mut self, coef: &C, t: f64, v: &[Complex64], out: &mut [Complex64]) -> Result<()> {
        let n = self.n;
        if !coef.lower_order(t, n, &mut self.b1, &mut self.b2, &mut self.c)? {
            out.fill(Complex64::default());
            return Ok(());
        }
        let i = Complex64::i();
        // v and ∂1 v through one complex transform, ∂2 v through another.
        for k in 0..v.len() {
            self.buf[k] = v[k] + i * (i * self.d1[k] * v[k]);
            self.buf2[k] = i * self.d2[k] * v[k];
        }
        fft_in_place(&mut self.buf, 2, n, true);
        fft_in_place(&mut self.buf2, 2, n, true);
        let scale = 1.0 / (n * n) as f64;
        for k in 0..v.len() {
            let (val, dx1) = (self.buf[k].re * scale, self.buf[k].im * scale);
            let dx2 = self.buf2[k].re * scale;
            out[k] = Complex64::new(-self.b1[k] * dx1 - self.b2[k] * dx2 - self.c[k] * val, 0.0);
        }
        fft_in_place(out, 2, n, false);
        Ok(())
    }

    fn coefficient_bound(&self) -> f64 {
        let kmax = (self.n / 2) as f64;
        let mut m = 0.0f64;
        for k in 0..self.b1.len() {
            m = m.max(self.c[k].abs() + (self.b1[k].abs() + self.b2[k].abs()) * kmax);
        }
        m
    }
}

fn propagator(ws: &Workspace, tau: f64, l_int: f64) -> Vec<f64> {
    ws.xi1
        .iter()
        .zip(&ws.xi2)
        .map(|(a, b)| (-a * tau - b * l_int).exp())
        .collect()
}

fn spectral_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates from `times[0]` through every later time in `times`, starting
/// from `initial`, and returns the snapshots.
pub fn spectral_solve<C: Coefficients>(
    initial: &PeriodicField,
    coef: &C,
    times: &[f64],
    control: &StepControl,
) -> Result<Trajectory> {
    if initial.dim() != 2 {
        return Err(Error::Grid("the integrator works on two-dimensional fields".into()));
    }
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(domain("spectral_solve", "output times must be strictly increasing, at least two"));
    }
    if !(control.max_step > 0.0 && control.safety > 0.0) {
        return Err(domain("spectral_solve", "step limits must be positive"));
    }
    let n = initial.n();
    let mut ws = Workspace::new(n);
    let mut v: Vec<Complex64> = initial.spectrum().to_vec();
    let total = v.len();
    let mut k = [
        vec![Complex64::default(); total],
        vec![Complex64::default(); total],
        vec![Complex64::default(); total],
        vec![Complex64::default(); total],
    ];
    let mut stage = vec![Complex64::default(); total];
    let mut out = Trajectory {
        times: vec![times[0]],
        fields: vec![initial.clone()],
        steps: 0,
    };
    let mut t = times[0];
    let norm0 = spectral_norm(&v).max(f64::MIN_POSITIVE);
    for &target in &times[1..] {
        while t < target {
            ws.explicit(coef, t, &v, &mut k[0])?;
            let bound = ws.coefficient_bound();
            let mut h = control.max_step.min(target - t);
            if bound > 0.0 {
                h = h.min(control.safety / bound);
            }
            // the slack keeps rounding in `target - t` from adding a sliver step
            let remaining = ((target - t) / h * (1.0 - 1e-12)).ceil().max(1.0);
            h = (target - t) / remaining;
            out.steps += 1;
            if out.steps > control.max_steps {
                return Err(Error::StepControl {
                    t,
                    detail: format!(
                        "step budget {} exhausted (step {h:e}); last stable state has norm ratio {:e}",
                        control.max_steps,
                        spectral_norm(&v) / norm0
                    ),
                });
            }
            let th = t + 0.5 * h;
            let t1 = if remaining == 1.0 { target } else { t + h };
            let p01 = propagator(&ws, th - t, coef.l_integral(t, th)?);
            let p12 = propagator(&ws, t1 - th, coef.l_integral(th, t1)?);
            for j in 0..total {
                stage[j] = p01[j] * (v[j] + 0.5 * h * k[0][j]);
            }
            let (k0, rest) = k.split_at_mut(1);
            ws.explicit(coef, th, &stage, &mut rest[0])?;
            for j in 0..total {
                stage[j] = p01[j] * v[j] + 0.5 * h * rest[0][j];
            }
            ws.explicit(coef, th, &stage, &mut rest[1])?;
            for j in 0..total {
                stage[j] = p01[j] * p12[j] * v[j] + h * p12[j] * rest[1][j];
            }
            ws.explicit(coef, t1, &stage, &mut rest[2])?;
            for j in 0..total {
                let p02 = p01[j] * p12[j];
                v[j] = p02 * v[j]
                    + h / 6.0 * (p02 * k0[0][j] + 2.0 * p12[j] * (rest[0][j] + rest[1][j]) + rest[2][j]);
            }
            let norm = spectral_norm(&v);
            if !norm.is_finite() {
                return Err(Error::StepControl {
                    t,
                    detail: format!("non-finite state after a step of {h:e}"),
                });
            }
            t = t1;
        }
        out.times.push(target);
        out.fields.push(PeriodicField::from_spectrum(2, n, v.clone())?);
    }
    Ok(out)
}

/// Relative L² distance `‖a - b‖ / ‖b‖` on a common grid.
pub fn relative_l2_error(a: &PeriodicField, b: &PeriodicField) -> Result<f64> {
    let d = a.sub(b)?;
    let base = b.l2_norm();
    if base == 0.0 {
        return Err(domain("relative_l2_error", "reference field vanishes"));
    }
    Ok(d.l2_norm() / base)
}

/// Result of solving one counterexample window forward and comparing with the
/// exact solution at `s = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub segment: usize,
    pub s_start: f64,
    pub grid: usize,
    pub steps: usize,
    /// `‖u(s_start)‖ / ‖u(1)‖`.
    pub norm_ratio: f64,
    pub relative_error: f64,
}

/// Start of the oracle window on segment `n`: the latest of `s = 1/2` (where
/// `l ≡ 1` from then on) and the point from which the solution decays by
/// about `e^{max_log_decay}`, with decay rate `p_n + z_n r_n` per unit `s`.
pub fn oracle_start(family: &CounterexampleFamily, segment: usize, max_log_decay: f64) -> Result<f64> {
    if !(max_log_decay > 0.0) {
        return Err(domain("oracle_start", "decay budget must be positive"));
    }
    let t = family.table();
    if segment < 1 || segment > t.n_max() {
        return Err(domain("oracle_start", format!("segment {segment} outside [1, {}]", t.n_max())));
    }
    let rate = t.p(segment) + t.z(segment) * t.r(segment);
    Ok((1.0 - max_log_decay / rate).max(0.5))
}

/// Solves segment `n` on `[s_start, 1]` from the exact data with `steps`
/// uniform steps (refined further if the explicit bound demands it).
pub fn family_oracle(
    family: &CounterexampleFamily,
    segment: usize,
    grid: usize,
    steps: usize,
    max_log_decay: f64,
) -> Result<OracleReport> {
    if steps == 0 {
        return Err(domain("family_oracle", "need at least one step"));
    }
    let s_start = oracle_start(family, segment, max_log_decay)?;
    let t = family.table();
    let (ta, tb) = (t.a(segment) + s_start * t.r(segment), t.a(segment) + t.r(segment));
    let coef = FamilyCoefficients::new(family, segment)?.with_grid(grid);
    let frame = family.slice(segment, ta)?.frame();
    let u0 = coef.exact_field(ta, grid, frame)?;
    let u1 = coef.exact_field(tb, grid, frame)?;
    let control = StepControl {
        max_step: (tb - ta) / steps as f64,
        ..StepControl::default()
    };
    let traj = spectral_solve(&u0, &coef, &[ta, tb], &control)?;
    Ok(OracleReport {
        segment,
        s_start,
        grid,
        steps: traj.steps,
        norm_ratio: u0.l2_norm() / u1.l2_norm(),
        relative_error: relative_l2_error(traj.last(), &u1)?,
    })
}
