//! Solutions on `[0, T]` whose Sobolev norms feed the energy checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::coefficients::{loglip_constant, CoefficientBounds, TimeSeries};
use crate::counterexample::{ln_unit_norm, CounterexampleFamily, SliceState};
use crate::dyadic::PeriodicField;
use crate::error::{domain, Error, Result};
use crate::logscalar::LogScalar;

/// A solution of a backward equation on `[0, horizon]`, known through its norms.
pub trait NormSource {
    fn horizon(&self) -> f64;

    /// Log of the factor that [`NormSource::hs_norm_sq_scaled`] divides out.
    fn reference_ln(&self) -> f64 {
        0.0
    }

    /// `‖u(t)‖²_{H^s} e^{-2 reference_ln}`, weight `(1 + |ξ|²)^s`.
    fn hs_norm_sq_scaled(&self, t: f64, s: f64) -> Result<LogScalar>;

    /// `‖u(t)‖_{L²} e^{-reference_ln}`.
    fn l2_norm_scaled(&self, t: f64) -> Result<LogScalar> {
        Ok(self.hs_norm_sq_scaled(t, 0.0)?.sqrt())
    }
}

fn check_time(op: &'static str, t: f64, horizon: f64) -> Result<()> {
    if !(t >= 0.0 && t <= horizon * (1.0 + 1e-12)) {
        return Err(domain(op, format!("t = {t} outside [0, {horizon}]")));
    }
    Ok(())
}

/// `u ≡ 0`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroSolution {
    pub horizon: f64,
}

impl NormSource for ZeroSolution {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn hs_norm_sq_scaled(&self, t: f64, _s: f64) -> Result<LogScalar> {
        check_time("ZeroSolution", t, self.horizon)?;
        Ok(LogScalar::ZERO)
    }
}

/// `u = e^{rate t} cos(frequency x1)`, which solves `∂_t u + Δu + c u = 0`
/// with `rate = frequency² - c`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SingleMode {
    pub frequency: f64,
    pub rate: f64,
    pub horizon: f64,
}

impl SingleMode {
    pub fn new(frequency: f64, potential: f64, horizon: f64) -> Result<Self> {
        if !(frequency >= 0.0 && potential.is_finite() && horizon > 0.0 && horizon.is_finite()) {
            return Err(domain("SingleMode", "need frequency >= 0, finite potential and positive horizon"));
        }
        Ok(SingleMode {
            frequency,
            rate: frequency * frequency - potential,
            horizon,
        })
    }

    /// The exact field on an `n × n` grid.
    pub fn field(&self, t: f64, n: usize) -> Result<PeriodicField> {
        let a = (self.rate * t).exp();
        PeriodicField::from_fn_2d(n, |x1, _| a * (self.frequency * x1).cos())
    }
}

impl NormSource for SingleMode {
    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn hs_norm_sq_scaled(&self, t: f64, s: f64) -> Result<LogScalar> {
        check_time("SingleMode", t, self.horizon)?;
        // ∫cos² over the square is 2π², or 4π² for the constant mode.
        let mass = if self.frequency == 0.0 { 4.0 * PI * PI } else { 2.0 * PI * PI };
        let k2 = self.frequency * self.frequency;
        Ok(LogScalar::from_ln(mass.ln() + s * k2.ln_1p() + 2.0 * self.rate * t))
    }
}

/// Sup norms of the lower-order terms and range of `l`, sampled on a window.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasuredBounds {
    pub b_sup: LogScalar,
    pub c_sup: LogScalar,
    pub l_min: f64,
    pub l_max: f64,
    pub a_ll: f64,
    pub samples: usize,
    pub ill_conditioned: usize,
}

impl MeasuredBounds {
    /// `k` with `k|ξ|² <= a ξ·ξ <= |ξ|²/k` for `a = diag(1, l)`.
    pub fn ellipticity(&self) -> f64 {
        1f64.min(self.l_min).min(1.0 / self.l_max)
    }

    /// `γ₀ = C + n B² / (4k)`.
    pub fn gamma0(&self, dims: usize) -> LogScalar {
        self.c_sup + self.b_sup * self.b_sup * (dims as f64 / (4.0 * self.ellipticity()))
    }

    pub fn coefficient_bounds(&self, horizon: f64) -> Result<CoefficientBounds> {
        CoefficientBounds::new(
            self.a_ll,
            self.l_max.max(1.0),
            self.b_sup.to_f64(),
            self.c_sup.to_f64(),
            self.ellipticity(),
            horizon,
        )
    }
}

/// Segment `n` of the counterexample on `s ∈ [s_start, s_end]`, run backwards:
/// `t = 0` is `s_end` and `t = (s_end - s_start) r_n` is `s_start`.
///
/// Norms are relative to the frame at `t = 0`, so window-internal ratios do not
/// inherit the rounding of `q_n`.
#[derive(Clone, Copy)]
pub struct FamilyWindow<'a> {
    family: &'a CounterexampleFamily,
    segment: usize,
    s_start: f64,
    s_end: f64,
    a: f64,
    r: f64,
    reference_offset: f64,
    grid: Option<usize>,
}

impl<'a> FamilyWindow<'a> {
    pub fn new(family: &'a CounterexampleFamily, segment: usize, s_start: f64, s_end: f64) -> Result<Self> {
        if !(0.0 <= s_start && s_start < s_end && s_end <= 1.0) {
            return Err(domain(
                "FamilyWindow",
                format!("need 0 <= s_start < s_end <= 1, got [{s_start}, {s_end}]"),
            ));
        }
        let table = family.table();
        if segment < 1 || segment > table.n_max() {
            return Err(domain("FamilyWindow", format!("segment {segment} outside [1, {}]", table.n_max())));
        }
        let (a, r) = (table.a(segment), table.r(segment));
        let end = family.slice(segment, a + s_end * r)?;
        Ok(FamilyWindow {
            family,
            segment,
            s_start,
            s_end,
            a,
            r,
            reference_offset: end.frame_offset(),
            grid: None,
        })
    }

    /// Computes norms by spectral quadrature of samples on an `n × n` grid.
    pub fn with_grid(mut self, n: usize) -> Self {
        self.grid = Some(n);
        self
    }

    pub fn segment(&self) -> usize {
        self.segment
    }

    pub fn window(&self) -> (f64, f64) {
        (self.s_start, self.s_end)
    }

    pub fn original_time(&self, t: f64) -> f64 {
        self.a + (self.s_end * self.r - t)
    }

    pub fn state(&self, t: f64) -> Result<SliceState> {
        check_time("FamilyWindow", t, self.horizon())?;
        self.family.slice(self.segment, self.original_time(t))
    }

    /// Samples `|b|`, `|c|` at `points` seeded random positions and `times`
    /// uniform times, plus `l` and its Log-Lipschitz constant; ill-conditioned
    /// points are counted and skipped.
    pub fn measure(&self, times: usize, points: usize, seed: u64) -> Result<MeasuredBounds> {
        if times < 2 || points < 1 {
            return Err(domain("measure", "need at least two times and one point"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs: Vec<(f64, f64)> = (0..points)
            .map(|_| (rng.random::<f64>() * std::f64::consts::TAU, rng.random::<f64>() * std::f64::consts::TAU))
            .collect();
        let horizon = self.horizon();
        let mut out = MeasuredBounds {
            b_sup: LogScalar::ZERO,
            c_sup: LogScalar::ZERO,
            l_min: f64::INFINITY,
            l_max: f64::NEG_INFINITY,
            a_ll: 0.0,
            samples: 0,
            ill_conditioned: 0,
        };
        let mut tl = Vec::with_capacity(times);
        let mut vl = Vec::with_capacity(times);
        for i in 0..times {
            let t = horizon * i as f64 / (times - 1) as f64;
            let st = self.state(t)?;
            out.l_min = out.l_min.min(st.l);
            out.l_max = out.l_max.max(st.l);
            tl.push(t);
            vl.push(st.l);
            for &(x1, x2) in &xs {
                match st.lower_order(x1, x2) {
                    Ok(lo) => {
                        out.b_sup = out.b_sup.max(lo.b1.abs()).max(lo.b2.abs());
                        out.c_sup = out.c_sup.max(lo.c.abs());
                        out.samples += 1;
                    }
                    Err(Error::IllConditioned { .. }) => out.ill_conditioned += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        out.a_ll = loglip_constant(&TimeSeries::new(tl, vl)?)?;
        Ok(out)
    }
}

impl NormSource for FamilyWindow<'_> {
    fn horizon(&self) -> f64 {
        (self.s_end - self.s_start) * self.r
    }

    fn reference_ln(&self) -> f64 {
        -self.family.table().q(self.segment) + self.reference_offset
    }

    fn hs_norm_sq_scaled(&self, t: f64, s: f64) -> Result<LogScalar> {
        let st = self.state(t)?;
        let shift = 2.0 * (st.frame_offset() - self.reference_offset);
        let core = match self.grid {
            None => {
                let w = st.mode_weights();
                let k = [st.k1, st.k1, st.k2];
                let sq: f64 = (0..3).map(|i| w[i] * w[i] * (s * (k[i] * k[i]).ln_1p()).exp()).sum();
                LogScalar::from_f64(sq).scale_ln(2.0 * ln_unit_norm())
            }
            Some(n) => {
                let f = PeriodicField::from_fn_2d(n, |x1, x2| st.fields(&st.trig(x1, x2)).u)?;
                let v = f.sobolev_norm(s)?;
                LogScalar::from_f64(v * v)
            }
        };
        Ok(core.scale_ln(shift))
    }
}
