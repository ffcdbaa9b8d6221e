//! Transition profiles and exact evaluators for `u`, `l`, `b_1`, `b_2`, `c`.
//!
//! On segment `n` (`a_n <= t <= a_{n+1}`, `s = (t - a_n)/r_n`) the solution is
//! `F(t) [A cos(n^2 x1) + B e^{J p} cos(n^2 x2) + C e^{-p s} cos((n+1)^2 x1)]`
//! with `F = exp(-q_n - z_n (t - a_n))`. Every evaluation factors out `F` and a
//! per-time log scale, so only order-one remainders meet floating point.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use super::sequences::{p_of, z_of, SequenceTable};
use crate::error::{domain, Error, Result};
use crate::logscalar::LogScalar;
use crate::smooth::{ramp, Jet, SMOOTHSTEP_MAX_SLOPE};

/// Denominators below this fraction of their scale are reported, not used.
pub const ILL_CONDITIONED: f64 = 1e-12;

/// `ln(π√2)`, the log-norm of `cos(k x1)` on the square.
pub fn ln_unit_norm() -> f64 {
    (PI * SQRT_2).ln()
}

const J_RISE: (f64, f64) = (1.0 / 6.0, 0.2);
const J_FALL: (f64, f64) = (1.0 / 3.0, 0.5);

/// Smoothstep realizations of the four transition profiles.
#[derive(Clone, Copy, Debug, Default)]
pub struct Transitions;

impl Transitions {
    /// 1 for `s <= 1/5`, 0 for `s >= 1/4`.
    pub fn a(&self, s: f64) -> Jet {
        ramp(s, 0.2, 0.25).complement()
    }

    /// 0 outside `]0, 1[`, 1 on `[1/6, 1/2]`.
    pub fn b(&self, s: f64) -> Jet {
        ramp(s, 0.0, 1.0 / 6.0).mul(ramp(s, 0.5, 1.0).complement())
    }

    /// 0 for `s <= 1/4`, 1 for `s >= 1/3`.
    pub fn c(&self, s: f64) -> Jet {
        ramp(s, 0.25, 1.0 / 3.0)
    }

    /// -2 off `]1/6, 1/2[`, 2 on `[1/5, 1/3]`.
    pub fn j(&self, s: f64) -> Jet {
        Jet::constant(-2.0)
            .add(ramp(s, J_RISE.0, J_RISE.1).scale(4.0))
            .add(ramp(s, J_FALL.0, J_FALL.1).scale(-4.0))
    }

    /// `sup |J'|`, attained mid-way up the steeper (rising) edge.
    pub fn j_prime_sup(&self) -> f64 {
        4.0 * SMOOTHSTEP_MAX_SLOPE / (J_RISE.1 - J_RISE.0)
    }

    /// Least `n` with `(1 + 1/n)^4 - 1 <= 1/(2 sup|J'|)`.
    pub fn natural_n0(&self) -> usize {
        let limit = 0.5 / self.j_prime_sup();
        (1..).find(|&n| parabolicity_ratio(n as f64) <= limit).unwrap()
    }
}

/// `p_n / (r_n z_n) = z_{n+1}/z_n - 1`.
pub fn parabolicity_ratio(n: f64) -> f64 {
    let u = 1.0 / n;
    (((u + 4.0) * u + 6.0) * u + 4.0) * u
}

/// Time-dependent part of the solution on one segment, with the log scale fixed.
#[derive(Clone, Copy, Debug)]
pub struct SliceState {
    pub n: usize,
    pub t: f64,
    pub s: f64,
    /// `-q_n - z_n (t - a_n)`.
    pub log_factor: f64,
    pub l: f64,
    pub k1: f64,
    pub k2: f64,
    z: f64,
    dt: f64,
    scale: f64,
    w: [f64; 3],
    wt: [f64; 3],
    wlf: [f64; 3],
    lu_scale: f64,
    wl: [f64; 3],
}

/// Trigonometric values of the three modes at a point.
#[derive(Clone, Copy, Debug)]
pub struct Trig {
    pub cos: [f64; 3],
    pub sin: [f64; 3],
}

/// Remainders of `u` and its derivatives in the frame of [`SliceState::frame`];
/// `lu` is `Łu` in the same frame and `lu_own` is `Łu` in its own frame (exact
/// magnitude even when it is negligible next to `u`).
#[derive(Clone, Copy, Debug, Default)]
pub struct Fields {
    pub u: f64,
    pub u1: f64,
    pub u2: f64,
    pub u11: f64,
    pub u22: f64,
    pub ut: f64,
    pub lu: f64,
    pub lu_own: f64,
    denominator_scale: f64,
}

/// `u = exp(log_factor) * remainder`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaledValue {
    pub log_factor: f64,
    pub remainder: f64,
}

impl ScaledValue {
    pub fn value(&self) -> LogScalar {
        LogScalar::from_f64(self.remainder).scale_ln(self.log_factor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerOrder {
    pub b1: LogScalar,
    pub b2: LogScalar,
    pub c: LogScalar,
}

impl LowerOrder {
    pub const ZERO: LowerOrder = LowerOrder {
        b1: LogScalar::ZERO,
        b2: LogScalar::ZERO,
        c: LogScalar::ZERO,
    };
}

fn scaled(coef: f64, expo: f64, scale: f64) -> f64 {
    if coef == 0.0 {
        0.0
    } else {
        coef.signum() * (coef.abs().ln() + expo - scale).exp()
    }
}

/// Exponent of the dominant nonzero term `c_i e^{e_i}`.
fn dominant_exponent(coefs: &[f64; 3], expo: &[f64; 3]) -> f64 {
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (c, e) in coefs.iter().zip(expo) {
        if *c != 0.0 && c.abs().ln() + e > best.0 {
            best = (c.abs().ln() + e, *e);
        }
    }
    best.1
}

/// Weights `coef_i e^{e_i - scale}` sharing one exponential per mode, so that
/// value and derivative weights carry identical rounding in the exponent.
fn weights(coefs: &[f64; 3], expo: &[f64; 3], scale: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for i in 0..3 {
        let d = expo[i] - scale;
        out[i] = if coefs[i] == 0.0 {
            0.0
        } else if d < 700.0 {
            coefs[i] * d.exp()
        } else {
            scaled(coefs[i], expo[i], scale)
        };
    }
    out
}

impl SliceState {
    /// State on segment `n` at time `t`; `s` may leave `[0, 1]`, where the
    /// profiles sit on their end plateaus.
    pub fn new(table: &SequenceTable, tr: &Transitions, n: usize, t: f64) -> Result<Self> {
        if n < 1 || n > table.n_max() {
            return Err(domain("slice", format!("segment {n} outside [1, {}]", table.n_max())));
        }
        if !t.is_finite() {
            return Err(domain("slice", "time must be finite"));
        }
        let a = table.a_dd(n);
        let dt = (t - a.hi) - a.lo;
        let r = table.r(n);
        let inv_r = 1.0 / r;
        let s = dt * inv_r;
        let z = z_of(n as f64);
        let p = p_of(n as f64);
        let coef = [tr.a(s), tr.b(s), tr.c(s)];
        let j = tr.j(s);
        let expo = [0.0, j.v * p, -p * s];
        let dexpo = [0.0, j.d1 * p * inv_r, -p * inv_r];
        let values = [coef[0].v, coef[1].v, coef[2].v];
        let mut rates = [0.0; 3];
        let mut dl = [0.0; 3];
        for i in 0..3 {
            rates[i] = coef[i].d1 * inv_r + coef[i].v * dexpo[i];
            dl[i] = coef[i].d1 * inv_r;
        }
        let scale = dominant_exponent(&values, &expo);
        let w = weights(&values, &expo, scale);
        let wt = weights(&rates, &expo, scale);
        let wlf = weights(&dl, &expo, scale);
        let lu_scale = dominant_exponent(&dl, &expo);
        let wl = if lu_scale > f64::NEG_INFINITY {
            weights(&dl, &expo, lu_scale)
        } else {
            [0.0; 3]
        };
        let k1 = (n as f64) * (n as f64);
        let k2 = ((n + 1) as f64) * ((n + 1) as f64);
        Ok(SliceState {
            n,
            t,
            s,
            log_factor: -table.q(n) - z * dt,
            l: 1.0 - j.d1 * p * inv_r / z,
            k1,
            k2,
            z,
            dt,
            scale,
            w,
            wt,
            wlf,
            lu_scale,
            wl,
        })
    }

    pub fn trig(&self, x1: f64, x2: f64) -> Trig {
        let (s0, c0) = (self.k1 * x1).sin_cos();
        let (s1, c1) = (self.k1 * x2).sin_cos();
        let (s2, c2) = (self.k2 * x1).sin_cos();
        Trig {
            cos: [c0, c1, c2],
            sin: [s0, s1, s2],
        }
    }

    /// Log of the frame in which [`Fields`] (other than `lu`) are expressed.
    pub fn frame(&self) -> f64 {
        self.log_factor + self.scale
    }

    /// `frame() - log_factor`: `e^{q_n + z_n (t - a_n)} u` is `e^{scale}` times
    /// the mode sum, whatever the rounding of `t`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `frame() + q_n`, free of the rounding of `q_n`; differences of this
    /// quantity within one segment are accurate to the size of `z_n (t - a_n)`.
    pub fn frame_offset(&self) -> f64 {
        self.scale - self.z * self.dt
    }

    /// True when `Łu` vanishes identically at this time.
    pub fn is_free(&self) -> bool {
        self.lu_scale == f64::NEG_INFINITY
    }

    /// Weights of the modes `cos(k1 x1)`, `cos(k1 x2)`, `cos(k2 x1)` in the frame.
    pub fn mode_weights(&self) -> [f64; 3] {
        self.w
    }

    pub fn fields(&self, tr: &Trig) -> Fields {
        let (w, c, s) = (&self.w, &tr.cos, &tr.sin);
        let (k1, k2) = (self.k1, self.k2);
        let u = w[0] * c[0] + w[1] * c[1] + w[2] * c[2];
        let lu = self.wlf[0] * c[0] + self.wlf[1] * c[1] + self.wlf[2] * c[2];
        let lu_own = self.wl[0] * c[0] + self.wl[1] * c[1] + self.wl[2] * c[2];
        let abs_u = w[0].abs() + w[1].abs() + w[2].abs();
        let abs_u1 = k1 * w[0].abs() + k2 * w[2].abs();
        let abs_u2 = k1 * w[1].abs();
        Fields {
            u,
            u1: -k1 * w[0] * s[0] - k2 * w[2] * s[2],
            u2: -k1 * w[1] * s[1],
            u11: -k1 * k1 * w[0] * c[0] - k2 * k2 * w[2] * c[2],
            u22: -k1 * k1 * w[1] * c[1],
            ut: -self.z * u + self.wt[0] * c[0] + self.wt[1] * c[1] + self.wt[2] * c[2],
            lu,
            lu_own,
            denominator_scale: abs_u * abs_u + abs_u1 * abs_u1 + abs_u2 * abs_u2,
        }
    }

    /// `(b1, b2, c)` in the frame (as doubles) together with their exact LogScalar values.
    fn lower_order_parts(&self, f: &Fields, x1: f64, x2: f64) -> Result<([f64; 3], LowerOrder)> {
        if self.is_free() || f.lu_own == 0.0 {
            return Ok(([0.0; 3], LowerOrder::ZERO));
        }
        let d = f.u * f.u + f.u1 * f.u1 + f.u2 * f.u2;
        let ratio = d / f.denominator_scale;
        if !(ratio >= ILL_CONDITIONED) {
            return Err(Error::IllConditioned {
                t: self.t,
                x1,
                x2,
                ratio,
            });
        }
        let shift = self.lu_scale - self.scale;
        let q = -f.lu_own / d;
        let lo = LowerOrder {
            b1: LogScalar::from_f64(q * f.u1).scale_ln(shift),
            b2: LogScalar::from_f64(q * f.u2).scale_ln(shift),
            c: LogScalar::from_f64(q * f.u).scale_ln(shift),
        };
        let q = -f.lu / d;
        Ok(([q * f.u1, q * f.u2, q * f.u], lo))
    }

    /// `(b1, b2, c)` as doubles from precomputed trigonometric values; `x1`,
    /// `x2` only label an ill-conditioned point.
    pub fn lower_order_f64(&self, tr: &Trig, x1: f64, x2: f64) -> Result<[f64; 3]> {
        let f = self.fields(tr);
        Ok(self.lower_order_parts(&f, x1, x2)?.0)
    }

    pub fn lower_order(&self, x1: f64, x2: f64) -> Result<LowerOrder> {
        let f = self.fields(&self.trig(x1, x2));
        Ok(self.lower_order_parts(&f, x1, x2)?.1)
    }

    /// Terms of `u_t - u_11 - l u_22 + b·∇u + c u` in the frame.
    pub fn residual_terms(&self, x1: f64, x2: f64) -> Result<[f64; 6]> {
        let f = self.fields(&self.trig(x1, x2));
        let (b, _) = self.lower_order_parts(&f, x1, x2)?;
        Ok([
            f.ut,
            -f.u11,
            -self.l * f.u22,
            b[0] * f.u1,
            b[1] * f.u2,
            b[2] * f.u,
        ])
    }

    /// `ln ||u(t)||_{L^2}`; the three modes are orthogonal on the square.
    pub fn ln_l2_norm(&self) -> f64 {
        let sq: f64 = self.w.iter().map(|x| x * x).sum();
        ln_unit_norm() + self.frame() + 0.5 * sq.ln()
    }

    /// `||u(t)||^2_{H^s}` with weight `(1 + |ξ|^2)^s`.
    pub fn hs_norm_sq(&self, s: f64) -> LogScalar {
        let k = [self.k1, self.k1, self.k2];
        let sq: f64 = (0..3)
            .map(|i| self.w[i] * self.w[i] * (1.0 + k[i] * k[i]).powf(s))
            .sum();
        LogScalar::from_f64(sq).scale_ln(2.0 * (ln_unit_norm() + self.frame()))
    }
}

/// `|sum| / max |term|`, zero when all terms vanish.
pub fn relative_residual(terms: &[f64]) -> f64 {
    let scale = terms.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        0.0
    } else {
        terms.iter().sum::<f64>().abs() / scale
    }
}

/// The family `u`, `l`, `b`, `c` on `t <= a_{n_max+1}`.
#[derive(Clone, Debug)]
pub struct CounterexampleFamily {
    table: SequenceTable,
    transitions: Transitions,
    n0: usize,
}

impl CounterexampleFamily {
    /// Uses the least admissible `n0` unless one is given; an explicit `n0`
    /// below it is rejected.
    pub fn new(table: SequenceTable, n0: Option<usize>) -> Result<Self> {
        let transitions = Transitions;
        let natural = transitions.natural_n0();
        let n0 = n0.unwrap_or(natural);
        if n0 < 1 {
            return Err(domain("family", "n0 must be positive"));
        }
        let limit = 0.5 / transitions.j_prime_sup();
        if parabolicity_ratio(n0 as f64) > limit {
            return Err(Error::Invariant {
                name: "parabolicity margin p_n/(r_n z_n) <= 1/(2 sup|J'|)".into(),
                location: format!("n = {n0}; choose n0 >= {natural}"),
            });
        }
        if table.n_max() < n0 + 2 {
            return Err(domain(
                "family",
                format!("n_max = {} must be at least n0 + 2 = {}", table.n_max(), n0 + 2),
            ));
        }
        Ok(CounterexampleFamily {
            table,
            transitions,
            n0,
        })
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn table(&self) -> &SequenceTable {
        &self.table
    }

    pub fn transitions(&self) -> &Transitions {
        &self.transitions
    }

    /// Last time covered by the table.
    pub fn t_max(&self) -> f64 {
        self.table.a(self.table.n_max() + 1)
    }

    /// Segment holding `t`; times before `a_{n0}` belong to `n0`, where `u = v_{n0}`.
    pub fn segment_of(&self, t: f64) -> Result<usize> {
        if !t.is_finite() || t > self.t_max() {
            return Err(domain(
                "family",
                format!("t = {t} outside ]-inf, {}]", self.t_max()),
            ));
        }
        if t < self.table.a(self.n0) {
            return Ok(self.n0);
        }
        Ok(self.table.segment_of(t).expect("t lies in the tabulated range"))
    }

    pub fn state(&self, t: f64) -> Result<SliceState> {
        let n = self.segment_of(t)?;
        SliceState::new(&self.table, &self.transitions, n, t)
    }

    /// State on an arbitrary segment, ignoring `n0` (small-`n` windows for the harness).
    pub fn slice(&self, n: usize, t: f64) -> Result<SliceState> {
        SliceState::new(&self.table, &self.transitions, n, t)
    }

    pub fn eval_solution(&self, t: f64, x1: f64, x2: f64) -> Result<ScaledValue> {
        let st = self.state(t)?;
        let f = st.fields(&st.trig(x1, x2));
        Ok(ScaledValue {
            log_factor: st.frame(),
            remainder: f.u,
        })
    }

    pub fn eval_l(&self, t: f64) -> Result<f64> {
        Ok(self.state(t)?.l)
    }

    pub fn eval_lower_order(&self, t: f64, x1: f64, x2: f64) -> Result<LowerOrder> {
        self.state(t)?.lower_order(x1, x2)
    }

    pub fn pde_residual(&self, t: f64, x1: f64, x2: f64) -> Result<f64> {
        Ok(relative_residual(&self.state(t)?.residual_terms(x1, x2)?))
    }

    pub fn norm_at(&self, t: f64) -> Result<LogScalar> {
        Ok(LogScalar::from_ln(self.state(t)?.ln_l2_norm()))
    }

    /// `||u(a_n)|| = π√2 e^{-q_n}` for `n0 <= n <= n_max + 1`.
    pub fn segment_norm(&self, n: usize) -> Result<LogScalar> {
        if n < self.n0 || n > self.table.n_max() + 1 {
            return Err(domain(
                "segment_norm",
                format!("n = {n} outside [{}, {}]", self.n0, self.table.n_max() + 1),
            ));
        }
        Ok(LogScalar::from_ln(ln_unit_norm() - self.table.q(n)))
    }
}

/// Monotone decay of one log-quantity over the table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayCheck {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Smallest `N` with the quantity strictly decreasing on `[N, n_max]`.
    pub decreasing_from: usize,
    /// Log-quantity at `n0`.
    pub value_at_n0: f64,
}

/// Growth conditions on the computed range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub n0: usize,
    pub n_max: usize,
    pub j_prime_sup: f64,
    /// `sup_{n >= n0} p_n/(r_n z_n)` and its admissible limit `1/(2 sup|J'|)`.
    pub parabolicity_sup: f64,
    pub parabolicity_limit: f64,
    /// `sup_n (p_n/(r_n z_n)) / (r_n log(1/r_n))` and where it is attained.
    pub log_lipschitz_sup: f64,
    pub log_lipschitz_argmax: usize,
    /// `log[e^{-q_n + 2p_n} z_{n+1}^α p_n^β r_n^{-γ}]`.
    pub solution_envelope: Vec<DecayCheck>,
    /// `log[e^{-p_n} z_{n+1}^α p_n^β r_n^{-γ}]`.
    pub coefficient_envelope: Vec<DecayCheck>,
}

impl GrowthReport {
    pub fn parabolicity_holds(&self) -> bool {
        self.parabolicity_sup <= self.parabolicity_limit
    }

    /// Every envelope decays from `n0` on.
    pub fn envelopes_decay(&self) -> bool {
        self.solution_envelope
            .iter()
            .chain(&self.coefficient_envelope)
            .all(|d| d.decreasing_from <= self.n0)
    }
}

/// Exponent grid used for the envelope checks.
pub const ENVELOPE_EXPONENTS: [f64; 3] = [1.0, 2.0, 4.0];

pub fn check_growth_conditions(
    table: &SequenceTable,
    transitions: &Transitions,
    n0: usize,
) -> Result<GrowthReport> {
    let n_max = table.n_max();
    if n0 < 1 || n0 >= n_max {
        return Err(domain("growth", format!("n0 = {n0} must lie in [1, {n_max})")));
    }
    let limit = 0.5 / transitions.j_prime_sup();
    let par_sup = (n0..=n_max)
        .map(|n| parabolicity_ratio(n as f64))
        .fold(0.0f64, f64::max);
    if par_sup > limit {
        return Err(Error::Invariant {
            name: "parabolicity margin p_n/(r_n z_n) <= 1/(2 sup|J'|)".into(),
            location: format!("n0 = {n0}; choose n0 >= {}", transitions.natural_n0()),
        });
    }
    let (mut ll_sup, mut ll_arg) = (0.0f64, 1);
    for n in 1..=n_max {
        let r = table.r(n);
        let v = parabolicity_ratio(n as f64) / (r * (1.0 / r).ln());
        if v > ll_sup {
            ll_sup = v;
            ll_arg = n;
        }
    }
    let logs: Vec<(f64, f64, f64, f64, f64)> = (1..=n_max)
        .map(|n| {
            let p = table.p(n);
            (
                table.q(n),
                p,
                table.z(n + 1).ln(),
                p.ln(),
                table.r(n).ln(),
            )
        })
        .collect();
    let decay = |with_q: bool| -> Vec<DecayCheck> {
        let mut out = Vec::new();
        for &alpha in &ENVELOPE_EXPONENTS {
            for &beta in &ENVELOPE_EXPONENTS {
                for &gamma in &ENVELOPE_EXPONENTS {
                    let vals: Vec<f64> = logs
                        .iter()
                        .map(|&(q, p, lz, lp, lr)| {
                            let head = if with_q { -q + 2.0 * p } else { -p };
                            head + alpha * lz + beta * lp - gamma * lr
                        })
                        .collect();
                    let mut from = n_max;
                    while from > 1 && vals[from - 2] > vals[from - 1] {
                        from -= 1;
                    }
                    out.push(DecayCheck {
                        alpha,
                        beta,
                        gamma,
                        decreasing_from: from,
                        value_at_n0: vals[n0 - 1],
                    });
                }
            }
        }
        out
    };
    Ok(GrowthReport {
        n0,
        n_max,
        j_prime_sup: transitions.j_prime_sup(),
        parabolicity_sup: par_sup,
        parabolicity_limit: limit,
        log_lipschitz_sup: ll_sup,
        log_lipschitz_argmax: ll_arg,
        solution_envelope: decay(true),
        coefficient_envelope: decay(false),
    })
}
