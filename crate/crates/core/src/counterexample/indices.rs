//! The index pairs `n_{1,k}`, `n_{2,k}`, the times `t_{h,k} = a_{n_{h,k}}`,
//! divergence ratios and the time-reversed family members.

use serde::{Deserialize, Serialize};

use super::family::{ln_unit_norm, relative_residual, CounterexampleFamily, LowerOrder, ScaledValue};
use super::sequences::{direct_sums, extend_q, p_of, tail_a, z_of, Bounded, QValue, DIRECT_LIMIT, HEAD_INDEX};
use crate::error::{domain, Result};
use crate::logscalar::LogScalar;
use crate::summation::{DoubleDouble, Precision};

/// Largest index handled as an exact integer.
const EXACT_INDEX_LIMIT: f64 = 9.0e15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SumMode {
    /// Direct summation up to `n_{1,k}` (and up to `n_{2,k}` when within the
    /// direct limit), Euler–Maclaurin beyond. Needs integer indices (`k <= 3`).
    Exact,
    /// Direct head to a fixed index, Euler–Maclaurin to any `n`.
    Asymptotic,
}

/// `exp(e^k)` and `exp(e^{k + 1/k})` in double-double.
pub fn index_arguments(k: u32) -> Result<(DoubleDouble, DoubleDouble)> {
    if k < 2 {
        return Err(domain("index_pairs", format!("k must be >= 2, got {k}")));
    }
    if k > 6 {
        return Err(domain("index_pairs", format!("k = {k} overflows binary64 indices")));
    }
    let kd = DoubleDouble::from_f64(f64::from(k));
    let inner1 = kd.exp();
    let inner2 = kd.sum(DoubleDouble::from_f64(1.0).div(kd)).exp();
    Ok((inner1.exp(), inner2.exp()))
}

/// `(n_{1,k}, n_{2,k}) = ([exp(e^k)] + 2, [exp(e^{k+1/k})] + 1)` as doubles and,
/// when small enough, exact integers.
pub fn indices(k: u32) -> Result<((f64, Option<u64>), (f64, Option<u64>))> {
    let (x1, x2) = index_arguments(k)?;
    let n1 = x1.floor().sum(DoubleDouble::from_f64(2.0)).value();
    let n2 = x2.floor().sum(DoubleDouble::from_f64(1.0)).value();
    let exact = |n: f64| (n < EXACT_INDEX_LIMIT).then_some(n as u64);
    Ok(((n1, exact(n1)), (n2, exact(n2))))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexPair {
    pub k: u32,
    pub mode: SumMode,
    pub n1: f64,
    pub n2: f64,
    pub n1_exact: Option<u64>,
    pub n2_exact: Option<u64>,
    /// `t_{1,k} = a_{n1}` and `t_{2,k} = a_{n2}` with a common absolute error bound.
    pub t1: f64,
    pub t2: f64,
    pub t_bound: f64,
    /// `t_{2,k} - t_{1,k}`, summed as a tail (no cancellation).
    pub gap: Bounded,
    /// `log log(n2 - 1) - log log(n1 - 1)`, the integral majorant of the gap.
    pub gap_integral: f64,
    pub q1: QValue,
    pub q2: QValue,
    /// `q_{n2} - q_{n1}`, summed as a tail.
    pub q_increment: LogScalar,
}

fn dd_bound(x: DoubleDouble, precision: Precision) -> f64 {
    match precision {
        Precision::Double => 4.0 * f64::EPSILON * x.value().abs(),
        Precision::Extended => 1e-24 * x.value().abs(),
    }
}

fn qvalue(x: DoubleDouble, precision: Precision) -> QValue {
    QValue {
        value: Some(x.value()),
        log: LogScalar::from_f64(x.value()),
        rel_bound: dd_bound(x, precision) / x.value() + f64::EPSILON,
    }
}

/// Log-log integral `log log y - log log x`.
fn log_log_diff(x: f64, y: f64) -> f64 {
    ((y / x).ln() / x.ln()).ln_1p()
}

pub fn index_pairs(k: u32, mode: SumMode, precision: Precision) -> Result<IndexPair> {
    let ((n1, e1), (n2, e2)) = indices(k)?;
    let gap_integral = log_log_diff(n1 - 1.0, n2 - 1.0);
    match mode {
        SumMode::Exact => {
            let (Some(i1), Some(i2)) = (e1, e2) else {
                return Err(domain(
                    "index_pairs",
                    format!("k = {k}: indices are not exact integers; use the asymptotic mode"),
                ));
            };
            let (a1, q1) = direct_sums(1, i1, precision)?;
            let t1 = a1.value();
            let (gap, q2, q_increment) = if i2 - i1 <= DIRECT_LIMIT {
                let (da, dq) = direct_sums(i1, i2, precision)?;
                let q2 = q1.sum(dq);
                (
                    Bounded {
                        value: da.value(),
                        bound: dd_bound(da, precision) + 1e-30,
                    },
                    qvalue(q2, precision),
                    LogScalar::from_f64(dq.value()),
                )
            } else {
                let gap = tail_a(n1, n2)?;
                let q2 = extend_q(n1, q1.value(), n2)?;
                let inc = extend_q(n1, 0.0, n2)?;
                (gap, q2, inc.log)
            };
            let t_bound = dd_bound(a1, precision) + gap.bound + f64::EPSILON * t1;
            Ok(IndexPair {
                k,
                mode,
                n1,
                n2,
                n1_exact: e1,
                n2_exact: e2,
                t1,
                t2: a1.sum(DoubleDouble::from_f64(gap.value)).value(),
                t_bound,
                gap,
                gap_integral,
                q1: qvalue(q1, precision),
                q2,
                q_increment,
            })
        }
        SumMode::Asymptotic => {
            let head = HEAD_INDEX as f64;
            let (ha, hq) = direct_sums(1, HEAD_INDEX, precision)?;
            let ta1 = tail_a(head, n1)?;
            let gap = tail_a(n1, n2)?;
            let t1 = ha.value() + ta1.value;
            Ok(IndexPair {
                k,
                mode,
                n1,
                n2,
                n1_exact: e1,
                n2_exact: e2,
                t1,
                t2: t1 + gap.value,
                t_bound: ta1.bound + gap.bound + 4.0 * f64::EPSILON * t1,
                gap,
                gap_integral,
                q1: extend_q(head, hq.value(), n1)?,
                q2: extend_q(head, hq.value(), n2)?,
                q_increment: extend_q(n1, 0.0, n2)?.log,
            })
        }
    }
}

/// A LogScalar with a relative error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioValue {
    pub value: LogScalar,
    pub rel_bound: f64,
}

/// `log(||u(t1)|| / ||u(t2)||^δ)` with the closed-form norms
/// `π√2 e^{-q}`: `(1-δ) log(π√2) + δ q_{n2} - q_{n1}`.
pub fn divergence_ratio(pair: &IndexPair, delta: f64) -> Result<RatioValue> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(domain("divergence_ratio", format!("delta must lie in ]0,1[, got {delta}")));
    }
    let c = LogScalar::from_f64(ln_unit_norm());
    let gain = pair.q_increment * delta;
    let loss = (pair.q1.log - c) * (1.0 - delta);
    let value = gain - loss;
    let err = gain.abs() * pair.q2.rel_bound.max(pair.q1.rel_bound) * 4.0
        + loss.abs() * pair.q1.rel_bound * 2.0;
    Ok(RatioValue {
        value,
        rel_bound: (err / value.abs()).to_f64(),
    })
}

/// Lower bound `(n1^3 / log n1)(n2 - n1)` for `q_{n2} - q_{n1}`.
pub fn increment_lower_bound(pair: &IndexPair) -> LogScalar {
    let n1 = pair.n1;
    LogScalar::from_ln(3.0 * n1.ln() - n1.ln().ln() + (pair.n2 - n1).ln())
}

/// Values of `a` and `q` at the family's start index, for closed-form norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub n0: u64,
    pub a_n0: DoubleDouble,
    pub q_n0: f64,
    pub head_a: f64,
    pub head_q: f64,
}

impl Anchor {
    pub fn new(n0: u64, precision: Precision) -> Result<Self> {
        if n0 < 2 {
            return Err(domain("anchor", "n0 must be >= 2"));
        }
        let (a, q) = direct_sums(1, n0, precision)?;
        let (ha, hq) = direct_sums(1, HEAD_INDEX, precision)?;
        Ok(Anchor {
            n0,
            a_n0: a,
            q_n0: q.value(),
            head_a: ha.value(),
            head_q: hq.value(),
        })
    }

    /// `ln ||u(t)||` for `t <= a_{n0}`, where `u = v_{n0}`.
    fn ln_norm_before(&self, t: f64) -> f64 {
        let dt = (self.a_n0.hi - t) + self.a_n0.lo;
        ln_unit_norm() - self.q_n0 + z_of(self.n0 as f64) * dt
    }

    fn a_of(&self, n: f64) -> Result<f64> {
        Ok(self.head_a + tail_a(HEAD_INDEX as f64, n)?.value)
    }

    /// Upper bound for `ln ||u(t)||` at `t > a_{n0}`: on segment `m`,
    /// `||u|| <= π√2 √3 e^{-q_m + 2 p_m}`, which decreases in `m`.
    fn ln_norm_bound_after(&self, t: f64) -> Result<LogScalar> {
        let c_a = self.a_of(HEAD_INDEX as f64)? - (HEAD_INDEX as f64).ln().ln();
        let mut m = ((t - c_a).exp().exp() * 0.5).floor().max(self.n0 as f64);
        while m > self.n0 as f64 && self.a_of(m)? > t - 1e-12 {
            m = (m * 0.5).floor().max(self.n0 as f64);
        }
        let q = extend_q(HEAD_INDEX as f64, self.head_q, m)?;
        let c = LogScalar::from_f64(ln_unit_norm() + 0.5 * 3f64.ln() + 2.0 * p_of(m));
        Ok(c - q.log)
    }
}

/// Norms of one reversed member on `[0, 1]`, each stored as its natural log
/// (itself a LogScalar, since `log ||u_n(0)||` reaches `-10^{312}` at `k = 5`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormDatum {
    pub k: u32,
    pub sigma: f64,
    /// `log ||u_n(0)||`.
    pub ln_initial: LogScalar,
    /// `log ||u_n(t_n)||`, a lower bound for the sup over any `[0, σ̄]` with `σ̄ >= t_n`.
    pub ln_sup_lower: LogScalar,
    /// Upper bound for `log(1 + ||u_n(σ)||)`.
    pub ln1p_at_sigma: LogScalar,
}

fn ln1p_of_ln(x: LogScalar) -> LogScalar {
    // x = log of a positive number y; returns log(1 + y)
    let l = x.to_f64();
    if l < -40.0 {
        LogScalar::from_ln(l)
    } else if l > 40.0 {
        LogScalar::from_f64(l)
    } else {
        LogScalar::from_f64(l.exp().ln_1p())
    }
}

pub fn norm_datum(pair: &IndexPair, anchor: &Anchor, sigma: f64) -> Result<NormDatum> {
    if !(sigma > 0.0 && sigma <= 1.0) {
        return Err(domain("norm_datum", format!("sigma must lie in ]0,1], got {sigma}")));
    }
    let n0 = anchor.n0 as f64;
    if pair.n2 < n0 {
        return Err(domain("norm_datum", "n2 precedes the family's start index"));
    }
    let c = LogScalar::from_f64(ln_unit_norm());
    let ln_initial = c - pair.q2.log;
    let ln_sup_lower = if pair.n1 >= n0 {
        c - pair.q1.log
    } else {
        let i1 = pair
            .n1_exact
            .ok_or_else(|| domain("norm_datum", "n1 < n0 needs an exact index"))?;
        let (da, _) = direct_sums(i1, anchor.n0, Precision::Extended)?;
        let t_rel = anchor.a_n0.diff(da);
        LogScalar::from_f64(anchor.ln_norm_before(t_rel.value()))
    };
    let t = pair.t2 - sigma;
    let ln_sigma = if t <= anchor.a_n0.value() {
        LogScalar::from_f64(anchor.ln_norm_before(t))
    } else {
        anchor.ln_norm_bound_after(t)?
    };
    Ok(NormDatum {
        k: pair.k,
        sigma,
        ln_initial,
        ln_sup_lower,
        ln1p_at_sigma: ln1p_of_ln(ln_sigma),
    })
}

/// `u_n(t) = u(t_{2,k} - t)` and its operator on `[0, 1]`.
#[derive(Clone, Copy, Debug)]
pub struct ReversedMember<'a> {
    family: &'a CounterexampleFamily,
    pub k: u32,
    pub n1: usize,
    pub n2: usize,
    pub t1: f64,
    pub t2: f64,
    /// `t_n = t_{2,k} - t_{1,k}`.
    pub t_n: f64,
}

pub fn reversed_family(family: &CounterexampleFamily, k: u32) -> Result<ReversedMember<'_>> {
    let ((_, e1), (_, e2)) = indices(k)?;
    let (Some(n1), Some(n2)) = (e1, e2) else {
        return Err(domain("reversed_family", format!("k = {k} has no exact indices")));
    };
    let (n1, n2) = (n1 as usize, n2 as usize);
    let table = family.table();
    if n2 > table.n_max() + 1 {
        return Err(domain(
            "reversed_family",
            format!("n2 = {n2} exceeds the table (n_max = {})", table.n_max()),
        ));
    }
    let t_n = table.a_dd(n2).diff(table.a_dd(n1)).value();
    Ok(ReversedMember {
        family,
        k,
        n1,
        n2,
        t1: table.a(n1),
        t2: table.a(n2),
        t_n,
    })
}

impl ReversedMember<'_> {
    fn original_time(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(domain("reversed member", format!("t = {t} outside [0, 1]")));
        }
        Ok(self.t2 - t)
    }

    pub fn u(&self, t: f64, x1: f64, x2: f64) -> Result<ScaledValue> {
        self.family.eval_solution(self.original_time(t)?, x1, x2)
    }

    pub fn l(&self, t: f64) -> Result<f64> {
        self.family.eval_l(self.original_time(t)?)
    }

    pub fn lower_order(&self, t: f64, x1: f64, x2: f64) -> Result<LowerOrder> {
        self.family.eval_lower_order(self.original_time(t)?, x1, x2)
    }

    /// Relative size of `∂_t u_n + ∂²_1 u_n + l_n ∂²_2 u_n - b_n·∇u_n - c_n u_n`.
    pub fn residual(&self, t: f64, x1: f64, x2: f64) -> Result<f64> {
        let st = self.family.state(self.original_time(t)?)?;
        let terms = st.residual_terms(x1, x2)?;
        // ∂_t u_n = -u_t at the reflected time; the remaining terms change sign with it.
        let reversed: Vec<f64> = terms.iter().map(|x| -x).collect();
        Ok(relative_residual(&reversed))
    }

    pub fn norm(&self, t: f64) -> Result<LogScalar> {
        self.family.norm_at(self.original_time(t)?)
    }

    /// `||u_n(0)|| = π√2 e^{-q_{n2}}`.
    pub fn initial_norm(&self) -> Result<LogScalar> {
        self.family.segment_norm(self.n2)
    }
}
