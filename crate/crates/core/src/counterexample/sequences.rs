//! The sequences `a_n`, `r_n`, `z_n`, `q_n`, `p_n`, tabulated and as long partial sums.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::logscalar::LogScalar;
use crate::special::{ei, ln_ei};
use crate::summation::{Accumulator, DoubleDouble, Precision};

/// Index up to which the asymptotic mode sums directly.
pub const HEAD_INDEX: u64 = 1000;

/// Largest number of terms a single direct summation will take on.
pub const DIRECT_LIMIT: u64 = 1 << 30;

const CHUNK: u64 = 1 << 22;

/// `r_n = 1/((n+1) log(n+1))`.
pub fn r_of(n: f64) -> f64 {
    let m = n + 1.0;
    1.0 / (m * m.ln())
}

/// `z_n = n^4`.
pub fn z_of(n: f64) -> f64 {
    let n2 = n * n;
    n2 * n2
}

/// `p_n = (z_{n+1} - z_n) r_n`, with the difference expanded to avoid cancellation.
pub fn p_of(n: f64) -> f64 {
    let dz = ((4.0 * n + 6.0) * n + 4.0) * n + 1.0;
    dz * r_of(n)
}

/// Tabulated sequences for segments `1..=n_max` (values stored through `n_max + 1`).
#[derive(Clone, Debug)]
pub struct SequenceTable {
    n_max: usize,
    precision: Precision,
    a: Vec<f64>,
    a_lo: Vec<f64>,
    q: Vec<f64>,
}

/// One exported table row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceRow {
    pub n: usize,
    pub a: f64,
    pub r: f64,
    pub z: f64,
    pub q: f64,
    pub p: f64,
}

impl SequenceTable {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    fn check(&self, n: usize, upto: usize) {
        assert!(n >= 1 && n <= upto, "index {n} outside the table [1, {upto}]");
    }

    /// `a_n` for `1 <= n <= n_max + 1`.
    pub fn a(&self, n: usize) -> f64 {
        self.check(n, self.n_max + 1);
        self.a[n]
    }

    /// `a_n` as a double-double.
    pub fn a_dd(&self, n: usize) -> DoubleDouble {
        self.check(n, self.n_max + 1);
        DoubleDouble {
            hi: self.a[n],
            lo: self.a_lo[n],
        }
    }

    pub fn r(&self, n: usize) -> f64 {
        self.check(n, self.n_max + 1);
        r_of(n as f64)
    }

    pub fn z(&self, n: usize) -> f64 {
        z_of(n as f64)
    }

    /// `sqrt(z_n) = n^2`, the integer frequency of `v_n` and `w_n`.
    pub fn frequency(&self, n: usize) -> u64 {
        (n as u64) * (n as u64)
    }

    /// `q_n` for `1 <= n <= n_max + 1`.
    pub fn q(&self, n: usize) -> f64 {
        self.check(n, self.n_max + 1);
        self.q[n]
    }

    pub fn p(&self, n: usize) -> f64 {
        self.check(n, self.n_max);
        p_of(n as f64)
    }

    pub fn row(&self, n: usize) -> SequenceRow {
        SequenceRow {
            n,
            a: self.a(n),
            r: self.r(n),
            z: self.z(n),
            q: self.q(n),
            p: self.p(n),
        }
    }

    pub fn rows(&self) -> impl Iterator<Item = SequenceRow> + '_ {
        (1..=self.n_max).map(|n| self.row(n))
    }

    /// Segment index `n` with `a_n <= t < a_{n+1}`; `None` outside `[a_1, a_{n_max+1}]`.
    pub fn segment_of(&self, t: f64) -> Option<usize> {
        if !(t >= self.a[1] && t <= self.a[self.n_max + 1]) {
            return None;
        }
        let idx = self.a[1..=self.n_max + 1].partition_point(|&x| x <= t);
        Some(idx.clamp(1, self.n_max))
    }
}

fn invariant(name: &str, n: usize) -> Error {
    Error::Invariant {
        name: name.to_string(),
        location: format!("n = {n}"),
    }
}

/// Builds the table through `n_max`, checking monotonicity of `a` and `z`,
/// `r_n < 1` and `p_n > 1` at every index.
pub fn build_sequences(n_max: usize, precision: Precision) -> Result<SequenceTable> {
    if n_max < 3 {
        return Err(domain("build_sequences", format!("n_max must be >= 3, got {n_max}")));
    }
    let len = n_max + 2;
    let mut a = vec![f64::NAN; len];
    let mut a_lo = vec![0.0; len];
    let mut q = vec![f64::NAN; len];
    let mut acc_a = Accumulator::new(precision);
    let mut acc_q = Accumulator::new(precision);
    a[1] = 0.0;
    q[1] = 0.0;
    for n in 1..=n_max {
        let r = r_of(n as f64);
        if !(r < 1.0 && r > 0.0) {
            return Err(invariant("r_n in (0, 1)", n));
        }
        if !(p_of(n as f64) > 1.0) {
            return Err(invariant("p_n > 1", n));
        }
        if z_of((n + 1) as f64) <= z_of(n as f64) {
            return Err(invariant("z_n strictly increasing", n));
        }
        acc_a.add(r);
        let m = (n + 1) as f64;
        acc_q.add(m * m * m / m.ln());
        let dd = acc_a.as_dd();
        a[n + 1] = dd.hi;
        a_lo[n + 1] = dd.lo;
        q[n + 1] = acc_q.value();
        if a[n + 1] <= a[n] {
            return Err(invariant("a_n strictly increasing", n + 1));
        }
    }
    Ok(SequenceTable {
        n_max,
        precision,
        a,
        a_lo,
        q,
    })
}

/// `(sum 1/(j log j), sum j^3/log j)` over `from < j <= to`, summed directly.
///
/// Terms are grouped into fixed chunks, summed in parallel and combined in
/// index order, so the result does not depend on the thread count.
pub fn direct_sums(from: u64, to: u64, precision: Precision) -> Result<(DoubleDouble, DoubleDouble)> {
    if from < 1 || to < from {
        return Err(domain("direct_sums", format!("need 1 <= from <= to, got ({from}, {to})")));
    }
    if to - from > DIRECT_LIMIT {
        return Err(domain(
            "direct_sums",
            format!("{} terms exceed the direct-summation limit {DIRECT_LIMIT}", to - from),
        ));
    }
    let chunks = (to - from).div_ceil(CHUNK);
    let parts: Vec<(DoubleDouble, DoubleDouble)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = from + 1 + c * CHUNK;
            let hi = (lo + CHUNK - 1).min(to);
            let mut sa = Accumulator::new(precision);
            let mut sq = Accumulator::new(precision);
            for j in lo..=hi {
                let x = j as f64;
                let l = x.ln();
                sa.add(1.0 / (x * l));
                sq.add(x * x * x / l);
            }
            (sa.as_dd(), sq.as_dd())
        })
        .collect();
    let mut a = DoubleDouble::default();
    let mut q = DoubleDouble::default();
    for (pa, pq) in parts {
        a.add_dd(pa);
        q.add_dd(pq);
    }
    Ok((a, q))
}

/// A sum value with an absolute error bound.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bounded {
    pub value: f64,
    pub bound: f64,
}

fn f0(x: f64) -> f64 {
    1.0 / (x * x.ln())
}

fn f1(x: f64) -> f64 {
    let l = x.ln();
    -(l + 1.0) / (x * x * l * l)
}

fn f3(x: f64) -> f64 {
    let l = x.ln();
    -(((6.0 * l + 11.0) * l + 12.0) * l + 6.0) / (z_of(x) * z_of(l))
}

fn g0(x: f64) -> f64 {
    x * x * x / x.ln()
}

fn g1(x: f64) -> f64 {
    let l = x.ln();
    x * x * (3.0 / l - 1.0 / (l * l))
}

fn g3(x: f64) -> f64 {
    let u = 1.0 / x.ln();
    (((-6.0 * u + 12.0) * u - 11.0) * u + 6.0) * u
}

/// `sum_{n0 < j <= n} 1/(j log j)` by Euler–Maclaurin through the fourth-order term.
///
/// The fourth derivative of the summand keeps one sign, so the remainder is
/// bounded by `|f'''(n) - f'''(n0)|/720`; the bound also carries a rounding allowance.
pub fn tail_a(n0: f64, n: f64) -> Result<Bounded> {
    if !(n0 >= 8.0 && n >= n0 && n.is_finite()) {
        return Err(domain("tail_a", format!("need 8 <= n0 <= n, got ({n0}, {n})")));
    }
    let l0 = n0.ln();
    let integral = ((n / n0).ln() / l0).ln_1p();
    let df3 = f3(n) - f3(n0);
    let value = integral + 0.5 * (f0(n) - f0(n0)) + (f1(n) - f1(n0)) / 12.0 - df3 / 720.0;
    let bound = df3.abs() / 720.0 + 8.0 * f64::EPSILON * (value.abs() + f0(n0));
    Ok(Bounded { value, bound })
}

/// `q_n` extended from a known `q_{n0}` by Euler–Maclaurin, exact in the exponent.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QValue {
    /// `q_n` as a double when it fits.
    pub value: Option<f64>,
    pub log: LogScalar,
    /// Relative error bound (remainder plus rounding).
    pub rel_bound: f64,
}

/// `q_n = q_{n0} + sum_{n0 < j <= n} j^3/log j`, the tail integral being `Ei(4 log x)`.
pub fn extend_q(n0: f64, q0: f64, n: f64) -> Result<QValue> {
    if !(n0 >= 8.0 && n >= n0 && n.is_finite()) {
        return Err(domain("extend_q", format!("need 8 <= n0 <= n, got ({n0}, {n})")));
    }
    let x = 4.0 * n.ln();
    let x0 = 4.0 * n0.ln();
    let constant = q0 - ei(x0)? - 0.5 * g0(n0) - g1(n0) / 12.0 + g3(n0) / 720.0;
    let terms = [constant, 0.5 * g0(n), g1(n) / 12.0, -g3(n) / 720.0];
    let ln_i = ln_ei(x)?;
    let rounding = 8.0 * f64::EPSILON * (x + 8.0);
    let em = (g3(n) - g3(n0)).abs() / 720.0;
    if ln_i < 700.0 {
        let value = ei(x)? + terms.iter().sum::<f64>();
        let rel_bound = (em + 4.0 * f64::EPSILON * constant.abs()) / value + rounding;
        return Ok(QValue {
            value: Some(value),
            log: LogScalar::from_f64(value),
            rel_bound,
        });
    }
    let rel: f64 = terms
        .iter()
        .filter(|t| **t != 0.0)
        .map(|t| t.signum() * (t.abs().ln() - ln_i).exp())
        .sum();
    let log = LogScalar::from_ln(ln_i + rel.ln_1p());
    let rel_bound = (em.ln() - log.ln_abs()).exp() + rounding;
    Ok(QValue {
        value: None,
        log,
        rel_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_index_values() {
        let t = build_sequences(10, Precision::Double).unwrap();
        let a2 = 1.0 / (2.0 * 2f64.ln());
        assert_eq!(t.a(1), 0.0);
        assert!((t.a(2) - a2).abs() < 1e-16);
        assert!((t.q(2) - 16.0 * a2).abs() < 1e-14);
        assert!((t.p(1) - 15.0 * a2).abs() < 1e-14);
        assert_eq!(t.frequency(7), 49);
        assert_eq!(t.segment_of(t.a(3)), Some(3));
        assert_eq!(t.segment_of(0.5 * (t.a(3) + t.a(4))), Some(3));
        assert_eq!(t.segment_of(-1.0), None);
    }

    #[test]
    fn q_recursion_matches_definition() {
        let t = build_sequences(50, Precision::Extended).unwrap();
        for n in 2..=50 {
            let step = t.z(n) * t.r(n - 1);
            assert!((t.q(n) - t.q(n - 1) - step).abs() <= 1e-12 * t.q(n));
        }
    }

    #[test]
    fn tail_matches_direct_sum() {
        let (a, q) = direct_sums(1000, 20_000, Precision::Extended).unwrap();
        let ta = tail_a(1000.0, 20_000.0).unwrap();
        assert!((ta.value - a.value()).abs() <= ta.bound, "{} vs {}", ta.value, a.value());
        let (ha, hq) = direct_sums(1, 1000, Precision::Extended).unwrap();
        assert!(ha.value() > 0.0);
        let qe = extend_q(1000.0, hq.value(), 20_000.0).unwrap();
        let total = hq.value() + q.value();
        let v = qe.value.unwrap();
        assert!((v - total).abs() <= qe.rel_bound * total, "{v} vs {total}");
    }

    #[test]
    fn huge_index_stays_finite_in_log_form() {
        let q = extend_q(1000.0, 3.768_036_713_575_523_7e10, 5.3e78).unwrap();
        assert!(q.value.is_none());
        // 40-digit value of ln(q0 + Ei(4 ln n) - Ei(4 ln n0) + (f(n) - f(n0))/2), f(x) = x^3/ln x
        assert!((q.log.ln_abs() - 718.492_479_949_009_8).abs() < 1e-9);
    }
}
