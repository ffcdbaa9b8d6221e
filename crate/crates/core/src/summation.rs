//! Compensated accumulation for long series.

use serde::{Deserialize, Serialize};

/// Accumulation mode for long sums.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    /// Neumaier-compensated double precision.
    #[default]
    Double,
    /// Double-double accumulation (about 32 significant digits in the running sum).
    Extended,
}

/// Neumaier's improvement of Kahan summation.
#[derive(Clone, Copy, Debug, Default)]
pub struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi)/2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

impl DoubleDouble {
    pub fn from_f64(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    pub fn add_f64(&mut self, x: f64) {
        let (s, e) = two_sum(self.hi, x);
        let (hi, lo) = quick_two_sum(s, e + self.lo);
        self.hi = hi;
        self.lo = lo;
    }

    pub fn add_dd(&mut self, other: DoubleDouble) {
        let (s, e) = two_sum(self.hi, other.hi);
        let (t, f) = two_sum(self.lo, other.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        self.hi = hi;
        self.lo = lo;
    }

    pub fn value(&self) -> f64 {
        self.hi + self.lo
    }

    pub fn sum(self, other: DoubleDouble) -> DoubleDouble {
        let mut s = self;
        s.add_dd(other);
        s
    }

    pub fn neg(self) -> DoubleDouble {
        DoubleDouble {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn diff(self, other: DoubleDouble) -> DoubleDouble {
        self.sum(other.neg())
    }

    pub fn mul_f64(self, b: f64) -> DoubleDouble {
        let p = self.hi * b;
        let e = self.hi.mul_add(b, -p) + self.lo * b;
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn mul(self, o: DoubleDouble) -> DoubleDouble {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        let (hi, lo) = quick_two_sum(p, e);
        DoubleDouble { hi, lo }
    }

    pub fn div(self, o: DoubleDouble) -> DoubleDouble {
        let q1 = self.hi / o.hi;
        let r = self.diff(o.mul_f64(q1));
        let q2 = r.hi / o.hi;
        let r = r.diff(o.mul_f64(q2));
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        let mut out = DoubleDouble { hi, lo };
        out.add_f64(q3);
        out
    }

    /// Exact multiplication by `2^k`.
    pub fn ldexp(self, k: i32) -> DoubleDouble {
        let f = 2f64.powi(k);
        DoubleDouble {
            hi: self.hi * f,
            lo: self.lo * f,
        }
    }

    pub fn floor(self) -> DoubleDouble {
        let f = self.hi.floor();
        if f == self.hi {
            let mut out = DoubleDouble::from_f64(f);
            out.add_f64(self.lo.floor());
            out
        } else {
            DoubleDouble::from_f64(f)
        }
    }

    /// `exp(x)` to roughly 30 significant digits.
    pub fn exp(self) -> DoubleDouble {
        const LN2: DoubleDouble = DoubleDouble {
            hi: std::f64::consts::LN_2,
            lo: 2.319_046_813_846_299_6e-17,
        };
        const SQUARINGS: i32 = 10;
        let k = (self.hi / LN2.hi).round();
        let r = self.diff(LN2.mul_f64(k)).ldexp(-SQUARINGS);
        let mut term = DoubleDouble::from_f64(1.0);
        let mut total = term;
        for i in 1..=14 {
            term = term.mul(r).div(DoubleDouble::from_f64(f64::from(i)));
            total.add_dd(term);
        }
        for _ in 0..SQUARINGS {
            total = total.mul(total);
        }
        total.ldexp(k as i32)
    }
}

/// A running sum in the requested precision.
#[derive(Clone, Copy, Debug)]
pub enum Accumulator {
    Double(Neumaier),
    Extended(DoubleDouble),
}

impl Accumulator {
    pub fn new(precision: Precision) -> Self {
        match precision {
            Precision::Double => Accumulator::Double(Neumaier::new()),
            Precision::Extended => Accumulator::Extended(DoubleDouble::default()),
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        match self {
            Accumulator::Double(n) => n.add(x),
            Accumulator::Extended(d) => d.add_f64(x),
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Accumulator::Double(n) => n.value(),
            Accumulator::Extended(d) => d.value(),
        }
    }

    /// Running sum as a double-double (exact for the extended mode).
    pub fn as_dd(&self) -> DoubleDouble {
        match self {
            Accumulator::Double(n) => {
                let (hi, lo) = two_sum(n.sum, n.comp);
                DoubleDouble { hi, lo }
            }
            Accumulator::Extended(d) => *d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn harmonic_partial_sum_is_accurate() {
        // Decreasing order on purpose: the naive sum drifts, the compensated one does not.
        let n = 1_000_000u64;
        let mut naive = 0.0f64;
        let mut neu = Neumaier::new();
        let mut dd = DoubleDouble::default();
        for j in 1..=n {
            let x = 1.0 / j as f64;
            naive += x;
            neu.add(x);
            dd.add_f64(x);
        }
        // H_n = ln n + gamma + 1/(2n) - 1/(12 n^2) + 1/(120 n^4)
        let nf = n as f64;
        let exact = nf.ln() + 0.577_215_664_901_532_9 + 0.5 / nf - 1.0 / (12.0 * nf * nf);
        assert!((neu.value() - exact).abs() < 4e-15 * exact);
        assert!((dd.value() - exact).abs() < 4e-15 * exact);
        assert!((naive - exact).abs() > (neu.value() - exact).abs());
    }

    #[test]
    fn double_double_exponential() {
        let e = DoubleDouble::from_f64(1.0).exp();
        assert_eq!(e.hi, std::f64::consts::E);
        assert!((e.lo - 1.445_646_891_729_250_2e-16).abs() < 1e-28, "{:e}", e.lo - 1.445_646_891_729_250_2e-16);
        // exp(e^2) = 1618.177991912653501668691..., from a 60-digit evaluation
        let e2 = DoubleDouble::from_f64(2.0).exp();
        let x = e2.exp();
        assert_eq!(x.floor().value(), 1618.0);
        let frac = x.diff(x.floor()).value();
        assert!((frac - 0.177_991_912_653_501_668_7).abs() < 1e-12);
        let third = DoubleDouble::from_f64(1.0).div(DoubleDouble::from_f64(3.0));
        assert!((third.mul_f64(3.0).value() - 1.0).abs() < 1e-31);
    }

    proptest! {
        #[test]
        fn cancellation_is_exact(xs in proptest::collection::vec(-1e15f64..1e15, 1..50)) {
            for precision in [Precision::Double, Precision::Extended] {
                let mut acc = Accumulator::new(precision);
                for &x in &xs { acc.add(x); acc.add(1.0); }
                for &x in xs.iter().rev() { acc.add(-x); }
                prop_assert!((acc.value() - xs.len() as f64).abs() < 1e-9);
            }
        }
    }
}
