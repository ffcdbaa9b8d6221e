//! Signed real numbers stored as `(sign, ln|x|)`.
//!
//! Products become sums of logarithms and sums use the log-sum-exp identity,
//! so quantities such as `exp(-1e35)` keep every digit of their exponent.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

/// Serialized as `{"sign": s, "log10": log10|x|}`, with `log10` null for zero.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(into = "LogScalarRepr", from = "LogScalarRepr")]
pub struct LogScalar {
    sign: i8,
    log_mag: f64,
}

#[derive(Serialize, Deserialize)]
struct LogScalarRepr {
    sign: i8,
    log10: Option<f64>,
}

impl From<LogScalar> for LogScalarRepr {
    fn from(x: LogScalar) -> Self {
        LogScalarRepr {
            sign: x.sign,
            log10: (x.sign != 0).then(|| x.log10_abs()),
        }
    }
}

impl From<LogScalarRepr> for LogScalar {
    fn from(r: LogScalarRepr) -> Self {
        match r.log10 {
            Some(l) => LogScalar::from_parts(r.sign, l * std::f64::consts::LN_10),
            None => LogScalar::ZERO,
        }
    }
}

impl LogScalar {
    pub const ZERO: LogScalar = LogScalar {
        sign: 0,
        log_mag: f64::NEG_INFINITY,
    };
    pub const ONE: LogScalar = LogScalar {
        sign: 1,
        log_mag: 0.0,
    };

    /// The positive number `exp(log_mag)`.
    pub fn from_ln(log_mag: f64) -> Self {
        Self::from_parts(1, log_mag)
    }

    /// The positive number `10^log10_mag`.
    pub fn from_log10(log10_mag: f64) -> Self {
        Self::from_ln(log10_mag * std::f64::consts::LN_10)
    }

    pub fn from_parts(sign: i8, log_mag: f64) -> Self {
        if sign == 0 || log_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogScalar {
            sign: sign.signum(),
            log_mag,
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogScalar {
                sign: if x > 0.0 { 1 } else { -1 },
                log_mag: x.abs().ln(),
            }
        }
    }

    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn ln_abs(&self) -> f64 {
        self.log_mag
    }

    pub fn log10_abs(&self) -> f64 {
        self.log_mag / std::f64::consts::LN_10
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// True when the value is zero by construction or has a finite exponent.
    pub fn is_finite(&self) -> bool {
        self.sign == 0 || self.log_mag.is_finite()
    }

    pub fn to_f64(&self) -> f64 {
        f64::from(self.sign) * self.log_mag.exp()
    }

    pub fn abs(&self) -> Self {
        Self::from_parts(self.sign.abs(), self.log_mag)
    }

    pub fn recip(&self) -> Self {
        assert!(self.sign != 0, "reciprocal of zero LogScalar");
        LogScalar {
            sign: self.sign,
            log_mag: -self.log_mag,
        }
    }

    /// `|x|^p` carrying the sign of `x` only for `p == 1`; intended for positive values.
    pub fn powf(&self, p: f64) -> Self {
        if self.sign == 0 {
            return if p == 0.0 { Self::ONE } else { Self::ZERO };
        }
        debug_assert!(self.sign > 0, "powf of a negative LogScalar");
        Self::from_ln(self.log_mag * p)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn scale_ln(&self, delta: f64) -> Self {
        Self::from_parts(self.sign, self.log_mag + delta)
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }
}

/// `ln(e^a + e^b)` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(e^a - e^b)` for `a >= b`.
pub fn log_sub_exp(a: f64, b: f64) -> f64 {
    debug_assert!(a >= b);
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a == b {
        return f64::NEG_INFINITY;
    }
    a + (-(b - a).exp_m1()).ln()
}

/// `ln(sum exp(x_i))` over a slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY || m.is_infinite() {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl Add for LogScalar {
    type Output = LogScalar;
    fn add(self, rhs: LogScalar) -> LogScalar {
        if self.sign == 0 {
            return rhs;
        }
        if rhs.sign == 0 {
            return self;
        }
        if self.sign == rhs.sign {
            return LogScalar {
                sign: self.sign,
                log_mag: log_add_exp(self.log_mag, rhs.log_mag),
            };
        }
        match self.log_mag.partial_cmp(&rhs.log_mag) {
            Some(Ordering::Greater) => {
                LogScalar::from_parts(self.sign, log_sub_exp(self.log_mag, rhs.log_mag))
            }
            Some(Ordering::Less) => {
                LogScalar::from_parts(rhs.sign, log_sub_exp(rhs.log_mag, self.log_mag))
            }
            _ => LogScalar::ZERO,
        }
    }
}

impl Neg for LogScalar {
    type Output = LogScalar;
    fn neg(self) -> LogScalar {
        LogScalar::from_parts(-self.sign, self.log_mag)
    }
}

impl Sub for LogScalar {
    type Output = LogScalar;
    fn sub(self, rhs: LogScalar) -> LogScalar {
        self + (-rhs)
    }
}

impl Mul for LogScalar {
    type Output = LogScalar;
    fn mul(self, rhs: LogScalar) -> LogScalar {
        if self.sign == 0 || rhs.sign == 0 {
            return LogScalar::ZERO;
        }
        LogScalar {
            sign: self.sign * rhs.sign,
            log_mag: self.log_mag + rhs.log_mag,
        }
    }
}

impl Mul<f64> for LogScalar {
    type Output = LogScalar;
    fn mul(self, rhs: f64) -> LogScalar {
        self * LogScalar::from_f64(rhs)
    }
}

impl Div for LogScalar {
    type Output = LogScalar;
    fn div(self, rhs: LogScalar) -> LogScalar {
        self * rhs.recip()
    }
}

impl PartialEq for LogScalar {
    fn eq(&self, other: &Self) -> bool {
        self.sign == other.sign && (self.sign == 0 || self.log_mag == other.log_mag)
    }
}

impl PartialOrd for LogScalar {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => match self.sign {
                0 => Some(Ordering::Equal),
                1 => self.log_mag.partial_cmp(&other.log_mag),
                _ => other.log_mag.partial_cmp(&self.log_mag),
            },
            ord => Some(ord),
        }
    }
}

impl Sum for LogScalar {
    fn sum<I: Iterator<Item = LogScalar>>(iter: I) -> LogScalar {
        iter.fold(LogScalar::ZERO, |acc, x| acc + x)
    }
}

impl From<f64> for LogScalar {
    fn from(x: f64) -> Self {
        LogScalar::from_f64(x)
    }
}

impl fmt::Display for LogScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => {
                let sign = if s < 0 { "-" } else { "" };
                let e = self.log10_abs();
                if e.abs() < 1e12 {
                    write!(f, "{sign}10^{e:.12}")
                } else {
                    write!(f, "{sign}10^({e:.12e})")
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tiny_values_survive() {
        let a = LogScalar::from_ln(-1e35);
        let b = LogScalar::from_ln(-1e35 + 1.0);
        let s = a + b;
        assert!(s.is_finite());
        assert!((s.ln_abs() - (-1e35 + (1.0f64).exp().ln_1p())).abs() <= 1e20);
        assert_eq!((a * b).ln_abs(), -2e35);
    }

    #[test]
    fn cancellation_gives_exact_zero() {
        let a = LogScalar::from_f64(3.5);
        assert!((a - a).is_zero());
    }

    #[test]
    fn log_sum_exp_matches_direct() {
        let xs = [0.1f64, -2.0, 3.0];
        let direct = xs.iter().map(|x| x.exp()).sum::<f64>().ln();
        assert!((log_sum_exp(&xs) - direct).abs() < 1e-14);
    }

    proptest! {
        #[test]
        fn arithmetic_matches_f64(a in -1e6f64..1e6, b in -1e6f64..1e6) {
            let la = LogScalar::from_f64(a);
            let lb = LogScalar::from_f64(b);
            let scale = a.abs().max(b.abs()).max(1e-300);
            prop_assert!(((la + lb).to_f64() - (a + b)).abs() <= 1e-12 * scale);
            prop_assert!(((la - lb).to_f64() - (a - b)).abs() <= 1e-12 * scale);
            prop_assert!(((la * lb).to_f64() - a * b).abs() <= 1e-12 * (a * b).abs().max(1e-300));
            prop_assert_eq!(la.partial_cmp(&lb), a.partial_cmp(&b));
        }

        #[test]
        fn addition_commutes_in_log_domain(x in -1e30f64..1e30, y in -1e30f64..1e30) {
            let a = LogScalar::from_ln(x);
            let b = LogScalar::from_ln(y);
            prop_assert_eq!((a + b).ln_abs(), (b + a).ln_abs());
            prop_assert!((a + b).ln_abs() >= x.max(y));
        }
    }
}
