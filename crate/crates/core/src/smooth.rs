//! C-infinity transition profiles built from the glued exponential `exp(-1/x)`.

/// `exp(-1/x)` for `x > 0`, zero otherwise.
pub fn glued_exp(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Value and first two derivatives of a scalar profile.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Jet {
    pub v: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, d1: 0.0, d2: 0.0 }
    }

    pub fn scale(self, c: f64) -> Self {
        Jet {
            v: c * self.v,
            d1: c * self.d1,
            d2: c * self.d2,
        }
    }

    pub fn add(self, o: Jet) -> Self {
        Jet {
            v: self.v + o.v,
            d1: self.d1 + o.d1,
            d2: self.d2 + o.d2,
        }
    }

    pub fn mul(self, o: Jet) -> Self {
        Jet {
            v: self.v * o.v,
            d1: self.d1 * o.v + self.v * o.d1,
            d2: self.d2 * o.v + 2.0 * self.d1 * o.d1 + self.v * o.d2,
        }
    }

    /// `1 - self`.
    pub fn complement(self) -> Self {
        Jet {
            v: 1.0 - self.v,
            d1: -self.d1,
            d2: -self.d2,
        }
    }
}

/// The smoothstep `e(x) / (e(x) + e(1-x))` with its first two derivatives.
///
/// Written as the logistic function of `h(x) = 1/x - 1/(1-x)` so that neither
/// tail underflows into `0/0`.
pub fn smoothstep(x: f64) -> Jet {
    if x <= 0.0 {
        return Jet::constant(0.0);
    }
    if x >= 1.0 {
        return Jet::constant(1.0);
    }
    let y = 1.0 - x;
    let h = 1.0 / x - 1.0 / y;
    let h1 = -1.0 / (x * x) - 1.0 / (y * y);
    let h2 = 2.0 / (x * x * x) - 2.0 / (y * y * y);
    let s = if h > 0.0 {
        let e = (-h).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + h.exp())
    };
    let c = (0.5 * h).cosh();
    let s1m = 1.0 / (4.0 * c * c);
    let d1 = -s1m * h1;
    let d2 = -(d1 * (1.0 - 2.0 * s) * h1 + s1m * h2);
    if !d1.is_finite() || !d2.is_finite() {
        return Jet::constant(s);
    }
    Jet { v: s, d1, d2 }
}

/// Smoothstep rising from 0 at `x0` to 1 at `x1`.
pub fn ramp(x: f64, x0: f64, x1: f64) -> Jet {
    let w = x1 - x0;
    let j = smoothstep((x - x0) / w);
    Jet {
        v: j.v,
        d1: j.d1 / w,
        d2: j.d2 / (w * w),
    }
}

/// Maximum slope of [`smoothstep`], attained at the midpoint.
pub const SMOOTHSTEP_MAX_SLOPE: f64 = 2.0;
