//! Adaptive Gauss–Kronrod (7/15) and composite Simpson quadrature.

use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-15,
            rel_tol: 1e-13,
            max_subdivisions: 2000,
        }
    }
}

impl QuadratureConfig {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        if !(abs_tol > 0.0 && rel_tol > 0.0) {
            return Err(domain("QuadratureConfig", "tolerances must be positive"));
        }
        if max_subdivisions < 1 {
            return Err(domain("QuadratureConfig", "max_subdivisions must be >= 1"));
        }
        Ok(QuadratureConfig {
            abs_tol,
            rel_tol,
            max_subdivisions,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub subdivisions: usize,
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
// Gauss weights for the nodes XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(PartialEq)]
struct Piece {
    err: f64,
    a: f64,
    b: f64,
    val: f64,
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Adaptive bisection driven by the largest local error estimate.
pub fn integrate<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    cfg: &QuadratureConfig,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            subdivisions: 0,
        });
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("integrate", "interval endpoints must be finite"));
    }
    let (v, e) = gk15(&mut f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Piece { err: e, a, b, val: v });
    let mut total = v;
    let mut total_err = e;
    let mut subdivisions = 1;
    loop {
        let tol = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= tol {
            break;
        }
        if subdivisions >= cfg.max_subdivisions {
            return Err(Error::Quadrature {
                a,
                b,
                estimate: total,
                error: total_err,
                subdivisions,
            });
        }
        let worst = heap.pop().expect("heap never empties");
        if worst.err == 0.0 {
            heap.push(worst);
            break;
        }
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            // Interval exhausted at machine resolution; keep its estimate.
            heap.push(Piece {
                err: 0.0,
                ..worst
            });
            total_err -= worst.err;
            continue;
        }
        let (v1, e1) = gk15(&mut f, worst.a, mid);
        let (v2, e2) = gk15(&mut f, mid, worst.b);
        total += v1 + v2 - worst.val;
        total_err += e1 + e2 - worst.err;
        heap.push(Piece {
            err: e1,
            a: worst.a,
            b: mid,
            val: v1,
        });
        heap.push(Piece {
            err: e2,
            a: mid,
            b: worst.b,
            val: v2,
        });
        subdivisions += 1;
    }
    // Re-sum to shed the drift of the incremental updates.
    let mut acc = crate::summation::Neumaier::new();
    let mut err = 0.0;
    for p in heap.iter() {
        acc.add(p.val);
        err += p.err;
    }
    Ok(QuadResult {
        value: acc.value(),
        error: err,
        subdivisions,
    })
}

/// Composite Simpson rule with `intervals` (even, >= 2) panels.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, intervals: usize) -> Result<f64> {
    if intervals < 2 || intervals % 2 != 0 {
        return Err(domain("simpson", "interval count must be even and >= 2"));
    }
    let h = (b - a) / intervals as f64;
    let mut acc = crate::summation::Neumaier::new();
    acc.add(f(a));
    acc.add(f(b));
    for i in 1..intervals {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc.add(w * f(a + h * i as f64));
    }
    Ok(acc.value() * h / 3.0)
}

/// Composite Simpson weights for `intervals` panels of width `h`.
pub fn simpson_weights(intervals: usize, h: f64) -> Vec<f64> {
    (0..=intervals)
        .map(|i| {
            let w = if i == 0 || i == intervals {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}
