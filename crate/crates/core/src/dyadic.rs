//! Littlewood–Paley analysis on the periodic grids `[0, 2π]^d`, `d ∈ {1, 2}`.
//!
//! Spectra use the unnormalised DFT. For a field with samples `u_j` on `n^d`
//! points, `∫ u² = (2π/n)^d n^{-d} Σ |û_k|²`; every norm below is computed
//! from that identity.

use std::cell::RefCell;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::smooth::smoothstep;

thread_local! {
    static PLANNER: RefCell<(FftPlanner<f64>, HashMap<(usize, bool), Arc<dyn Fft<f64>>>)> =
        RefCell::new((FftPlanner::new(), HashMap::new()));
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| {
        let mut p = p.borrow_mut();
        let (planner, cache) = &mut *p;
        cache
            .entry((n, inverse))
            .or_insert_with(|| {
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

fn transpose(data: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            data.swap(i * n + j, j * n + i);
        }
    }
}

/// In-place unnormalised DFT over `dim` axes of length `n`.
pub(crate) fn fft_in_place(data: &mut [Complex64], dim: usize, n: usize, inverse: bool) {
    let fft = plan(n, inverse);
    fft.process(data);
    if dim == 2 {
        transpose(data, n);
        fft.process(data);
        transpose(data, n);
    }
}

/// Signed frequency of DFT index `k` on `n` points.
#[inline]
pub fn frequency(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// `|ξ|²` at every spectral index, in storage order.
pub fn frequency_squared(dim: usize, n: usize) -> Vec<f64> {
    match dim {
        1 => (0..n).map(|k| frequency(k, n).powi(2)).collect(),
        _ => {
            let mut out = Vec::with_capacity(n * n);
            for k1 in 0..n {
                let f1 = frequency(k1, n).powi(2);
                for k2 in 0..n {
                    out.push(f1 + frequency(k2, n).powi(2));
                }
            }
            out
        }
    }
}

/// A real field on the uniform grid of `[0, 2π]^dim`.
///
/// Two-dimensional samples are stored row-major with `x1` the slow axis:
/// index `i * n + j` holds `u(2πi/n, 2πj/n)`.
#[derive(Clone, Debug)]
pub struct PeriodicField {
    dim: usize,
    n: usize,
    samples: Vec<f64>,
    spectrum: OnceLock<Arc<Vec<Complex64>>>,
}

impl PartialEq for PeriodicField {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.n == other.n && self.samples == other.samples
    }
}

fn check_shape(dim: usize, n: usize) -> Result<()> {
    if dim != 1 && dim != 2 {
        return Err(Error::Grid(format!("dimension must be 1 or 2, got {dim}")));
    }
    if n < 2 || !n.is_power_of_two() {
        return Err(Error::Grid(format!("points per axis must be a power of two >= 2, got {n}")));
    }
    Ok(())
}

impl PeriodicField {
    pub fn new(dim: usize, n: usize, samples: Vec<f64>) -> Result<Self> {
        check_shape(dim, n)?;
        if samples.len() != n.pow(dim as u32) {
            return Err(Error::Grid(format!(
                "expected {} samples, got {}",
                n.pow(dim as u32),
                samples.len()
            )));
        }
        if let Some(i) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!("sample {i} is not finite")));
        }
        Ok(PeriodicField {
            dim,
            n,
            samples,
            spectrum: OnceLock::new(),
        })
    }

    pub fn zeros(dim: usize, n: usize) -> Result<Self> {
        check_shape(dim, n)?;
        Self::new(dim, n, vec![0.0; n.pow(dim as u32)])
    }

    pub fn from_fn_1d<F: Fn(f64) -> f64>(n: usize, f: F) -> Result<Self> {
        check_shape(1, n)?;
        let h = std::f64::consts::TAU / n as f64;
        Self::new(1, n, (0..n).map(|i| f(h * i as f64)).collect())
    }

    pub fn from_fn_2d<F: Fn(f64, f64) -> f64>(n: usize, f: F) -> Result<Self> {
        check_shape(2, n)?;
        let h = std::f64::consts::TAU / n as f64;
        let mut s = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                s.push(f(h * i as f64, h * j as f64));
            }
        }
        Self::new(2, n, s)
    }

    /// Real part of the inverse transform of `spectrum`.
    pub fn from_spectrum(dim: usize, n: usize, mut spectrum: Vec<Complex64>) -> Result<Self> {
        check_shape(dim, n)?;
        let total = n.pow(dim as u32);
        if spectrum.len() != total {
            return Err(Error::Grid(format!("expected {total} coefficients, got {}", spectrum.len())));
        }
        fft_in_place(&mut spectrum, dim, n, true);
        let scale = 1.0 / total as f64;
        Self::new(dim, n, spectrum.iter().map(|c| c.re * scale).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn grid_step(&self) -> f64 {
        std::f64::consts::TAU / self.n as f64
    }

    /// Unnormalised DFT, computed once and cached.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| {
            let mut buf: Vec<Complex64> = self.samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft_in_place(&mut buf, self.dim, self.n, false);
            Arc::new(buf)
        })
    }

    fn same_grid(&self, other: &PeriodicField) -> Result<()> {
        if self.dim != other.dim || self.n != other.n {
            return Err(Error::Grid(format!(
                "fields live on different grids: {}^{} vs {}^{}",
                self.n, self.dim, other.n, other.dim
            )));
        }
        Ok(())
    }

    fn parseval_scale(&self) -> f64 {
        let total = self.samples.len() as f64;
        self.grid_step().powi(self.dim as i32) / total
    }

    /// `Σ m(|ξ|²) |û(ξ)|²`, scaled to an integral over the torus.
    fn weighted_energy<F: Fn(f64) -> f64>(&self, weight: F) -> f64 {
        let xi2 = frequency_squared(self.dim, self.n);
        let spec = self.spectrum();
        let mut acc = crate::summation::Neumaier::new();
        for (c, &x) in spec.iter().zip(&xi2) {
            acc.add(weight(x) * c.norm_sqr());
        }
        acc.value() * self.parseval_scale()
    }

    /// L² norm by the rectangle rule on the grid.
    pub fn l2_norm(&self) -> f64 {
        let mut acc = crate::summation::Neumaier::new();
        for v in &self.samples {
            acc.add(v * v);
        }
        (acc.value() * self.grid_step().powi(self.dim as i32)).sqrt()
    }

    /// L² norm through Parseval.
    pub fn l2_norm_spectral(&self) -> f64 {
        self.weighted_energy(|_| 1.0).sqrt()
    }

    /// `‖∇u‖_{L²}` computed spectrally.
    pub fn gradient_norm(&self) -> f64 {
        self.weighted_energy(|x| x).sqrt()
    }

    /// `(Σ (1+|ξ|²)^s |û|²)^{1/2}` with Parseval normalisation.
    pub fn sobolev_norm(&self, s: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&s) {
            return Err(domain("sobolev_norm", format!("s must lie in [0,1], got {s}")));
        }
        Ok(self.weighted_energy(|x| (1.0 + x).powf(s)).sqrt())
    }

    /// Applies the real Fourier multiplier given at every spectral index.
    pub fn apply_multiplier(&self, m: &[f64]) -> Result<Self> {
        if m.len() != self.samples.len() {
            return Err(Error::Grid("multiplier length does not match the grid".into()));
        }
        let spec: Vec<Complex64> = self.spectrum().iter().zip(m).map(|(c, &w)| c * w).collect();
        Self::from_spectrum(self.dim, self.n, spec)
    }

    pub fn mul(&self, other: &PeriodicField) -> Result<Self> {
        self.same_grid(other)?;
        Self::new(
            self.dim,
            self.n,
            self.samples.iter().zip(&other.samples).map(|(a, b)| a * b).collect(),
        )
    }

    pub fn add(&self, other: &PeriodicField) -> Result<Self> {
        self.same_grid(other)?;
        Self::new(
            self.dim,
            self.n,
            self.samples.iter().zip(&other.samples).map(|(a, b)| a + b).collect(),
        )
    }

    pub fn sub(&self, other: &PeriodicField) -> Result<Self> {
        self.same_grid(other)?;
        Self::new(
            self.dim,
            self.n,
            self.samples.iter().zip(&other.samples).map(|(a, b)| a - b).collect(),
        )
    }

    /// Binary layout: `u64` dim, `u64` points per axis, then the samples as
    /// `f64`, all little-endian, in storage order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        w.write_all(&(self.dim as u64).to_le_bytes()).map_err(io)?;
        w.write_all(&(self.n as u64).to_le_bytes()).map_err(io)?;
        for v in &self.samples {
            w.write_all(&v.to_le_bytes()).map_err(io)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Format(e.to_string());
        let mut b = [0u8; 8];
        r.read_exact(&mut b).map_err(io)?;
        let dim = u64::from_le_bytes(b) as usize;
        r.read_exact(&mut b).map_err(io)?;
        let n = u64::from_le_bytes(b) as usize;
        check_shape(dim, n)?;
        let mut samples = Vec::with_capacity(n.pow(dim as u32));
        for _ in 0..n.pow(dim as u32) {
            r.read_exact(&mut b).map_err(io)?;
            samples.push(f64::from_le_bytes(b));
        }
        Self::new(dim, n, samples)
    }

    /// CSV with header `x,value` (1D) or `x1,x2,value` (2D), one row per grid point.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        let h = self.grid_step();
        if self.dim == 1 {
            wr.write_record(["x", "value"]).map_err(csv_err)?;
            for (i, v) in self.samples.iter().enumerate() {
                wr.write_record([format!("{:e}", h * i as f64), format!("{v:e}")]).map_err(csv_err)?;
            }
        } else {
            wr.write_record(["x1", "x2", "value"]).map_err(csv_err)?;
            for (idx, v) in self.samples.iter().enumerate() {
                let (i, j) = (idx / self.n, idx % self.n);
                wr.write_record([
                    format!("{:e}", h * i as f64),
                    format!("{:e}", h * j as f64),
                    format!("{v:e}"),
                ])
                .map_err(csv_err)?;
            }
        }
        wr.flush().map_err(|e| Error::Format(e.to_string()))
    }

    /// Reads the layout written by [`PeriodicField::write_csv`]; rows must be in storage order.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let csv_err = |e: csv::Error| Error::Format(e.to_string());
        let dim = match rd.headers().map_err(csv_err)?.len() {
            2 => 1,
            3 => 2,
            k => return Err(Error::Format(format!("expected 2 or 3 columns, got {k}"))),
        };
        let mut samples = Vec::new();
        for rec in rd.records() {
            let rec = rec.map_err(csv_err)?;
            let v: f64 = rec[dim]
                .trim()
                .parse()
                .map_err(|e| Error::Format(format!("bad value {:?}: {e}", &rec[dim])))?;
            samples.push(v);
        }
        let n = if dim == 1 {
            samples.len()
        } else {
            (samples.len() as f64).sqrt().round() as usize
        };
        Self::new(dim, n, samples)
    }
}

/// `φ(x)`: 1 for `x <= 1`, 0 for `x >= 2`, smooth and decreasing between.
pub fn phi0(x: f64) -> f64 {
    1.0 - smoothstep(x - 1.0).v
}

/// Shell multiplier `φ_ν(|ξ|)` of a bank with top index `nu_max`.
///
/// The top shell keeps everything above `2^{ν_max - 1}` so the bank sums to
/// one at every grid frequency.
pub fn shell_value(nu: usize, nu_max: usize, xi: f64) -> f64 {
    if nu == 0 {
        return if nu_max == 0 { 1.0 } else { phi0(xi) };
    }
    let lower = phi0(xi / f64::powi(2.0, nu as i32 - 1));
    if nu == nu_max {
        1.0 - lower
    } else {
        phi0(xi / f64::powi(2.0, nu as i32)) - lower
    }
}

/// Dyadic cutoffs `φ_0, ..., φ_{ν_max}` tabulated on a grid.
#[derive(Clone, Debug)]
pub struct CutoffBank {
    dim: usize,
    n: usize,
    nu_max: usize,
    shells: Vec<Vec<f64>>,
}

impl CutoffBank {
    /// `ν_max = log2(n/2) - 1`, so the top shell reaches the Nyquist frequency.
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        check_shape(dim, n)?;
        let nyquist = n / 2;
        if nyquist < 4 {
            return Err(Error::Grid(format!("Nyquist frequency {nyquist} is below 4")));
        }
        let nu_max = nyquist.trailing_zeros() as usize - 1;
        let xi: Vec<f64> = frequency_squared(dim, n).into_iter().map(f64::sqrt).collect();
        let shells = (0..=nu_max)
            .map(|nu| xi.iter().map(|&x| shell_value(nu, nu_max, x)).collect())
            .collect();
        Ok(CutoffBank {
            dim,
            n,
            nu_max,
            shells,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nu_max(&self) -> usize {
        self.nu_max
    }

    /// Multiplier array of shell `nu`.
    pub fn shell(&self, nu: usize) -> &[f64] {
        &self.shells[nu]
    }

    /// `ψ_μ = φ_{μ-1} + φ_μ + φ_{μ+1}`, dropping indices outside the bank.
    pub fn psi_shell(&self, mu: usize) -> Vec<f64> {
        let mut out = self.shells[mu].clone();
        for nb in [mu.checked_sub(1), Some(mu + 1)].into_iter().flatten() {
            if nb <= self.nu_max {
                for (o, v) in out.iter_mut().zip(&self.shells[nb]) {
                    *o += v;
                }
            }
        }
        out
    }

    /// Largest deviation of `Σ_ν φ_ν` from 1 over the grid frequencies.
    pub fn partition_defect(&self) -> f64 {
        (0..self.shells[0].len())
            .map(|i| (self.shells.iter().map(|s| s[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    fn check_field(&self, w: &PeriodicField) -> Result<()> {
        if w.dim != self.dim || w.n != self.n {
            return Err(Error::Grid(format!(
                "bank is built for {}^{}, field is {}^{}",
                self.n, self.dim, w.n, w.dim
            )));
        }
        Ok(())
    }
}

/// The shells `w_ν = φ_ν(D) w`, indexed by `ν`.
#[derive(Clone, Debug)]
pub struct DyadicStack {
    pub shells: Vec<PeriodicField>,
}

impl DyadicStack {
    pub fn reconstruct(&self) -> Result<PeriodicField> {
        let first = &self.shells[0];
        let mut acc = vec![0.0; first.samples.len()];
        for s in &self.shells {
            for (a, v) in acc.iter_mut().zip(&s.samples) {
                *a += v;
            }
        }
        PeriodicField::new(first.dim, first.n, acc)
    }
}

pub fn decompose(w: &PeriodicField, bank: &CutoffBank) -> Result<DyadicStack> {
    bank.check_field(w)?;
    let shells = (0..=bank.nu_max)
        .map(|nu| w.apply_multiplier(bank.shell(nu)))
        .collect::<Result<Vec<_>>>()?;
    Ok(DyadicStack { shells })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BernsteinShell {
    pub nu: usize,
    pub norm: f64,
    pub gradient_norm: f64,
    pub ratio: f64,
    /// `2^{ν-1}`; absent for `ν = 0`.
    pub lower: Option<f64>,
    pub upper: f64,
    pub holds: bool,
}

/// Per-shell check of `2^{ν-1}‖w_ν‖ <= ‖∇w_ν‖ <= 2^{ν+1}‖w_ν‖`; zero shells are skipped.
pub fn bernstein_check(stack: &DyadicStack) -> Vec<BernsteinShell> {
    let mut out = Vec::new();
    for (nu, s) in stack.shells.iter().enumerate() {
        let norm = s.l2_norm_spectral();
        if norm == 0.0 {
            continue;
        }
        let gradient_norm = s.gradient_norm();
        let ratio = gradient_norm / norm;
        let lower = (nu >= 1).then(|| f64::powi(2.0, nu as i32 - 1));
        let upper = f64::powi(2.0, nu as i32 + 1);
        // Relative slack of a few ulps for the ratio of two rounded norms.
        let slack = 1e-12;
        let holds = ratio <= upper * (1.0 + slack) && lower.is_none_or(|l| ratio >= l * (1.0 - slack));
        out.push(BernsteinShell {
            nu,
            norm,
            gradient_norm,
            ratio,
            lower,
            upper,
            holds,
        });
    }
    out
}

/// `‖w‖²_{H^s} / Σ_ν 2^{2sν}‖w_ν‖²`; `None` for the zero field.
pub fn dyadic_norm_ratio(w: &PeriodicField, s: f64, bank: &CutoffBank) -> Result<Option<f64>> {
    let hs = w.sobolev_norm(s)?.powi(2);
    if hs == 0.0 {
        return Ok(None);
    }
    let stack = decompose(w, bank)?;
    let mut acc = crate::summation::Neumaier::new();
    for (nu, sh) in stack.shells.iter().enumerate() {
        acc.add(f64::powf(2.0, 2.0 * s * nu as f64) * sh.l2_norm_spectral().powi(2));
    }
    Ok(Some(hs / acc.value()))
}

/// Empirical equivalence constants over a corpus of fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormEquivalence {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `K` such that `K Σ <= ‖w‖² <= Σ / K` holds for every field of the corpus.
    pub k: f64,
    pub fields_used: usize,
    pub fields_skipped: usize,
}

pub fn dyadic_norm_equivalence(fields: &[PeriodicField], s: f64, bank: &CutoffBank) -> Result<NormEquivalence> {
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    let mut used = 0;
    let mut skipped = 0;
    for w in fields {
        match dyadic_norm_ratio(w, s, bank)? {
            Some(r) => {
                min_ratio = min_ratio.min(r);
                max_ratio = max_ratio.max(r);
                used += 1;
            }
            None => skipped += 1,
        }
    }
    if used == 0 {
        return Err(Error::Data("no nonzero field in the corpus".into()));
    }
    Ok(NormEquivalence {
        min_ratio,
        max_ratio,
        k: min_ratio.min(1.0 / max_ratio),
        fields_used: used,
        fields_skipped: skipped,
    })
}

/// Settings for the randomized operator-norm estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeOptions {
    pub probes: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        ProbeOptions {
            probes: 3,
            iterations: 15,
            seed: 0x5eed,
        }
    }
}

fn apply_raw(dim: usize, n: usize, x: &[f64], m: &[f64]) -> Vec<f64> {
    let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft_in_place(&mut buf, dim, n, false);
    for (c, &w) in buf.iter_mut().zip(m) {
        *c *= w;
    }
    fft_in_place(&mut buf, dim, n, true);
    let scale = 1.0 / x.len() as f64;
    buf.iter().map(|c| c.re * scale).collect()
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Randomized lower estimate of `‖[φ_ν(D), a] R(D)‖_{L(L²)}` for a real multiplier `R`.
///
/// Power iteration on `T*T` from Gaussian starts; the best Rayleigh-type
/// ratio `‖Tx‖/‖x‖` seen is returned.
pub fn commutator_norm_with(
    bank: &CutoffBank,
    nu: usize,
    right: &[f64],
    a: &PeriodicField,
    opts: &ProbeOptions,
) -> Result<f64> {
    bank.check_field(a)?;
    if nu > bank.nu_max {
        return Err(domain("commutator_norm", format!("shell {nu} exceeds nu_max = {}", bank.nu_max)));
    }
    if opts.probes == 0 {
        return Err(domain("commutator_norm", "at least one probe is required"));
    }
    if right.iter().all(|&v| v == 0.0) {
        return Ok(0.0);
    }
    let (dim, n) = (bank.dim, bank.n);
    let phi = bank.shell(nu);
    let av = &a.samples;
    let t_apply = |x: &[f64]| -> Vec<f64> {
        let rx = apply_raw(dim, n, x, right);
        let arx: Vec<f64> = rx.iter().zip(av).map(|(r, a)| r * a).collect();
        let left = apply_raw(dim, n, &arx, phi);
        let prx = apply_raw(dim, n, &rx, phi);
        left.iter().zip(prx.iter().zip(av)).map(|(l, (p, a))| l - a * p).collect()
    };
    let t_adjoint = |y: &[f64]| -> Vec<f64> {
        let py = apply_raw(dim, n, y, phi);
        let ay: Vec<f64> = y.iter().zip(av).map(|(y, a)| y * a).collect();
        let pay = apply_raw(dim, n, &ay, phi);
        let inner: Vec<f64> = py.iter().zip(pay.iter().zip(av)).map(|(p, (q, a))| a * p - q).collect();
        apply_raw(dim, n, &inner, right)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ ((nu as u64) << 32));
    let mut best = 0.0f64;
    for _ in 0..opts.probes {
        let mut x: Vec<f64> = (0..av.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
        for _ in 0..=opts.iterations {
            let nx = norm2(&x);
            if nx == 0.0 {
                break;
            }
            let tx = t_apply(&x);
            best = best.max(norm2(&tx) / nx);
            let next = t_adjoint(&tx);
            let nn = norm2(&next);
            if nn == 0.0 {
                break;
            }
            x = next.into_iter().map(|v| v / nn).collect();
        }
    }
    Ok(best)
}

/// `‖[φ_ν(D), a] φ_μ(D)‖` estimated by [`commutator_norm_with`].
pub fn commutator_norm(
    bank: &CutoffBank,
    nu: usize,
    mu: usize,
    a: &PeriodicField,
    opts: &ProbeOptions,
) -> Result<f64> {
    if mu > bank.nu_max {
        return Err(domain("commutator_norm", format!("shell {mu} exceeds nu_max = {}", bank.nu_max)));
    }
    commutator_norm_with(bank, nu, bank.shell(mu), a, opts)
}

/// Decay law `2^{-2ν}` for `|μ-ν| <= 2`, `2^{-2 max(ν,μ)}` otherwise.
pub fn commutator_law(nu: usize, mu: usize) -> f64 {
    let e = if nu.abs_diff(mu) <= 2 { nu } else { nu.max(mu) };
    f64::powi(2.0, -2 * e as i32)
}

/// Law with first-order decay `2^{-ν}` on the band `|μ-ν| <= 2` and `2^{-2 max(ν,μ)}` off it.
pub fn commutator_law_first_order(nu: usize, mu: usize) -> f64 {
    if nu.abs_diff(mu) <= 2 {
        f64::powi(2.0, -(nu as i32))
    } else {
        commutator_law(nu, mu)
    }
}

/// Measured commutator norms for all shell pairs with the fitted constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorTable {
    pub nu_max: usize,
    /// `norms[ν][μ]`.
    pub norms: Vec<Vec<f64>>,
    /// `max norms[ν][μ] / commutator_law(ν, μ)`.
    pub q_fit: f64,
    /// `max norms[ν][μ] / commutator_law_first_order(ν, μ)`.
    pub q_fit_first_order: f64,
    /// Least-squares slope of `log2 norms[ν][ν]` against `ν` over `ν >= 1`.
    pub diagonal_slope_log2: f64,
}

pub fn commutator_table(bank: &CutoffBank, a: &PeriodicField, opts: &ProbeOptions) -> Result<CommutatorTable> {
    let m = bank.nu_max;
    let mut norms = vec![vec![0.0; m + 1]; m + 1];
    let mut q_fit = 0.0f64;
    let mut q_first = 0.0f64;
    for (nu, row) in norms.iter_mut().enumerate() {
        for (mu, slot) in row.iter_mut().enumerate() {
            *slot = commutator_norm(bank, nu, mu, a, opts)?;
            q_fit = q_fit.max(*slot / commutator_law(nu, mu));
            q_first = q_first.max(*slot / commutator_law_first_order(nu, mu));
        }
    }
    let diag: Vec<(f64, f64)> = (1..=m)
        .filter(|&nu| norms[nu][nu] > 0.0)
        .map(|nu| (nu as f64, norms[nu][nu].log2()))
        .collect();
    Ok(CommutatorTable {
        nu_max: m,
        norms,
        q_fit,
        q_fit_first_order: q_first,
        diagonal_slope_log2: ls_slope(&diag),
    })
}

fn ls_slope(pts: &[(f64, f64)]) -> f64 {
    if pts.len() < 2 {
        return f64::NAN;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Least-squares slope of `log2(norm)` against `max(ν, μ)` for one off-diagonal gap.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySlope {
    pub gap: usize,
    /// True for pairs with `ν > μ`.
    pub nu_above: bool,
    pub slope_log2: f64,
    pub points: usize,
}

pub fn commutator_decay_slopes(table: &CommutatorTable, min_gap: usize, max_lo: usize, max_hi: usize) -> Vec<DecaySlope> {
    let mut out = Vec::new();
    for gap in min_gap..=max_hi {
        for nu_above in [true, false] {
            let mut pts = Vec::new();
            for m in max_lo.max(gap)..=max_hi.min(table.nu_max) {
                let (nu, mu) = if nu_above { (m, m - gap) } else { (m - gap, m) };
                let v = table.norms[nu][mu];
                if v > 0.0 {
                    pts.push((m as f64, v.log2()));
                }
            }
            if pts.len() >= 2 {
                out.push(DecaySlope {
                    gap,
                    nu_above,
                    slope_log2: ls_slope(&pts),
                    points: pts.len(),
                });
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchurSums {
    pub max_row: f64,
    pub max_col: f64,
}

/// Row and column sums of `k_{ν,μ}(t) = 2^{-α(ν-μ)t} 2^ν ‖[φ_ν, a] ψ_μ‖`.
pub fn schur_sums(bank: &CutoffBank, a: &PeriodicField, alpha: f64, t: f64, opts: &ProbeOptions) -> Result<SchurSums> {
    if !(alpha > 0.0) || !(0.0..=1.0 / alpha).contains(&t) {
        return Err(domain("schur_sums", format!("need alpha > 0 and t in [0, 1/alpha], got alpha={alpha}, t={t}")));
    }
    let m = bank.nu_max;
    let psi: Vec<Vec<f64>> = (0..=m).map(|mu| bank.psi_shell(mu)).collect();
    let mut k = vec![vec![0.0; m + 1]; m + 1];
    for (nu, row) in k.iter_mut().enumerate() {
        for (mu, slot) in row.iter_mut().enumerate() {
            let c = commutator_norm_with(bank, nu, &psi[mu], a, opts)?;
            *slot = f64::powf(2.0, -alpha * (nu as f64 - mu as f64) * t) * f64::powi(2.0, nu as i32) * c;
        }
    }
    let max_row = k.iter().map(|r| r.iter().sum::<f64>()).fold(0.0, f64::max);
    let max_col = (0..=m).map(|mu| k.iter().map(|r| r[mu]).sum::<f64>()).fold(0.0, f64::max);
    Ok(SchurSums { max_row, max_col })
}

/// Lacunary test coefficient `Σ_{j=0}^{j_max} 4^{-j} cos(2^j x)`.
///
/// Each dyadic band carries a single spatially spread mode of size
/// `4^{-j}`, so the off-band commutators follow `2^{-2 max(ν,μ)}` without
/// the extra decay a spatially concentrated coefficient would show.
pub fn lacunary_coefficient(n: usize, j_max: u32) -> Result<PeriodicField> {
    PeriodicField::from_fn_1d(n, |x| {
        (0..=j_max as i32).map(|j| 4f64.powi(-j) * (2f64.powi(j) * x).cos()).sum()
    })
}
