//! Property tests for the weight, dyadic and coefficient invariants.

use loglip_core::coefficients::{constant_recipe, loglip_constant, CoefficientBounds, TimeSeries};
use loglip_core::dyadic::{bernstein_check, decompose, frequency_squared, CutoffBank, PeriodicField};
use loglip_core::weights::{ode_residual, phi, psi_f64, theta};
use loglip_core::{QuadratureConfig, WeightParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn random_field(dim: usize, n: usize, seed: u64) -> PeriodicField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = if dim == 1 { n } else { n * n };
    PeriodicField::new(dim, n, (0..len).map(|_| rng.sample(StandardNormal)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn reconstruction_and_parseval(seed in any::<u64>(), two_d in any::<bool>(), log_n in 4usize..8) {
        let (dim, n) = if two_d { (2, 1 << (log_n - 1)) } else { (1, 1 << (log_n + 2)) };
        let w = random_field(dim, n, seed);
        let bank = CutoffBank::new(dim, n).unwrap();
        let back = decompose(&w, &bank).unwrap().reconstruct().unwrap();
        let norm = w.l2_norm();
        prop_assert!(back.sub(&w).unwrap().l2_norm() <= 1e-12 * norm);
        prop_assert!((w.l2_norm_spectral() / norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn bernstein_holds_on_every_shell(seed in any::<u64>(), two_d in any::<bool>()) {
        let (dim, n) = if two_d { (2, 32) } else { (1, 256) };
        let bank = CutoffBank::new(dim, n).unwrap();
        let stack = decompose(&random_field(dim, n, seed), &bank).unwrap();
        for sh in bernstein_check(&stack) {
            prop_assert!(sh.holds, "shell {}: ratio {}", sh.nu, sh.ratio);
        }
    }

    #[test]
    fn loglip_constant_grows_under_refinement(
        seed in any::<u64>(),
        count in 3usize..40,
        extra in 1usize..40,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = |t: f64| {
            let d = (t - 0.37).abs();
            if d == 0.0 { 0.0 } else { d * (1.0 + d.ln().abs()) }
        };
        let mut t: Vec<f64> = (0..count).map(|i| i as f64 / count as f64).collect();
        let coarse = TimeSeries::new(t.clone(), t.iter().map(|&x| f(x)).collect()).unwrap();
        for _ in 0..extra {
            t.push(rng.random_range(0.0..1.0));
        }
        t.sort_by(f64::total_cmp);
        t.dedup();
        let fine = TimeSeries::new(t.clone(), t.iter().map(|&x| f(x)).collect()).unwrap();
        prop_assert!(loglip_constant(&fine).unwrap() >= loglip_constant(&coarse).unwrap());
    }

    #[test]
    fn alpha_times_sigma_is_one(alpha in 1e-3f64..1e6) {
        let p = WeightParams::new(3.0, 2.0 / alpha, 0.25 / alpha, 1.0, alpha).unwrap();
        prop_assert_eq!(p.alpha * p.sigma, 1.0);
        prop_assert!((p.alpha / alpha - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn doubling_b_quadruples_the_b_term(b in 0.1f64..50.0, k in 0.05f64..1.0, a_ll in 0.0f64..5.0) {
        let rec = |b: f64, a_ll: f64| {
            let bounds = CoefficientBounds::new(a_ll, 1.0, b, 1.0, k, 10.0).unwrap();
            constant_recipe(&bounds, 1e-300, 2.0, 2, None).unwrap()
        };
        // without A_LL the whole α₁ is the 32nB² term
        prop_assert_eq!(rec(2.0 * b, 0.0).alpha1, 4.0 * rec(b, 0.0).alpha1);
        let jump = rec(2.0 * b, a_ll).alpha1 - rec(b, a_ll).alpha1;
        let want = 16.0 / (k * std::f64::consts::LN_2) * 32.0 * 2.0 * 3.0 * b * b;
        prop_assert!((jump / want - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn shells_vanish_outside_their_annulus() {
    for (dim, n) in [(1, 512), (2, 64)] {
        let bank = CutoffBank::new(dim, n).unwrap();
        let xi: Vec<f64> = frequency_squared(dim, n).into_iter().map(f64::sqrt).collect();
        for nu in 1..bank.nu_max() {
            let (lo, hi) = (f64::powi(2.0, nu as i32 - 1), f64::powi(2.0, nu as i32 + 1));
            for (i, &x) in xi.iter().enumerate() {
                if x < lo || x > hi {
                    assert_eq!(bank.shell(nu)[i], 0.0, "shell {nu} at |xi| = {x}");
                }
            }
        }
        assert!(bank.partition_defect() <= 1e-15);
    }
}

#[test]
fn theta_is_increasing() {
    let taus: Vec<f64> = (0..200).map(|i| 1.0 + 0.5 * i as f64).collect();
    let vals: Vec<f64> = taus.iter().map(|&t| theta(t).unwrap()).collect();
    assert!(vals.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn phi_derivative_is_psi_at_second_order() {
    let cfg = QuadratureConfig::default();
    for lambda in [2.0, 3.0] {
        for y in [0.45, 0.6, 0.8, 0.95] {
            let err = |h: f64| {
                let d = (phi(lambda, y + h, &cfg).unwrap().value - phi(lambda, y - h, &cfg).unwrap().value) / (2.0 * h);
                (d - psi_f64(lambda, y).unwrap()).abs()
            };
            let order = (err(1e-2) / err(5e-3)).log2();
            assert!(order >= 1.9, "lambda {lambda}, y {y}: order {order}");
        }
    }
}

#[test]
fn ode_residual_vanishes_under_refinement() {
    let cfg = QuadratureConfig::default();
    for lambda in [2.0, 3.0, 5.0] {
        for y in [0.3, 0.5, 0.8, 1.0] {
            let r: Vec<f64> = [4e-3, 2e-3, 1e-3, 5e-4]
                .iter()
                .map(|&h| ode_residual(lambda, y, h, 0, &cfg).unwrap().relative)
                .collect();
            assert!(r.windows(2).all(|w| w[1] < w[0]), "lambda {lambda}, y {y}: {r:?}");
            assert!(r[3] < r[0] / 10.0, "lambda {lambda}, y {y}: {r:?}");
        }
    }
}
