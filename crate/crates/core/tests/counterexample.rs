use std::f64::consts::{PI, SQRT_2, TAU};

use loglip_core::counterexample::*;
use loglip_core::dyadic::PeriodicField;
use loglip_core::{Error, Precision};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

// Partial sums from a 40-digit direct summation (mpmath).
const ORACLE: [(usize, f64, f64); 3] = [
    (1000, 2.727_395_747_972_476_8, 37_680_367_135.755_237),
    (1620, 2.794_872_689_526_471, 241_760_018_487.869_98),
    (1922, 2.817_732_585_365_777_3, 467_686_160_606.943_3),
];

fn family() -> &'static CounterexampleFamily {
    static F: OnceLock<CounterexampleFamily> = OnceLock::new();
    F.get_or_init(|| {
        let t = build_sequences(1960, Precision::Extended).unwrap();
        CounterexampleFamily::new(t, None).unwrap()
    })
}

#[test]
fn sequence_examples_and_oracle() {
    let t = build_sequences(2000, Precision::Extended).unwrap();
    let a2 = 1.0 / (2.0 * 2f64.ln());
    assert!((t.a(2) - 0.721_35).abs() < 1e-5);
    assert!((t.q(2) - 11.542).abs() < 1e-3);
    assert!((t.p(1) - 10.82).abs() < 1e-2 && t.p(1) > 1.0);
    assert!((t.q(2) - 16.0 * a2).abs() < 1e-14);
    for (n, a, q) in ORACLE {
        assert!((t.a(n) - a).abs() < 2e-15 * a, "a_{n}");
        assert!((t.q(n) - q).abs() < 2e-15 * q, "q_{n}");
    }
    for n in 1..2000 {
        assert!(t.q(n + 1) > t.q(n));
        assert!(t.r(n) < 1.0 && t.p(n) > 1.0);
    }
    assert!(build_sequences(2, Precision::Double).is_err());
}

#[test]
fn double_and_extended_accumulation_agree() {
    let d = build_sequences(5000, Precision::Double).unwrap();
    let e = build_sequences(5000, Precision::Extended).unwrap();
    assert!((d.q(5000) - e.q(5000)).abs() <= 1e-15 * e.q(5000));
    assert!((d.a(5000) - e.a(5000)).abs() <= 1e-15);
}

#[test]
fn transition_plateaus_ranges_and_smoothness() {
    let tr = Transitions;
    for &s in &[-1.0, 0.0, 0.1, 0.2] {
        assert_eq!(tr.a(s).v, 1.0);
    }
    for &s in &[0.25, 0.5, 2.0] {
        assert_eq!(tr.a(s).v, 0.0);
    }
    for &s in &[-0.3, 0.0, 1.0, 1.5] {
        assert_eq!(tr.b(s).v, 0.0);
    }
    for &s in &[1.0 / 6.0, 0.3, 0.5] {
        assert_eq!(tr.b(s).v, 1.0);
    }
    for &s in &[0.0, 0.25] {
        assert_eq!(tr.c(s).v, 0.0);
    }
    for &s in &[1.0 / 3.0, 0.9, 3.0] {
        assert_eq!(tr.c(s).v, 1.0);
    }
    for &s in &[0.0, 1.0 / 6.0, 0.5, 0.8] {
        assert_eq!(tr.j(s).v, -2.0);
    }
    for &s in &[0.2, 0.25, 1.0 / 3.0] {
        assert_eq!(tr.j(s).v, 2.0);
    }
    let mut jmax: f64 = 0.0;
    for i in 0..=200_000 {
        let s = -0.1 + 1.2 * i as f64 / 200_000.0;
        for (v, lo, hi) in [(tr.a(s).v, 0.0, 1.0), (tr.b(s).v, 0.0, 1.0), (tr.c(s).v, 0.0, 1.0), (tr.j(s).v, -2.0, 2.0)] {
            assert!(v >= lo && v <= hi);
        }
        jmax = jmax.max(tr.j(s).d1.abs());
    }
    assert!((jmax - tr.j_prime_sup()).abs() < 1e-6 * tr.j_prime_sup());
    assert!((tr.j_prime_sup() - 240.0).abs() < 1e-9);
    // First and second derivatives are continuous across every edge.
    let edges = [0.0, 1.0 / 6.0, 0.2, 0.25, 1.0 / 3.0, 0.5, 1.0];
    for &e in &edges {
        for f in [|s| Transitions.a(s), |s| Transitions.b(s), |s| Transitions.c(s), |s| Transitions.j(s)] {
            let (l, r) = (f(e - 1e-9), f(e + 1e-9));
            assert!((l.d1 - r.d1).abs() < 1e-6 && (l.d2 - r.d2).abs() < 1e-6);
        }
    }
}

#[test]
fn start_index_from_realized_profiles() {
    let tr = Transitions;
    let n0 = tr.natural_n0();
    assert_eq!(n0, 1922);
    let limit = 0.5 / tr.j_prime_sup();
    assert!(parabolicity_ratio(n0 as f64) <= limit);
    assert!(parabolicity_ratio((n0 - 1) as f64) > limit);
    // ratio is (1 + 1/n)^4 - 1
    let n = 37.0f64;
    assert!((parabolicity_ratio(n) - ((1.0 + 1.0 / n).powi(4) - 1.0)).abs() < 1e-15);
    let t = build_sequences(2000, Precision::Double).unwrap();
    match CounterexampleFamily::new(t.clone(), Some(100)) {
        Err(Error::Invariant { location, .. }) => assert!(location.contains("1922")),
        other => panic!("expected rejection, got {other:?}"),
    }
    assert!(CounterexampleFamily::new(t, Some(1999)).is_err());
}

#[test]
fn growth_report() {
    let f = family();
    let rep = check_growth_conditions(f.table(), f.transitions(), f.n0()).unwrap();
    assert!(rep.parabolicity_holds());
    assert!(rep.envelopes_decay(), "{rep:?}");
    assert!(rep.log_lipschitz_sup.is_finite());
    assert_eq!(rep.solution_envelope.len(), 27);
    let t = f.table();
    let n = 10;
    let v = -t.q(n) + 2.0 * t.p(n) + t.z(n + 1).ln() + t.p(n).ln() - t.r(n).ln();
    let w = -t.q(n + 1) + 2.0 * t.p(n + 1) + t.z(n + 2).ln() + t.p(n + 1).ln() - t.r(n + 1).ln();
    assert!(v < 0.0 && w < v);
    assert!(check_growth_conditions(f.table(), f.transitions(), 10).is_err());
}

#[test]
fn solution_at_segment_starts() {
    let f = family();
    let t = f.table();
    for n in [1922, 1930, 1950] {
        for &(x1, x2) in &[(0.3, 1.7), (2.0, 5.5)] {
            let v = f.eval_solution(t.a(n), x1, x2).unwrap();
            // a_n is not representable; the rounded time sits s r_n off the start
            let st = f.state(t.a(n)).unwrap();
            assert!(st.s.abs() < 1e-11);
            let expected = -t.q(n) - t.z(n) * st.s * t.r(n);
            assert!((v.log_factor - expected).abs() <= 2e-15 * t.q(n));
            let k = (n * n) as f64;
            assert!((v.remainder - (k * x1).cos()).abs() < 1e-6);
            // limit from the previous segment
            let prev = f.slice(n - 1, t.a(n)).unwrap();
            let fp = prev.fields(&prev.trig(x1, x2));
            let lhs = LogScalar::from_f64(fp.u).scale_ln(prev.frame());
            let rhs = v.value();
            assert!((lhs.ln_abs() - rhs.ln_abs()).abs() < 1e-3, "{lhs} vs {rhs}");
            assert_eq!(lhs.sign(), rhs.sign());
        }
    }
}

use loglip_core::LogScalar;

#[test]
fn mid_segment_reduces_to_w() {
    let f = family();
    let t = f.table();
    let n = 1925;
    let tt = t.a(n) + 0.25 * t.r(n);
    let st = f.state(tt).unwrap();
    let w = st.mode_weights();
    assert!(w[0].abs() < 1e-300 && w[2].abs() < 1e-300);
    assert_eq!(f.transitions().j(0.25).v, 2.0);
    assert!((f.eval_l(tt).unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn l_values() {
    let f = family();
    let t = f.table();
    assert_eq!(f.eval_l(t.a(1) - 3.0).unwrap(), 1.0);
    assert_eq!(f.eval_l(t.a(f.n0()) - 1e-3).unwrap(), 1.0);
    let limit = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let n = rng.random_range(f.n0()..=t.n_max());
        let s: f64 = rng.random();
        let l = f.eval_l(t.a(n) + s * t.r(n)).unwrap();
        assert!((0.5..=1.5).contains(&l));
        assert!((l - 1.0).abs() <= f.transitions().j_prime_sup() * parabolicity_ratio(n as f64));
        assert!((l - 1.0).abs() <= limit);
    }
    assert!(f.eval_l(f.t_max() + 1.0).is_err());
}

#[test]
fn lower_order_vanishes_where_the_operator_does() {
    let f = family();
    let t = f.table();
    let n0 = f.n0();
    let lo = f.eval_lower_order(t.a(n0) - 0.01, 0.4, 0.9).unwrap();
    assert!(lo.b1.is_zero() && lo.b2.is_zero() && lo.c.is_zero());
    // A, B, C and J all on plateaus
    let lo = f.eval_lower_order(t.a(n0 + 3) + 0.4 * t.r(n0 + 3), 0.4, 0.9).unwrap();
    assert!(lo.b1.is_zero() && lo.b2.is_zero() && lo.c.is_zero());
    let lo = f.eval_lower_order(t.a(n0 + 3) + 0.7 * t.r(n0 + 3), 0.4, 0.9).unwrap();
    assert!(!lo.c.is_zero() && lo.c.ln_abs() < -1e5);
}

#[test]
fn envelope_of_lower_order_terms_decreases() {
    let f = family();
    let t = f.table();
    let mut prev = LogScalar::from_ln(f64::MAX);
    for n in f.n0()..f.n0() + 15 {
        let mut sup = LogScalar::ZERO;
        for i in 0..60 {
            let s = (i as f64 + 0.5) / 60.0;
            for &(x1, x2) in &[(0.3, 0.8), (1.9, 4.4), (5.1, 2.6)] {
                let lo = f.eval_lower_order(t.a(n) + s * t.r(n), x1, x2).unwrap();
                sup = sup.max(lo.b1.abs()).max(lo.b2.abs()).max(lo.c.abs());
            }
        }
        assert!(sup.is_finite() && sup < prev, "n = {n}: {sup} vs {prev}");
        prev = sup;
    }
}

#[test]
fn residual_symmetry_and_periodicity() {
    let f = family();
    let t = f.table();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let n = rng.random_range(f.n0()..f.n0() + 20);
        let tt = t.a(n) + rng.random::<f64>() * t.r(n);
        let (x1, x2) = (rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
        let r = f.pde_residual(tt, x1, x2).unwrap();
        let m = f.pde_residual(tt, TAU - x1, x2).unwrap();
        assert!(r <= 1e-10 && m <= 1e-10);
        let u = f.eval_solution(tt, x1, x2).unwrap();
        let um = f.eval_solution(tt, -x1, x2).unwrap();
        assert_eq!(u.remainder, um.remainder);
        // shifting by a period moves the argument by 2π n², which costs
        // n² ulps of 2π in the phase
        let up = f.eval_solution(tt, x1 + TAU, x2 + TAU).unwrap();
        let tol = 1e-15 * ((n + 1) * (n + 1)) as f64 * 16.0;
        assert!((u.remainder - up.remainder).abs() <= tol);
    }
}

#[test]
fn segment_norms_and_interior_norms_match_grid_quadrature() {
    let f = family();
    let t = f.table();
    for n in 1922..1927 {
        let closed = f.segment_norm(n).unwrap();
        assert!((closed.ln_abs() - ((PI * SQRT_2).ln() - t.q(n))).abs() < 1e-15 * t.q(n));
        for s in [0.0, 0.22, 0.3, 0.75] {
            let st = f.state(t.a(n) + s * t.r(n)).unwrap();
            let field = PeriodicField::from_fn_2d(256, |x1, x2| st.fields(&st.trig(x1, x2)).u).unwrap();
            let grid = LogScalar::from_f64(field.l2_norm()).scale_ln(st.frame());
            let exact = LogScalar::from_ln(st.ln_l2_norm());
            let rel = (grid.ln_abs() - exact.ln_abs()).exp_m1().abs();
            assert!(rel <= 1e-10, "n = {n}, s = {s}: {rel:e}");
        }
    }
    assert!(f.segment_norm(5).is_err());
}

#[test]
fn index_arithmetic_matches_extended_oracle() {
    // 60-digit evaluation: exp(e^2) = 1618.1779..., exp(e^{5/2}) = 195339.42...,
    // exp(e^3) = 528491311.485..., exp(e^{10/3}) = 1492725701441.0898...
    let (x1, x2) = index_arguments(2).unwrap();
    assert!((x1.value() - 1_618.177_991_912_653_5).abs() < 1e-11);
    assert!((x2.value() - 195_339.424_080_318_73).abs() < 1e-9);
    let ((n1, e1), (n2, e2)) = indices(2).unwrap();
    assert_eq!((e1, e2), (Some(1620), Some(195_340)));
    assert_eq!((n1, n2), (1620.0, 195_340.0));
    let (x1, x2) = index_arguments(3).unwrap();
    assert!((x1.value() - 528_491_311.485_494_2).abs() < 1e-6);
    let frac = x2.diff(x2.floor()).value();
    assert!((frac - 0.089_877_295_903_108_53).abs() < 1e-9);
    let ((_, e1), (_, e2)) = indices(3).unwrap();
    assert_eq!((e1, e2), (Some(528_491_313), Some(1_492_725_701_442)));
    let ((n1, e1), _) = indices(4).unwrap();
    assert!(e1.is_none());
    assert!((n1 / 5.148_435_562_634_572e23 - 1.0).abs() < 1e-15);
    assert!(indices(1).is_err());
    assert!(index_pairs(1, SumMode::Asymptotic, Precision::Double).is_err());
    assert!(index_pairs(4, SumMode::Exact, Precision::Double).is_err());
}

#[test]
fn exact_pair_for_k2() {
    let p = index_pairs(2, SumMode::Exact, Precision::Extended).unwrap();
    assert!((p.t1 - 2.794_872_689_526_471).abs() < 1e-15);
    assert!((p.t2 - 3.294_679_097_571_675_4).abs() < 1e-15);
    assert!((p.gap.value - 0.499_806_408_045_204_36).abs() < 1e-16);
    assert!(p.gap.value <= 0.5 && p.gap.value <= p.gap_integral + p.gap.bound);
    assert!(p.gap_integral <= 0.5);
    let q2 = p.q2.value.unwrap();
    assert!((q2 / 3.051_948_377_967_389_7e19 - 1.0).abs() < 1e-15);
    // q2 - q1 against the direct lower bound (n1^3/log n1)(n2 - n1)
    // stored as a logarithm near 44.9, so one ulp there is 7e-15 relative
    let inc = p.q_increment.to_f64();
    assert!((inc / 3.051_948_353_791_387_8e19 - 1.0).abs() < 1e-14);
    let lb = increment_lower_bound(&p);
    assert!((lb.to_f64() / 111_445_978_986_967.48 - 1.0).abs() < 1e-13);
    assert!(p.q_increment > lb);
}

#[test]
fn asymptotic_mode_matches_direct_sums() {
    // q_n and a_n at n = 10^5 and 195340 both ways.
    let (ha, hq) = direct_sums(1, HEAD_INDEX, Precision::Extended).unwrap();
    for n in [100_000u64, 195_340] {
        let (a, q) = direct_sums(1, n, Precision::Extended).unwrap();
        let ta = tail_a(HEAD_INDEX as f64, n as f64).unwrap();
        let qa = extend_q(HEAD_INDEX as f64, hq.value(), n as f64).unwrap();
        let a_asym = ha.value() + ta.value;
        assert!((a_asym - a.value()).abs() <= ta.bound + 4.0 * f64::EPSILON * a.value());
        let qv = qa.value.unwrap();
        assert!((qv - q.value()).abs() <= qa.rel_bound * q.value(), "n = {n}");
        assert!(qa.rel_bound < 1e-12);
    }
    let pe = index_pairs(2, SumMode::Exact, Precision::Extended).unwrap();
    let pa = index_pairs(2, SumMode::Asymptotic, Precision::Extended).unwrap();
    assert!((pe.t2 - pa.t2).abs() <= pe.t_bound + pa.t_bound);
    let q_e = pe.q2.value.unwrap();
    assert!((pa.q2.value.unwrap() - q_e).abs() <= pa.q2.rel_bound * q_e);
}

#[test]
fn asymptotic_pairs_against_oracle() {
    // log q_{n2,k} from a 60-digit Euler-Maclaurin evaluation
    let cases = [(4u32, 213.010_916_554_808_8, 274.788_940_358_704_5), (5, 587.268_030_813_036, 718.504_055_145_067)];
    for (k, l1, l2) in cases {
        let p = index_pairs(k, SumMode::Asymptotic, Precision::Extended).unwrap();
        assert!((p.q1.log.ln_abs() - l1).abs() < 1e-12 * l1);
        assert!((p.q2.log.ln_abs() - l2).abs() < 1e-12 * l2);
        assert!(p.gap.value <= 1.0 / f64::from(k) + p.gap.bound);
    }
}

#[test]
fn divergence_ratio_grows_in_asymptotic_mode() {
    let pairs: Vec<IndexPair> = (2..=5)
        .map(|k| index_pairs(k, SumMode::Asymptotic, Precision::Extended).unwrap())
        .collect();
    for delta in [0.1, 0.5, 0.9] {
        let r: Vec<RatioValue> = pairs.iter().map(|p| divergence_ratio(p, delta).unwrap()).collect();
        for w in r.windows(2) {
            assert!(w[1].value > w[0].value);
        }
        assert!(r[0].value.sign() > 0);
    }
    // delta -> 1: the ratio approaches q2 - q1
    let p = &pairs[0];
    let near = divergence_ratio(p, 1.0 - 1e-12).unwrap().value;
    assert!((near.ln_abs() - p.q_increment.ln_abs()).abs() < 1e-9);
    assert!(divergence_ratio(p, 1.0).is_err());
    assert!(divergence_ratio(p, 0.0).is_err());
}

#[test]
fn reversed_member_k2() {
    let table = build_sequences(195_400, Precision::Extended).unwrap();
    let fam = CounterexampleFamily::new(table, None).unwrap();
    let m = reversed_family(&fam, 2).unwrap();
    assert_eq!((m.n1, m.n2), (1620, 195_340));
    assert!(m.t_n > 0.0 && m.t_n < 1.0);
    assert!((m.t_n - 0.499_806_408_045_204_36).abs() < 1e-15);
    let init = m.initial_norm().unwrap();
    assert!((init.ln_abs() - (ln_unit_norm() - fam.table().q(195_340))).abs() < 1.0);
    // t2 rounds to f64; z_{n2} times that offset is a few 1e5 in the log
    let direct = m.norm(0.0).unwrap();
    assert!((direct.ln_abs() - init.ln_abs()).abs() <= 1e-13 * init.ln_abs().abs());
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut checked = 0;
    for _ in 0..300 {
        let t: f64 = rng.random::<f64>() * m.t_n;
        let (x1, x2) = (rng.random::<f64>() * TAU, rng.random::<f64>() * TAU);
        match m.residual(t, x1, x2) {
            Ok(r) => {
                assert!(r <= 1e-10, "t = {t}: {r:e}");
                checked += 1;
            }
            Err(Error::IllConditioned { .. }) => {}
            Err(e) => panic!("{e}"),
        }
        let l = m.l(t).unwrap();
        assert!((0.5..=1.5).contains(&l));
    }
    assert!(checked > 290);
    // the norm at t_n dominates any power of the initial norm
    let at_tn = m.norm(m.t_n).unwrap();
    assert!(at_tn.ln_abs() - 0.5 * init.ln_abs() > 1e19);
    assert!(m.u(1.5, 0.0, 0.0).is_err());
    assert!(reversed_family(&fam, 3).is_err());
}

#[test]
fn norm_data_along_k() {
    let anchor = Anchor::new(1922, Precision::Extended).unwrap();
    let mut prev: Option<NormDatum> = None;
    for k in 2..=5 {
        let mode = if k == 2 { SumMode::Exact } else { SumMode::Asymptotic };
        let p = index_pairs(k, mode, Precision::Extended).unwrap();
        let d = norm_datum(&p, &anchor, 1.0).unwrap();
        assert!(d.ln_initial.sign() < 0 && d.ln_sup_lower.sign() < 0);
        assert!(d.ln_sup_lower > d.ln_initial);
        if let Some(q) = prev {
            assert!(d.ln_initial < q.ln_initial);
        }
        if k == 2 {
            // n_{1,2} = 1620 precedes n0, so u(t1) = v_{n0}(t1) and its norm
            // exceeds the closed form π√2 e^{-q_{1620}}
            assert!(d.ln_sup_lower.to_f64() > ln_unit_norm() - 241_760_018_487.87);
            assert!(d.ln1p_at_sigma.to_f64() > 1e12);
        } else {
            assert!(d.ln1p_at_sigma.ln_abs() < -1e9);
        }
        prev = Some(d);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]
    #[test]
    fn residual_is_roundoff_everywhere(off in 0usize..20, s in 0.0f64..1.0, x1 in 0.0f64..TAU, x2 in 0.0f64..TAU) {
        let f = family();
        let t = f.table();
        let n = f.n0() + off;
        match f.pde_residual(t.a(n) + s * t.r(n), x1, x2) {
            Ok(r) => prop_assert!(r <= 1e-10),
            Err(Error::IllConditioned { .. }) => {}
            Err(e) => prop_assert!(false, "{}", e),
        }
    }

    #[test]
    fn log_norms_decrease_in_time(off in 0usize..20, s in 0.0f64..0.99) {
        let f = family();
        let t = f.table();
        let n = f.n0() + off;
        let a = f.norm_at(t.a(n) + s * t.r(n)).unwrap();
        let b = f.norm_at(t.a(n) + (s + 0.01) * t.r(n)).unwrap();
        prop_assert!(b < a);
    }
}
