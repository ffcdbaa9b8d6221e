//! `loglip counterexample`: tables and condition report for the exact family.

use std::f64::consts::TAU;

use loglip_core::counterexample::{
    build_sequences, check_growth_conditions, divergence_ratio, increment_lower_bound, index_pairs, indices,
    norm_datum, Anchor, CounterexampleFamily, SumMode, Transitions,
};
use loglip_core::{Error, Precision};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::num;
use crate::config::{CounterexampleOpts, ModeArg, Resolved};
use crate::output::{log_cells, Sink, Table};
use crate::{require, Check, Failure, Outcome, Provenance};

/// Largest admissible relative PDE residual in the audit.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;

#[derive(Clone, Debug, Serialize)]
struct Params {
    n_max: usize,
    k: u32,
    delta: Vec<f64>,
    sigma: f64,
    mode: ModeArg,
    audit_points: usize,
    audit_segments: usize,
}

fn resolve(o: &CounterexampleOpts) -> Result<Params, Failure> {
    let p = Params {
        n_max: o.n_max.unwrap_or(1960),
        k: o.k.unwrap_or(5),
        delta: o.delta.clone().unwrap_or_else(|| vec![0.1, 0.5, 0.9]),
        sigma: o.sigma.unwrap_or(1.0),
        mode: o.mode.unwrap_or(ModeArg::Auto),
        audit_points: o.audit_points.unwrap_or(1000),
        audit_segments: o.audit_segments.unwrap_or(21),
    };
    require(p.k >= 2, || format!("--k must be at least 2, got {}", p.k))?;
    require(p.k <= 8, || format!("--k above 8 overflows the index range, got {}", p.k))?;
    require(!p.delta.is_empty() && p.delta.iter().all(|d| *d > 0.0 && *d < 1.0), || {
        format!("every --delta must lie in ]0,1[, got {:?}", p.delta)
    })?;
    require(p.sigma > 0.0 && p.sigma <= 1.0, || format!("--sigma must lie in ]0,1], got {}", p.sigma))?;
    require(p.audit_segments >= 1, || "--audit-segments must be at least 1".to_string())?;
    require(p.n_max >= 2, || format!("--n-max must be at least 2, got {}", p.n_max))?;
    Ok(p)
}

fn sum_mode(mode: ModeArg, k: u32) -> Result<SumMode, Failure> {
    Ok(match mode {
        ModeArg::Exact => SumMode::Exact,
        ModeArg::Asymptotic => SumMode::Asymptotic,
        ModeArg::Auto => {
            let ((_, e1), (_, e2)) = indices(k)?;
            if e1.is_some() && e2.is_some() {
                SumMode::Exact
            } else {
                SumMode::Asymptotic
            }
        }
    })
}

pub fn run(g: &Resolved, o: &CounterexampleOpts) -> Result<Outcome, Failure> {
    let p = resolve(o)?;
    let precision: Precision = g.precision.into();
    let mut sink = Sink::new(&g.out, g.format)?;
    let mut checks = Vec::new();

    let table = build_sequences(p.n_max, precision)?;
    let mut seq = Table::new("sequences", &["n", "a", "r", "z", "q", "p"]);
    for row in table.rows() {
        seq.push(vec![json!(row.n), num(row.a), num(row.r), num(row.z), num(row.q), num(row.p)]);
    }
    sink.table(&seq)?;

    // Growth conditions and the audit need segments past n0 even when the
    // exported table is shorter.
    let n0 = Transitions.natural_n0();
    let family_n_max = p.n_max.max(n0 + p.audit_segments + 1);
    let family_table = if family_n_max == p.n_max { table } else { build_sequences(family_n_max, precision)? };
    let growth = check_growth_conditions(&family_table, &Transitions, n0)?;
    checks.push(Check::new(
        "parabolicity",
        growth.parabolicity_holds(),
        format!("sup p/(r z) = {:.6e} <= {:.6e}", growth.parabolicity_sup, growth.parabolicity_limit),
    ));
    checks.push(Check::new(
        "envelope_decay",
        growth.envelopes_decay(),
        format!(
            "{} envelopes decreasing on [{n0}, {family_n_max}]",
            growth.solution_envelope.len() + growth.coefficient_envelope.len()
        ),
    ));

    let family = CounterexampleFamily::new(family_table, None)?;
    let audit = residual_audit(&family, &p, g.seed)?;
    checks.push(Check::new(
        "pde_residual",
        audit.max_residual <= RESIDUAL_TOLERANCE,
        format!(
            "max {:.3e} at {} points over segments {}..{} ({} ill-conditioned skipped)",
            audit.max_residual, audit.points, n0, n0 + p.audit_segments, audit.skipped
        ),
    ));
    checks.push(Check::new(
        "l_range",
        audit.l_min >= 0.5 && audit.l_max <= 1.5,
        format!("l in [{:.6}, {:.6}]", audit.l_min, audit.l_max),
    ));

    let anchor = Anchor::new(n0 as u64, precision)?;
    let mut idx = Table::new(
        "indices",
        &[
            "k", "mode", "n1", "n2", "n1_exact", "n2_exact", "t1", "t2", "gap", "gap_bound",
            "q_increment_sign", "q_increment_log10", "increment_lower_bound_log10",
        ],
    );
    let mut ratios = Table::new("ratios", &["k", "delta", "ratio_sign", "ratio_log10", "rel_bound"]);
    let mut norms = Table::new(
        "norms",
        &[
            "k", "sigma", "ln_initial_sign", "ln_initial_log10", "ln_sup_lower_sign", "ln_sup_lower_log10",
            "ln1p_at_sigma_sign", "ln1p_at_sigma_log10",
        ],
    );
    let mut series: Vec<Vec<loglip_core::LogScalar>> = vec![Vec::new(); p.delta.len()];
    let mut increments_ok = true;
    for k in 2..=p.k {
        let mode = sum_mode(p.mode, k)?;
        let pair = index_pairs(k, mode, precision)?;
        let lb = increment_lower_bound(&pair);
        increments_ok &= pair.q_increment > lb;
        let [qs, ql] = log_cells(pair.q_increment);
        idx.push(vec![
            json!(k),
            json!(mode),
            num(pair.n1),
            num(pair.n2),
            json!(pair.n1_exact),
            json!(pair.n2_exact),
            num(pair.t1),
            num(pair.t2),
            num(pair.gap.value),
            num(pair.gap.bound),
            qs,
            ql,
            num(lb.log10_abs()),
        ]);
        for (i, &delta) in p.delta.iter().enumerate() {
            let r = divergence_ratio(&pair, delta)?;
            series[i].push(r.value);
            let [s, l] = log_cells(r.value);
            ratios.push(vec![json!(k), json!(delta), s, l, num(r.rel_bound)]);
        }
        let d = norm_datum(&pair, &anchor, p.sigma)?;
        let mut row = vec![json!(k), json!(p.sigma)];
        for v in [d.ln_initial, d.ln_sup_lower, d.ln1p_at_sigma] {
            row.extend(log_cells(v));
        }
        norms.push(row);
    }
    sink.table(&idx)?;
    sink.table(&ratios)?;
    sink.table(&norms)?;
    checks.push(Check::new(
        "q_increment_lower_bound",
        increments_ok,
        format!("q_(n2) - q_(n1) above (n1^3/log n1)(n2 - n1) for k = 2..={}", p.k),
    ));
    for (i, &delta) in p.delta.iter().enumerate() {
        let s = &series[i];
        checks.push(Check::new(
            &format!("ratio_increasing_delta_{delta}"),
            s.windows(2).all(|w| w[1] > w[0]),
            format!(
                "log10 ratio over k = 2..={}: [{}]",
                p.k,
                s.iter().map(|v| format!("{:.4}", v.log10_abs())).collect::<Vec<_>>().join(", ")
            ),
        ));
    }

    sink.json(
        "counterexample_report",
        &json!({
            "provenance": Provenance::new("counterexample", g, &p),
            "n0": n0,
            "family_n_max": family_n_max,
            "growth": growth,
            "audit": audit,
            "checks": checks,
        }),
    )?;
    Ok(Outcome { checks })
}

#[derive(Debug, Serialize)]
struct Audit {
    points: usize,
    skipped: usize,
    max_residual: f64,
    worst_point: Option<[f64; 3]>,
    l_min: f64,
    l_max: f64,
}

fn residual_audit(f: &CounterexampleFamily, p: &Params, seed: u64) -> Result<Audit, Failure> {
    let t = f.table();
    let n0 = f.n0();
    let (t0, t1) = (t.a(n0), t.a(n0 + p.audit_segments));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = Audit {
        points: 0,
        skipped: 0,
        max_residual: 0.0,
        worst_point: None,
        l_min: f64::INFINITY,
        l_max: f64::NEG_INFINITY,
    };
    // Ill-conditioned draws are replaced; cap the retries.
    while a.points < p.audit_points && a.skipped <= 10 * p.audit_points + 100 {
        let tt = rng.random_range(t0..t1);
        let (x1, x2) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
        match f.pde_residual(tt, x1, x2) {
            Ok(r) => {
                if !(r <= a.max_residual) {
                    a.max_residual = r;
                    a.worst_point = Some([tt, x1, x2]);
                }
                a.points += 1;
            }
            Err(Error::IllConditioned { .. }) => a.skipped += 1,
            Err(e) => return Err(e.into()),
        }
        let l = f.eval_l(tt)?;
        a.l_min = a.l_min.min(l);
        a.l_max = a.l_max.max(l);
    }
    if a.points < p.audit_points {
        return Err(Failure::Invariant(format!(
            "residual audit: only {} of {} points were well conditioned",
            a.points, p.audit_points
        )));
    }
    Ok(a)
}
