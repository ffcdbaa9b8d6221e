//! `loglip verify ...`: the verification harnesses.

use loglip_core::coefficients::{constant_recipe, MollifierKernel};
use loglip_core::counterexample::{
    build_sequences, index_pairs, norm_datum, Anchor, CounterexampleFamily, SumMode, Transitions,
};
use loglip_core::harness::{
    energy_monotonicity, family_oracle, fit_logbound, inequality_report, EnergyTrace, FamilyWindow, LogBoundFit,
    LogNormPoint, NormSource,
};
use loglip_core::{LogScalar, Precision, QuadratureConfig, WeightParams};
use serde::Serialize;
use serde_json::json;

use super::num;
use crate::config::{EnergyOpts, InequalityOpts, LogboundOpts, OracleOpts, Resolved};
use crate::output::{log_cells, Sink, Table};
use crate::{require, Check, Failure, Outcome, Provenance};

/// Rows of the sequence table behind the default family.
const FAMILY_N_MAX: usize = 1960;

fn family(precision: Precision, last_segment: usize) -> Result<CounterexampleFamily, Failure> {
    let t = build_sequences(FAMILY_N_MAX.max(last_segment + 1), precision)?;
    Ok(CounterexampleFamily::new(t, None)?)
}

fn trace_table(name: &str, tr: &EnergyTrace) -> Table {
    let mut t = Table::new(name, &["t", "l2_log10", "hs_log10", "ln_weight_log10"]);
    let shift = LogScalar::from_ln(tr.reference_ln);
    for i in 0..tr.times.len() {
        let log10 = |x: LogScalar| if x.is_zero() { serde_json::Value::Null } else { num(x.log10_abs()) };
        t.push(vec![
            json!(tr.times[i]),
            log10(tr.l2[i] * shift),
            log10(tr.hs[i] * shift),
            log10(tr.ln_weight[i]),
        ]);
    }
    t
}

#[derive(Clone, Debug, Serialize)]
struct EnergyParams {
    start: usize,
    segments: usize,
    samples: usize,
    gamma: Option<f64>,
}

pub fn energy(g: &Resolved, o: &EnergyOpts) -> Result<Outcome, Failure> {
    let n0 = Transitions.natural_n0();
    let p = EnergyParams {
        start: o.start.unwrap_or(n0),
        segments: o.segments.unwrap_or(5),
        samples: o.samples.unwrap_or(1000),
        gamma: o.gamma,
    };
    require(p.start >= n0, || format!("--start must be at least n0 = {n0}, got {}", p.start))?;
    require(p.segments >= 1, || "--segments must be at least 1".to_string())?;
    require(p.samples >= 2, || format!("--samples must be at least 2, got {}", p.samples))?;
    if let Some(gm) = p.gamma {
        require(gm.is_finite(), || format!("--gamma must be finite, got {gm}"))?;
    }
    let f = family(g.precision.into(), p.start + p.segments)?;
    let cfg = QuadratureConfig::default();
    let mut sink = Sink::new(&g.out, g.format)?;
    let mut checks = Vec::new();
    let mut segments = Vec::new();
    for n in p.start..p.start + p.segments {
        let w = FamilyWindow::new(&f, n, 0.0, 1.0)?;
        let mb = w.measure(33, 32, g.seed.wrapping_add(n as u64))?;
        let gamma0 = mb.gamma0(2);
        let gamma = p.gamma.unwrap_or(gamma0.to_f64());
        let times: Vec<f64> = (0..=p.samples).map(|i| w.horizon() * i as f64 / p.samples as f64).collect();
        let tr = EnergyTrace::sample(&w, &times, None, &cfg)?;
        let rep = energy_monotonicity(&tr, gamma)?;
        sink.table(&trace_table(&format!("energy_trace_{n}"), &tr))?;
        checks.push(Check::new(
            &format!("energy_monotone_segment_{n}"),
            rep.passed(),
            format!(
                "gamma = {gamma:.6e} (measured gamma0 = {gamma0}), {} intervals, {} violations, min log ratio {:.3e}",
                rep.intervals,
                rep.violations.len(),
                rep.min_log_ratio
            ),
        ));
        segments.push(json!({
            "segment": n,
            "horizon": w.horizon(),
            "measured": mb,
            "gamma0": gamma0,
            "gamma": gamma,
            "monotonicity": rep,
        }));
    }
    sink.json(
        "energy_report",
        &json!({
            "provenance": Provenance::new("verify energy", g, &p),
            "segments": segments,
            "checks": checks,
        }),
    )?;
    Ok(Outcome { checks })
}

#[derive(Clone, Debug, Serialize)]
struct InequalityParams {
    segments: Vec<usize>,
    s_start: f64,
    nodes: Vec<usize>,
    grids: Vec<usize>,
    s_points: usize,
    tolerance: f64,
    lambda: Option<f64>,
    beta: Option<f64>,
    tau: Option<f64>,
    gamma: Option<f64>,
}

pub fn inequality(g: &Resolved, o: &InequalityOpts) -> Result<Outcome, Failure> {
    let p = InequalityParams {
        segments: o.segments.clone().unwrap_or_else(|| vec![1, 2, 3]),
        s_start: o.s_start.unwrap_or(0.5),
        nodes: o.nodes.clone().unwrap_or_else(|| vec![32, 64]),
        grids: o.grids.clone().unwrap_or_else(|| vec![64, 128]),
        s_points: o.s_points.unwrap_or(8),
        tolerance: o.tolerance.unwrap_or(0.1),
        lambda: o.lambda,
        beta: o.beta,
        tau: o.tau,
        gamma: o.gamma,
    };
    require(!p.segments.is_empty() && p.segments.iter().all(|&n| n >= 1), || {
        "--segments must list indices >= 1".to_string()
    })?;
    require(p.s_start >= 0.0 && p.s_start < 1.0, || format!("--s-start must lie in [0, 1[, got {}", p.s_start))?;
    require(!p.nodes.is_empty() && p.nodes.iter().all(|&n| n >= 4 && n % 2 == 0), || {
        "--nodes must be even counts >= 4".to_string()
    })?;
    require(!p.grids.is_empty() && p.grids.iter().all(|&n| n >= 8 && n % 2 == 0), || {
        "--grids must be even sizes >= 8".to_string()
    })?;
    require(p.s_points >= 1, || "--s-points must be at least 1".to_string())?;
    require(p.tolerance > 0.0, || "--tolerance must be positive".to_string())?;

    let last = *p.segments.iter().max().expect("non-empty");
    let f = family(g.precision.into(), last)?;
    let kernel = MollifierKernel::new()?;
    let mut sink = Sink::new(&g.out, g.format)?;
    let mut checks = Vec::new();
    let mut reports = Vec::new();
    let mut table = Table::new(
        "inequality",
        &["segment", "grid", "nodes", "s", "lhs_scaled_log10", "rhs_scaled_log10", "m_tilde_sign", "m_tilde_log10"],
    );
    for &n in &p.segments {
        let w = FamilyWindow::new(&f, n, p.s_start, 1.0)?;
        let mb = w.measure(65, 64, g.seed.wrapping_add(n as u64))?;
        let bounds = mb.coefficient_bounds(w.horizon())?;
        let pre = constant_recipe(&bounds, 1e-300, kernel.l1_norm_of_derivative, 2, None)?;
        let tau = p.tau.unwrap_or(pre.sigma / 4.0);
        let rec = constant_recipe(&bounds, tau, kernel.l1_norm_of_derivative, 2, None)?;
        let params = WeightParams::new(
            p.lambda.unwrap_or(rec.lambda_min),
            p.beta.unwrap_or(rec.sigma + rec.tau),
            rec.tau,
            p.gamma.unwrap_or(rec.gamma_min),
            rec.alpha,
        )?;
        let s_grid: Vec<f64> = (1..=p.s_points).map(|i| params.sigma * i as f64 / p.s_points as f64).collect();
        let sources: Vec<FamilyWindow> = p.grids.iter().map(|&gr| w.with_grid(gr)).collect();
        let runs: Vec<(String, Option<usize>, &dyn NormSource)> = p
            .grids
            .iter()
            .zip(&sources)
            .map(|(&gr, s)| (format!("grid{gr}"), Some(gr), s as &dyn NormSource))
            .collect();
        let (rep, fits) = inequality_report(&runs, &params, Some(&rec), &s_grid, &p.nodes)?;
        for (i, fit) in fits.iter().enumerate() {
            let grid = p.grids[i / p.nodes.len()];
            for pt in &fit.points {
                let [ms, ml] = log_cells(pt.m_tilde);
                table.push(vec![
                    json!(n),
                    json!(grid),
                    json!(fit.nodes),
                    json!(pt.s),
                    num(pt.lhs_scaled.log10_abs()),
                    num(pt.rhs_scaled.log10_abs()),
                    ms,
                    ml,
                ]);
            }
        }
        let m = rep.constant("M").unwrap_or(LogScalar::ZERO);
        checks.push(Check::new(
            &format!("inequality_constant_segment_{n}"),
            m.is_finite() && m.sign() >= 0,
            format!("M = {m}"),
        ));
        checks.push(Check::new(
            &format!("inequality_stability_segment_{n}"),
            rep.stable_within(p.tolerance),
            format!("max/min of M psi0^2 across resolutions {:.6}", rep.stability_ratio),
        ));
        reports.push(json!({
            "segment": n,
            "measured": mb,
            "recipe": rec,
            "params": params,
            "fit": rep,
        }));
    }
    sink.table(&table)?;
    sink.json(
        "inequality_report",
        &json!({
            "provenance": Provenance::new("verify inequality", g, &p),
            "segments": reports,
            "checks": checks,
        }),
    )?;
    Ok(Outcome { checks })
}

#[derive(Clone, Debug, Serialize)]
struct LogboundParams {
    k: u32,
    delta: Vec<f64>,
    sigma: f64,
    lambda: Option<f64>,
    tau: Option<f64>,
    alpha: f64,
}

fn logbound_fit(p: &LogboundParams, precision: Precision, weights: Option<&WeightParams>) -> Result<LogBoundFit, Failure> {
    let anchor = Anchor::new(Transitions.natural_n0() as u64, precision)?;
    let mut pts = Vec::new();
    for k in 2..=p.k {
        let mode = if k == 2 { SumMode::Exact } else { SumMode::Asymptotic };
        let pair = index_pairs(k, mode, precision)?;
        pts.push(LogNormPoint::from(&norm_datum(&pair, &anchor, p.sigma)?));
    }
    Ok(fit_logbound(&pts, &p.delta, weights)?)
}

pub fn logbound(g: &Resolved, o: &LogboundOpts) -> Result<Outcome, Failure> {
    let p = LogboundParams {
        k: o.k.unwrap_or(5),
        delta: o.delta.clone().unwrap_or_else(|| vec![0.1, 0.5, 0.9]),
        sigma: o.sigma.unwrap_or(1.0),
        lambda: o.lambda,
        tau: o.tau,
        alpha: o.alpha.unwrap_or(1.0),
    };
    require(p.k >= 2 && p.k <= 8, || format!("--k must lie in [2, 8], got {}", p.k))?;
    require(!p.delta.is_empty() && p.delta.iter().all(|d| *d > 0.0 && *d < 1.0), || {
        format!("every --delta must lie in ]0,1[, got {:?}", p.delta)
    })?;
    require(p.sigma > 0.0 && p.sigma <= 1.0, || format!("--sigma must lie in ]0,1], got {}", p.sigma))?;
    require(p.lambda.is_some() == p.tau.is_some(), || "--lambda and --tau go together".to_string())?;
    let weights = match (p.lambda, p.tau) {
        (Some(lambda), Some(tau)) => {
            let sigma = 1.0 / p.alpha;
            // β = σ + τ and γ = 1 only satisfy the constructor; neither enters the check.
            Some(WeightParams::new(lambda, sigma + tau, tau, 1.0, p.alpha)?)
        }
        _ => None,
    };
    let precision: Precision = g.precision.into();
    let other_precision = match precision {
        Precision::Double => Precision::Extended,
        Precision::Extended => Precision::Double,
    };
    let fit = logbound_fit(&p, precision, weights.as_ref())?;
    let other = logbound_fit(&p, other_precision, None)?;
    let other_label = format!("{other_precision:?}").to_lowercase();

    let mut sink = Sink::new(&g.out, g.format)?;
    let mut checks = Vec::new();
    let mut table = Table::new(
        "logbound",
        &[
            "delta", "datum", "ln_initial_sign", "ln_initial_log10", "holder_ln_m_sign", "holder_ln_m_log10",
            "log_power_ln_m_sign", "log_power_ln_m_log10",
        ],
    );
    let mut fit_reports = Vec::new();
    for &delta in &p.delta {
        let (h, lp) = fit.row(delta).ok_or_else(|| Failure::Runtime(format!("delta {delta} not fitted")))?;
        for (i, pt) in fit.points.iter().enumerate() {
            let mut row = vec![json!(delta), json!(pt.label)];
            row.extend(log_cells(pt.ln_initial));
            row.extend(log_cells(h.ln_m_required[i]));
            row.extend(log_cells(lp.ln_m_required[i]));
            table.push(row);
        }
        checks.push(Check::new(
            &format!("holder_constant_increasing_delta_{delta}"),
            h.strictly_increasing,
            format!(
                "log10 ln M over the data: [{}]",
                h.ln_m_required.iter().map(|v| format!("{:.4}", v.log10_abs())).collect::<Vec<_>>().join(", ")
            ),
        ));
        checks.push(Check::new(
            &format!("log_power_finite_delta_{delta}"),
            lp.finite && lp.n.sign() > 0,
            format!("N = {}, ln M_bar = {}", lp.n, lp.ln_m_bar),
        ));
        let rep = fit.report(delta, &[(other_label.as_str(), &other)])?;
        fit_reports.push(rep);
    }
    for (pt, fe) in fit.points.iter().zip(&fit.feasibility) {
        checks.push(Check::new(
            &format!("feasibility_{}", pt.label.replace('=', "")),
            true,
            format!("beta = {:.6}, {}feasible", fe.beta, if fe.feasible { "" } else { "in" }),
        ));
    }
    sink.table(&table)?;
    sink.json(
        "logbound_report",
        &json!({
            "provenance": Provenance::new("verify logbound", g, &p),
            "fit": fit,
            "reports": fit_reports,
            "weights": weights,
            "checks": checks,
        }),
    )?;
    Ok(Outcome { checks })
}

#[derive(Clone, Debug, Serialize)]
struct OracleParams {
    segment: usize,
    grid: usize,
    steps: usize,
    max_log_decay: f64,
    tolerance: f64,
}

pub fn oracle(g: &Resolved, o: &OracleOpts) -> Result<Outcome, Failure> {
    let p = OracleParams {
        segment: o.segment.unwrap_or(1),
        grid: o.grid.unwrap_or(128),
        steps: o.steps.unwrap_or(200),
        max_log_decay: o.max_log_decay.unwrap_or(12.0),
        tolerance: o.tolerance.unwrap_or(1e-6),
    };
    require(p.segment >= 1, || "--segment must be at least 1".to_string())?;
    require(p.grid >= 8 && p.grid % 2 == 0, || format!("--grid must be an even size >= 8, got {}", p.grid))?;
    require(p.steps >= 1, || "--steps must be at least 1".to_string())?;
    require(p.max_log_decay > 0.0, || "--max-log-decay must be positive".to_string())?;
    require(p.tolerance > 0.0, || "--tolerance must be positive".to_string())?;
    let f = family(g.precision.into(), p.segment)?;
    let rep = family_oracle(&f, p.segment, p.grid, p.steps, p.max_log_decay)?;
    let checks = vec![Check::new(
        "integrator_oracle",
        rep.relative_error <= p.tolerance,
        format!(
            "segment {} on s in [{:.6}, 1], {}^2 grid, {} steps: relative error {:.3e} (tolerance {:.1e}), norm ratio {:.3e}",
            rep.segment, rep.s_start, rep.grid, rep.steps, rep.relative_error, p.tolerance, rep.norm_ratio
        ),
    )];
    let mut sink = Sink::new(&g.out, g.format)?;
    sink.json(
        "oracle_report",
        &json!({
            "provenance": Provenance::new("verify oracle", g, &p),
            "oracle": rep,
            "checks": checks,
        }),
    )?;
    Ok(Outcome { checks })
}
