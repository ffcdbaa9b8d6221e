//! `loglip weights`: ψ_λ and Φ_λ on a grid with residual checks.

use loglip_core::weights::{ode_residual, phi, phi_log, psi_ln, scaling_identity_residual, y_min};
use loglip_core::QuadratureConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::num;
use crate::config::{Resolved, WeightsOpts};
use crate::output::{log_cells, Sink, Table};
use crate::{require, Check, Failure, Outcome, Provenance};

/// Scaling-identity residual bound.
const IDENTITY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
struct Params {
    lambda: f64,
    y_min: f64,
    y_max: f64,
    points: usize,
    step: f64,
    levels: usize,
    tolerance: f64,
    identity_samples: usize,
}

fn resolve(o: &WeightsOpts) -> Result<Params, Failure> {
    let p = Params {
        lambda: o.lambda.unwrap_or(2.0),
        y_min: o.y_min.unwrap_or(0.3),
        y_max: o.y_max.unwrap_or(1.0),
        points: o.points.unwrap_or(50),
        step: o.step.unwrap_or(1e-4),
        levels: o.levels.unwrap_or(2),
        tolerance: o.tolerance.unwrap_or(1e-6),
        identity_samples: o.identity_samples.unwrap_or(100),
    };
    require(p.lambda > 1.0 && p.lambda.is_finite(), || format!("--lambda must exceed 1, got {}", p.lambda))?;
    require(p.y_min > 0.0 && p.y_min < p.y_max && p.y_max <= 1.0, || {
        format!("need 0 < y-min < y-max <= 1, got [{}, {}]", p.y_min, p.y_max)
    })?;
    require(p.points >= 2, || format!("--points must be at least 2, got {}", p.points))?;
    require(p.step > 0.0 && p.step < p.y_min, || {
        format!("--step must lie in ]0, y-min[, got {}", p.step)
    })?;
    require(p.levels <= 20, || format!("--levels must be at most 20, got {}", p.levels))?;
    require(p.tolerance > 0.0, || format!("--tolerance must be positive, got {}", p.tolerance))?;
    Ok(p)
}

pub fn run(g: &Resolved, o: &WeightsOpts) -> Result<Outcome, Failure> {
    let p = resolve(o)?;
    let cfg = QuadratureConfig::default();
    let mut sink = Sink::new(&g.out, g.format)?;

    let mut table = Table::new(
        "weights",
        &["y", "psi_log10", "phi", "phi_sign", "phi_log10", "ode_residual_rel"],
    );
    let mut worst = 0.0f64;
    let mut worst_y = p.y_min;
    let mut phi_at_one = None;
    for i in 0..p.points {
        let y = if i + 1 == p.points {
            p.y_max
        } else {
            p.y_min + (p.y_max - p.y_min) * i as f64 / (p.points - 1) as f64
        };
        let psi10 = psi_ln(p.lambda, y)? / std::f64::consts::LN_10;
        let plog = phi_log(p.lambda, y, &cfg)?;
        let pval = if y >= y_min(p.lambda) { Some(phi(p.lambda, y, &cfg)?.value) } else { None };
        if y == 1.0 {
            phi_at_one = pval;
        }
        let res = ode_residual(p.lambda, y, p.step, p.levels, &cfg)?.relative;
        if !(res <= worst) {
            worst = res;
            worst_y = y;
        }
        let [s, l] = log_cells(plog);
        table.push(vec![json!(y), num(psi10), pval.map_or(serde_json::Value::Null, num), s, l, num(res)]);
    }
    sink.table(&table)?;

    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let mut ids = Table::new("identity", &["lambda", "zeta", "y", "residual"]);
    let mut worst_id = 0.0f64;
    for _ in 0..p.identity_samples {
        let lambda = rng.random_range(1.5..10.0);
        let zeta = rng.random_range(1.0..20.0);
        let y = rng.random_range(1e-3..1.0) / zeta;
        let r = scaling_identity_residual(lambda, zeta, y)?;
        worst_id = worst_id.max(r);
        ids.push(vec![json!(lambda), json!(zeta), json!(y), num(r)]);
    }
    sink.table(&ids)?;

    let mut checks = vec![
        Check::new(
            "ode_residual",
            worst <= p.tolerance,
            format!("max relative residual {worst:.3e} at y = {worst_y} (tolerance {:.1e})", p.tolerance),
        ),
        Check::new(
            "scaling_identity",
            worst_id <= IDENTITY_TOLERANCE,
            format!("max residual {worst_id:.3e} over {} samples", p.identity_samples),
        ),
    ];
    if p.y_max == 1.0 {
        checks.push(Check::new(
            "phi_at_one",
            phi_at_one == Some(0.0),
            format!("Phi(1) = {phi_at_one:?}"),
        ));
    }
    sink.json(
        "weights_report",
        &json!({
            "provenance": Provenance::new("weights", g, &p),
            "max_ode_residual": num(worst),
            "max_identity_residual": num(worst_id),
            "checks": checks,
        }),
    )?;
    Ok(Outcome { checks })
}
