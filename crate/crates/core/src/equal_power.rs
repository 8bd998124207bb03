//! Equal-marginal-power alpha splitting.
//!
//! Requiring one shared sample size for all endpoints at a common power fixes
//! the split up to a single degree of freedom: the z-values lie on the line
//! `z_alpha(lambda) = lambda * v + v0` with `v = r` and
//! `v0_i = (r_i - 1) z_beta`. The family-wise constraint
//! `g(lambda) = sum_i Φ(z_alpha_i(lambda)) - alpha = 0` then picks the point.
//! Since every `v_i > 0`, `g` is strictly increasing and has exactly one root,
//! found by Newton's method with a bisection fallback.

use serde::Serialize;

use crate::design::{relative_effects, AlphaSplit, DesignResult, DesignSpec};
use crate::power::PowerRule;
use crate::roots::{newton_bisect, RootReport};
use crate::stats::normal::{cdf, pdf, quantile};
use crate::{Error, Result};

const LAMBDA_LIMIT: f64 = 50.0;
const RESIDUAL_TOL: f64 = 1e-14;
const MAX_ITER: usize = 100;

/// A point on the equal-power line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineParam {
    pub lambda: f64,
    pub v: Vec<f64>,
    pub v0: Vec<f64>,
}

impl LineParam {
    pub fn new(r: &[f64], beta: f64, lambda: f64) -> Self {
        let z_beta = quantile(beta);
        LineParam { lambda, v: r.to_vec(), v0: r.iter().map(|ri| (ri - 1.0) * z_beta).collect() }
    }

    pub fn z_alpha(&self) -> Vec<f64> {
        self.v.iter().zip(&self.v0).map(|(vi, v0i)| self.lambda * vi + v0i).collect()
    }
}

/// The solved split together with solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualPowerSolution {
    pub line: LineParam,
    pub split: AlphaSplit,
    pub report: RootReport,
}

fn validate(r: &[f64], alpha: f64, beta: f64) -> Result<()> {
    if r.is_empty() {
        return Err(Error::domain("need at least one relative effect"));
    }
    if let Some(bad) = r.iter().find(|ri| !(**ri > 0.0 && ri.is_finite())) {
        return Err(Error::domain(format!("relative effects must be positive, got {bad}")));
    }
    if (r[0] - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!("the reference effect r_1 must be 1, got {}", r[0])));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::domain(format!("alpha must be in (0, 1), got {alpha}")));
    }
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::domain(format!("beta must be in (0, 1), got {beta}")));
    }
    Ok(())
}

/// Constraint `g(lambda)` and its derivative `sum_i v_i φ(z_alpha_i)`.
fn constraint(r: &[f64], v0: &[f64], alpha: f64, lambda: f64) -> (f64, f64) {
    let mut g = -alpha;
    let mut dg = 0.0;
    for (vi, v0i) in r.iter().zip(v0) {
        let z = lambda * vi + v0i;
        g += cdf(z);
        dg += vi * pdf(z);
    }
    (g, dg)
}

/// A bracket `lambda_lo < lambda_hi` across which `g` changes sign.
pub fn bracket_root(r: &[f64], alpha: f64, beta: f64) -> Result<(f64, f64)> {
    validate(r, alpha, beta)?;
    let line = LineParam::new(r, beta, 0.0);
    let g = |l: f64| constraint(r, &line.v0, alpha, l).0;
    let start = quantile(alpha / r.len() as f64).clamp(-LAMBDA_LIMIT, LAMBDA_LIMIT);
    let g0 = g(start);
    if g0 == 0.0 {
        return Ok((start - 1e-6, start + 1e-6));
    }
    let dir = if g0 < 0.0 { 1.0 } else { -1.0 };
    let mut prev = start;
    let mut step = 0.5;
    loop {
        let next = (prev + dir * step).clamp(-LAMBDA_LIMIT, LAMBDA_LIMIT);
        let gn = g(next);
        if gn.signum() != g0.signum() || gn == 0.0 {
            return Ok(if dir > 0.0 { (prev, next) } else { (next, prev) });
        }
        if next.abs() >= LAMBDA_LIMIT {
            return Err(Error::numerical(format!(
                "cannot bracket the split constraint within |lambda| <= {LAMBDA_LIMIT}"
            )));
        }
        prev = next;
        step *= 2.0;
    }
}

/// Solve for the equal-power split with full diagnostics.
pub fn solve(r: &[f64], alpha: f64, beta: f64) -> Result<EqualPowerSolution> {
    let bracket = bracket_root(r, alpha, beta)?;
    let mut line = LineParam::new(r, beta, 0.0);
    // Equal split of alpha on the reference endpoint.
    let start = quantile(alpha / r.len() as f64);
    let v0 = line.v0.clone();
    let report = newton_bisect(|l| constraint(r, &v0, alpha, l), bracket, start, RESIDUAL_TOL, MAX_ITER)?;
    if report.residual.abs() > 1e-12 {
        return Err(Error::numerical_with_best(
            format!("equal-power solver stalled at residual {:.3e}", report.residual),
            report.root,
        ));
    }
    line.lambda = report.root;
    let split = AlphaSplit::new(line.z_alpha())?;
    Ok(EqualPowerSolution { line, split, report })
}

/// The unequal split giving every endpoint the same marginal power `1 - beta`
/// at one shared sample size, for relative effects `r` (with `r[0] == 1`).
pub fn solve_lambda(r: &[f64], alpha: f64, beta: f64) -> Result<AlphaSplit> {
    solve(r, alpha, beta).map(|s| s.split)
}

/// Equal-marginal-power design for `spec`.
pub fn equal_power_design(spec: &DesignSpec) -> Result<DesignResult> {
    let r = relative_effects(&spec.endpoints)?;
    let split = solve_lambda(&r, spec.alpha.value(), spec.beta.value())?;
    let beta = spec.beta.value();
    let n = split
        .z_alpha
        .iter()
        .zip(&spec.endpoints)
        .map(|(&z, e)| crate::design::sample_size(z, beta, spec.d, e))
        .fold(0.0, f64::max);
    Ok(DesignResult::new(PowerRule::MarginalEqual, spec, split, n))
}
