//! Conjunctive and disjunctive power, their inversion in `n`, and the
//! alpha split minimizing `n` for a target power.
//!
//! Under the design alternative the z-statistics are
//! `T ~ MVN(sqrt(n / d) * theta, corr)` with `theta_i = |delta_i| / sigma_i`,
//! and endpoint `i` is significant on the first iteration when
//! `T_i > z_{1 - alpha_i}`.

use std::cell::{Cell, RefCell};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{AlphaSplit, DesignResult, DesignSpec};
use crate::equal_power::solve_lambda;
use crate::roots::{brent, expand_positive_bracket};
use crate::simplex::{nelder_mead_in, NelderMeadOptions};
use crate::stats::normal::{cdf, quantile, sf};
use crate::stats::{bvn_lower, mvn_orthant_with, QmcOptions};
use crate::{CorrelationMatrix, Error, Probability, Result};

/// Which notion of power a design targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PowerRule {
    /// Every endpoint reaches the target marginal power.
    MarginalEqual,
    /// All endpoints significant.
    Conjunctive,
    /// At least one endpoint significant.
    Disjunctive,
}

impl fmt::Display for PowerRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PowerRule::MarginalEqual => "marginal-equal",
            PowerRule::Conjunctive => "conjunctive",
            PowerRule::Disjunctive => "disjunctive",
        })
    }
}

impl FromStr for PowerRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal-power" | "marginal-equal" | "marginal" => Ok(PowerRule::MarginalEqual),
            "conjunctive" => Ok(PowerRule::Conjunctive),
            "disjunctive" => Ok(PowerRule::Disjunctive),
            other => Err(Error::domain(format!("unknown power rule '{other}'"))),
        }
    }
}

/// Noncentrality of the z-statistics at a given sample size.
#[derive(Debug, Clone, PartialEq)]
pub struct NoncentralSpec {
    pub theta: Vec<f64>,
    pub n: f64,
    pub d: f64,
    pub corr: CorrelationMatrix,
}

impl NoncentralSpec {
    pub fn new(theta: Vec<f64>, n: f64, d: f64, corr: CorrelationMatrix) -> Result<Self> {
        if theta.len() != corr.dim() {
            return Err(Error::domain(format!(
                "{} effects for a {}-dimensional correlation matrix",
                theta.len(),
                corr.dim()
            )));
        }
        if !(n > 0.0 && n.is_finite()) || !(d > 0.0 && d.is_finite()) {
            return Err(Error::domain("n and d must be positive"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::domain("effects must be finite"));
        }
        Ok(NoncentralSpec { theta, n, d, corr })
    }

    /// Mean of the z-statistics, `sqrt(n / d) * theta`.
    pub fn means(&self) -> Vec<f64> {
        let s = (self.n / self.d).sqrt();
        self.theta.iter().map(|t| s * t).collect()
    }

    fn check(&self, split: &AlphaSplit) -> Result<()> {
        if split.len() != self.theta.len() {
            return Err(Error::domain(format!(
                "split has {} endpoints, effects have {}",
                split.len(),
                self.theta.len()
            )));
        }
        Ok(())
    }
}

/// Probability that no endpoint is significant on the first iteration,
/// `P(T_i <= c_i for all i)`.
fn all_accept(spec: &NoncentralSpec, split: &AlphaSplit, qmc: &QmcOptions) -> Result<f64> {
    let mu = spec.means();
    let limits: Vec<f64> = split.critical_values().iter().zip(&mu).map(|(c, m)| c - m).collect();
    orthant(&limits, &spec.corr, qmc)
}

/// `P(T_i > c_i for all i)`.
fn all_reject(spec: &NoncentralSpec, split: &AlphaSplit, qmc: &QmcOptions) -> Result<f64> {
    let mu = spec.means();
    let limits: Vec<f64> = split.critical_values().iter().zip(&mu).map(|(c, m)| m - c).collect();
    orthant(&limits, &spec.corr, qmc)
}

/// Lower orthant of a centred MVN; exact for k <= 2 and independent
/// coordinates, randomized QMC otherwise.
fn orthant(limits: &[f64], corr: &CorrelationMatrix, qmc: &QmcOptions) -> Result<f64> {
    match limits.len() {
        1 => Ok(cdf(limits[0])),
        2 => Ok(bvn_lower(limits[0], limits[1], corr.get(0, 1))),
        _ if corr.is_identity() => Ok(limits.iter().map(|&l| cdf(l)).product()),
        _ => Ok(mvn_orthant_with(limits, corr, qmc)?.value.value()),
    }
}

/// `1 - P(T_i <= z_{1-alpha_i} for all i)`: at least one endpoint significant.
/// Exact for the full procedure, since any later rejection needs an earlier one.
pub fn disjunctive_power(spec: &NoncentralSpec, split: &AlphaSplit) -> Result<Probability> {
    disjunctive_power_with(spec, split, &QmcOptions::default())
}

pub fn disjunctive_power_with(
    spec: &NoncentralSpec,
    split: &AlphaSplit,
    qmc: &QmcOptions,
) -> Result<Probability> {
    spec.check(split)?;
    Ok(Probability::clamped(1.0 - all_accept(spec, split, qmc)?))
}

/// `P(T_i > z_{1-alpha_i} for all i)`: every endpoint significant on the first
/// iteration. A lower bound on the conjunctive power of the full procedure.
pub fn conjunctive_power_first_iter(spec: &NoncentralSpec, split: &AlphaSplit) -> Result<Probability> {
    conjunctive_power_first_iter_with(spec, split, &QmcOptions::default())
}

pub fn conjunctive_power_first_iter_with(
    spec: &NoncentralSpec,
    split: &AlphaSplit,
    qmc: &QmcOptions,
) -> Result<Probability> {
    spec.check(split)?;
    Ok(Probability::clamped(all_reject(spec, split, qmc)?))
}

/// First-iteration marginal power of each endpoint,
/// `Φ(sqrt(n/d) theta_i - z_{1-alpha_i})`.
pub fn marginal_first_iter(spec: &NoncentralSpec, split: &AlphaSplit) -> Result<Vec<f64>> {
    spec.check(split)?;
    Ok(split.critical_values().iter().zip(spec.means()).map(|(c, m)| sf(c - m)).collect())
}

fn design_corr(spec: &DesignSpec) -> Result<CorrelationMatrix> {
    match (&spec.correlation, spec.k()) {
        (Some(c), _) => Ok(c.clone()),
        (None, 1) => Ok(CorrelationMatrix::identity(1)),
        (None, _) => Err(Error::domain("conjunctive and disjunctive power need a correlation matrix")),
    }
}

/// Continuous `n` at which the rule's power equals `target` for this split.
pub fn n_for_power(rule: PowerRule, spec: &DesignSpec, split: &AlphaSplit, target: f64) -> Result<f64> {
    n_for_power_with(rule, spec, split, target, &QmcOptions::default())
}

pub fn n_for_power_with(
    rule: PowerRule,
    spec: &DesignSpec,
    split: &AlphaSplit,
    target: f64,
    qmc: &QmcOptions,
) -> Result<f64> {
    n_for_power_from(rule, spec, split, target, qmc, None)
}

/// `n_for_power_with`, bracketing tightly around `guess` when one is given.
fn n_for_power_from(
    rule: PowerRule,
    spec: &DesignSpec,
    split: &AlphaSplit,
    target: f64,
    qmc: &QmcOptions,
    guess: Option<f64>,
) -> Result<f64> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::domain(format!("target power must be in (0, 1), got {target}")));
    }
    if split.len() != spec.k() {
        return Err(Error::domain("split and design have different numbers of endpoints"));
    }
    let power_fn: fn(&NoncentralSpec, &AlphaSplit, &QmcOptions) -> Result<Probability> = match rule {
        PowerRule::Conjunctive => conjunctive_power_first_iter_with,
        PowerRule::Disjunctive => disjunctive_power_with,
        PowerRule::MarginalEqual => {
            return Err(Error::domain("n_for_power handles the conjunctive and disjunctive rules"))
        }
    };
    let corr = design_corr(spec)?;
    let theta = spec.effects();
    let d = spec.d;

    let failure = RefCell::new(None);
    // Bracketing and Brent revisit the same endpoints.
    let mut seen: Vec<(f64, f64)> = Vec::new();
    let mut excess = |root_n: f64| -> f64 {
        if let Some(&(_, v)) = seen.iter().find(|(x, _)| *x == root_n) {
            return v;
        }
        let nc = NoncentralSpec { theta: theta.clone(), n: root_n * root_n, d, corr: corr.clone() };
        let v = match power_fn(&nc, split, qmc) {
            Ok(p) => p.value() - target,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        };
        if seen.len() == 8 {
            seen.remove(0);
        }
        seen.push((root_n, v));
        v
    };

    // Single-endpoint closed forms give the starting bracket on sqrt(n).
    let z_target = quantile(target);
    let singles: Vec<f64> = split
        .critical_values()
        .iter()
        .zip(&theta)
        .map(|(c, t)| ((c + z_target).max(0.1) / t) * d.sqrt())
        .collect();
    let (lo, hi) = match guess.filter(|g| g.is_finite() && *g > 0.0) {
        Some(g) => (0.99 * g.sqrt(), 1.01 * g.sqrt()),
        None => (
            0.5 * singles.iter().cloned().fold(f64::INFINITY, f64::min),
            2.0 * singles.iter().cloned().fold(0.0, f64::max),
        ),
    };
    let bracket = expand_positive_bracket(&mut excess, lo, hi, 40);
    if let Some(e) = failure.borrow_mut().take() {
        return Err(e);
    }
    let (lo, hi) = bracket
        .map_err(|_| Error::numerical(format!("cannot reach {rule} power {target} at any sample size")))?;
    let root = brent(&mut excess, lo, hi, 1e-13 * hi, 1e-12, 200)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(root * root)
}

/// Map unconstrained parameters to a split: the first `k - 1` levels are
/// `alpha * logistic(u_i)`, the last takes the remainder. `None` when the
/// remainder is not positive.
fn split_from_params(u: &[f64], alpha: f64) -> Option<Vec<f64>> {
    let mut alphas: Vec<f64> = u.iter().map(|&ui| alpha / (1.0 + (-ui).exp())).collect();
    let last = alpha - alphas.iter().sum::<f64>();
    if last <= 0.0 || alphas.iter().any(|&a| a <= 0.0) {
        return None;
    }
    alphas.push(last);
    Some(alphas)
}

fn params_from_split(alphas: &[f64], alpha: f64) -> Vec<f64> {
    alphas[..alphas.len() - 1]
        .iter()
        .map(|&a| {
            let t = (a / alpha).clamp(1e-300, 1.0 - 1e-16);
            (t / (1.0 - t)).ln()
        })
        .collect()
}

/// Split minimizing the sample size needed for `target` power under a
/// conjunctive or disjunctive rule, subject to `sum alpha_i = alpha`.
///
/// Nelder–Mead runs from the equal split and from the equal-marginal-power
/// split; the better converged result wins.
pub fn optimize_split(rule: PowerRule, spec: &DesignSpec, target: f64) -> Result<DesignResult> {
    optimize_split_with(rule, spec, target, &QmcOptions::default())
}

pub fn optimize_split_with(
    rule: PowerRule,
    spec: &DesignSpec,
    target: f64,
    qmc: &QmcOptions,
) -> Result<DesignResult> {
    if rule == PowerRule::MarginalEqual {
        return Err(Error::domain("use equal_power_design for the marginal rule"));
    }
    let alpha = spec.alpha.value();
    let k = spec.k();
    if k >= 2 && spec.correlation.is_none() {
        return Err(Error::domain(format!("the {rule} rule requires a correlation matrix")));
    }
    if k == 1 {
        let split = AlphaSplit::from_alphas(&[alpha])?;
        let n = n_for_power_with(rule, spec, &split, target, qmc)?;
        return Ok(DesignResult::new(rule, spec, split, n));
    }

    const PENALTY: f64 = 1e300;
    // Neighbouring simplex vertices need similar n; start each solve from the last one.
    let last_n = Cell::new(None);
    let objective = |u: &[f64]| -> f64 {
        let Some(alphas) = split_from_params(u, alpha) else {
            return PENALTY;
        };
        match AlphaSplit::from_alphas(&alphas)
            .and_then(|s| n_for_power_from(rule, spec, &s, target, qmc, last_n.get()))
        {
            Ok(n) => {
                last_n.set(Some(n));
                n
            }
            Err(_) => PENALTY,
        }
    };
    let to_split = |u: &[f64]| split_from_params(u, alpha).unwrap_or_else(|| vec![f64::INFINITY; k]);

    let equal = vec![alpha / k as f64; k];
    let r = spec.relative_effects();
    let mut starts = vec![params_from_split(&equal, alpha)];
    if let Ok(ep) = solve_lambda(&r, alpha, spec.beta.value()) {
        starts.push(params_from_split(&ep.alphas(), alpha));
    }

    let opts = NelderMeadOptions { initial_step: 0.5, max_iter: 1000 * k, x_tol: 1e-8, f_tol: 1e-8 };
    let results: Vec<_> = starts.iter().map(|x0| nelder_mead_in(objective, x0, &opts, to_split)).collect();
    let best = results.iter().filter(|m| m.value < PENALTY).min_by(|a, b| a.value.total_cmp(&b.value));
    let Some(best) = best else {
        return Err(Error::numerical(format!("{rule} optimization found no feasible split")));
    };
    if !results.iter().any(|m| m.converged) {
        return Err(Error::numerical_with_best(
            format!("{rule} optimization did not converge (best n = {})", best.value),
            best.value,
        ));
    }
    let alphas = split_from_params(&best.x, alpha).expect("best point is feasible");
    let split = AlphaSplit::from_alphas(&alphas)?;
    let n = n_for_power_with(rule, spec, &split, target, qmc)?;
    Ok(DesignResult::new(rule, spec, split, n))
}
