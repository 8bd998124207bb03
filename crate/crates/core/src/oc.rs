//! Exact operating characteristics for two endpoints, and the data behind
//! the lookup table and the sample-size and outcome comparison figures.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::design::{scaled_n, AlphaSplit, DesignSpec};
use crate::equal_power::equal_power_design;
use crate::power::{optimize_split, PowerRule};
use crate::stats::normal::quantile;
use crate::stats::rect_unchecked;
use crate::{par_map, CorrelationMatrix, Error, Probability, Result};

const INF: f64 = f64::INFINITY;

/// The four mutually exclusive results of testing two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OutcomeProbabilities {
    pub p_none: Probability,
    pub p_only1: Probability,
    pub p_only2: Probability,
    pub p_both: Probability,
}

impl OutcomeProbabilities {
    pub fn total(&self) -> f64 {
        self.p_none.value() + self.p_only1.value() + self.p_only2.value() + self.p_both.value()
    }

    /// Probability that `endpoint` (0 or 1) is rejected.
    pub fn marginal(&self, endpoint: usize) -> Result<Probability> {
        marginal_power(self, endpoint)
    }
}

/// Which endpoint effects are nonzero. Endpoint 1 carries the smaller
/// standardized effect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hypothesis {
    Null,
    Both,
    One,
    Two,
}

impl Hypothesis {
    pub const ALL: [Hypothesis; 4] = [Hypothesis::Null, Hypothesis::One, Hypothesis::Two, Hypothesis::Both];

    /// Standardized effects `(theta_1, theta_2)` on the scale where the
    /// design alternative is `(1, r)`.
    pub fn effects(self, r: f64) -> (f64, f64) {
        match self {
            Hypothesis::Null => (0.0, 0.0),
            Hypothesis::One => (1.0, 0.0),
            Hypothesis::Two => (0.0, r),
            Hypothesis::Both => (1.0, r),
        }
    }

    /// Whether endpoint `i` (0 or 1) has a true null.
    pub fn is_null(self, i: usize) -> bool {
        let (a, b) = self.effects(1.0);
        [a, b][i] == 0.0
    }
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::Null => "Null",
            Hypothesis::Both => "Both",
            Hypothesis::One => "One",
            Hypothesis::Two => "Two",
        })
    }
}

impl FromStr for Hypothesis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "null" => Ok(Hypothesis::Null),
            "both" => Ok(Hypothesis::Both),
            "one" => Ok(Hypothesis::One),
            "two" => Ok(Hypothesis::Two),
            other => Err(Error::domain(format!("unknown hypothesis '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGrid {
    pub r_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub hypothesis: Hypothesis,
}

impl ScenarioGrid {
    pub fn new(r_values: Vec<f64>, rho_values: Vec<f64>, hypothesis: Hypothesis) -> Result<Self> {
        if r_values.is_empty() || rho_values.is_empty() {
            return Err(Error::domain("scenario grid needs at least one r and one rho"));
        }
        if let Some(r) = r_values.iter().find(|r| !(**r >= 1.0 && r.is_finite())) {
            return Err(Error::domain(format!("grid r values must be >= 1, got {r}")));
        }
        if let Some(rho) = rho_values.iter().find(|p| !(p.abs() < 1.0)) {
            return Err(Error::domain(format!("grid correlations must satisfy |rho| < 1, got {rho}")));
        }
        Ok(ScenarioGrid { r_values, rho_values, hypothesis })
    }

    /// `r` from 1 to 2.5 in steps of 0.05 and five correlations.
    pub fn default_for(hypothesis: Hypothesis) -> Self {
        ScenarioGrid { r_values: default_r_grid(), rho_values: DEFAULT_RHO.to_vec(), hypothesis }
    }
}

pub const DEFAULT_RHO: [f64; 5] = [-0.8, -0.4, 0.0, 0.4, 0.8];

/// 1.00, 1.05, ..., 2.50.
pub fn default_r_grid() -> Vec<f64> {
    (0..=30).map(|i| (100 + 5 * i) as f64 / 100.0).collect()
}

/// Exact outcome probabilities of the two-endpoint procedure.
///
/// Each endpoint is first tested at `z_{1-alpha_i}`; after one rejection the
/// other is retested at the full level `split.total()`.
pub fn outcome_probabilities(
    split: &AlphaSplit,
    n: f64,
    spec: &DesignSpec,
    theta: (f64, f64),
    rho: f64,
) -> Result<OutcomeProbabilities> {
    if split.len() != 2 {
        return Err(Error::domain(format!(
            "exact outcome probabilities are for two endpoints, got {}",
            split.len()
        )));
    }
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::domain(format!("sample size must be positive, got {n}")));
    }
    if !(rho.abs() <= 1.0) {
        return Err(Error::domain(format!("correlation {rho} outside [-1, 1]")));
    }
    if !(theta.0.is_finite() && theta.1.is_finite()) {
        return Err(Error::domain("effects must be finite"));
    }
    let total = split.total();
    if !(total < 1.0) {
        return Err(Error::domain("split levels must sum to less than 1"));
    }
    let scale = (n / spec.d).sqrt();
    let (m1, m2) = (scale * theta.0, scale * theta.1);
    let crit = split.critical_values();
    // Shift every threshold to the centred scale.
    let (c1, c2) = (crit[0] - m1, crit[1] - m2);
    let c = -quantile(total);
    let (f1, f2) = (c - m1, c - m2);

    let rect = |lo: (f64, f64), hi: (f64, f64)| rect_unchecked(lo, hi, rho);
    let first_both = rect((c1, c2), (INF, INF));
    let second2 = rect((c1, f2), (INF, c2));
    let second1 = rect((f1, c2), (c1, INF));
    let only1 = rect((c1, -INF), (INF, f2));
    let only2 = rect((-INF, c2), (f1, INF));
    let none = rect((-INF, -INF), (c1, c2));
    Ok(OutcomeProbabilities {
        p_none: Probability::clamped(none),
        p_only1: Probability::clamped(only1),
        p_only2: Probability::clamped(only2),
        p_both: Probability::clamped(first_both + second1 + second2),
    })
}

/// `p_both + p_only_i` for endpoint `i` in {0, 1}.
pub fn marginal_power(op: &OutcomeProbabilities, endpoint: usize) -> Result<Probability> {
    let only = match endpoint {
        0 => op.p_only1,
        1 => op.p_only2,
        _ => return Err(Error::domain(format!("endpoint index {endpoint} out of range for two endpoints"))),
    };
    Ok(Probability::clamped(op.p_both.value() + only.value()))
}

/// One lookup-table cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Table1Row {
    pub r: f64,
    pub alpha: f64,
    pub power: f64,
    /// First endpoint's level, in percent.
    pub alpha1_percent: f64,
    /// Shared sample size in units of `d sigma_1^2 / delta_1^2`.
    pub n_scaled: f64,
}

impl Table1Row {
    /// The row with `alpha1_percent` and `n_scaled` rounded half-up to two
    /// decimals, as printed in lookup tables.
    pub fn rounded(&self) -> Table1Row {
        Table1Row {
            alpha1_percent: round_half_up(self.alpha1_percent, 2),
            n_scaled: round_half_up(self.n_scaled, 2),
            ..*self
        }
    }
}

pub fn round_half_up(x: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    // The nudge keeps values like 2.345 (stored as 2.34499...) rounding up.
    (x * s + 0.5 + 1e-9).floor() / s
}

pub const TABLE1_ALPHAS: [f64; 2] = [0.025, 0.05];
pub const TABLE1_POWERS: [f64; 2] = [0.8, 0.9];
pub const TABLE1_R: [f64; 5] = [1.1, 1.2, 1.3, 1.4, 1.5];

/// Equal-marginal-power splits for two endpoints across a grid, ordered by
/// `r`, then `alpha`, then `power`.
pub fn table1_generate(alphas: &[f64], powers: &[f64], r_grid: &[f64]) -> Result<Vec<Table1Row>> {
    if alphas.is_empty() || powers.is_empty() || r_grid.is_empty() {
        return Err(Error::domain("lookup table needs at least one alpha, power and r"));
    }
    let mut rows = Vec::with_capacity(alphas.len() * powers.len() * r_grid.len());
    for &r in r_grid {
        for &alpha in alphas {
            for &power in powers {
                let spec = DesignSpec::scaled(&[1.0, r], alpha, 1.0 - power, None)?;
                let res = equal_power_design(&spec)?;
                rows.push(Table1Row {
                    r,
                    alpha,
                    power,
                    alpha1_percent: 100.0 * res.split.alphas()[0],
                    n_scaled: res.n_scaled,
                });
            }
        }
    }
    Ok(rows)
}

/// Scaled sample sizes under the five rules at one `r`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveRow {
    pub r: f64,
    pub equal_power: f64,
    pub equal_alpha_max: f64,
    pub equal_alpha_min: f64,
    pub conjunctive: f64,
    pub disjunctive: f64,
}

impl CurveRow {
    pub fn values(&self) -> [f64; 5] {
        [self.equal_power, self.equal_alpha_max, self.equal_alpha_min, self.conjunctive, self.disjunctive]
    }
}

/// Sample sizes, scaled by `d sigma_1^2 / delta_1^2`, for two endpoints with
/// effect ratio `r` under each rule. The conjunctive and disjunctive rules
/// use the optimized split at correlation `rho`.
pub fn n_comparison_curves(r_grid: &[f64], alpha: f64, power: f64, rho: f64) -> Result<Vec<CurveRow>> {
    if r_grid.is_empty() {
        return Err(Error::domain("comparison needs at least one r"));
    }
    let corr = CorrelationMatrix::exchangeable(2, rho)?;
    let rows = par_map(r_grid, |&r| -> Result<CurveRow> {
        let spec = DesignSpec::scaled(&[1.0, r], alpha, 1.0 - power, Some(corr.clone()))?;
        let beta = spec.beta.value();
        let z_half = quantile(alpha / 2.0);
        let (n1, n2) = (scaled_n(z_half, beta, 1.0), scaled_n(z_half, beta, r));
        Ok(CurveRow {
            r,
            equal_power: equal_power_design(&spec)?.n_scaled,
            equal_alpha_max: n1.max(n2),
            equal_alpha_min: n1.min(n2),
            conjunctive: optimize_split(PowerRule::Conjunctive, &spec, power)?.n_scaled,
            disjunctive: optimize_split(PowerRule::Disjunctive, &spec, power)?.n_scaled,
        })
    });
    rows.into_iter().collect()
}

/// How a two-endpoint design picks its split and sample size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OcRule {
    /// `alpha / 2` each, sized for the endpoint needing the larger n.
    EqualAlpha,
    /// Equal-marginal-power split and its shared n.
    EqualPower,
}

impl fmt::Display for OcRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OcRule::EqualAlpha => "equal-alpha",
            OcRule::EqualPower => "equal-power",
        })
    }
}

impl FromStr for OcRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equal-alpha" => Ok(OcRule::EqualAlpha),
            "equal-power" => Ok(OcRule::EqualPower),
            other => Err(Error::domain(format!("unknown design rule '{other}'"))),
        }
    }
}

/// Design chosen by `rule` for effect ratio `r`, on the scale `theta_1 = 1`,
/// `d = 1`.
pub fn rule_design(rule: OcRule, r: f64, alpha: f64, power: f64) -> Result<(AlphaSplit, f64)> {
    let spec = DesignSpec::scaled(&[1.0, r], alpha, 1.0 - power, None)?;
    match rule {
        OcRule::EqualPower => {
            let res = equal_power_design(&spec)?;
            Ok((res.split, res.n))
        }
        OcRule::EqualAlpha => {
            let split = AlphaSplit::equal(alpha, 2)?;
            let beta = 1.0 - power;
            let n =
                split.z_alpha.iter().zip([1.0, r]).map(|(&z, ri)| scaled_n(z, beta, ri)).fold(0.0, f64::max);
            Ok((split, n))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OcRow {
    pub r: f64,
    pub rho: f64,
    pub hypothesis: Hypothesis,
    pub rule: OcRule,
    pub alpha1: f64,
    pub n_scaled: f64,
    pub p_none: f64,
    pub p_only1: f64,
    pub p_only2: f64,
    pub p_both: f64,
    pub marginal1: f64,
    pub marginal2: f64,
    pub conjunctive: f64,
}

/// Outcome probabilities for every `(r, rho, rule)` cell of the grid under
/// its hypothesis. Rows are ordered by `r`, then `rho`, then `rules`.
pub fn oc_grid(grid: &ScenarioGrid, rules: &[OcRule], alpha: f64, power: f64) -> Result<Vec<OcRow>> {
    if rules.is_empty() {
        return Err(Error::domain("at least one design rule is needed"));
    }
    let mut cells = Vec::new();
    for &r in &grid.r_values {
        for &rho in &grid.rho_values {
            for &rule in rules {
                cells.push((r, rho, rule));
            }
        }
    }
    let hypothesis = grid.hypothesis;
    let rows = par_map(&cells, |&(r, rho, rule)| -> Result<OcRow> {
        let (split, n) = rule_design(rule, r, alpha, power)?;
        let spec = DesignSpec::scaled(&[1.0, r], alpha, 1.0 - power, None)?;
        let op = outcome_probabilities(&split, n, &spec, hypothesis.effects(r), rho)?;
        Ok(OcRow {
            r,
            rho,
            hypothesis,
            rule,
            alpha1: split.alphas()[0],
            n_scaled: n,
            p_none: op.p_none.value(),
            p_only1: op.p_only1.value(),
            p_only2: op.p_only2.value(),
            p_both: op.p_both.value(),
            marginal1: marginal_power(&op, 0)?.value(),
            marginal2: marginal_power(&op, 1)?.value(),
            conjunctive: op.p_both.value(),
        })
    });
    rows.into_iter().collect()
}
