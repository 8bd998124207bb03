//! Endpoints, design specifications and the per-endpoint sample-size formula
//! `n = d (z_alpha + z_beta)^2 sigma^2 / delta^2`.

use serde::{Deserialize, Serialize};

use crate::power::PowerRule;
use crate::stats::normal::{cdf, quantile};
use crate::{CorrelationMatrix, Error, Probability, Result};

/// One endpoint: its minimally clinically important difference and standard
/// deviation, in the endpoint's own units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Endpoint {
    pub delta: f64,
    pub sigma: f64,
}

impl Endpoint {
    pub fn new(delta: f64, sigma: f64) -> Result<Self> {
        let e = Endpoint { delta, sigma };
        e.validate()?;
        Ok(e)
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::domain(format!("sigma must be positive, got {}", self.sigma)));
        }
        if self.delta == 0.0 || !self.delta.is_finite() {
            return Err(Error::domain(format!("delta must be nonzero, got {}", self.delta)));
        }
        Ok(())
    }

    /// Standardized effect `|delta| / sigma`.
    pub fn effect(&self) -> f64 {
        self.delta.abs() / self.sigma
    }
}

/// A trial design: one-sided FWER, type II error, design factor and the
/// endpoints. The first endpoint is the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignSpec {
    pub endpoints: Vec<Endpoint>,
    pub alpha: Probability,
    pub beta: Probability,
    pub d: f64,
    pub correlation: Option<CorrelationMatrix>,
}

impl DesignSpec {
    pub fn new(
        endpoints: Vec<Endpoint>,
        alpha: f64,
        beta: f64,
        d: f64,
        correlation: Option<CorrelationMatrix>,
    ) -> Result<Self> {
        if endpoints.is_empty() {
            return Err(Error::domain("a design needs at least one endpoint"));
        }
        for e in &endpoints {
            e.validate()?;
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::domain(format!("alpha must be in (0, 1), got {alpha}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::domain(format!("beta must be in (0, 1), got {beta}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::domain(format!("design factor d must be positive, got {d}")));
        }
        if let Some(c) = &correlation {
            if c.dim() != endpoints.len() {
                return Err(Error::domain(format!(
                    "correlation matrix has dim {} but there are {} endpoints",
                    c.dim(),
                    endpoints.len()
                )));
            }
        }
        Ok(DesignSpec {
            endpoints,
            alpha: Probability::new(alpha)?,
            beta: Probability::new(beta)?,
            d,
            correlation,
        })
    }

    /// Unit design used for scaled sample sizes: `delta_1 = sigma = d = 1`
    /// and `delta_i = r_i`.
    pub fn scaled(r: &[f64], alpha: f64, beta: f64, correlation: Option<CorrelationMatrix>) -> Result<Self> {
        let endpoints = r.iter().map(|&ri| Endpoint::new(ri, 1.0)).collect::<Result<Vec<_>>>()?;
        Self::new(endpoints, alpha, beta, 1.0, correlation)
    }

    pub fn k(&self) -> usize {
        self.endpoints.len()
    }

    pub fn power(&self) -> f64 {
        1.0 - self.beta.value()
    }

    /// Standardized effects `|delta_i| / sigma_i`.
    pub fn effects(&self) -> Vec<f64> {
        self.endpoints.iter().map(Endpoint::effect).collect()
    }

    pub fn relative_effects(&self) -> Vec<f64> {
        let e1 = self.endpoints[0].effect();
        self.endpoints.iter().map(|e| e.effect() / e1).collect()
    }

    pub fn require_correlation(&self) -> Result<&CorrelationMatrix> {
        self.correlation
            .as_ref()
            .ok_or_else(|| Error::domain("this computation requires a correlation matrix"))
    }

    /// Parse the JSON document
    /// `{alpha, power, d, endpoints: [{delta, sigma}, ...], correlation?}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SpecDocument =
            serde_json::from_str(text).map_err(|e| Error::domain(format!("invalid design JSON: {e}")))?;
        doc.into_spec()
    }
}

/// On-disk form of a [`DesignSpec`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecDocument {
    pub alpha: f64,
    pub power: f64,
    pub d: f64,
    pub endpoints: Vec<Endpoint>,
    #[serde(default)]
    pub correlation: Option<MatrixDocument>,
}

/// A correlation matrix either as nested rows or as a flat row-major list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixDocument {
    Rows(Vec<Vec<f64>>),
    Flat(Vec<f64>),
}

impl MatrixDocument {
    pub fn into_matrix(self, k: usize) -> Result<CorrelationMatrix> {
        match self {
            MatrixDocument::Rows(rows) => CorrelationMatrix::from_rows(&rows),
            MatrixDocument::Flat(flat) => CorrelationMatrix::new(k, flat),
        }
    }
}

impl SpecDocument {
    pub fn into_spec(self) -> Result<DesignSpec> {
        let k = self.endpoints.len();
        let correlation = self.correlation.map(|m| m.into_matrix(k)).transpose()?;
        DesignSpec::new(self.endpoints, self.alpha, 1.0 - self.power, self.d, correlation)
    }
}

/// Per-endpoint nominal levels, stored as lower-tail quantiles so that
/// `alpha_i = Φ(z_alpha[i])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaSplit {
    pub z_alpha: Vec<f64>,
}

impl AlphaSplit {
    pub fn new(z_alpha: Vec<f64>) -> Result<Self> {
        if z_alpha.is_empty() {
            return Err(Error::domain("an alpha split needs at least one endpoint"));
        }
        if let Some(z) = z_alpha.iter().find(|z| !z.is_finite()) {
            return Err(Error::domain(format!("split z-values must be finite, got {z}")));
        }
        Ok(AlphaSplit { z_alpha })
    }

    pub fn from_alphas(alphas: &[f64]) -> Result<Self> {
        let z = alphas
            .iter()
            .map(|&a| {
                if a > 0.0 && a < 1.0 {
                    Ok(quantile(a))
                } else {
                    Err(Error::domain(format!("nominal level {a} is not in (0, 1)")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(z)
    }

    /// Equal split `alpha / k`.
    pub fn equal(alpha: f64, k: usize) -> Result<Self> {
        Self::from_alphas(&vec![alpha / k as f64; k])
    }

    pub fn len(&self) -> usize {
        self.z_alpha.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z_alpha.is_empty()
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.z_alpha.iter().map(|&z| cdf(z)).collect()
    }

    pub fn total(&self) -> f64 {
        self.alphas().iter().sum()
    }

    /// Upper-tail rejection thresholds `z_{1 - alpha_i} = -z_alpha[i]`.
    pub fn critical_values(&self) -> Vec<f64> {
        self.z_alpha.iter().map(|z| -z).collect()
    }
}

/// Outcome of a design calculation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignResult {
    pub rule: PowerRule,
    pub split: AlphaSplit,
    /// Continuous shared sample size required by the rule.
    pub n: f64,
    /// `n * delta_1^2 / (d * sigma_1^2)`, the reference-endpoint scale.
    pub n_scaled: f64,
    /// Per-endpoint marginal sample size from the first-iteration formula.
    pub n_raw: Vec<f64>,
    /// Rounded-up shared sample size.
    pub n_final: u64,
}

impl DesignResult {
    pub fn new(rule: PowerRule, spec: &DesignSpec, split: AlphaSplit, n: f64) -> Self {
        let beta = spec.beta.value();
        let n_raw: Vec<f64> = split
            .z_alpha
            .iter()
            .zip(&spec.endpoints)
            .map(|(&z, e)| sample_size(z, beta, spec.d, e))
            .collect();
        let e1 = spec.endpoints[0].effect();
        DesignResult { rule, n_scaled: n * e1 * e1 / spec.d, n_final: ceil_tolerant(n), split, n, n_raw }
    }
}

// Rounding noise of a few ulps must not push an integral n up by one.
fn ceil_tolerant(n: f64) -> u64 {
    let r = n.round();
    if (n - r).abs() <= 1e-9 * n.max(1.0) {
        r as u64
    } else {
        n.ceil() as u64
    }
}

/// Ratios `r_i = |delta_i / delta_1| * sigma_1 / sigma_i`.
pub fn relative_effects(endpoints: &[Endpoint]) -> Result<Vec<f64>> {
    let first =
        endpoints.first().ok_or_else(|| Error::domain("relative_effects needs at least one endpoint"))?;
    for e in endpoints {
        e.validate()?;
    }
    Ok(endpoints.iter().map(|e| (e.delta / first.delta).abs() * first.sigma / e.sigma).collect())
}

/// `d (z_alpha_i + z_beta)^2 sigma^2 / delta^2`, with lower-tail quantiles.
pub fn sample_size(z_alpha_i: f64, beta: f64, d: f64, endpoint: &Endpoint) -> f64 {
    let s = z_alpha_i + quantile(beta);
    d * s * s * endpoint.sigma * endpoint.sigma / (endpoint.delta * endpoint.delta)
}

/// Sample size in units of `d sigma_1^2 / delta_1^2`:
/// `(z_{1-alpha_i} + z_{1-beta})^2 / r_i^2`.
pub fn scaled_n(z_alpha_i: f64, beta: f64, r_i: f64) -> f64 {
    let s = z_alpha_i + quantile(beta);
    s * s / (r_i * r_i)
}
