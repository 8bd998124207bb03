//! Normal-distribution kernels shared by every other module.

mod bvn;
mod corr;
mod mvn;
pub mod normal;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub(crate) use bvn::rect_unchecked;
pub use bvn::{bvn_lower, bvn_rect, bvn_upper};
pub use corr::CorrelationMatrix;
pub use mvn::{mvn_orthant, mvn_orthant_with, MvnEstimate, QmcOptions};
pub use normal::{norm_cdf, norm_pdf, norm_quantile};

/// A probability in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!("{value} is not a probability")))
        }
    }

    /// Clamp a computed value into `[0, 1]`, absorbing rounding excursions.
    pub(crate) fn clamped(value: f64) -> Self {
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Probability {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Probability::new(value)
    }
}

impl From<Probability> for f64 {
    fn from(p: Probability) -> f64 {
        p.0
    }
}

impl std::fmt::Display for Probability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}
