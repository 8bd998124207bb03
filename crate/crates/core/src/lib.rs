//! Sample-size design for randomized trials with several co-primary endpoints.
//!
//! The family-wise significance level is split unequally across endpoints so
//! that every endpoint reaches the same marginal power at a single shared
//! sample size. Around that solver the crate provides the normal-distribution
//! kernels, the graphical (generalized Holm) multiple-testing procedure,
//! conjunctive/disjunctive power and split optimization, exact operating
//! characteristics for two endpoints, and a reproducible Monte Carlo harness.
//!
//! Conventions used throughout:
//!
//! * tests are one-sided with alternatives oriented positive;
//! * per-endpoint levels are stored as lower-tail quantiles `z_alpha[i]`,
//!   so `alpha[i] = Φ(z_alpha[i])` and the rejection threshold on the
//!   z-statistic is `-z_alpha[i]`;
//! * sample sizes are continuous until a [`DesignResult`] rounds them.

// `!(x > 0.0)` style checks are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod equal_power;
mod error;
pub mod mtp;
pub mod oc;
pub mod power;
pub mod roots;
pub mod sim;
pub mod simplex;
pub mod stats;

pub use design::{AlphaSplit, DesignResult, DesignSpec, Endpoint};
pub use error::{Error, Result};
pub use stats::{CorrelationMatrix, Probability};

/// Map `f` over `items`, in parallel when the `parallel` feature is on.
/// Output order always follows input order.
#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    F: Fn(&T) -> U,
{
    items.iter().map(f).collect()
}
