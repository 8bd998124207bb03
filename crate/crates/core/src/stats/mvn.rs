//! Multivariate normal orthant probabilities by Genz's separation of
//! variables, integrated with a randomly shifted rank-1 (Richtmyer) lattice.
//!
//! Each random shift gives an unbiased estimate; the spread across shifts is
//! the reported standard error. The shifts come from a seeded ChaCha stream,
//! so a fixed seed gives bit-identical results.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::normal::{cdf, quantile};
use super::CorrelationMatrix;
use crate::{Error, Probability, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmcOptions {
    pub seed: u64,
    /// Number of independent random shifts.
    pub shifts: usize,
    /// Lattice points per shift on the first pass; doubled until the target
    /// standard error is reached.
    pub initial_points: usize,
    pub max_points: usize,
    pub target_se: f64,
}

impl Default for QmcOptions {
    fn default() -> Self {
        QmcOptions {
            seed: 0x5eed_c0de,
            shifts: 12,
            initial_points: 1024,
            max_points: 1 << 18,
            target_se: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MvnEstimate {
    pub value: Probability,
    /// Standard error across random shifts, floored at the rounding level of
    /// the integrand.
    pub error: f64,
    /// Lattice points per shift used for the final estimate.
    pub points: usize,
}

/// `P(Z_i <= upper_i for all i)` for `Z ~ MVN(0, corr)`, default options.
pub fn mvn_orthant(upper: &[f64], corr: &CorrelationMatrix) -> Result<MvnEstimate> {
    mvn_orthant_with(upper, corr, &QmcOptions::default())
}

pub fn mvn_orthant_with(upper: &[f64], corr: &CorrelationMatrix, opts: &QmcOptions) -> Result<MvnEstimate> {
    let k = corr.dim();
    if upper.len() != k {
        return Err(Error::domain(format!(
            "mvn_orthant: {} limits for a {k}-dimensional correlation matrix",
            upper.len()
        )));
    }
    if upper.iter().any(|u| u.is_nan()) {
        return Err(Error::domain("mvn_orthant: NaN limit"));
    }
    if opts.shifts < 2 || opts.initial_points == 0 {
        return Err(Error::domain("mvn_orthant: need at least 2 shifts and 1 point"));
    }
    if upper.contains(&f64::NEG_INFINITY) {
        return Ok(exact(0.0));
    }

    // Drop coordinates with an infinite upper limit; they integrate to 1.
    let keep: Vec<usize> = (0..k).filter(|&i| upper[i].is_finite()).collect();
    if keep.is_empty() {
        return Ok(exact(1.0));
    }
    if keep.len() == 1 {
        return Ok(exact(cdf(upper[keep[0]])));
    }

    // Most restrictive limits first, which lowers the integrand variance.
    let mut order = keep;
    order.sort_by(|&a, &b| upper[a].total_cmp(&upper[b]));
    let m = order.len();
    let mut entries = Vec::with_capacity(m * m);
    for &i in &order {
        for &j in &order {
            entries.push(corr.get(i, j));
        }
    }
    let sub = CorrelationMatrix::new(m, entries)?;
    let chol = sub.cholesky()?;
    let limits: Vec<f64> = order.iter().map(|&i| upper[i]).collect();

    let generator = richtmyer(m - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let shifts: Vec<Vec<f64>> =
        (0..opts.shifts).map(|_| (0..m - 1).map(|_| rng.gen::<f64>()).collect()).collect();

    let integrand = Integrand { chol: &chol, limits: &limits };
    let mut points = opts.initial_points;
    loop {
        let means: Vec<f64> =
            shifts.iter().map(|shift| integrand.lattice_mean(&generator, shift, points)).collect();
        let s = means.len() as f64;
        let mean = means.iter().sum::<f64>() / s;
        let var = means.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (s - 1.0);
        let se = (var / s).sqrt().max(rounding_floor(m, mean));
        if se <= opts.target_se || points >= opts.max_points {
            return Ok(MvnEstimate { value: Probability::clamped(mean), error: se, points });
        }
        points *= 2;
    }
}

fn exact(p: f64) -> MvnEstimate {
    MvnEstimate { value: Probability::clamped(p), error: 0.0, points: 0 }
}

fn rounding_floor(dim: usize, value: f64) -> f64 {
    4.0 * f64::EPSILON * dim as f64 * value.abs().max(1e-3)
}

struct Integrand<'a> {
    chol: &'a [f64],
    limits: &'a [f64],
}

impl Integrand<'_> {
    fn lattice_mean(&self, generator: &[f64], shift: &[f64], points: usize) -> f64 {
        let mut w = vec![0.0; generator.len()];
        let mut y = vec![0.0; self.limits.len()];
        let mut acc = 0.0;
        for i in 1..=points {
            for (j, wj) in w.iter_mut().enumerate() {
                let x = (i as f64 * generator[j] + shift[j]).fract();
                // Baker's (tent) transform periodizes the integrand.
                *wj = 1.0 - (2.0 * x - 1.0).abs();
            }
            acc += self.eval(&w, &mut y);
        }
        acc / points as f64
    }

    fn eval(&self, w: &[f64], y: &mut [f64]) -> f64 {
        let m = self.limits.len();
        let l = self.chol;
        let mut e = cdf(self.limits[0] / l[0]);
        let mut f = e;
        for i in 1..m {
            if f <= 0.0 {
                return 0.0;
            }
            let u = (w[i - 1] * e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
            y[i - 1] = quantile(u);
            let s: f64 = (0..i).map(|j| l[i * m + j] * y[j]).sum();
            e = cdf((self.limits[i] - s) / l[i * m + i]);
            f *= e;
        }
        f
    }
}

/// Fractional parts of square roots of the first `dim` primes.
fn richtmyer(dim: usize) -> Vec<f64> {
    let mut primes = Vec::with_capacity(dim);
    let mut candidate = 2u64;
    while primes.len() < dim {
        if primes.iter().take_while(|&&p| p * p <= candidate).all(|&p| !candidate.is_multiple_of(p)) {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes.iter().map(|&p| (p as f64).sqrt().fract()).collect()
}

#[cfg(test)]
mod tests {
    use super::super::bvn::bvn_lower;
    use super::*;

    #[test]
    fn one_dimension_reduces_to_cdf() {
        let c = CorrelationMatrix::identity(1);
        let est = mvn_orthant(&[1.644_853_626_951_472_2], &c).unwrap();
        assert!((est.value.value() - 0.95).abs() < 1e-12);
        assert_eq!(est.error, 0.0);
    }

    #[test]
    fn independent_orthant() {
        let c = CorrelationMatrix::identity(3);
        let est = mvn_orthant(&[0.0, 0.0, 0.0], &c).unwrap();
        assert!((est.value.value() - 0.125).abs() <= 3.0 * est.error + 1e-15);
        let est = mvn_orthant(&[0.3, -1.2, 2.0, 0.1], &CorrelationMatrix::identity(4)).unwrap();
        let want = cdf(0.3) * cdf(-1.2) * cdf(2.0) * cdf(0.1);
        assert!((est.value.value() - want).abs() <= 3.0 * est.error, "{est:?} vs {want}");
    }

    #[test]
    fn two_dimensions_agree_with_bvn() {
        for &(a, b, rho) in &[(0.3, -0.4, 0.5), (-1.0, 2.0, -0.8), (1.5, 1.5, 0.95), (0.0, 0.0, 0.0)] {
            let c = CorrelationMatrix::exchangeable(2, rho).unwrap();
            let est = mvn_orthant(&[a, b], &c).unwrap();
            let want = bvn_lower(a, b, rho);
            assert!(
                (est.value.value() - want).abs() <= 3.0 * est.error,
                "({a},{b},{rho}): {est:?} vs {want}"
            );
        }
    }

    #[test]
    fn trivariate_exchangeable_closed_form() {
        // P(all Z_i <= 0) for exchangeable rho = 1/8 + 3 asin(rho) / (4 pi).
        let rho: f64 = 0.4;
        let want = 0.125 + 3.0 * rho.asin() / (4.0 * std::f64::consts::PI);
        let c = CorrelationMatrix::exchangeable(3, rho).unwrap();
        let est = mvn_orthant(&[0.0; 3], &c).unwrap();
        assert!(est.error <= 1e-5);
        assert!((est.value.value() - want).abs() <= 3.0 * est.error + 1e-6, "{est:?} vs {want}");
    }

    #[test]
    fn infinite_limits_and_errors() {
        let c = CorrelationMatrix::exchangeable(3, 0.2).unwrap();
        let est = mvn_orthant(&[f64::INFINITY, 0.5, f64::INFINITY], &c).unwrap();
        assert!((est.value.value() - cdf(0.5)).abs() < 1e-15);
        let est = mvn_orthant(&[f64::NEG_INFINITY, 0.5, 1.0], &c).unwrap();
        assert_eq!(est.value.value(), 0.0);
        assert!(mvn_orthant(&[0.0, 0.0], &c).is_err());
    }

    #[test]
    fn seeded_determinism() {
        let c = CorrelationMatrix::exchangeable(4, 0.3).unwrap();
        let a = mvn_orthant(&[0.1, 0.5, -0.2, 1.0], &c).unwrap();
        let b = mvn_orthant(&[0.1, 0.5, -0.2, 1.0], &c).unwrap();
        assert_eq!(a, b);
    }
}
