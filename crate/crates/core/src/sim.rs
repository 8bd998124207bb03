//! Monte Carlo estimates of the full testing procedure.
//!
//! Replications are split into fixed-size blocks. Block `b` draws from a
//! ChaCha8 generator seeded with `seed` on stream `b`, so the result depends
//! only on the seed and the replication count, never on how blocks are
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::design::{AlphaSplit, DesignSpec};
use crate::mtp::TestGraph;
use crate::oc::{marginal_power, outcome_probabilities};
use crate::stats::normal::sf;
use crate::{par_map, CorrelationMatrix, Error, Result};

/// Replications per generator stream.
pub const BLOCK: u64 = 1 << 14;
const MAX_ENDPOINTS: usize = 16;

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub replications: u64,
    pub seed: u64,
    pub spec: DesignSpec,
    pub split: AlphaSplit,
    pub n: f64,
    /// Standardized effects the statistics are drawn under.
    pub theta: Vec<f64>,
}

/// A simulated proportion and its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub se: f64,
}

impl Estimate {
    pub fn from_count(count: u64, reps: u64) -> Self {
        let p = count as f64 / reps as f64;
        Estimate { value: p, se: (p * (1.0 - p) / reps as f64).sqrt() }
    }

    /// `|value - exact|` in standard errors. A zero SE counts as one
    /// replication's worth of resolution.
    pub fn z_distance(&self, exact: f64, reps: u64) -> f64 {
        let se = self.se.max(1.0 / reps as f64);
        (self.value - exact).abs() / se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub replications: u64,
    pub seed: u64,
    /// `counts[m]`: replications whose rejected set has bit mask `m`.
    pub counts: Vec<u64>,
    /// Replications with `T_i` above its first-iteration threshold.
    pub first_iteration_counts: Vec<u64>,
    pub marginal: Vec<Estimate>,
    pub first_iteration: Vec<Estimate>,
    pub conjunctive: Estimate,
    pub disjunctive: Estimate,
    /// Rejecting at least one endpoint whose effect is zero; `None` when
    /// every effect is nonzero.
    pub fwer: Option<Estimate>,
}

impl SimResult {
    fn from_counts(cfg: &SimConfig, counts: Vec<u64>, first: Vec<u64>) -> Self {
        let reps = cfg.replications;
        let k = cfg.theta.len();
        let full = (1usize << k) - 1;
        let sum_where = |pred: &dyn Fn(usize) -> bool| -> u64 {
            counts.iter().enumerate().filter(|(m, _)| pred(*m)).map(|(_, c)| c).sum()
        };
        let null_mask =
            cfg.theta.iter().enumerate().filter(|(_, t)| **t == 0.0).fold(0usize, |m, (i, _)| m | (1 << i));
        SimResult {
            replications: reps,
            seed: cfg.seed,
            marginal: (0..k).map(|i| Estimate::from_count(sum_where(&|m| m & (1 << i) != 0), reps)).collect(),
            first_iteration: first.iter().map(|&c| Estimate::from_count(c, reps)).collect(),
            conjunctive: Estimate::from_count(counts[full], reps),
            disjunctive: Estimate::from_count(reps - counts[0], reps),
            fwer: (null_mask != 0).then(|| Estimate::from_count(sum_where(&|m| m & null_mask != 0), reps)),
            counts,
            first_iteration_counts: first,
        }
    }

    /// Frequency of exactly the rejected set `mask`.
    pub fn outcome(&self, mask: usize) -> Estimate {
        Estimate::from_count(self.counts[mask], self.replications)
    }
}

fn validate(cfg: &SimConfig) -> Result<CorrelationMatrix> {
    let k = cfg.spec.k();
    if cfg.replications == 0 {
        return Err(Error::domain("need at least one replication"));
    }
    if k > MAX_ENDPOINTS {
        return Err(Error::domain(format!("simulation supports at most {MAX_ENDPOINTS} endpoints")));
    }
    if cfg.split.len() != k || cfg.theta.len() != k {
        return Err(Error::domain(format!(
            "design has {k} endpoints but split has {} and effects have {}",
            cfg.split.len(),
            cfg.theta.len()
        )));
    }
    if !(cfg.n > 0.0 && cfg.n.is_finite()) {
        return Err(Error::domain(format!("sample size must be positive, got {}", cfg.n)));
    }
    if cfg.theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::domain("effects must be finite"));
    }
    match (&cfg.spec.correlation, k) {
        (Some(c), _) => Ok(c.clone()),
        (None, 1) => Ok(CorrelationMatrix::identity(1)),
        (None, _) => Err(Error::domain("simulation needs a correlation matrix")),
    }
}

/// Simulate `T ~ MVN(sqrt(n / d) theta, corr)`, run the complete-graph
/// procedure on `p_i = 1 - Φ(T_i)` and tally rejected sets.
pub fn simulate(cfg: &SimConfig) -> Result<SimResult> {
    let corr = validate(cfg)?;
    let k = cfg.spec.k();
    let chol = corr.cholesky()?;
    let scale = (cfg.n / cfg.spec.d).sqrt();
    let mu: Vec<f64> = cfg.theta.iter().map(|t| scale * t).collect();
    let graph = TestGraph::holm_complete(&cfg.split);
    let crit = cfg.split.critical_values();

    let blocks: Vec<u64> = (0..cfg.replications.div_ceil(BLOCK)).collect();
    let tallies = par_map(&blocks, |&b| -> Result<(Vec<u64>, Vec<u64>)> {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(b);
        let reps = BLOCK.min(cfg.replications - b * BLOCK);
        let mut counts = vec![0u64; 1 << k];
        let mut first = vec![0u64; k];
        let mut z = vec![0.0; k];
        let mut p = vec![0.0; k];
        for _ in 0..reps {
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            for i in 0..k {
                let t = mu[i] + (0..=i).map(|j| chol[i * k + j] * z[j]).sum::<f64>();
                if t > crit[i] {
                    first[i] += 1;
                }
                p[i] = sf(t);
            }
            counts[graph.run(&p)?.mask()] += 1;
        }
        Ok((counts, first))
    });

    let mut counts = vec![0u64; 1 << k];
    let mut first = vec![0u64; k];
    for t in tallies {
        let (c, f) = t?;
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        first.iter_mut().zip(f).for_each(|(a, b)| *a += b);
    }
    Ok(SimResult::from_counts(cfg, counts, first))
}

/// One cell of an error-rate sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FwerRow {
    pub rho: f64,
    /// Bit mask of endpoints whose effect is set to zero.
    pub null_mask: usize,
    pub fwer: Estimate,
    /// Exact value for two endpoints.
    pub exact: Option<f64>,
}

/// Empirical FWER at each exchangeable correlation in `rho_grid`, under the
/// global null and every configuration with some (not all) effects zeroed.
/// Nonzero effects are the design's. Every cell reuses `seed`.
pub fn fwer_sweep(
    spec: &DesignSpec,
    split: &AlphaSplit,
    n: f64,
    rho_grid: &[f64],
    replications: u64,
    seed: u64,
) -> Result<Vec<FwerRow>> {
    let k = spec.k();
    if rho_grid.is_empty() {
        return Err(Error::domain("need at least one correlation"));
    }
    if k == 0 || k > MAX_ENDPOINTS {
        return Err(Error::domain(format!("sweep supports 1 to {MAX_ENDPOINTS} endpoints")));
    }
    let effects = spec.effects();
    let full = (1usize << k) - 1;
    let mut rows = Vec::new();
    for &rho in rho_grid {
        let corr = CorrelationMatrix::exchangeable(k, rho)?;
        let cell_spec = DesignSpec { correlation: Some(corr), ..spec.clone() };
        // Global null first, then the weak nulls in mask order.
        let masks = std::iter::once(full).chain(1..full);
        for null_mask in masks {
            let theta: Vec<f64> =
                (0..k).map(|i| if null_mask & (1 << i) != 0 { 0.0 } else { effects[i] }).collect();
            let cfg = SimConfig {
                replications,
                seed,
                spec: cell_spec.clone(),
                split: split.clone(),
                n,
                theta: theta.clone(),
            };
            let sim = simulate(&cfg)?;
            let exact = if k == 2 {
                Some(exact_fwer(split, n, &cell_spec, (theta[0], theta[1]), rho, null_mask)?)
            } else {
                None
            };
            rows.push(FwerRow {
                rho,
                null_mask,
                fwer: sim.fwer.expect("sweep cells always have a null"),
                exact,
            });
        }
    }
    Ok(rows)
}

/// Exact probability of rejecting a null endpoint for two endpoints.
pub fn exact_fwer(
    split: &AlphaSplit,
    n: f64,
    spec: &DesignSpec,
    theta: (f64, f64),
    rho: f64,
    null_mask: usize,
) -> Result<f64> {
    let op = outcome_probabilities(split, n, spec, theta, rho)?;
    Ok(match null_mask {
        0b11 => 1.0 - op.p_none.value(),
        0b01 => marginal_power(&op, 0)?.value(),
        0b10 => marginal_power(&op, 1)?.value(),
        _ => 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equal_power::equal_power_design;
    use crate::stats::normal::cdf;

    fn config(r: &[f64], rho: f64, reps: u64, seed: u64, theta: Option<Vec<f64>>) -> SimConfig {
        let corr = CorrelationMatrix::exchangeable(r.len(), rho).unwrap();
        let spec = DesignSpec::scaled(r, 0.025, 0.1, Some(corr)).unwrap();
        let design = equal_power_design(&spec).unwrap();
        SimConfig {
            replications: reps,
            seed,
            theta: theta.unwrap_or_else(|| r.to_vec()),
            n: design.n,
            split: design.split,
            spec,
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let cfg = config(&[1.0, 1.3], 0.3, 40_000, 7, None);
        let a = simulate(&cfg).unwrap();
        let b = simulate(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.counts.iter().sum::<u64>(), 40_000);
        let other = simulate(&SimConfig { seed: 8, ..cfg }).unwrap();
        assert_ne!(a.counts, other.counts);
    }

    #[cfg(feature = "parallel")]
    #[test]
    fn independent_of_thread_count() {
        let cfg = config(&[1.0, 1.2, 1.5], 0.4, 3 * BLOCK + 17, 11, None);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| simulate(&cfg)).unwrap();
        let pool4 = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        assert_eq!(serial, pool4.install(|| simulate(&cfg)).unwrap());
    }

    #[test]
    fn standard_errors_and_totals() {
        let cfg = config(&[1.0, 1.2], 0.0, 10_000, 3, None);
        let res = simulate(&cfg).unwrap();
        for e in res.marginal.iter().chain([&res.conjunctive, &res.disjunctive]) {
            let want = (e.value * (1.0 - e.value) / 10_000.0).sqrt();
            assert!((e.se - want).abs() < 1e-15);
        }
        assert!(res.fwer.is_none());
        let marg_from_cells = res.counts[1] + res.counts[3];
        assert_eq!(Estimate::from_count(marg_from_cells, 10_000), res.marginal[0]);
    }

    #[test]
    fn first_iteration_matches_closed_form() {
        for r in [vec![1.0], vec![1.0, 1.4], vec![1.0, 1.1, 1.6, 2.0, 1.3]] {
            let cfg = config(&r, 0.2, 50_000, 5, None);
            let res = simulate(&cfg).unwrap();
            let s = cfg.n.sqrt();
            for (i, e) in res.first_iteration.iter().enumerate() {
                let exact = cdf(s * r[i] + cfg.split.z_alpha[i]);
                assert!(e.z_distance(exact, cfg.replications) < 4.0, "{r:?} {i}: {} vs {exact}", e.value);
            }
        }
    }

    #[test]
    fn agrees_with_exact_outcomes() {
        let cfg = config(&[1.0, 1.2], 0.3, 200_000, 2024, None);
        let res = simulate(&cfg).unwrap();
        let op = outcome_probabilities(&cfg.split, cfg.n, &cfg.spec, (1.0, 1.2), 0.3).unwrap();
        let exact = [op.p_none, op.p_only1, op.p_only2, op.p_both];
        for (mask, e) in exact.iter().enumerate() {
            assert!(res.outcome(mask).z_distance(e.value(), cfg.replications) < 4.0);
        }
    }

    #[test]
    fn near_singular_is_an_error() {
        let mut cfg = config(&[1.0, 1.2], 0.0, 100, 1, None);
        cfg.spec.correlation = Some(CorrelationMatrix::exchangeable(2, 1.0 - 1e-12).unwrap());
        let err = simulate(&cfg).unwrap_err();
        assert!(!err.is_domain(), "{err}");
        let spec = DesignSpec { correlation: None, ..cfg.spec.clone() };
        assert!(fwer_sweep(&spec, &cfg.split, cfg.n, &[0.0, 0.999_999_999_999], 100, 1).is_err());
    }

    #[test]
    fn input_errors() {
        let cfg = config(&[1.0, 1.2], 0.0, 100, 1, None);
        assert!(simulate(&SimConfig { replications: 0, ..cfg.clone() }).unwrap_err().is_domain());
        assert!(simulate(&SimConfig { theta: vec![1.0], ..cfg.clone() }).is_err());
        let no_corr = SimConfig { spec: DesignSpec { correlation: None, ..cfg.spec.clone() }, ..cfg };
        assert!(simulate(&no_corr).unwrap_err().is_domain());
    }

    #[test]
    fn sweep_layout_and_bounds() {
        let cfg = config(&[1.0, 1.5], 0.0, 100, 1, None);
        let rows = fwer_sweep(&cfg.spec, &cfg.split, cfg.n, &[-0.4, 0.4], 20_000, 9).unwrap();
        assert_eq!(rows.len(), 6);
        assert_eq!(rows[0].null_mask, 0b11);
        for row in &rows {
            let exact = row.exact.unwrap();
            assert!(exact <= 0.025 + 1e-9);
            assert!(row.fwer.value <= 0.025 + 3.0 * row.fwer.se.max(1.0 / 20_000.0) + 1e-3);
            assert!(row.fwer.z_distance(exact, 20_000) < 4.5);
        }
    }
}
