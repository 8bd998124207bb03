//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use coprimary::design::sample_size;
use coprimary::equal_power::solve_lambda;
use coprimary::mtp::TestGraph;
use coprimary::oc::{
    default_r_grid, marginal_power, n_comparison_curves, outcome_probabilities, rule_design, table1_generate,
    OcRule, DEFAULT_RHO,
};
use coprimary::power::{n_for_power, optimize_split, PowerRule};
use coprimary::sim::{exact_fwer, fwer_sweep, simulate, SimConfig};
use coprimary::stats::normal::{cdf, quantile};
use coprimary::stats::{bvn_rect, mvn_orthant};
use coprimary::{AlphaSplit, CorrelationMatrix, DesignSpec, Endpoint};

struct Outcome {
    pass: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn four_endpoint_r() -> [f64; 4] {
    [1.0, 1.2, 1.3, 1.5]
}

fn c1_example_regression() -> Outcome {
    // Warm up once so the timing reflects the solver, not page faults.
    let _ = solve_lambda(&four_endpoint_r(), 0.05, 0.1);
    let (split, t) = timed(|| solve_lambda(&four_endpoint_r(), 0.05, 0.1).unwrap());
    let want_z = [-1.78, -2.39, -2.70, -3.31];
    let want_a = [0.0376, 0.0084, 0.0035, 0.00046];
    let z_err = split.z_alpha.iter().zip(want_z).map(|(z, w)| (z - w).abs()).fold(0.0, f64::max);
    let a_err = split.alphas().iter().zip(want_a).map(|(a, w)| (a - w).abs()).fold(0.0, f64::max);
    check(
        z_err <= 0.005 && a_err <= 0.0005 && t < Duration::from_millis(1),
        format!("max |dz| {z_err:.2e}, max |dalpha| {a_err:.2e}, {:.3} ms", ms(t)),
    )
}

fn c2_lookup_table() -> Outcome {
    // (r, alpha, power, alpha_1 percent, scaled n) as printed.
    let printed: [(f64, f64, f64, f64, f64); 20] = [
        (1.1, 0.025, 0.8, 1.71, 8.76),
        (1.1, 0.025, 0.9, 1.77, 11.46),
        (1.1, 0.05, 0.8, 3.26, 7.21),
        (1.1, 0.05, 0.9, 3.38, 9.67),
        (1.2, 0.025, 0.8, 2.06, 8.31),
        (1.2, 0.025, 0.9, 2.14, 10.94),
        (1.2, 0.05, 0.8, 3.89, 6.79),
        (1.2, 0.05, 0.9, 4.06, 9.15),
        (1.3, 0.025, 0.8, 2.28, 8.07),
        (1.3, 0.025, 0.9, 2.35, 10.68),
        (1.3, 0.05, 0.8, 4.34, 6.52),
        (1.3, 0.05, 0.9, 4.52, 8.85),
        (1.4, 0.025, 0.8, 2.40, 7.94),
        (1.4, 0.025, 0.9, 2.45, 10.57),
        (1.4, 0.05, 0.8, 4.64, 6.36),
        (1.4, 0.05, 0.9, 4.78, 8.69),
        (1.5, 0.025, 0.8, 2.46, 7.89),
        (1.5, 0.025, 0.9, 2.48, 10.53),
        (1.5, 0.05, 0.8, 4.82, 6.27),
        (1.5, 0.05, 0.9, 4.91, 8.62),
    ];
    let (rows, t) =
        timed(|| table1_generate(&[0.025, 0.05], &[0.8, 0.9], &[1.1, 1.2, 1.3, 1.4, 1.5]).unwrap());
    let mut worst: f64 = 0.0;
    let mut matched = 0;
    for (r, a, p, a1, n) in printed {
        let Some(row) = rows.iter().find(|x| x.r == r && x.alpha == a && x.power == p) else {
            continue;
        };
        let row = row.rounded();
        let err = (row.alpha1_percent - a1).abs().max((row.n_scaled - n).abs());
        worst = worst.max(err);
        if err <= 0.01 + 1e-9 {
            matched += 1;
        }
    }
    check(
        matched == 20 && t < Duration::from_millis(100),
        format!("{matched}/20 cells within 0.01 (worst {worst:.3}), {:.2} ms", ms(t)),
    )
}

fn c3_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst_sum: f64 = 0.0;
    let mut worst_spread: f64 = 0.0;
    let mut failures = 0;
    for _ in 0..200 {
        let k = rng.gen_range(1..=6);
        let r: Vec<f64> = (0..k).map(|i| if i == 0 { 1.0 } else { rng.gen_range(0.5..3.0) }).collect();
        let alpha = rng.gen_range(0.005..0.2);
        let beta = rng.gen_range(0.05..0.5);
        let Ok(split) = solve_lambda(&r, alpha, beta) else {
            failures += 1;
            continue;
        };
        let sum: f64 = split.z_alpha.iter().map(|&z| cdf(z)).sum();
        worst_sum = worst_sum.max((sum - alpha).abs());
        let n: Vec<f64> = split
            .z_alpha
            .iter()
            .zip(&r)
            .map(|(&z, &ri)| sample_size(z, beta, 1.0, &Endpoint::new(ri, 1.0).unwrap()))
            .collect();
        let hi = n.iter().cloned().fold(f64::MIN, f64::max);
        let lo = n.iter().cloned().fold(f64::MAX, f64::min);
        worst_spread = worst_spread.max((hi - lo) / hi);
    }
    check(
        failures == 0 && worst_sum <= 1e-12 && worst_spread <= 1e-8,
        format!("200 designs, {failures} solver failures, max |sum - alpha| {worst_sum:.1e}, max n spread {worst_spread:.1e}"),
    )
}

fn c4_example_sum() -> Outcome {
    let split = solve_lambda(&four_endpoint_r(), 0.05, 0.1).unwrap();
    let sum: f64 = split.z_alpha.iter().map(|&z| cdf(z)).sum();
    let printed_sum: f64 = [0.0376, 0.0084, 0.0035, 0.00046].iter().sum();
    check(
        (sum - 0.05).abs() <= 1e-12 && (printed_sum - 0.05).abs() < 0.0005,
        format!("sum Φ(z) - 0.05 = {:.1e}; printed levels sum to {printed_sum:.5}", sum - 0.05),
    )
}

fn c5_kernels() -> Outcome {
    // Log-spaced from 1e-8 toward 1/2, mirrored into the upper tail.
    let mut round_trip: f64 = 0.0;
    for i in 0..=4000 {
        let p = 10f64.powf(-8.0 + i as f64 * (8.0 - 2f64.log10()) / 4000.0);
        for q in [p, 1.0 - p] {
            round_trip = round_trip.max((cdf(quantile(q)) - q).abs());
        }
    }
    let mut orthant: f64 = 0.0;
    for i in -19..=19 {
        let rho = i as f64 * 0.05;
        let got = bvn_rect((0.0, 0.0), (f64::INFINITY, f64::INFINITY), rho).unwrap().value();
        let want = 0.25 + rho.asin() / (2.0 * std::f64::consts::PI);
        orthant = orthant.max((got - want).abs());
    }
    let mut worst_z: f64 = 0.0;
    for &(h, k, rho) in
        &[(0.3, -0.4, 0.5), (1.5, 1.0, -0.7), (-1.0, 2.0, 0.9), (0.0, 0.0, 0.3), (2.5, -2.0, -0.2)]
    {
        let corr = CorrelationMatrix::exchangeable(2, rho).unwrap();
        let est = mvn_orthant(&[h, k], &corr).unwrap();
        let exact = bvn_rect((f64::NEG_INFINITY, f64::NEG_INFINITY), (h, k), rho).unwrap().value();
        worst_z = worst_z.max((est.value.value() - exact).abs() / est.error);
    }
    check(
        round_trip <= 1e-12 && orthant <= 1e-10 && worst_z <= 3.0,
        format!("round trip {round_trip:.1e}, orthant identity {orthant:.1e}, QMC vs exact {worst_z:.2} SE"),
    )
}

fn c6_fwer() -> Outcome {
    let start = Instant::now();
    let alpha = 0.025;
    // Exact: every rule and ratio, strong and weak nulls.
    let mut worst_exact: f64 = 0.0;
    let spec1 = DesignSpec::scaled(&[1.0, 1.0], alpha, 0.1, None).unwrap();
    for r in default_r_grid() {
        for rule in [OcRule::EqualAlpha, OcRule::EqualPower] {
            let (split, n) = rule_design(rule, r, alpha, 0.9).unwrap();
            for rho in DEFAULT_RHO {
                for (theta, mask) in [((0.0, 0.0), 0b11), ((1.0, 0.0), 0b10), ((0.0, r), 0b01)] {
                    let f = exact_fwer(&split, n, &spec1, theta, rho, mask).unwrap();
                    worst_exact = worst_exact.max(f - alpha);
                }
            }
        }
    }
    // Simulated, 10^6 replications per cell.
    let reps = 1_000_000;
    let (split, n) = rule_design(OcRule::EqualPower, 1.2, alpha, 0.9).unwrap();
    let spec = DesignSpec::scaled(&[1.0, 1.2], alpha, 0.1, None).unwrap();
    let rows = fwer_sweep(&spec, &split, n, &DEFAULT_RHO, reps, 20_240_601).unwrap();
    let mut worst_sim: f64 = 0.0;
    for row in &rows {
        worst_sim = worst_sim.max(row.fwer.z_distance(row.exact.unwrap(), reps));
    }
    // Every outcome cell at the design alternative.
    let corr = CorrelationMatrix::exchangeable(2, 0.3).unwrap();
    let cfg = SimConfig {
        replications: reps,
        seed: 20_240_602,
        spec: DesignSpec { correlation: Some(corr), ..spec.clone() },
        split: split.clone(),
        n,
        theta: vec![1.0, 1.2],
    };
    let sim = simulate(&cfg).unwrap();
    let op = outcome_probabilities(&split, n, &spec, (1.0, 1.2), 0.3).unwrap();
    let exact = [op.p_none, op.p_only1, op.p_only2, op.p_both];
    let worst_cell = (0..4).map(|m| sim.outcome(m).z_distance(exact[m].value(), reps)).fold(0.0, f64::max);
    let t = start.elapsed();
    check(
        worst_exact <= 1e-9 && worst_sim <= 3.0 && worst_cell <= 3.0 && t < Duration::from_secs(60),
        format!(
            "exact excess over alpha {worst_exact:.2e}; {} simulated FWER cells, worst {worst_sim:.2} SE; outcome cells worst {worst_cell:.2} SE; {:.1} s",
            rows.len(),
            t.as_secs_f64()
        ),
    )
}

fn c7_sample_size_curves() -> Outcome {
    let rows = n_comparison_curves(&default_r_grid(), 0.025, 0.9, 0.3).unwrap();
    let disj_smallest = rows.iter().all(|row| row.values().iter().all(|&v| row.disjunctive <= v));
    let gaps: Vec<f64> = rows.iter().map(|row| row.equal_alpha_max - row.equal_alpha_min).collect();
    let gap_grows = gaps.windows(2).all(|w| w[1] > w[0]);
    let at = |r: f64| rows.iter().find(|row| (row.r - r).abs() < 1e-12).unwrap();
    let (n16, n25) = (at(1.6).equal_power, at(2.5).equal_power);
    let flat = rows
        .iter()
        .filter(|row| row.r >= 1.6)
        .map(|row| (row.equal_power - n16).abs() / n16)
        .fold(0.0, f64::max);
    let first = at(1.0);
    let conj_largest = first.values().iter().all(|&v| first.conjunctive >= v);
    let last = at(2.5);
    let conj_gap = (last.conjunctive - last.equal_power).abs() / last.equal_power;
    check(
        disj_smallest && gap_grows && flat < 0.02 && conj_largest && conj_gap < 0.02,
        format!(
            "disjunctive smallest: {disj_smallest}; equal-alpha gap increasing: {gap_grows}; \
             equal-power n(1.6)={n16:.4} n(2.5)={n25:.4}, max drift beyond 1.6 {:.2}%; \
             conjunctive largest at r=1: {conj_largest}; conjunctive gap at 2.5 {:.3}%",
            100.0 * flat,
            100.0 * conj_gap
        ),
    )
}

fn c8_conservative_marginals() -> Outcome {
    let spec1 = DesignSpec::scaled(&[1.0, 1.0], 0.025, 0.1, None).unwrap();
    let mut worst = f64::INFINITY;
    let mut designs = 0;
    for r in default_r_grid() {
        for alpha in [0.025, 0.05] {
            for power in [0.8, 0.9] {
                let (split, n) = rule_design(OcRule::EqualPower, r, alpha, power).unwrap();
                for rho in [-0.8, -0.4, 0.0, 0.3, 0.4, 0.8] {
                    let op = outcome_probabilities(&split, n, &spec1, (1.0, r), rho).unwrap();
                    for i in 0..2 {
                        worst = worst.min(marginal_power(&op, i).unwrap().value() - power);
                    }
                    designs += 1;
                }
            }
        }
    }
    check(
        worst >= -1e-12,
        format!("{designs} design/correlation pairs, min(marginal - target) = {worst:.3e}"),
    )
}

fn c9_optimizer_oracle() -> Outcome {
    let start = Instant::now();
    let (alpha, power) = (0.025, 0.9);
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for rule in [PowerRule::Conjunctive, PowerRule::Disjunctive] {
        for rho in [0.0, 0.3, 0.6] {
            for r in [1.0, 1.2, 1.5] {
                let corr = CorrelationMatrix::exchangeable(2, rho).unwrap();
                let spec = DesignSpec::scaled(&[1.0, r], alpha, 1.0 - power, Some(corr)).unwrap();
                let opt = optimize_split(rule, &spec, power).unwrap().n;
                let grid = (0..10_000)
                    .map(|i| {
                        let a1 = alpha * (i as f64 + 0.5) / 10_000.0;
                        let split = AlphaSplit::from_alphas(&[a1, alpha - a1]).unwrap();
                        n_for_power(rule, &spec, &split, power).unwrap()
                    })
                    .fold(f64::INFINITY, f64::min);
                let rel = (opt - grid).abs() / grid;
                if rel > 1e-4 {
                    lines.push(format!("{rule} rho={rho} r={r}: opt {opt:.6} grid {grid:.6}"));
                }
                worst = worst.max(rel);
            }
        }
    }
    let t = start.elapsed();
    check(
        worst <= 1e-4 && t < Duration::from_secs(30),
        format!("18 cases, worst relative gap {worst:.2e}, {:.1} s {}", t.as_secs_f64(), lines.join("; ")),
    )
}

fn holm(alpha: f64, p: &[f64]) -> Vec<bool> {
    let k = p.len();
    let mut idx: Vec<usize> = (0..k).collect();
    idx.sort_by(|&a, &b| p[a].total_cmp(&p[b]));
    let mut rejected = vec![false; k];
    for (step, &i) in idx.iter().enumerate() {
        if p[i] > alpha / (k - step) as f64 {
            break;
        }
        rejected[i] = true;
    }
    rejected
}

fn reachable(g: &TestGraph, p: &[f64], out: &mut Vec<Vec<bool>>) {
    let eligible = g.eligible(p);
    if eligible.is_empty() {
        let set: Vec<bool> = g.live().iter().map(|l| !l).collect();
        if !out.contains(&set) {
            out.push(set);
        }
    }
    for j in eligible {
        reachable(&g.update(j).unwrap(), p, out);
    }
}

fn c10_mtp() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut order_failures = 0;
    for _ in 0..1000 {
        let k = rng.gen_range(2..=4);
        let alpha = rng.gen_range(0.01..0.2);
        let raw: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| alpha * w / total).collect();
        let transfer: Vec<Vec<f64>> = (0..k)
            .map(|i| {
                let mut row: Vec<f64> = (0..k).map(|j| if i == j { 0.0 } else { rng.gen::<f64>() }).collect();
                let s: f64 = row.iter().sum();
                let keep = if rng.gen_bool(0.5) { 1.0 } else { rng.gen::<f64>() };
                row.iter_mut().for_each(|g| *g *= keep / s);
                row
            })
            .collect();
        let g = TestGraph::new(weights, transfer).unwrap();
        let p: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * alpha * 1.5).collect();
        let mut sets = Vec::new();
        reachable(&g, &p, &mut sets);
        if sets.len() != 1 || sets[0] != g.run(&p).unwrap().rejected {
            order_failures += 1;
        }
    }

    let alpha = 0.05;
    let mut holm_points = 0;
    let mut holm_failures = 0;
    let g2 = TestGraph::holm_complete(&AlphaSplit::equal(alpha, 2).unwrap());
    for i in 0..317 {
        for j in 0..317 {
            let p = [0.1 * (i as f64 + 0.5) / 317.0, 0.1 * (j as f64 + 0.5) / 317.0];
            holm_points += 1;
            if g2.run(&p).unwrap().rejected != holm(alpha, &p) {
                holm_failures += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for k in [3, 4, 5] {
        let g = TestGraph::holm_complete(&AlphaSplit::equal(alpha, k).unwrap());
        for _ in 0..100_000 / 3 {
            let p: Vec<f64> = (0..k).map(|_| rng.gen::<f64>() * 0.08).collect();
            holm_points += 1;
            if g.run(&p).unwrap().rejected != holm(alpha, &p) {
                holm_failures += 1;
            }
        }
    }
    check(
        order_failures == 0 && holm_failures == 0,
        format!(
            "order invariance {order_failures}/1000 failures; Holm {holm_failures}/{holm_points} mismatches"
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("four-endpoint example regression", c1_example_regression),
        ("lookup table reproduction", c2_lookup_table),
        ("constraint and equal-n identities", c3_identities),
        ("example self-consistency", c4_example_sum),
        ("kernel accuracy", c5_kernels),
        ("FWER control, exact and simulated", c6_fwer),
        ("sample-size curve shapes", c7_sample_size_curves),
        ("marginal-power conservatism", c8_conservative_marginals),
        ("optimizer vs grid search", c9_optimizer_oracle),
        ("multiple-testing procedure", c10_mtp),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let out = run();
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!("criterion {:>2} {status}  {name}: {}", i + 1, out.detail);
        if !out.pass {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
