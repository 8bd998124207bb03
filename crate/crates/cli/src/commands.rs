use std::str::FromStr;

use serde_json::{json, Value};

use coprimary::equal_power::equal_power_design;
use coprimary::mtp::TestGraph;
use coprimary::oc::{self, Hypothesis, OcRule, ScenarioGrid, DEFAULT_RHO};
use coprimary::power::{optimize_split_with, PowerRule};
use coprimary::sim::{self, SimConfig};
use coprimary::stats::QmcOptions;
use coprimary::{AlphaSplit, CorrelationMatrix, DesignSpec, Endpoint, Probability};

use crate::report::{cell, pcell, prob, probs, Report};
use crate::{CompareArgs, DesignArgs, DesignInput, Failure, OcArgs, SimulateArgs, TableArgs, TestArgs};

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Invalid(msg.into())
}

/// Parse "0.3" (exchangeable), "1,0.3,0.3,1" (flat) or "1,0.3;0.3,1" (rows).
pub fn parse_correlation(text: &str, k: usize) -> Result<CorrelationMatrix, Failure> {
    let number =
        |s: &str| s.trim().parse::<f64>().map_err(|_| invalid(format!("cannot read '{s}' in --correlation")));
    let parse_row = |row: &str| row.split(',').map(number).collect::<Result<Vec<f64>, Failure>>();
    if text.contains(';') {
        let rows = text.split(';').map(parse_row).collect::<Result<Vec<_>, _>>()?;
        return Ok(CorrelationMatrix::from_rows(&rows)?);
    }
    let flat = parse_row(text)?;
    if flat.len() == 1 {
        Ok(CorrelationMatrix::exchangeable(k, flat[0])?)
    } else {
        Ok(CorrelationMatrix::new(k, flat)?)
    }
}

fn parse_matrix(text: &str) -> Result<Vec<Vec<f64>>, Failure> {
    text.split(';')
        .map(|row| {
            row.split(',')
                .map(|s| {
                    s.trim().parse::<f64>().map_err(|_| invalid(format!("cannot read '{s}' as a number")))
                })
                .collect()
        })
        .collect()
}

struct LoadedDesign {
    spec: DesignSpec,
    alpha_input: f64,
    two_sided: bool,
}

impl LoadedDesign {
    fn sidedness(&self) -> Value {
        json!({
            "sided": if self.two_sided { "two-sided" } else { "one-sided" },
            "alpha_input": prob(self.alpha_input),
            "alpha_one_sided": prob(self.spec.alpha.value()),
        })
    }
}

fn load_design(input: &DesignInput) -> Result<LoadedDesign, Failure> {
    let mut spec = match &input.spec {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
            DesignSpec::from_json(&text)?
        }
        None => {
            let alpha = input.alpha.ok_or_else(|| invalid("--alpha is required without --spec"))?;
            let power = input.power.ok_or_else(|| invalid("--power is required without --spec"))?;
            if input.delta.is_empty() {
                return Err(invalid("give at least one --delta"));
            }
            let k = input.delta.len();
            let sigma = match input.sigma.len() {
                0 => vec![1.0; k],
                1 => vec![input.sigma[0]; k],
                n if n == k => input.sigma.clone(),
                n => return Err(invalid(format!("{n} sigmas for {k} endpoints"))),
            };
            let endpoints = input
                .delta
                .iter()
                .zip(&sigma)
                .map(|(&d, &s)| Endpoint::new(d, s))
                .collect::<Result<Vec<_>, _>>()?;
            let corr = input.correlation.as_deref().map(|c| parse_correlation(c, k)).transpose()?;
            DesignSpec::new(endpoints, alpha, 1.0 - power, input.d.unwrap_or(1.0), corr)?
        }
    };
    if input.spec.is_some() {
        if let Some(c) = &input.correlation {
            spec.correlation = Some(parse_correlation(c, spec.k())?);
        }
    }
    let alpha_input = spec.alpha.value();
    if input.two_sided {
        spec.alpha = Probability::new(alpha_input / 2.0)?;
    }
    Ok(LoadedDesign { spec, alpha_input, two_sided: input.two_sided })
}

fn rule_name(rule: PowerRule) -> &'static str {
    match rule {
        PowerRule::MarginalEqual => "equal-power",
        PowerRule::Conjunctive => "conjunctive",
        PowerRule::Disjunctive => "disjunctive",
    }
}

pub fn design(args: &DesignArgs) -> Result<Report, Failure> {
    let rule = PowerRule::from_str(&args.rule)?;
    let loaded = load_design(&args.input)?;
    let spec = &loaded.spec;
    let result = match rule {
        PowerRule::MarginalEqual => equal_power_design(spec)?,
        _ => {
            let qmc = QmcOptions { seed: args.qmc_seed, ..QmcOptions::default() };
            optimize_split_with(rule, spec, spec.power(), &qmc)?
        }
    };
    let alphas = result.split.alphas();
    let json = json!({
        "rule": rule_name(rule),
        "alpha": prob(spec.alpha.value()),
        "power": prob(spec.power()),
        "d": spec.d,
        "metadata": loaded.sidedness(),
        "endpoints": spec.endpoints.iter().map(|e| json!({"delta": e.delta, "sigma": e.sigma})).collect::<Vec<_>>(),
        "split": {
            "alpha": probs(&alphas),
            "z_alpha": result.split.z_alpha,
        },
        "n": result.n,
        "n_scaled": result.n_scaled,
        "n_raw": result.n_raw,
        "n_final": result.n_final,
    });
    let mut report =
        Report::new(json, &["endpoint", "delta", "sigma", "alpha", "z_alpha", "n_raw", "n", "n_final"]);
    for (i, e) in spec.endpoints.iter().enumerate() {
        report.row(vec![
            cell(i + 1),
            cell(e.delta),
            cell(e.sigma),
            pcell(alphas[i]),
            cell(result.split.z_alpha[i]),
            cell(result.n_raw[i]),
            cell(result.n),
            cell(result.n_final),
        ]);
    }
    Ok(report)
}

pub fn table(args: &TableArgs) -> Result<Report, Failure> {
    let rows = oc::table1_generate(&args.alpha, &args.power, &args.r)?;
    let json = json!({
        "alpha1_unit": "percent",
        "n_scale": "d * sigma_1^2 / delta_1^2",
        "rows": rows.iter().map(|row| json!({
            "r": row.r,
            "alpha": prob(row.alpha),
            "power": prob(row.power),
            "alpha1_percent": prob(row.alpha1_percent),
            "n_scaled": row.n_scaled,
        })).collect::<Vec<_>>(),
    });
    let mut report = Report::new(json, &["r", "alpha", "power", "alpha1_percent", "n_scaled"]);
    for row in rows.iter().map(|r| r.rounded()) {
        report.row(vec![
            cell(row.r),
            cell(row.alpha),
            cell(row.power),
            format!("{:.2}", row.alpha1_percent),
            format!("{:.2}", row.n_scaled),
        ]);
    }
    Ok(report)
}

pub fn compare_n(args: &CompareArgs) -> Result<Report, Failure> {
    let r = if args.r.is_empty() { oc::default_r_grid() } else { args.r.clone() };
    let rows = oc::n_comparison_curves(&r, args.alpha, args.power, args.rho)?;
    let header = ["r", "equal_power", "equal_alpha_max", "equal_alpha_min", "conjunctive", "disjunctive"];
    let json = json!({
        "alpha": prob(args.alpha),
        "power": prob(args.power),
        "rho": args.rho,
        "n_scale": "d * sigma_1^2 / delta_1^2",
        "rows": rows,
    });
    let mut report = Report::new(json, &header);
    for row in &rows {
        let mut cells = vec![cell(row.r)];
        cells.extend(row.values().iter().map(|&v| cell(v)));
        report.row(cells);
    }
    Ok(report)
}

pub fn oc(args: &OcArgs) -> Result<Report, Failure> {
    let hypotheses = if args.hypothesis.is_empty() {
        Hypothesis::ALL.to_vec()
    } else {
        args.hypothesis.iter().map(|h| h.parse()).collect::<Result<Vec<Hypothesis>, _>>()?
    };
    let rules = args.rules.iter().map(|r| r.parse()).collect::<Result<Vec<OcRule>, _>>()?;
    let r = if args.r.is_empty() { oc::default_r_grid() } else { args.r.clone() };
    let rho = if args.rho.is_empty() { DEFAULT_RHO.to_vec() } else { args.rho.clone() };
    let mut rows = Vec::new();
    for h in hypotheses {
        let grid = ScenarioGrid::new(r.clone(), rho.clone(), h)?;
        rows.extend(oc::oc_grid(&grid, &rules, args.alpha, args.power)?);
    }
    let header = [
        "hypothesis",
        "rule",
        "r",
        "rho",
        "alpha1",
        "n_scaled",
        "p_none",
        "p_only1",
        "p_only2",
        "p_both",
        "marginal1",
        "marginal2",
        "conjunctive",
    ];
    let json_rows: Vec<Value> = rows
        .iter()
        .map(|row| {
            json!({
                "hypothesis": row.hypothesis.to_string(),
                "rule": row.rule.to_string(),
                "r": row.r,
                "rho": row.rho,
                "alpha1": prob(row.alpha1),
                "n_scaled": row.n_scaled,
                "p_none": prob(row.p_none),
                "p_only1": prob(row.p_only1),
                "p_only2": prob(row.p_only2),
                "p_both": prob(row.p_both),
                "marginal1": prob(row.marginal1),
                "marginal2": prob(row.marginal2),
                "conjunctive": prob(row.conjunctive),
            })
        })
        .collect();
    let json = json!({"alpha": prob(args.alpha), "power": prob(args.power), "rows": json_rows});
    let mut report = Report::new(json, &header);
    for row in &rows {
        report.row(vec![
            row.hypothesis.to_string(),
            row.rule.to_string(),
            cell(row.r),
            cell(row.rho),
            pcell(row.alpha1),
            cell(row.n_scaled),
            pcell(row.p_none),
            pcell(row.p_only1),
            pcell(row.p_only2),
            pcell(row.p_both),
            pcell(row.marginal1),
            pcell(row.marginal2),
            pcell(row.conjunctive),
        ]);
    }
    Ok(report)
}

fn one_based(mask: impl Iterator<Item = bool>) -> Vec<usize> {
    mask.enumerate().filter(|(_, r)| *r).map(|(i, _)| i + 1).collect()
}

pub fn test(args: &TestArgs) -> Result<Report, Failure> {
    let split = AlphaSplit::from_alphas(&args.split)?;
    let graph = match &args.transfer {
        Some(t) => TestGraph::new(split.alphas(), parse_matrix(t)?)?,
        None => TestGraph::holm_complete(&split),
    };
    let k = graph.k();
    let outcome = graph.run(&args.p)?;
    let trace: Vec<Value> = outcome
        .trace
        .iter()
        .enumerate()
        .map(|(i, s)| json!({"iteration": i + 1, "rejected": s.rejected + 1, "weights": probs(&s.weights)}))
        .collect();
    let mut json = json!({
        "weights": probs(graph.weights()),
        "transfer": graph.transfer(),
        "p": args.p,
        "rejected": outcome.rejected,
        "rejected_hypotheses": one_based(outcome.rejected.iter().copied()),
        "trace": trace,
    });
    let mut header = vec!["iteration".to_string(), "rejected".to_string()];
    header.extend((1..=k).map(|i| format!("weight_{i}")));
    let mut report = Report { json: Value::Null, header, rows: Vec::new() };
    let history = if args.replay {
        let h = outcome.replay(&graph)?;
        json["replay"] = Value::from(h.iter().map(|w| probs(w)).collect::<Vec<_>>());
        h
    } else {
        std::iter::once(graph.weights().to_vec())
            .chain(outcome.trace.iter().map(|s| s.weights.clone()))
            .collect()
    };
    for (i, w) in history.iter().enumerate() {
        let rejected = if i == 0 { String::new() } else { cell(outcome.trace[i - 1].rejected + 1) };
        let mut row = vec![cell(i), rejected];
        row.extend(w.iter().map(|&x| pcell(x)));
        report.row(row);
    }
    report.json = json;
    Ok(report)
}

pub fn simulate(args: &SimulateArgs) -> Result<Report, Failure> {
    let loaded = load_design(&args.input)?;
    let spec = loaded.spec;
    let needs_design = args.split.is_empty() || args.n.is_none();
    let design = if needs_design { Some(equal_power_design(&spec)?) } else { None };
    let split = if args.split.is_empty() {
        design.as_ref().map(|d| d.split.clone()).expect("design computed")
    } else {
        AlphaSplit::from_alphas(&args.split)?
    };
    let n = args.n.or(design.as_ref().map(|d| d.n)).expect("n known");

    if !args.sweep_rho.is_empty() {
        let rows = sim::fwer_sweep(&spec, &split, n, &args.sweep_rho, args.replications, args.seed)?;
        let k = spec.k();
        let nulls = |mask: usize| one_based((0..k).map(|i| mask & (1 << i) != 0));
        let json = json!({
            "seed": args.seed,
            "replications": args.replications,
            "n": n,
            "split": probs(&split.alphas()),
            "rows": rows.iter().map(|r| json!({
                "rho": r.rho,
                "null_hypotheses": nulls(r.null_mask),
                "fwer": prob(r.fwer.value),
                "se": prob(r.fwer.se),
                "exact": r.exact.map(prob),
            })).collect::<Vec<_>>(),
        });
        let mut report = Report::new(json, &["rho", "null_hypotheses", "fwer", "se", "exact"]);
        for r in &rows {
            let names: Vec<String> = nulls(r.null_mask).iter().map(|i| i.to_string()).collect();
            report.row(vec![
                cell(r.rho),
                names.join(" "),
                pcell(r.fwer.value),
                pcell(r.fwer.se),
                r.exact.map(pcell).unwrap_or_default(),
            ]);
        }
        return Ok(report);
    }

    let theta = if args.theta.is_empty() { spec.effects() } else { args.theta.clone() };
    let cfg = SimConfig {
        replications: args.replications,
        seed: args.seed,
        spec,
        split: split.clone(),
        n,
        theta: theta.clone(),
    };
    let res = sim::simulate(&cfg)?;
    let values = |es: &[sim::Estimate]| probs(&es.iter().map(|e| e.value).collect::<Vec<_>>());
    let ses = |es: &[sim::Estimate]| probs(&es.iter().map(|e| e.se).collect::<Vec<_>>());
    let k = theta.len();
    let counts: Vec<Value> = res
        .counts
        .iter()
        .enumerate()
        .map(|(mask, c)| json!({"rejected": one_based((0..k).map(|i| mask & (1 << i) != 0)), "count": c}))
        .collect();
    let json = json!({
        "seed": res.seed,
        "replications": res.replications,
        "n": n,
        "theta": theta,
        "split": probs(&split.alphas()),
        "estimates": {
            "marginal": values(&res.marginal),
            "first_iteration": values(&res.first_iteration),
            "conjunctive": prob(res.conjunctive.value),
            "disjunctive": prob(res.disjunctive.value),
            "fwer": res.fwer.map(|e| prob(e.value)),
        },
        "standard_errors": {
            "marginal": ses(&res.marginal),
            "first_iteration": ses(&res.first_iteration),
            "conjunctive": prob(res.conjunctive.se),
            "disjunctive": prob(res.disjunctive.se),
            "fwer": res.fwer.map(|e| prob(e.se)),
        },
        "counts": counts,
    });
    let mut report = Report::new(json, &["quantity", "endpoint", "estimate", "se"]);
    for (name, es) in [("marginal", &res.marginal), ("first_iteration", &res.first_iteration)] {
        for (i, e) in es.iter().enumerate() {
            report.row(vec![name.to_string(), cell(i + 1), pcell(e.value), pcell(e.se)]);
        }
    }
    let mut totals = vec![("conjunctive", res.conjunctive), ("disjunctive", res.disjunctive)];
    if let Some(f) = res.fwer {
        totals.push(("fwer", f));
    }
    for (name, e) in totals {
        report.row(vec![name.to_string(), String::new(), pcell(e.value), pcell(e.se)]);
    }
    Ok(report)
}
