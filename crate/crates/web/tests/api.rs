use coprimary::oc::{rule_design, OcRule};
use coprimary::stats::normal::{quantile, sf};
use coprimary_web::{curves_json, equal_power_json, outcomes_json};

fn floats(v: &serde_json::Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn equal_power_matches_four_endpoint_example() {
    let v = equal_power_json(&[1.0, 1.2, 1.3, 1.5], 0.05, 0.9).unwrap();
    for (got, want) in floats(&v["alpha"]).iter().zip([0.0376, 0.0084, 0.0035, 0.00046]) {
        assert!((got - want).abs() <= 0.0005, "{got} vs {want}");
    }
    assert!(equal_power_json(&[1.0, 1.2], 1.5, 0.9).is_err());
}

#[test]
fn outcomes_match_independent_closed_form() {
    let (r, alpha, power) = (1.4, 0.025, 0.9);
    let v = outcomes_json(r, 0.0, alpha, power).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 8);
    let c = quantile(1.0 - alpha);
    for row in rows {
        let rule = if row["rule"] == "equal-alpha" { OcRule::EqualAlpha } else { OcRule::EqualPower };
        let (split, n) = rule_design(rule, r, alpha, power).unwrap();
        let theta = match row["hypothesis"].as_str().unwrap() {
            "Null" => (0.0, 0.0),
            "One" => (1.0, 0.0),
            "Two" => (0.0, r),
            _ => (1.0, r),
        };
        let cv = split.critical_values();
        let m = (n.sqrt() * theta.0, n.sqrt() * theta.1);
        let (a1, a2) = (sf(cv[0] - m.0), sf(cv[1] - m.1));
        let (b1, b2) = (sf(c - m.0), sf(c - m.1));
        let both = a1 * a2 + a1 * (b2 - a2) + a2 * (b1 - a1);
        let none = (1.0 - a1) * (1.0 - a2);
        let got_both = row["p_both"].as_f64().unwrap();
        let got_none = row["p_none"].as_f64().unwrap();
        assert!((got_both - both).abs() < 1e-10, "{row}");
        assert!((got_none - none).abs() < 1e-10, "{row}");
        let total: f64 =
            ["p_none", "p_only1", "p_only2", "p_both"].iter().map(|k| row[k].as_f64().unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn curves_cover_default_grid() {
    let v = curves_json(0.025, 0.9, 0.3).unwrap();
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 31);
    for row in rows {
        assert!(row["disjunctive"].as_f64().unwrap() <= row["equal_power"].as_f64().unwrap());
    }
}
