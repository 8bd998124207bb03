//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Each exported function takes plain numbers and returns a JSON string.
//! The `*_json` functions hold the logic so they can be tested natively.

use coprimary::equal_power::equal_power_design;
use coprimary::oc::{
    default_r_grid, n_comparison_curves, outcome_probabilities, rule_design, Hypothesis, OcRule,
};
use coprimary::{DesignSpec, Result};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Equal-power split and scaled sample size for effect ratios `r`
/// (the first should be 1).
pub fn equal_power_json(r: &[f64], alpha: f64, power: f64) -> Result<Value> {
    let spec = DesignSpec::scaled(r, alpha, 1.0 - power, None)?;
    let design = equal_power_design(&spec)?;
    Ok(json!({
        "r": r,
        "alpha": design.split.alphas(),
        "z_alpha": design.split.z_alpha,
        "n_scaled": design.n_scaled,
    }))
}

/// Scaled sample size under each rule over r = 1.00, 1.05, ..., 2.50.
pub fn curves_json(alpha: f64, power: f64, rho: f64) -> Result<Value> {
    let rows = n_comparison_curves(&default_r_grid(), alpha, power, rho)?;
    Ok(json!(rows))
}

/// Outcome probabilities at one `(r, rho)` for the equal-alpha and
/// equal-power designs, under each of the four hypotheses.
pub fn outcomes_json(r: f64, rho: f64, alpha: f64, power: f64) -> Result<Value> {
    let spec = DesignSpec::scaled(&[1.0, r], alpha, 1.0 - power, None)?;
    let mut rows = Vec::new();
    for rule in [OcRule::EqualAlpha, OcRule::EqualPower] {
        let (split, n) = rule_design(rule, r, alpha, power)?;
        for h in Hypothesis::ALL {
            let op = outcome_probabilities(&split, n, &spec, h.effects(r), rho)?;
            rows.push(json!({
                "rule": rule,
                "hypothesis": h.to_string(),
                "p_none": op.p_none.value(),
                "p_only1": op.p_only1.value(),
                "p_only2": op.p_only2.value(),
                "p_both": op.p_both.value(),
            }));
        }
    }
    Ok(Value::from(rows))
}

fn to_js(v: Result<Value>) -> std::result::Result<String, JsError> {
    v.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = equalPower)]
pub fn equal_power(r: Vec<f64>, alpha: f64, power: f64) -> std::result::Result<String, JsError> {
    to_js(equal_power_json(&r, alpha, power))
}

#[wasm_bindgen(js_name = sampleSizeCurves)]
pub fn sample_size_curves(alpha: f64, power: f64, rho: f64) -> std::result::Result<String, JsError> {
    to_js(curves_json(alpha, power, rho))
}

#[wasm_bindgen(js_name = outcomeProbabilities)]
pub fn outcome_table(r: f64, rho: f64, alpha: f64, power: f64) -> std::result::Result<String, JsError> {
    to_js(outcomes_json(r, rho, alpha, power))
}
