use std::fmt;
use std::io::Write;
use std::path::Path;

use clap::ValueEnum;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// What a subcommand produced, ready to render in either format.
pub struct Report {
    pub json: Value,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn new(json: Value, header: &[&str]) -> Self {
        Report { json, header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        self.rows.push(cells);
    }

    pub fn render(&self, format: Format) -> Result<Vec<u8>, String> {
        match format {
            Format::Json => {
                let mut out = serde_json::to_vec_pretty(&self.json).map_err(|e| e.to_string())?;
                out.push(b'\n');
                Ok(out)
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header).map_err(|e| e.to_string())?;
                for row in &self.rows {
                    w.write_record(row).map_err(|e| e.to_string())?;
                }
                w.into_inner().map_err(|e| e.to_string())
            }
        }
    }

    pub fn emit(&self, format: Format, output: Option<&Path>) -> Result<(), String> {
        let bytes = self.render(format)?;
        match output {
            Some(path) => std::fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display())),
            None => std::io::stdout().write_all(&bytes).map_err(|e| e.to_string()),
        }
    }
}

/// Round to six significant digits; probabilities are reported this way.
pub fn sig6(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.5e}").parse().unwrap_or(x)
}

pub fn prob(x: f64) -> Value {
    Value::from(sig6(x))
}

pub fn probs(xs: &[f64]) -> Value {
    Value::from(xs.iter().map(|&x| sig6(x)).collect::<Vec<_>>())
}

/// Cell text for a probability.
pub fn pcell(x: f64) -> String {
    sig6(x).to_string()
}

pub fn cell(x: impl fmt::Display) -> String {
    x.to_string()
}
