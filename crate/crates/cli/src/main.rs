//! `coprimary`: sample-size design, lookup tables, operating characteristics
//! and simulation for trials with co-primary endpoints.
//!
//! Exit status is 0 on success, 2 when the input is invalid, 3 when a
//! numerical method fails, and 1 when the output cannot be written.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use report::Format;

#[derive(Parser, Debug)]
#[command(name = "coprimary", version, about = "Alpha splitting and sample size for co-primary endpoints")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    /// Write to this file instead of stdout
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split alpha and size a trial
    Design(DesignArgs),
    /// Equal-power lookup table for two endpoints
    Table(TableArgs),
    /// Scaled sample size under each rule across effect ratios
    CompareN(CompareArgs),
    /// Exact outcome probabilities for two endpoints
    Oc(OcArgs),
    /// Run the graphical testing procedure on observed p-values
    Test(TestArgs),
    /// Monte Carlo estimates of power and error rates
    Simulate(SimulateArgs),
}

/// A design given either as a JSON file or inline.
#[derive(Args, Debug, Clone)]
pub struct DesignInput {
    /// Design JSON file: {alpha, power, d, endpoints: [{delta, sigma}], correlation?}
    #[arg(long, conflicts_with_all = ["alpha", "power", "d", "delta", "sigma"])]
    pub spec: Option<PathBuf>,

    /// One-sided family-wise significance level
    #[arg(long)]
    pub alpha: Option<f64>,

    /// Target power
    #[arg(long)]
    pub power: Option<f64>,

    /// Design factor (e.g. 4 for a 1:1 two-arm parallel trial)
    #[arg(long)]
    pub d: Option<f64>,

    /// Clinically relevant differences, one per endpoint
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub delta: Vec<f64>,

    /// Standard deviations, one per endpoint or a single shared value
    #[arg(long, value_delimiter = ',')]
    pub sigma: Vec<f64>,

    /// Correlation: one value (exchangeable), a flat k*k list, or rows split by ';'
    #[arg(long, allow_hyphen_values = true)]
    pub correlation: Option<String>,

    /// Treat --alpha as two-sided and halve it
    #[arg(long)]
    pub two_sided: bool,
}

#[derive(Args, Debug)]
pub struct DesignArgs {
    #[command(flatten)]
    pub input: DesignInput,

    /// equal-power, conjunctive or disjunctive
    #[arg(long, default_value = "equal-power")]
    pub rule: String,

    /// Seed for the quasi-Monte Carlo integration used with three or more endpoints
    #[arg(long, default_value_t = coprimary::stats::QmcOptions::default().seed)]
    pub qmc_seed: u64,
}

#[derive(Args, Debug)]
pub struct TableArgs {
    #[arg(long, value_delimiter = ',', default_values_t = [0.025, 0.05])]
    pub alpha: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_values_t = [0.8, 0.9])]
    pub power: Vec<f64>,

    /// Effect ratios r = theta_2 / theta_1
    #[arg(long, value_delimiter = ',', default_values_t = [1.1, 1.2, 1.3, 1.4, 1.5])]
    pub r: Vec<f64>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Effect ratios; defaults to 1.00, 1.05, ..., 2.50
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,

    #[arg(long, default_value_t = 0.025)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0.9)]
    pub power: f64,

    /// Correlation used by the conjunctive and disjunctive rules
    #[arg(long, default_value_t = 0.3, allow_negative_numbers = true)]
    pub rho: f64,
}

#[derive(Args, Debug)]
pub struct OcArgs {
    /// Null, One, Two or Both; repeatable. Defaults to all four
    #[arg(long, value_delimiter = ',')]
    pub hypothesis: Vec<String>,

    /// Effect ratios; defaults to 1.00, 1.05, ..., 2.50
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<f64>,

    /// Correlations; defaults to -0.8,-0.4,0,0.4,0.8
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rho: Vec<f64>,

    /// equal-alpha and/or equal-power
    #[arg(long = "rule", value_delimiter = ',', default_values_t = ["equal-alpha".to_string(), "equal-power".to_string()])]
    pub rules: Vec<String>,

    #[arg(long, default_value_t = 0.025)]
    pub alpha: f64,

    #[arg(long, default_value_t = 0.9)]
    pub power: f64,
}

#[derive(Args, Debug)]
pub struct TestArgs {
    /// Observed one-sided p-values
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,

    /// Starting significance level of each hypothesis
    #[arg(long, value_delimiter = ',', required = true)]
    pub split: Vec<f64>,

    /// Transfer matrix rows split by ';' (default: share equally among the others)
    #[arg(long)]
    pub transfer: Option<String>,

    /// Replay the trace and print the levels after every iteration
    #[arg(long)]
    pub replay: bool,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: DesignInput,

    /// Starting levels (default: the equal-power split)
    #[arg(long, value_delimiter = ',')]
    pub split: Vec<f64>,

    /// Shared sample size (default: the equal-power design's)
    #[arg(long)]
    pub n: Option<f64>,

    /// Standardized effects to simulate under (default: the design's)
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub theta: Vec<f64>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, default_value_t = 100_000)]
    pub replications: u64,

    /// Instead of one run, estimate the FWER under every null configuration
    /// at these exchangeable correlations
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep_rho: Vec<f64>,
}

/// Failure classes, mapped to exit codes.
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Numerical(String),
    Output(String),
}

impl From<coprimary::Error> for Failure {
    fn from(e: coprimary::Error) -> Self {
        if e.is_domain() {
            Failure::Invalid(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let report = match &cli.command {
        Command::Design(a) => commands::design(a),
        Command::Table(a) => commands::table(a),
        Command::CompareN(a) => commands::compare_n(a),
        Command::Oc(a) => commands::oc(a),
        Command::Test(a) => commands::test(a),
        Command::Simulate(a) => commands::simulate(a),
    };
    let result = report.and_then(|r| r.emit(cli.format, cli.output.as_deref()).map_err(Failure::Output));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid(m)) => {
            eprintln!("coprimary: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(m)) => {
            eprintln!("coprimary: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Output(m)) => {
            eprintln!("coprimary: cannot write output: {m}");
            ExitCode::from(1)
        }
    }
}
