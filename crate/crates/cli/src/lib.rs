//! Command-line front end.
//!
//! Every command produces one [`OutputRecord`], rendered as aligned text,
//! a single JSON document, or CSV with a header row.

use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Map, Value};

use succession::decimal::format_f64;
use succession::montecarlo::{simulate_conditional, simulate_weighted, turkey_scenario_with};
use succession::predictive::{
    asymptotic_ratio_with, predictive_table_with, predictive_with_failures_with, DEFAULT_DIGITS, LAPLACE_DAYS,
};
use succession::{
    bruteforce_conditional, parse_prior, sunrise, Error, EstimatorKind, Prior, QuadratureOptions, Rational,
    RunEvidence, SimulationConfig,
};

/// Environment variable overriding the default quadrature tolerance.
pub const TOLERANCE_ENV: &str = "SUCCESSION_TOL";

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IMPOSSIBLE: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_NO_TRIALS: i32 = 5;

#[derive(Debug, Parser)]
#[command(name = "succession", version, about = "Rule-of-succession predictive probabilities")]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    /// Decimals in rendered probabilities (round-half-even).
    #[arg(long, default_value_t = DEFAULT_DIGITS, global = true)]
    digits: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Estimator {
    Rejection,
    Weighted,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Predictive probability after the given successes (and failures).
    Predict {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long)]
        successes: u64,
        #[arg(long, default_value_t = 0)]
        failures: u64,
    },
    /// Laplace's sunrise probability under the uniform prior.
    Sunrise {
        #[arg(long, default_value_t = LAPLACE_DAYS)]
        days: u64,
    },
    /// Predictive values for n = 0..=n-max.
    Table {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long)]
        n_max: u64,
    },
    /// Predictive divided by (n+1)/(n+2).
    Ratio {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long)]
        n: u64,
    },
    /// Monte-Carlo estimate of the predictive.
    Simulate {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long)]
        successes: u64,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = Estimator::Rejection)]
        estimator: Estimator,
    },
    /// Exact predictive by enumerating every toss sequence (n <= 20).
    Bruteforce {
        #[command(flatten)]
        prior: PriorArg,
        #[arg(long)]
        successes: u64,
    },
    /// A run of successes that ends in a failure on the last day.
    Turkey {
        #[arg(long)]
        feed_days: u64,
        #[command(flatten)]
        prior: PriorArg,
    },
}

#[derive(Debug, Args)]
struct PriorArg {
    /// Prior spec: uniform | point:x | beta:a,b | discrete:x@w,... | table:x:f,...
    #[arg(long = "prior", default_value = "uniform")]
    spec: String,
}

impl PriorArg {
    fn parse(&self) -> Result<Prior, Error> {
        parse_prior(&self.spec)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TableRow {
    pub n: u64,
    pub value: f64,
    pub decimal: String,
    pub exact: Option<String>,
    pub method: &'static str,
    pub error_bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DayRow {
    pub day: u64,
    pub predictive: f64,
    pub decimal: String,
    pub fed: bool,
    pub log_loss: f64,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum Rows {
    Table(Vec<TableRow>),
    Days(Vec<DayRow>),
}

/// One invocation's result.
#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub command: &'static str,
    pub prior: String,
    pub n: u64,
    pub inputs: Map<String, Value>,
    pub value: f64,
    pub decimal: String,
    pub exact: Option<String>,
    pub method: &'static str,
    pub error_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub estimate: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenario: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rows: Option<Rows>,
}

fn rational_string(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Maps a library error onto the documented exit codes.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ImpossibleEvidence(_) => EXIT_IMPOSSIBLE,
        Error::ToleranceNotMet { .. } | Error::LimitExceeded(_) => EXIT_NUMERIC,
        Error::NoConditionedTrials { .. } => EXIT_NO_TRIALS,
        Error::Parse(_)
        | Error::Domain(_)
        | Error::ZeroMass
        | Error::NotExactlyRepresentable(_)
        | Error::UnsupportedPrior { .. }
        | Error::InvalidConfig(_) => EXIT_USAGE,
    }
}

fn quadrature_options() -> Result<QuadratureOptions, Error> {
    let mut opts = QuadratureOptions::default();
    if let Ok(raw) = std::env::var(TOLERANCE_ENV) {
        let tol: f64 = raw
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{TOLERANCE_ENV}={raw:?} is not a number")))?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "{TOLERANCE_ENV} must be positive, got {raw}"
            )));
        }
        opts.tol = tol;
    }
    Ok(opts)
}

fn inputs(pairs: &[(&str, Value)]) -> Map<String, Value> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

/// Executes a parsed command line.
fn execute(cli: &Cli, warnings: &mut dyn Write) -> Result<OutputRecord, Error> {
    let digits = cli.digits;
    let opts = quadrature_options()?;
    let record = match &cli.command {
        Command::Predict {
            prior,
            successes,
            failures,
        } => {
            let p = prior.parse()?;
            let r = predictive_with_failures_with(&p, RunEvidence::new(*successes, *failures)?, &opts)?;
            OutputRecord {
                command: "predict",
                prior: p.to_string(),
                n: *successes,
                inputs: inputs(&[("successes", json!(successes)), ("failures", json!(failures))]),
                value: r.value,
                decimal: r.render(digits),
                exact: r.exact.as_ref().map(rational_string),
                method: r.method.as_str(),
                error_bound: r.error_bound,
                estimate: None,
                scenario: None,
                rows: None,
            }
        }
        Command::Sunrise { days } => {
            let s = sunrise(*days);
            OutputRecord {
                command: "sunrise",
                prior: Prior::Uniform.to_string(),
                n: *days,
                inputs: inputs(&[("days", json!(days))]),
                value: s.result.value,
                decimal: s.result.render(digits),
                exact: s.result.exact.as_ref().map(rational_string),
                method: s.result.method.as_str(),
                error_bound: s.result.error_bound,
                estimate: None,
                scenario: None,
                rows: None,
            }
        }
        Command::Table { prior, n_max } => {
            let p = prior.parse()?;
            let table = predictive_table_with(&p, *n_max, &opts)?;
            let rows: Vec<TableRow> = table
                .rows
                .iter()
                .map(|(n, r)| TableRow {
                    n: *n,
                    value: r.value,
                    decimal: r.render(digits),
                    exact: r.exact.as_ref().map(rational_string),
                    method: r.method.as_str(),
                    error_bound: r.error_bound,
                })
                .collect();
            let last = rows
                .last()
                .cloned()
                .ok_or_else(|| Error::ImpossibleEvidence(format!("no run has positive probability under {p}")))?;
            if let Some(n) = table.truncated_at {
                let _ = writeln!(
                    warnings,
                    "warning: table truncated at n = {n}: the run has probability zero"
                );
            }
            OutputRecord {
                command: "table",
                prior: p.to_string(),
                n: *n_max,
                inputs: inputs(&[("n_max", json!(n_max)), ("truncated_at", json!(table.truncated_at))]),
                value: last.value,
                decimal: last.decimal,
                exact: last.exact,
                method: last.method,
                error_bound: last.error_bound,
                estimate: None,
                scenario: None,
                rows: Some(Rows::Table(rows)),
            }
        }
        Command::Ratio { prior, n } => {
            let p = prior.parse()?;
            let ratio = asymptotic_ratio_with(&p, *n, &opts)?;
            let r = succession::predictive::predictive_after_run_with(&p, *n, &opts)?;
            OutputRecord {
                command: "ratio",
                prior: p.to_string(),
                n: *n,
                inputs: inputs(&[("n", json!(n)), ("predictive", json!(r.value))]),
                value: ratio,
                decimal: format_f64(ratio, digits),
                exact: r
                    .exact
                    .as_ref()
                    .map(|e| rational_string(&(e / succession::predictive_uniform(*n)))),
                method: r.method.as_str(),
                error_bound: r.error_bound * ratio / r.value.max(f64::MIN_POSITIVE),
                estimate: None,
                scenario: None,
                rows: None,
            }
        }
        Command::Simulate {
            prior,
            successes,
            trials,
            seed,
            estimator,
        } => {
            let p = prior.parse()?;
            let config = SimulationConfig::new(p.clone(), *successes, *trials, *seed)?;
            let e = match estimator {
                Estimator::Rejection => simulate_conditional(&config)?,
                Estimator::Weighted => simulate_weighted(&config)?,
            };
            OutputRecord {
                command: "simulate",
                prior: p.to_string(),
                n: *successes,
                inputs: inputs(&[
                    ("successes", json!(successes)),
                    ("trials", json!(trials)),
                    ("seed", json!(seed)),
                    ("estimator", json!(e.estimator.as_str())),
                ]),
                value: e.p_hat,
                decimal: format_f64(e.p_hat, digits),
                exact: None,
                method: match e.estimator {
                    EstimatorKind::Rejection => "monte_carlo_rejection",
                    EstimatorKind::Weighted => "monte_carlo_weighted",
                },
                error_bound: 4.0 * e.stderr,
                estimate: Some(serde_json::to_value(&e).expect("estimate serializes")),
                scenario: None,
                rows: None,
            }
        }
        Command::Bruteforce { prior, successes } => {
            let p = prior.parse()?;
            let exact = bruteforce_conditional(&p, *successes)?;
            let value = succession::number::rational_to_f64(&exact);
            OutputRecord {
                command: "bruteforce",
                prior: p.to_string(),
                n: *successes,
                inputs: inputs(&[("successes", json!(successes))]),
                value,
                decimal: succession::decimal::format_rational(&exact, digits),
                exact: Some(rational_string(&exact)),
                method: "enumeration",
                error_bound: 0.0,
                estimate: None,
                scenario: None,
                rows: None,
            }
        }
        Command::Turkey { feed_days, prior } => {
            let p = prior.parse()?;
            let report = turkey_scenario_with(*feed_days, &p, &opts)?;
            let rows = report
                .days
                .iter()
                .map(|d| DayRow {
                    day: d.day,
                    predictive: d.predictive,
                    decimal: format_f64(d.predictive, digits),
                    fed: d.fed,
                    log_loss: d.log_loss,
                })
                .collect();
            let eve = &report.eve_of_doom;
            OutputRecord {
                command: "turkey",
                prior: p.to_string(),
                n: feed_days - 1,
                inputs: inputs(&[("feed_days", json!(feed_days))]),
                value: eve.value,
                decimal: eve.render(digits),
                exact: eve.exact.as_ref().map(rational_string),
                method: eve.method.as_str(),
                error_bound: eve.error_bound,
                estimate: None,
                scenario: Some(json!({
                    "feed_days": feed_days,
                    "doom_outcome": "failure",
                    "after_doom": report.after_doom.value,
                    "after_doom_exact": report.after_doom.exact.as_ref().map(rational_string),
                    "cumulative_log_loss": report.cumulative_log_loss,
                })),
                rows: Some(Rows::Days(rows)),
            }
        }
    };
    Ok(record)
}

fn render_text(record: &OutputRecord, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(out, "command      {}", record.command)?;
    writeln!(out, "prior        {}", record.prior)?;
    writeln!(out, "n            {}", record.n)?;
    writeln!(out, "value        {}", record.decimal)?;
    writeln!(out, "exact        {}", record.exact.as_deref().unwrap_or("-"))?;
    writeln!(out, "method       {}", record.method)?;
    writeln!(out, "error_bound  {:e}", record.error_bound)?;
    if let Some(Value::Object(est)) = &record.estimate {
        for (k, v) in est {
            writeln!(out, "{k:<12} {v}")?;
        }
    }
    if let Some(Value::Object(sc)) = &record.scenario {
        for (k, v) in sc {
            writeln!(out, "{k:<12} {v}")?;
        }
    }
    match &record.rows {
        Some(Rows::Table(rows)) => {
            writeln!(out)?;
            writeln!(out, "{:>8}  {:<14}  exact", "n", "value")?;
            for r in rows {
                writeln!(
                    out,
                    "{:>8}  {:<14}  {}",
                    r.n,
                    r.decimal,
                    r.exact.as_deref().unwrap_or("-")
                )?;
            }
        }
        Some(Rows::Days(rows)) => {
            writeln!(out)?;
            writeln!(out, "{:>8}  {:<14}  {:<6}  log_loss", "day", "predictive", "fed")?;
            for r in rows {
                writeln!(out, "{:>8}  {:<14}  {:<6}  {}", r.day, r.decimal, r.fed, r.log_loss)?;
            }
        }
        None => {}
    }
    Ok(())
}

fn csv_error(e: csv::Error) -> std::io::Error {
    std::io::Error::other(e)
}

fn render_csv(record: &OutputRecord, out: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match &record.rows {
        Some(Rows::Table(rows)) => {
            for r in rows {
                w.serialize(r).map_err(csv_error)?;
            }
        }
        Some(Rows::Days(rows)) => {
            for r in rows {
                w.serialize(r).map_err(csv_error)?;
            }
        }
        None => {
            let mut header = vec![
                "command",
                "prior",
                "n",
                "value",
                "decimal",
                "exact",
                "method",
                "error_bound",
            ];
            let mut fields = vec![
                record.command.to_string(),
                record.prior.clone(),
                record.n.to_string(),
                format!("{:?}", record.value),
                record.decimal.clone(),
                record.exact.clone().unwrap_or_default(),
                record.method.to_string(),
                format!("{:?}", record.error_bound),
            ];
            if let Some(Value::Object(est)) = &record.estimate {
                for key in ["stderr", "conditioned_trials", "total_trials", "estimator"] {
                    header.push(key);
                    fields.push(match &est[key] {
                        Value::String(s) => s.clone(),
                        v => v.to_string(),
                    });
                }
            }
            w.write_record(&header).map_err(csv_error)?;
            w.write_record(&fields).map_err(csv_error)?;
        }
    }
    w.flush()
}

/// Runs the CLI on `argv` (program name first); returns the exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let rendered = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{rendered}");
                    0
                }
                _ => {
                    let _ = write!(err, "{rendered}");
                    EXIT_USAGE
                }
            };
        }
    };
    let record = match execute(&cli, err) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return exit_code(&e);
        }
    };
    let written = match cli.format {
        Format::Text => render_text(&record, out),
        Format::Json => serde_json::to_writer_pretty(&mut *out, &record)
            .map_err(std::io::Error::other)
            .and_then(|_| writeln!(out)),
        Format::Csv => render_csv(&record, out),
    };
    match written {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: failed to write output: {e}");
            1
        }
    }
}
