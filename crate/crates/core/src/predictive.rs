//! Probability that the next trial succeeds, given the evidence so far.
//!
//! After a run of `n` successes the predictive is the moment ratio
//! `M_{n+1} / M_n`. With failures in the evidence it becomes
//! `E[x^{s+1} (1-x)^f] / E[x^s (1-x)^f]`.
//!
//! Route selection, first applicable wins:
//!
//! 1. `exact_rational`: every parameter is rational (uniform, Beta, point
//!    mass, discrete mixtures up to [`EXACT_POWER_LIMIT`] trials),
//! 2. `closed_form`: point mass or Beta with floating-point parameters,
//! 3. `log_domain`: discrete mixtures past the exact limit or with float atoms,
//! 4. `quadrature`: tabulated densities.

use num_traits::{One, Zero};

use crate::decimal::format_rational;
use crate::error::{Error, Result};
use crate::moments::{self, Method, MomentValue, QuadratureOptions, EXACT_POWER_LIMIT};
use crate::number::{rational_to_f64, Rational};
use crate::prior::{DiscreteMixture, Prior};
use crate::quadrature::Tolerance;

/// Default number of decimals in rendered probabilities.
pub const DEFAULT_DIGITS: usize = 8;

/// Laplace's count of days since the dawn of humanity.
pub const LAPLACE_DAYS: u64 = 1_826_213;

/// Observed evidence: `successes` and `failures` in any order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunEvidence {
    pub successes: u64,
    pub failures: u64,
}

impl RunEvidence {
    pub fn run(successes: u64) -> Self {
        Self { successes, failures: 0 }
    }

    pub fn new(successes: u64, failures: u64) -> Result<Self> {
        successes
            .checked_add(failures)
            .ok_or_else(|| Error::Domain("total number of trials overflows u64".into()))?;
        Ok(Self { successes, failures })
    }

    pub fn trials(&self) -> u64 {
        self.successes + self.failures
    }
}

/// Predictive probability of a success on the next trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveResult {
    pub value: f64,
    pub exact: Option<Rational>,
    pub method: Method,
    /// Absolute bound on `|value - true value|`, excluding the final rounding
    /// to `f64`; zero on the exact and closed-form routes.
    pub error_bound: f64,
}

impl PredictiveResult {
    fn exact(r: Rational) -> Self {
        Self {
            value: rational_to_f64(&r),
            exact: Some(r),
            method: Method::ExactRational,
            error_bound: 0.0,
        }
    }

    fn closed(value: f64) -> Self {
        Self {
            value,
            exact: None,
            method: Method::ClosedForm,
            error_bound: 0.0,
        }
    }

    /// Round-half-even rendering; uses the exact value when present.
    pub fn render(&self, digits: usize) -> String {
        match &self.exact {
            Some(r) => format_rational(r, digits),
            None => crate::decimal::format_f64(self.value, digits),
        }
    }
}

fn impossible(prior: &Prior, evidence: RunEvidence) -> Error {
    Error::ImpossibleEvidence(format!(
        "{} successes and {} failures cannot occur under {prior}",
        evidence.successes, evidence.failures
    ))
}

/// Predictive after a run of `n` successes, default quadrature settings.
pub fn predictive_after_run(prior: &Prior, n: u64) -> Result<PredictiveResult> {
    predictive_after_run_with(prior, n, &QuadratureOptions::default())
}

pub fn predictive_after_run_with(prior: &Prior, n: u64, opts: &QuadratureOptions) -> Result<PredictiveResult> {
    predictive_with_failures_with(prior, RunEvidence::run(n), opts)
}

/// Laplace's rule of succession `(n+1)/(n+2)`.
pub fn predictive_uniform(n: u64) -> Rational {
    let n = Rational::from_integer(n.into());
    let one = Rational::one();
    (&n + &one) / (n + one + Rational::one())
}

/// The sunrise computation: uniform prior after `days` sunrises.
#[derive(Debug, Clone, PartialEq)]
pub struct SunriseReport {
    pub days: u64,
    pub result: PredictiveResult,
    /// Eight-decimal rendering.
    pub decimal: String,
}

pub fn sunrise(days: u64) -> SunriseReport {
    let result = PredictiveResult::exact(predictive_uniform(days));
    let decimal = result.render(DEFAULT_DIGITS);
    SunriseReport { days, result, decimal }
}

/// Predictive for evidence that may contain failures, default quadrature settings.
pub fn predictive_with_failures(prior: &Prior, evidence: RunEvidence) -> Result<PredictiveResult> {
    predictive_with_failures_with(prior, evidence, &QuadratureOptions::default())
}

pub fn predictive_with_failures_with(
    prior: &Prior,
    evidence: RunEvidence,
    opts: &QuadratureOptions,
) -> Result<PredictiveResult> {
    let RunEvidence {
        successes: s,
        failures: f,
    } = evidence;
    match prior {
        Prior::PointMass(p) => {
            let x = p.x();
            if (s > 0 && x.is_zero()) || (f > 0 && x.is_one()) {
                return Err(impossible(prior, evidence));
            }
            Ok(match x.exact() {
                Some(r) => PredictiveResult::exact(r.clone()),
                None => PredictiveResult::closed(x.value()),
            })
        }
        Prior::Uniform => Ok(PredictiveResult::exact(beta_predictive_exact(
            &Rational::one(),
            &Rational::one(),
            s,
            f,
        ))),
        Prior::Beta(b) => Ok(match (b.a().exact(), b.b().exact()) {
            (Some(a), Some(bb)) => PredictiveResult::exact(beta_predictive_exact(a, bb, s, f)),
            _ => {
                let (a, bb) = (b.a().value(), b.b().value());
                PredictiveResult::closed((a + s as f64) / (a + bb + s as f64 + f as f64))
            }
        }),
        Prior::Discrete(d) => {
            if d.is_exact() && evidence.trials() < EXACT_POWER_LIMIT {
                discrete_exact_ratio(d, s, f).ok_or_else(|| impossible(prior, evidence))
            } else {
                discrete_log_ratio(d, s, f).ok_or_else(|| impossible(prior, evidence))
            }
        }
        Prior::Tabulated(_) => {
            let tol = Tolerance::Relative(opts.tol / 4.0);
            let den = moments::mixed_moment_tol(prior, s, f, tol, opts.max_panels)?;
            let num = moments::mixed_moment_tol(prior, s + 1, f, tol, opts.max_panels)?;
            quadrature_ratio(&num, &den).ok_or_else(|| impossible(prior, evidence))
        }
    }
}

fn beta_predictive_exact(a: &Rational, b: &Rational, s: u64, f: u64) -> Rational {
    let s = Rational::from_integer(s.into());
    let f = Rational::from_integer(f.into());
    (a + &s) / (a + b + s + f)
}

fn discrete_exact_ratio(d: &DiscreteMixture, s: u64, f: u64) -> Option<PredictiveResult> {
    let one = Rational::one();
    let mut num = Rational::zero();
    let mut den = Rational::zero();
    for atom in d.atoms() {
        let (x, w) = (atom.x.exact()?, atom.weight.exact()?);
        let term = w * num_traits::pow(x.clone(), s as usize) * num_traits::pow(&one - x, f as usize);
        num += &term * x;
        den += term;
    }
    if den.is_zero() {
        return None;
    }
    Some(PredictiveResult::exact(num / den))
}

/// Ratio of max-shifted sums. Nothing is subtracted, so the only error comes
/// from the log terms themselves.
fn discrete_log_ratio(d: &DiscreteMixture, s: u64, f: u64) -> Option<PredictiveResult> {
    let atoms = d.atoms();
    let terms: Vec<f64> = atoms
        .iter()
        .map(|a| {
            let x = a.x.value();
            let mut t = a.weight.value().ln();
            if s > 0 {
                t += s as f64 * x.ln();
            }
            if f > 0 {
                t += f as f64 * (-x).ln_1p();
            }
            t
        })
        .collect();
    let top = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        return None;
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, t) in atoms.iter().zip(&terms) {
        let w = (t - top).exp();
        num += w * a.x.value();
        den += w;
    }
    let value = (num / den).clamp(0.0, 1.0);
    let largest = terms
        .iter()
        .filter(|t| t.is_finite())
        .fold(0.0f64, |m, t| m.max(t.abs()));
    let error_bound = value * 4.0 * f64::EPSILON * (atoms.len() as f64 + 4.0) * (1.0 + largest);
    Some(PredictiveResult {
        value,
        exact: None,
        method: Method::LogDomain,
        error_bound,
    })
}

fn quadrature_ratio(num: &MomentValue, den: &MomentValue) -> Option<PredictiveResult> {
    if den.value <= 0.0 {
        return None;
    }
    let ratio = (num.log_value - den.log_value).exp();
    let slack = den.value - den.error_bound;
    let error_bound = if slack > 0.0 {
        (num.error_bound + ratio * den.error_bound) / slack + 4.0 * f64::EPSILON * ratio
    } else {
        f64::INFINITY
    };
    Some(PredictiveResult {
        value: ratio.clamp(0.0, 1.0),
        exact: None,
        method: Method::Quadrature,
        error_bound,
    })
}

/// Predictive divided by the uniform-prior reference `(n+1)/(n+2)`; tends
/// to one for a continuous density that is positive at `x = 1`.
pub fn asymptotic_ratio(prior: &Prior, n: u64) -> Result<f64> {
    asymptotic_ratio_with(prior, n, &QuadratureOptions::default())
}

pub fn asymptotic_ratio_with(prior: &Prior, n: u64, opts: &QuadratureOptions) -> Result<f64> {
    if !matches!(prior, Prior::Uniform | Prior::Beta(_) | Prior::Tabulated(_)) {
        return Err(Error::UnsupportedPrior {
            operation: "asymptotic_ratio",
            prior: prior.to_string(),
        });
    }
    let p = predictive_after_run_with(prior, n, opts)?;
    let reference = predictive_uniform(n);
    Ok(match &p.exact {
        Some(r) => rational_to_f64(&(r / reference)),
        None => p.value / rational_to_f64(&reference),
    })
}

/// Predictive values for `n = 0 ..= n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveTable {
    pub rows: Vec<(u64, PredictiveResult)>,
    /// First `n` whose run has probability zero; rows stop before it.
    pub truncated_at: Option<u64>,
}

pub fn predictive_table(prior: &Prior, n_max: u64) -> Result<PredictiveTable> {
    predictive_table_with(prior, n_max, &QuadratureOptions::default())
}

/// Builds the table incrementally: each row costs one new moment.
pub fn predictive_table_with(prior: &Prior, n_max: u64, opts: &QuadratureOptions) -> Result<PredictiveTable> {
    let mut rows = Vec::new();
    match prior {
        Prior::Discrete(d) if d.is_exact() => {
            let atoms: Vec<(&Rational, &Rational)> = d
                .atoms()
                .iter()
                .map(|a| (a.x.exact().unwrap(), a.weight.exact().unwrap()))
                .collect();
            let mut powers: Vec<Rational> = atoms.iter().map(|(_, w)| (*w).clone()).collect();
            let mut current: Rational = powers.iter().sum();
            for n in 0..=n_max {
                if n + 1 >= EXACT_POWER_LIMIT {
                    return finish_table(prior, rows, n, n_max, opts);
                }
                if current.is_zero() {
                    return Ok(PredictiveTable {
                        rows,
                        truncated_at: Some(n),
                    });
                }
                for (p, (x, _)) in powers.iter_mut().zip(&atoms) {
                    *p *= *x;
                }
                let next: Rational = powers.iter().sum();
                rows.push((n, PredictiveResult::exact(&next / &current)));
                current = next;
            }
            Ok(PredictiveTable {
                rows,
                truncated_at: None,
            })
        }
        Prior::Tabulated(_) => {
            let tol = Tolerance::Relative(opts.tol / 4.0);
            let mut current = moments::mixed_moment_tol(prior, 0, 0, tol, opts.max_panels)?;
            for n in 0..=n_max {
                let next = moments::mixed_moment_tol(prior, n + 1, 0, tol, opts.max_panels)?;
                match quadrature_ratio(&next, &current) {
                    Some(r) => rows.push((n, r)),
                    None => {
                        return Ok(PredictiveTable {
                            rows,
                            truncated_at: Some(n),
                        })
                    }
                }
                current = next;
            }
            Ok(PredictiveTable {
                rows,
                truncated_at: None,
            })
        }
        _ => finish_table(prior, rows, 0, n_max, opts),
    }
}

fn finish_table(
    prior: &Prior,
    mut rows: Vec<(u64, PredictiveResult)>,
    start: u64,
    n_max: u64,
    opts: &QuadratureOptions,
) -> Result<PredictiveTable> {
    for n in start..=n_max {
        match predictive_after_run_with(prior, n, opts) {
            Ok(r) => rows.push((n, r)),
            Err(Error::ImpossibleEvidence(_)) => {
                return Ok(PredictiveTable {
                    rows,
                    truncated_at: Some(n),
                });
            }
            Err(e) => return Err(e),
        }
    }
    Ok(PredictiveTable {
        rows,
        truncated_at: None,
    })
}

impl From<u64> for RunEvidence {
    fn from(successes: u64) -> Self {
        RunEvidence::run(successes)
    }
}
