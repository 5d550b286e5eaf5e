//! Moments `M_n = E[x^n]` of a prior, and the mixed moments
//! `E[x^s (1 - x)^f]` used once failures enter the evidence.
//!
//! Four evaluation routes exist:
//!
//! * closed forms for point masses and Beta priors,
//! * exact rational arithmetic whenever every parameter is rational,
//! * max-shifted log-domain sums for discrete mixtures at large `n`,
//! * adaptive Gauss–Legendre quadrature for tabulated densities.
//!
//! For tabulated densities and `n > SUBSTITUTION_THRESHOLD` the integral is
//! taken in the variable `u = x^{n+1}`:
//!
//! ```text
//! M_n = 1/(n+1) ∫_0^1 f(u^{1/(n+1)}) du
//! ```
//!
//! which flattens the integrand that would otherwise pile up at `x = 1`.

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::number::{rational_to_f64, Number, Rational};
use crate::prior::{BetaPrior, DiscreteMixture, Prior, TabulatedDensity};
use crate::quadrature::{self, Tolerance, DEFAULT_MAX_PANELS, DEFAULT_TOLERANCE};

/// Above this order, tabulated moments integrate in the substituted variable.
pub const SUBSTITUTION_THRESHOLD: u64 = 64;

/// Largest total exponent for which discrete mixtures, point masses and
/// general Beta priors take the exact rational route inside [`moment`] and
/// the predictive functions. [`moment_exact`] has no such limit.
pub const EXACT_POWER_LIMIT: u64 = 4096;

/// Beta log-moments are summed term by term up to this order, then via log-gamma.
const BETA_LOG_SUM_LIMIT: u64 = 1 << 24;

/// How a value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ClosedForm,
    ExactRational,
    Quadrature,
    LogDomain,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ClosedForm => "closed_form",
            Method::ExactRational => "exact_rational",
            Method::Quadrature => "quadrature",
            Method::LogDomain => "log_domain",
        }
    }
}

/// Quadrature settings for tabulated priors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Absolute tolerance on a moment; predictive ratios use it as their target.
    pub tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOLERANCE,
            max_panels: DEFAULT_MAX_PANELS,
        }
    }
}

/// A moment together with its logarithm, optional exact value and error bound.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentValue {
    pub value: f64,
    pub log_value: f64,
    pub exact: Option<Rational>,
    /// Absolute; zero on exact and closed-form routes.
    pub error_bound: f64,
    pub method: Method,
}

impl MomentValue {
    fn from_exact(exact: Rational) -> Self {
        let value = rational_to_f64(&exact);
        let log_value = if exact.is_zero() {
            f64::NEG_INFINITY
        } else if value > 0.0 && value.is_normal() {
            value.ln()
        } else {
            log_rational(&exact)
        };
        Self {
            value,
            log_value,
            exact: Some(exact),
            error_bound: 0.0,
            method: Method::ExactRational,
        }
    }

    fn from_log(log_value: f64, error_bound: f64, method: Method) -> Self {
        Self {
            value: log_value.exp(),
            log_value,
            exact: None,
            error_bound,
            method,
        }
    }
}

/// Natural log of a positive rational too large or small for `f64`.
fn log_rational(r: &Rational) -> f64 {
    fn log_int(n: &num_bigint::BigInt) -> f64 {
        let bits = n.bits();
        if bits <= 1000 {
            return rational_to_f64(&Rational::from_integer(n.clone())).ln();
        }
        let shift = bits - 64;
        let top: num_bigint::BigInt = n >> shift;
        rational_to_f64(&Rational::from_integer(top)).ln() + shift as f64 * std::f64::consts::LN_2
    }
    log_int(r.numer()) - log_int(r.denom())
}

/// `ln Σ exp(t_j)` with the maximum factored out.
pub(crate) fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
    max + sum.ln()
}

/// `s ln x + f ln(1 - x)` with the `0 · ln 0 = 0` convention.
fn log_kernel(x: f64, successes: u64, failures: u64) -> f64 {
    let mut t = 0.0;
    if successes > 0 {
        t += successes as f64 * x.ln();
    }
    if failures > 0 {
        t += failures as f64 * (-x).ln_1p();
    }
    t
}

fn exact_kernel(x: &Rational, successes: u64, failures: u64) -> Rational {
    let one = Rational::one();
    num_traits::pow(x.clone(), successes as usize) * num_traits::pow(&one - x, failures as usize)
}

fn exact_required(prior: &Prior) -> Error {
    Error::NotExactlyRepresentable(match prior {
        Prior::PointMass(_) => "point mass built from a non-rational value",
        Prior::Discrete(_) => "discrete mixture built from non-rational values",
        Prior::Beta(_) => "Beta prior built from non-rational parameters",
        Prior::Uniform => "uniform prior",
        Prior::Tabulated(_) => "density table built from non-rational values",
    })
}

/// `M_n` with the default quadrature settings.
pub fn moment(prior: &Prior, n: u64) -> Result<MomentValue> {
    moment_with(prior, n, &QuadratureOptions::default())
}

pub fn moment_with(prior: &Prior, n: u64, opts: &QuadratureOptions) -> Result<MomentValue> {
    mixed_moment_with(prior, n, 0, opts)
}

/// `E[x^s (1-x)^f]` with the default quadrature settings.
pub fn mixed_moment(prior: &Prior, successes: u64, failures: u64) -> Result<MomentValue> {
    mixed_moment_with(prior, successes, failures, &QuadratureOptions::default())
}

pub fn mixed_moment_with(
    prior: &Prior,
    successes: u64,
    failures: u64,
    opts: &QuadratureOptions,
) -> Result<MomentValue> {
    mixed_moment_tol(
        prior,
        successes,
        failures,
        Tolerance::Absolute(opts.tol),
        opts.max_panels,
    )
}

pub(crate) fn mixed_moment_tol(
    prior: &Prior,
    successes: u64,
    failures: u64,
    tol: Tolerance,
    max_panels: usize,
) -> Result<MomentValue> {
    let order = successes.saturating_add(failures);
    match prior {
        Prior::PointMass(p) => match p.x().exact() {
            Some(x) if order <= EXACT_POWER_LIMIT => Ok(MomentValue::from_exact(exact_kernel(x, successes, failures))),
            _ => {
                let x = p.x().value();
                let log_value = log_kernel(x, successes, failures);
                let value = x.powf(successes as f64) * (1.0 - x).powf(failures as f64);
                Ok(MomentValue {
                    value: if value > 0.0 { value } else { log_value.exp() },
                    log_value,
                    exact: None,
                    error_bound: 0.0,
                    method: Method::ClosedForm,
                })
            }
        },
        Prior::Discrete(d) => {
            if d.is_exact() && order <= EXACT_POWER_LIMIT {
                Ok(MomentValue::from_exact(discrete_exact(d, successes, failures)))
            } else {
                Ok(discrete_log(d, successes, failures))
            }
        }
        Prior::Uniform => beta_moment(
            &BetaPrior::new(Number::integer(1), Number::integer(1))?,
            successes,
            failures,
        ),
        Prior::Beta(b) => beta_moment(b, successes, failures),
        Prior::Tabulated(t) => {
            if failures == 0 {
                tabulated_moment(t, successes, tol, max_panels)
            } else {
                tabulated_mixed_moment(t, successes, failures, tol, max_panels)
            }
        }
    }
}

fn discrete_exact(d: &DiscreteMixture, successes: u64, failures: u64) -> Rational {
    let mut total = Rational::zero();
    let mut mass = Rational::zero();
    for atom in d.atoms() {
        let (x, w) = (atom.x.exact().unwrap(), atom.weight.exact().unwrap());
        total += w * exact_kernel(x, successes, failures);
        mass += w;
    }
    total / mass
}

fn discrete_log(d: &DiscreteMixture, successes: u64, failures: u64) -> MomentValue {
    let mut terms = Vec::with_capacity(d.atoms().len());
    let mut weights = Vec::with_capacity(d.atoms().len());
    let mut largest = 0.0f64;
    for atom in d.atoms() {
        let w = atom.weight.value();
        weights.push(w.ln());
        let kernel = log_kernel(atom.x.value(), successes, failures);
        largest = largest.max(kernel.abs().min(1e300));
        terms.push(w.ln() + kernel);
    }
    let log_value = log_sum_exp(&terms) - log_sum_exp(&weights);
    let k = d.atoms().len() as f64;
    let value = log_value.exp();
    let error_bound = value * 4.0 * f64::EPSILON * (k + 4.0) * (1.0 + largest);
    MomentValue::from_log(log_value, error_bound, Method::LogDomain)
}

fn beta_moment(b: &BetaPrior, successes: u64, failures: u64) -> Result<MomentValue> {
    if let (Some(a), Some(bb)) = (b.a().exact(), b.b().exact()) {
        // Uniform-type shortcut: with f = 0 and b = 1, M_s = a / (a + s).
        if failures == 0 && bb.is_one() {
            let s = Rational::from_integer(successes.into());
            return Ok(MomentValue::from_exact(a / (a + s)));
        }
        if successes.saturating_add(failures) <= EXACT_POWER_LIMIT {
            return Ok(MomentValue::from_exact(beta_exact(a, bb, successes, failures)));
        }
    }
    let (a, bb) = (b.a().value(), b.b().value());
    let log_value = beta_log_ratio(a, a + bb, successes) + beta_log_ratio(bb, a + bb + successes as f64, failures);
    let terms = successes.saturating_add(failures).min(BETA_LOG_SUM_LIMIT) as f64;
    let error_bound = log_value.exp() * 8.0 * f64::EPSILON * (terms + 1.0);
    Ok(MomentValue::from_log(log_value, error_bound, Method::ClosedForm))
}

/// `ln ∏_{i<n} (p + i)/(q + i)` for `q ≥ p > 0`.
fn beta_log_ratio(p: f64, q: f64, n: u64) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if n <= BETA_LOG_SUM_LIMIT {
        // Neumaier-compensated sum of ln(1 - (q - p)/(q + i)).
        let gap = q - p;
        let (mut sum, mut comp) = (0.0f64, 0.0f64);
        for i in 0..n {
            let term = (-gap / (q + i as f64)).ln_1p();
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
        return sum + comp;
    }
    use statrs::function::gamma::ln_gamma;
    let nf = n as f64;
    ln_gamma(p + nf) - ln_gamma(p) - ln_gamma(q + nf) + ln_gamma(q)
}

fn beta_exact(a: &Rational, b: &Rational, successes: u64, failures: u64) -> Rational {
    let mut value = Rational::one();
    let total = a + b;
    for i in 0..successes {
        let i = Rational::from_integer(i.into());
        value *= (a + &i) / (&total + &i);
    }
    for j in 0..failures {
        let j = Rational::from_integer(j.into());
        let s = Rational::from_integer(successes.into());
        value *= (b + &j) / (&total + s + &j);
    }
    value
}

/// Exact `M_n` as a rational.
pub fn moment_exact(prior: &Prior, n: u64) -> Result<Rational> {
    mixed_moment_exact(prior, n, 0)
}

/// Exact `E[x^s (1-x)^f]` as a rational.
pub fn mixed_moment_exact(prior: &Prior, successes: u64, failures: u64) -> Result<Rational> {
    if !prior.is_exact() {
        return Err(exact_required(prior));
    }
    match prior {
        Prior::PointMass(p) => Ok(exact_kernel(p.x().exact().unwrap(), successes, failures)),
        Prior::Discrete(d) => Ok(discrete_exact(d, successes, failures)),
        Prior::Uniform => {
            let one = Rational::one();
            if failures == 0 {
                Ok(&one / (&one + Rational::from_integer(successes.into())))
            } else {
                Ok(beta_exact(&one, &one, successes, failures))
            }
        }
        Prior::Beta(b) => {
            let (a, bb) = (b.a().exact().unwrap(), b.b().exact().unwrap());
            if failures == 0 && bb.is_one() {
                return Ok(a / (a + Rational::from_integer(successes.into())));
            }
            Ok(beta_exact(a, bb, successes, failures))
        }
        Prior::Tabulated(t) => tabulated_exact(t, successes, failures),
    }
}

/// Exact moments of a piecewise-linear density, segment by segment.
fn tabulated_exact(t: &TabulatedDensity, successes: u64, failures: u64) -> Result<Rational> {
    if failures > 0 {
        // Expand (1 - x)^f binomially; each term is a plain moment.
        let mut total = Rational::zero();
        let mut coeff = num_bigint::BigInt::one();
        for j in 0..=failures {
            let term = tabulated_exact(t, successes + j, 0)? * Rational::from_integer(coeff.clone());
            if j % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
            coeff = coeff * (failures - j) / (j + 1);
        }
        return Ok(total);
    }
    let n = successes;
    let mass = t.mass_exact().ok_or(Error::NotExactlyRepresentable("density table"))?;
    let first = Rational::from_integer((n + 1).into());
    let second = Rational::from_integer((n + 2).into());
    let mut total = Rational::zero();
    for pair in t.knots().windows(2) {
        let (x0, x1) = (pair[0].x.exact().unwrap(), pair[1].x.exact().unwrap());
        let (f0, f1) = (pair[0].density.exact().unwrap(), pair[1].density.exact().unwrap());
        let slope = (f1 - f0) / (x1 - x0);
        let intercept = f0 - &slope * x0;
        let p0 = num_traits::pow(x0.clone(), n as usize + 1);
        let p1 = num_traits::pow(x1.clone(), n as usize + 1);
        let q0 = &p0 * x0;
        let q1 = &p1 * x1;
        total += intercept * (p1 - p0) / &first + slope * (q1 - q0) / &second;
    }
    Ok(total / mass)
}

/// `M_n` of a tabulated density by adaptive quadrature, to absolute tolerance `tol`.
pub fn quadrature_moment(t: &TabulatedDensity, n: u64, tol: f64) -> Result<MomentValue> {
    quadrature_moment_with(
        t,
        n,
        &QuadratureOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn quadrature_moment_with(t: &TabulatedDensity, n: u64, opts: &QuadratureOptions) -> Result<MomentValue> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::InvalidConfig(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    tabulated_moment(t, n, Tolerance::Absolute(opts.tol), opts.max_panels)
}

/// Integrates in the scaled variable `v = x / s`, `s` the right end of the
/// support, so that `M_n = s^{n+1} J / mass` never underflows before the log.
fn tabulated_moment(t: &TabulatedDensity, n: u64, tol: Tolerance, max_panels: usize) -> Result<MomentValue> {
    let upper = t.support_upper();
    let mass = t.mass();
    let log_scale = (n as f64 + 1.0) * upper.ln();
    let scale = log_scale.exp();
    let inner_tol = match tol {
        Tolerance::Absolute(a) => Tolerance::Absolute(a * mass / scale),
        rel => rel,
    };
    let grid: Vec<f64> = t
        .knots()
        .iter()
        .map(|k| k.x.value() / upper)
        .filter(|&v| v <= 1.0)
        .collect();
    let integral = if n <= SUBSTITUTION_THRESHOLD {
        let power = n as i32;
        quadrature::integrate(
            |v| v.powi(power) * t.density_at(upper * v),
            &grid,
            inner_tol,
            max_panels,
        )?
    } else {
        let exponent = n as f64 + 1.0;
        let breaks: Vec<f64> = grid.iter().map(|&v| (exponent * v.ln()).exp()).collect();
        let inner = |u: f64| t.density_at(upper * (u.ln() / exponent).exp());
        let scaled_tol = match inner_tol {
            Tolerance::Absolute(a) => Tolerance::Absolute(a * exponent),
            rel => rel,
        };
        let mut r = quadrature::integrate(inner, &breaks, scaled_tol, max_panels)?;
        r.value /= exponent;
        r.error_bound /= exponent;
        r
    };
    let (value, log_value) = if upper == 1.0 {
        let v = integral.value / mass;
        (v, v.ln())
    } else {
        let log_value = log_scale + integral.value.ln() - mass.ln();
        (log_value.exp(), log_value)
    };
    Ok(MomentValue {
        value,
        log_value,
        exact: None,
        error_bound: integral.error_bound * scale / mass,
        method: Method::Quadrature,
    })
}

/// Mixed moment of a tabulated density in the original variable, with the
/// kernel divided by its peak value so the integrand is O(1).
fn tabulated_mixed_moment(
    t: &TabulatedDensity,
    successes: u64,
    failures: u64,
    tol: Tolerance,
    max_panels: usize,
) -> Result<MomentValue> {
    let (s, f) = (successes as f64, failures as f64);
    let peak = s / (s + f);
    let log_peak = log_kernel(peak, successes, failures);
    let mass = t.mass();
    let scale = log_peak.exp();
    let inner_tol = match tol {
        Tolerance::Absolute(a) => Tolerance::Absolute(a * mass / scale),
        rel => rel,
    };
    let mut breaks: Vec<f64> = t.knots().iter().map(|k| k.x.value()).collect();
    let width = (peak * (1.0 - peak) / (s + f)).sqrt();
    for k in [-16.0, -8.0, -4.0, -2.0, -1.0, 0.0, 1.0, 2.0, 4.0, 8.0, 16.0] {
        let b = peak + k * width;
        if b > 0.0 && b < 1.0 {
            breaks.push(b);
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let integrand = |x: f64| (log_kernel(x, successes, failures) - log_peak).exp() * t.density_at(x);
    let integral = quadrature::integrate(integrand, &breaks, inner_tol, max_panels)?;
    let log_value = log_peak + integral.value.ln() - mass.ln();
    Ok(MomentValue {
        value: log_value.exp(),
        log_value,
        exact: None,
        error_bound: integral.error_bound * scale / mass,
        method: Method::Quadrature,
    })
}

/// `ln M_n`; errors when the moment is exactly zero.
pub fn log_moment(prior: &Prior, n: u64) -> Result<f64> {
    log_moment_with(prior, n, &QuadratureOptions::default())
}

pub fn log_moment_with(prior: &Prior, n: u64, opts: &QuadratureOptions) -> Result<f64> {
    let m = match prior {
        Prior::Discrete(d) if n > 0 => discrete_log(d, n, 0),
        Prior::Tabulated(t) => tabulated_moment(t, n, Tolerance::Relative(opts.tol), opts.max_panels)?,
        _ => moment_with(prior, n, opts)?,
    };
    if m.log_value == f64::NEG_INFINITY || m.exact.as_ref().is_some_and(Zero::is_zero) {
        return Err(Error::ImpossibleEvidence(format!("M_{n} = 0 under {prior}")));
    }
    Ok(m.log_value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prior::{parse_prior, Atom, Knot};

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn uniform_third_moment() {
        let m = moment(&Prior::Uniform, 3).unwrap();
        assert_eq!(m.exact, Some(q(1, 4)));
        assert_eq!(m.value, 0.25);
        assert_eq!(m.error_bound, 0.0);
    }

    #[test]
    fn point_mass_power() {
        let p = Prior::point(0.3).unwrap();
        let m = moment(&p, 7).unwrap();
        assert!((m.value / 0.3f64.powi(7) - 1.0).abs() < 1e-15);
        assert!((m.log_value - 7.0 * 0.3f64.ln()).abs() < 1e-14);
        let exact = parse_prior("point:1/2").unwrap();
        assert_eq!(moment_exact(&exact, 10).unwrap(), q(1, 1024));
    }

    #[test]
    fn only_sure_coin_survives() {
        let p = parse_prior("discrete:1@0.5,0@0.5").unwrap();
        assert_eq!(moment(&p, 5).unwrap().exact, Some(q(1, 2)));
    }

    #[test]
    fn exact_examples() {
        assert_eq!(moment_exact(&Prior::Uniform, 1_826_213).unwrap(), q(1, 1_826_214));
        assert_eq!(
            moment_exact(&parse_prior("discrete:1/2@1").unwrap(), 10).unwrap(),
            q(1, 1024)
        );
        assert_eq!(moment_exact(&parse_prior("beta:1,1").unwrap(), 2).unwrap(), q(1, 3));
        assert_eq!(moment_exact(&parse_prior("beta:2,3").unwrap(), 2).unwrap(), q(1, 5));
    }

    #[test]
    fn inexact_prior_has_no_exact_moment() {
        let p = Prior::beta(2.5, 1.0).unwrap();
        assert!(matches!(moment_exact(&p, 2), Err(Error::NotExactlyRepresentable(_))));
        let p = Prior::discrete(vec![Atom::new(0.3, 1.0)]).unwrap();
        assert!(matches!(moment_exact(&p, 2), Err(Error::NotExactlyRepresentable(_))));
    }

    #[test]
    fn zero_moment_is_one() {
        for spec in [
            "uniform",
            "point:0.3",
            "beta:2.5,4",
            "discrete:0.2@3,0.9@1",
            "table:0:1,0.3:5,1:0",
        ] {
            let m = moment(&parse_prior(spec).unwrap(), 0).unwrap();
            assert!((m.value - 1.0).abs() <= 1e-12, "{spec}: {}", m.value);
        }
    }

    #[test]
    fn log_moment_examples() {
        let half = Prior::point(0.5).unwrap();
        let l = log_moment(&half, 10_000).unwrap();
        assert!((l - 10_000.0 * 0.5f64.ln()).abs() < 1e-9);
        for n in [0u64, 1, 10, 1_000_000] {
            let l = log_moment(&Prior::Uniform, n).unwrap();
            assert!((l + (n as f64 + 1.0).ln()).abs() < 1e-12, "n={n}");
        }
        let mix = parse_prior("discrete:1@0.5,0.5@0.5").unwrap();
        let l = log_moment(&mix, 10_000).unwrap();
        assert!((l - 0.5f64.ln()).abs() < 1e-12, "{l}");
    }

    #[test]
    fn log_moment_of_impossible_run() {
        let zero = Prior::point(0.0).unwrap();
        assert!(matches!(log_moment(&zero, 3), Err(Error::ImpossibleEvidence(_))));
        assert_eq!(log_moment(&zero, 0).unwrap(), 0.0);
        let zero_mix = parse_prior("discrete:0@1").unwrap();
        assert!(matches!(log_moment(&zero_mix, 5000), Err(Error::ImpossibleEvidence(_))));
    }

    fn constant_table() -> TabulatedDensity {
        TabulatedDensity::new(vec![Knot::new(0.0, 1.0), Knot::new(1.0, 1.0)]).unwrap()
    }

    #[test]
    fn quadrature_constant_density() {
        let t = constant_table();
        for n in [0u64, 1, 10, 1_000_000] {
            let m = quadrature_moment(&t, n, 1e-12).unwrap();
            let exact = 1.0 / (n as f64 + 1.0);
            assert!((m.value - exact).abs() <= 1e-12, "n={n}: {}", m.value);
            assert!(m.error_bound <= 1e-12);
        }
    }

    #[test]
    fn quadrature_ramp_density() {
        let t = TabulatedDensity::new(vec![Knot::new(0.0, 0.0), Knot::new(1.0, 2.0)]).unwrap();
        let m = quadrature_moment(&t, 1, 1e-12).unwrap();
        assert!((m.value - 2.0 / 3.0).abs() <= 1e-12);
        // 2/(n+2) from the exact antiderivative of 2x^{n+1}.
        for n in [10u64, 64, 65, 500, 100_000] {
            let m = quadrature_moment(&t, n, 1e-12).unwrap();
            let exact = 2.0 / (n as f64 + 2.0);
            assert!((m.value - exact).abs() <= 1e-12, "n={n}: {} vs {exact}", m.value);
        }
    }

    #[test]
    fn quadrature_rejects_bad_tolerance() {
        assert!(matches!(
            quadrature_moment(&constant_table(), 3, 0.0),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn quadrature_budget_exhaustion() {
        let t = parse_prior("table:0:0,1/3:1,2/3:0,1:4").unwrap();
        let Prior::Tabulated(t) = t else { unreachable!() };
        let opts = QuadratureOptions {
            tol: 1e-15,
            max_panels: 3,
        };
        assert!(matches!(
            quadrature_moment_with(&t, 40, &opts),
            Err(Error::ToleranceNotMet { .. })
        ));
    }

    #[test]
    fn quadrature_matches_exact_tables() {
        let p = parse_prior("table:0:1,1/4:3,1/2:0,3/4:2,1:1/2").unwrap();
        let Prior::Tabulated(t) = &p else { unreachable!() };
        for n in [0u64, 1, 5, 64, 65, 300, 5000] {
            let quad = quadrature_moment(t, n, 1e-13).unwrap();
            let exact = rational_to_f64(&moment_exact(&p, n).unwrap());
            assert!((quad.value - exact).abs() <= 1e-13, "n={n}: {} vs {exact}", quad.value);
        }
    }

    #[test]
    fn truncated_support_does_not_underflow() {
        let p = parse_prior("table:0:1,1/2:1,3/4:0,1:0").unwrap();
        let m = moment(&p, 5000).unwrap();
        assert!(m.log_value.is_finite());
        let exact = moment_exact(&p, 5000).unwrap();
        let reference = log_rational(&exact);
        let log = log_moment(&p, 5000).unwrap();
        assert!((log - reference).abs() < 1e-9, "{log} vs {reference}");
    }

    #[test]
    fn beta_moments_agree_across_routes() {
        let exact = parse_prior("beta:5/2,3").unwrap();
        let float = Prior::beta(2.5, 3.0).unwrap();
        for n in [0u64, 1, 7, 100] {
            let e = rational_to_f64(&moment_exact(&exact, n).unwrap());
            let f = moment(&float, n).unwrap().value;
            assert!(((e - f) / e).abs() < 1e-12, "n={n}");
        }
    }

    #[test]
    fn mixed_moments_agree_across_routes() {
        let specs = ["uniform", "beta:2,3", "discrete:1/3@1,4/5@2", "table:0:0,1/2:2,1:1"];
        for spec in specs {
            let p = parse_prior(spec).unwrap();
            for (s, f) in [(0u64, 1u64), (3, 1), (5, 4), (20, 7)] {
                let e = rational_to_f64(&mixed_moment_exact(&p, s, f).unwrap());
                let m = mixed_moment(&p, s, f).unwrap();
                assert!(
                    (m.value - e).abs() <= 1e-10_f64.max(m.error_bound),
                    "{spec} s={s} f={f}: {} vs {e}",
                    m.value
                );
            }
        }
    }
}
