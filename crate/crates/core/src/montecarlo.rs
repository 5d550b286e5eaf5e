//! Independent oracles for the predictive formulas.
//!
//! * [`bruteforce_conditional`] enumerates every outcome sequence of the
//!   hidden-coin experiment and conditions by counting mass, in exact
//!   rational arithmetic.
//! * [`simulate_conditional`] replays the experiment: draw a coin from the
//!   prior, toss it `n + 1` times, keep the trials whose first `n` tosses
//!   succeed.
//! * [`simulate_weighted`] weights each prior draw by its likelihood `x^n`
//!   instead of rejecting, which keeps working when the run is long.
//! * [`turkey_scenario`] feeds a predictor a run of successes that ends in a
//!   failure.
//!
//! Trial `i` always reads Philox substream `i` of the configured seed, and
//! partial sums are combined in chunk order, so every estimate is
//! bit-identical whatever the number of worker threads.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand_distr::Distribution;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::moments::QuadratureOptions;
use crate::number::Rational;
use crate::predictive::{
    predictive_after_run_with, predictive_table_with, predictive_with_failures_with, PredictiveResult, RunEvidence,
};
use crate::prior::Prior;
use crate::rng::{Philox, PhiloxStream};

/// Largest run length accepted by [`bruteforce_conditional`].
pub const BRUTEFORCE_LIMIT: u64 = 20;

/// Trials per reduction chunk; fixed so results do not depend on scheduling.
pub const CHUNK_TRIALS: u64 = 8192;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub prior: Prior,
    pub run_length: u64,
    pub trials: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(prior: Prior, run_length: u64, trials: u64, seed: u64) -> Result<Self> {
        if trials == 0 {
            return Err(Error::InvalidConfig("at least one trial is required".into()));
        }
        Ok(Self {
            prior,
            run_length,
            trials,
            seed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Rejection,
    Weighted,
}

impl EstimatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EstimatorKind::Rejection => "rejection",
            EstimatorKind::Weighted => "weighted",
        }
    }
}

/// Monte-Carlo estimate of the predictive probability.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    pub p_hat: f64,
    pub stderr: f64,
    /// Rejection: trials that survived conditioning. Weighted: draws with
    /// nonzero likelihood.
    pub conditioned_trials: u64,
    pub total_trials: u64,
    pub estimator: EstimatorKind,
}

/// Whether trial chunks fan out over the rayon pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    /// Parallel when the `parallel` feature is enabled, sequential otherwise.
    #[default]
    Parallel,
    Sequential,
}

fn chunk_ranges(trials: u64) -> impl Iterator<Item = (u64, u64)> + Clone {
    let chunks = trials.div_ceil(CHUNK_TRIALS);
    (0..chunks).map(move |c| (c * CHUNK_TRIALS, ((c + 1) * CHUNK_TRIALS).min(trials)))
}

/// Maps every chunk and returns the partial results in chunk order.
fn map_chunks<T, F>(trials: u64, execution: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64, u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution == Execution::Parallel {
        use rayon::prelude::*;
        let ranges: Vec<(u64, u64)> = chunk_ranges(trials).collect();
        return ranges.into_par_iter().map(|(lo, hi)| f(lo, hi)).collect();
    }
    let _ = execution;
    chunk_ranges(trials).map(|(lo, hi)| f(lo, hi)).collect()
}

/// Draws the latent success probability from a prior.
#[derive(Debug, Clone)]
enum LatentSampler {
    Point(f64),
    Uniform,
    Beta(rand_distr::Beta<f64>),
    Discrete { xs: Vec<f64>, cdf: Vec<f64> },
    Table { xs: Vec<f64>, fs: Vec<f64>, cdf: Vec<f64> },
}

impl LatentSampler {
    fn new(prior: &Prior) -> Result<Self> {
        Ok(match prior {
            Prior::PointMass(p) => LatentSampler::Point(p.x().value()),
            Prior::Uniform => LatentSampler::Uniform,
            Prior::Beta(b) => LatentSampler::Beta(
                rand_distr::Beta::new(b.a().value(), b.b().value())
                    .map_err(|e| Error::Domain(format!("Beta sampler: {e}")))?,
            ),
            Prior::Discrete(d) => {
                let xs = d.atoms().iter().map(|a| a.x.value()).collect();
                let cdf = d
                    .atoms()
                    .iter()
                    .scan(0.0, |acc, a| {
                        *acc += a.weight.value();
                        Some(*acc)
                    })
                    .collect();
                LatentSampler::Discrete { xs, cdf }
            }
            Prior::Tabulated(t) => {
                let xs: Vec<f64> = t.knots().iter().map(|k| k.x.value()).collect();
                let fs: Vec<f64> = t.knots().iter().map(|k| k.density.value()).collect();
                let mut cdf = vec![0.0];
                for i in 1..xs.len() {
                    let seg = 0.5 * (xs[i] - xs[i - 1]) * (fs[i] + fs[i - 1]);
                    cdf.push(cdf[i - 1] + seg);
                }
                LatentSampler::Table { xs, fs, cdf }
            }
        })
    }

    #[inline]
    fn sample(&self, rng: &mut PhiloxStream) -> f64 {
        match self {
            LatentSampler::Point(x) => *x,
            LatentSampler::Uniform => rng.uniform(),
            LatentSampler::Beta(beta) => beta.sample(rng),
            LatentSampler::Discrete { xs, cdf } => {
                let target = rng.uniform() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c <= target).min(xs.len() - 1);
                xs[i]
            }
            LatentSampler::Table { xs, fs, cdf } => {
                let target = rng.uniform() * cdf[cdf.len() - 1];
                let i = cdf.partition_point(|&c| c <= target).clamp(1, xs.len() - 1);
                let (x0, h) = (xs[i - 1], xs[i] - xs[i - 1]);
                let (f0, f1) = (fs[i - 1], fs[i]);
                let mass = target - cdf[i - 1];
                // Root of f0 y + (f1 - f0) y^2 / (2h) = mass, in cancellation-free form.
                let disc = (f0 * f0 + 2.0 * (f1 - f0) * mass / h).max(0.0);
                let denom = f0 + disc.sqrt();
                let y = if denom > 0.0 { 2.0 * mass / denom } else { 0.0 };
                (x0 + y.clamp(0.0, h)).min(1.0)
            }
        }
    }
}

/// Rejection estimator with the default execution mode.
pub fn simulate_conditional(config: &SimulationConfig) -> Result<Estimate> {
    simulate_conditional_with(config, Execution::default())
}

pub fn simulate_conditional_with(config: &SimulationConfig, execution: Execution) -> Result<Estimate> {
    let sampler = LatentSampler::new(&config.prior)?;
    let philox = Philox::new(config.seed);
    let n = config.run_length;
    let partials = map_chunks(config.trials, execution, |lo, hi| {
        let (mut kept, mut hits) = (0u64, 0u64);
        for trial in lo..hi {
            let mut rng = philox.stream(trial);
            let x = sampler.sample(&mut rng);
            // Later tosses are irrelevant once the conditioning run is broken.
            if (0..n).all(|_| rng.uniform() < x) {
                kept += 1;
                if rng.uniform() < x {
                    hits += 1;
                }
            }
        }
        (kept, hits)
    });
    let (kept, hits) = partials
        .into_iter()
        .fold((0u64, 0u64), |(k, h), (pk, ph)| (k + pk, h + ph));
    if kept == 0 {
        return Err(Error::NoConditionedTrials { total: config.trials });
    }
    let p_hat = hits as f64 / kept as f64;
    Ok(Estimate {
        p_hat,
        stderr: (p_hat * (1.0 - p_hat) / kept as f64).sqrt(),
        conditioned_trials: kept,
        total_trials: config.trials,
        estimator: EstimatorKind::Rejection,
    })
}

#[derive(Debug, Clone, Copy)]
struct WeightedPartial {
    log_shift: f64,
    weight: f64,
    weighted_offset: f64,
    nonzero: u64,
}

/// Likelihood-weighted estimator with the default execution mode.
pub fn simulate_weighted(config: &SimulationConfig) -> Result<Estimate> {
    simulate_weighted_with(config, Execution::default())
}

/// `p_hat = Σ x^n · x / Σ x^n` over prior draws, accumulated as offsets from
/// the first draw with weights shifted by the running maximum log-weight.
/// The standard error is the delta-method value
/// `sqrt(Σ w² (x - p_hat)²) / Σ w`.
pub fn simulate_weighted_with(config: &SimulationConfig, execution: Execution) -> Result<Estimate> {
    let sampler = LatentSampler::new(&config.prior)?;
    let philox = Philox::new(config.seed);
    let n = config.run_length as f64;
    let log_weight = |x: f64| if config.run_length == 0 { 0.0 } else { n * x.ln() };
    let reference = sampler.sample(&mut philox.stream(0));

    let partials = map_chunks(config.trials, execution, |lo, hi| {
        let mut p = WeightedPartial {
            log_shift: f64::NEG_INFINITY,
            weight: 0.0,
            weighted_offset: 0.0,
            nonzero: 0,
        };
        for trial in lo..hi {
            let x = sampler.sample(&mut philox.stream(trial));
            let lw = log_weight(x);
            if lw == f64::NEG_INFINITY {
                continue;
            }
            p.nonzero += 1;
            if lw > p.log_shift {
                let rescale = (p.log_shift - lw).exp();
                p.weight *= rescale;
                p.weighted_offset *= rescale;
                p.log_shift = lw;
            }
            let w = (lw - p.log_shift).exp();
            p.weight += w;
            p.weighted_offset += w * (x - reference);
        }
        p
    });

    let log_shift = partials.iter().map(|p| p.log_shift).fold(f64::NEG_INFINITY, f64::max);
    if log_shift == f64::NEG_INFINITY {
        return Err(Error::ImpossibleEvidence(format!(
            "every draw from {} has zero likelihood for a run of {}",
            config.prior, config.run_length
        )));
    }
    let (mut weight, mut offset, mut nonzero) = (0.0, 0.0, 0u64);
    for p in &partials {
        nonzero += p.nonzero;
        if p.nonzero == 0 {
            continue;
        }
        let scale = (p.log_shift - log_shift).exp();
        weight += p.weight * scale;
        offset += p.weighted_offset * scale;
    }
    let p_hat = (reference + offset / weight).clamp(0.0, 1.0);

    let spreads = map_chunks(config.trials, execution, |lo, hi| {
        let mut sum = 0.0;
        for trial in lo..hi {
            let x = sampler.sample(&mut philox.stream(trial));
            let lw = log_weight(x);
            if lw == f64::NEG_INFINITY {
                continue;
            }
            let w = (lw - log_shift).exp();
            let d = x - p_hat;
            sum += w * w * d * d;
        }
        sum
    });
    let spread: f64 = spreads.iter().sum();

    Ok(Estimate {
        p_hat,
        stderr: spread.sqrt() / weight,
        conditioned_trials: nonzero,
        total_trials: config.trials,
        estimator: EstimatorKind::Weighted,
    })
}

/// Exact conditional probability by enumerating all `2^{n+1}` toss sequences
/// for every coin of a rational discrete mixture.
pub fn bruteforce_conditional(prior: &Prior, n: u64) -> Result<Rational> {
    if n > BRUTEFORCE_LIMIT {
        return Err(Error::LimitExceeded(format!(
            "brute-force enumeration is capped at n = {BRUTEFORCE_LIMIT}, got {n}"
        )));
    }
    let coins: Vec<(Rational, Rational)> = match prior {
        Prior::Discrete(d) => d
            .atoms()
            .iter()
            .map(|a| Some((a.x.exact()?.clone(), a.weight.exact()?.clone())))
            .collect::<Option<_>>()
            .ok_or(Error::NotExactlyRepresentable(
                "brute force needs rational atoms and weights",
            ))?,
        Prior::PointMass(p) => vec![(
            p.x()
                .exact()
                .ok_or(Error::NotExactlyRepresentable(
                    "brute force needs a rational point mass",
                ))?
                .clone(),
            Rational::one(),
        )],
        other => {
            return Err(Error::UnsupportedPrior {
                operation: "bruteforce_conditional",
                prior: other.to_string(),
            })
        }
    };

    let tosses = n as usize + 1;
    let mut prefix_mass = Rational::zero();
    let mut joint_mass = Rational::zero();
    for (x, weight) in &coins {
        // x = heads / outcomes; each sequence has integer mass over outcomes^{n+1}.
        let heads = x.numer().clone();
        let outcomes = x.denom().clone();
        let tails = &outcomes - &heads;
        let mut tally = Tally::default();
        enumerate(&heads, &tails, tosses, 0, BigInt::one(), true, &mut tally);
        debug_assert_eq!(tally.total, num_traits::pow(outcomes.clone(), tosses));
        let scale = weight / Rational::from_integer(num_traits::pow(outcomes, tosses));
        prefix_mass += &scale * Rational::from_integer(tally.prefix);
        joint_mass += scale * Rational::from_integer(tally.joint);
    }
    if prefix_mass.is_zero() {
        return Err(Error::ImpossibleEvidence(format!(
            "a run of {n} successes cannot occur under {prior}"
        )));
    }
    Ok(joint_mass / prefix_mass)
}

#[derive(Default)]
struct Tally {
    total: BigInt,
    prefix: BigInt,
    joint: BigInt,
}

/// Walks every toss sequence; `run` tracks whether all tosses so far succeeded.
fn enumerate(heads: &BigInt, tails: &BigInt, tosses: usize, depth: usize, mass: BigInt, run: bool, tally: &mut Tally) {
    if depth == tosses {
        tally.total += &mass;
        return;
    }
    let last = depth + 1 == tosses;
    for success in [true, false] {
        let factor = if success { heads } else { tails };
        let next = &mass * factor;
        if last {
            // Sequence complete: classify by its prefix and final toss.
            tally.total += &next;
            if run {
                tally.prefix += &next;
                if success {
                    tally.joint += &next;
                }
            }
        } else {
            enumerate(heads, tails, tosses, depth + 1, next, run && success, tally);
        }
    }
}

/// One morning of the turkey's life.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TurkeyDay {
    pub day: u64,
    /// Predictive for this morning given every earlier morning was a success.
    pub predictive: f64,
    pub fed: bool,
    pub log_loss: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub feed_days: u64,
    pub days: Vec<TurkeyDay>,
    pub eve_of_doom: PredictiveResult,
    /// Predictive for the day after the failure.
    pub after_doom: PredictiveResult,
    pub cumulative_log_loss: f64,
}

/// Successes on days `1..feed_days`, failure on day `feed_days`.
pub fn turkey_scenario(feed_days: u64, prior: &Prior) -> Result<ScenarioReport> {
    turkey_scenario_with(feed_days, prior, &QuadratureOptions::default())
}

pub fn turkey_scenario_with(feed_days: u64, prior: &Prior, opts: &QuadratureOptions) -> Result<ScenarioReport> {
    if feed_days == 0 {
        return Err(Error::InvalidConfig("feed_days must be at least 1".into()));
    }
    let table = predictive_table_with(prior, feed_days - 1, opts)?;
    if let Some(n) = table.truncated_at {
        return Err(Error::ImpossibleEvidence(format!(
            "a run of {n} successes cannot occur under {prior}"
        )));
    }
    let mut days = Vec::with_capacity(feed_days as usize);
    let mut cumulative = 0.0;
    for (n, row) in &table.rows {
        let day = n + 1;
        let fed = day < feed_days;
        let log_loss = if fed { -row.value.ln() } else { -(-row.value).ln_1p() };
        cumulative += log_loss;
        days.push(TurkeyDay {
            day,
            predictive: row.value,
            fed,
            log_loss,
        });
    }
    let eve_of_doom = predictive_after_run_with(prior, feed_days - 1, opts)?;
    let after_doom = predictive_with_failures_with(prior, RunEvidence::new(feed_days - 1, 1)?, opts)?;
    Ok(ScenarioReport {
        feed_days,
        days,
        eve_of_doom,
        after_doom,
        cumulative_log_loss: cumulative,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::moment_exact;
    use crate::prior::parse_prior;

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn bruteforce_two_coins() {
        let p = parse_prior("discrete:9/10@1/2,1/10@1/2").unwrap();
        assert_eq!(bruteforce_conditional(&p, 5).unwrap(), q(531_442, 590_500));
    }

    #[test]
    fn bruteforce_trivial_cases() {
        let half = parse_prior("discrete:1/2@1").unwrap();
        assert_eq!(bruteforce_conditional(&half, 3).unwrap(), q(1, 2));
        let sure = parse_prior("discrete:1@1/2,0@1/2").unwrap();
        assert_eq!(bruteforce_conditional(&sure, 1).unwrap(), q(1, 1));
        let point = parse_prior("point:1/3").unwrap();
        assert_eq!(bruteforce_conditional(&point, 4).unwrap(), q(1, 3));
    }

    #[test]
    fn bruteforce_errors() {
        let p = parse_prior("discrete:1/2@1").unwrap();
        assert!(matches!(bruteforce_conditional(&p, 21), Err(Error::LimitExceeded(_))));
        let zero = parse_prior("discrete:0@1").unwrap();
        assert!(matches!(
            bruteforce_conditional(&zero, 2),
            Err(Error::ImpossibleEvidence(_))
        ));
        assert!(matches!(
            bruteforce_conditional(&Prior::Uniform, 2),
            Err(Error::UnsupportedPrior { .. })
        ));
        let float = Prior::point(0.25).unwrap();
        assert!(matches!(
            bruteforce_conditional(&float, 2),
            Err(Error::NotExactlyRepresentable(_))
        ));
    }

    #[test]
    fn bruteforce_matches_moment_ratio() {
        let p = parse_prior("discrete:1/3@2,3/4@1,1/7@5").unwrap();
        for n in 0..=10 {
            let ratio = moment_exact(&p, n + 1).unwrap() / moment_exact(&p, n).unwrap();
            assert_eq!(bruteforce_conditional(&p, n).unwrap(), ratio, "n={n}");
        }
    }

    #[test]
    fn weighted_point_mass_is_exact() {
        let cfg = SimulationConfig::new(Prior::point(0.3).unwrap(), 25, 5000, 9).unwrap();
        let e = simulate_weighted(&cfg).unwrap();
        assert_eq!(e.p_hat, 0.3);
        assert_eq!(e.stderr, 0.0);
    }

    #[test]
    fn rejection_without_survivors_is_an_error() {
        let cfg = SimulationConfig::new(Prior::point(0.0).unwrap(), 3, 100, 1).unwrap();
        assert_eq!(
            simulate_conditional(&cfg).unwrap_err(),
            Error::NoConditionedTrials { total: 100 }
        );
        assert!(matches!(simulate_weighted(&cfg), Err(Error::ImpossibleEvidence(_))));
        assert!(SimulationConfig::new(Prior::Uniform, 3, 0, 1).is_err());
    }

    #[test]
    fn execution_modes_agree_bitwise() {
        let prior = parse_prior("table:0:1,0.5:3,1:0.5").unwrap();
        let cfg = SimulationConfig::new(prior, 4, 3 * CHUNK_TRIALS + 17, 77).unwrap();
        let a = simulate_conditional_with(&cfg, Execution::Parallel).unwrap();
        let b = simulate_conditional_with(&cfg, Execution::Sequential).unwrap();
        assert_eq!(a, b);
        let a = simulate_weighted_with(&cfg, Execution::Parallel).unwrap();
        let b = simulate_weighted_with(&cfg, Execution::Sequential).unwrap();
        assert_eq!(a.p_hat.to_bits(), b.p_hat.to_bits());
        assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    }

    #[test]
    fn table_sampler_matches_density() {
        // Density 2x: E[x] = 2/3, P(x < 1/2) = 1/4.
        let sampler = LatentSampler::new(&parse_prior("table:0:0,1:2").unwrap()).unwrap();
        let philox = Philox::new(5);
        let n = 100_000;
        let (mut sum, mut below) = (0.0, 0);
        for i in 0..n {
            let x = sampler.sample(&mut philox.stream(i));
            assert!((0.0..=1.0).contains(&x));
            sum += x;
            below += usize::from(x < 0.5);
        }
        let mean = sum / n as f64;
        assert!((mean - 2.0 / 3.0).abs() < 4.0 * (1.0f64 / 18.0 / n as f64).sqrt());
        let frac = below as f64 / n as f64;
        assert!((frac - 0.25).abs() < 4.0 * (0.25 * 0.75 / n as f64).sqrt());
    }

    #[test]
    fn turkey_examples() {
        let r = turkey_scenario(1000, &Prior::Uniform).unwrap();
        assert_eq!(r.eve_of_doom.exact, Some(q(1000, 1001)));
        let last = r.days.last().unwrap();
        assert_eq!(last.day, 1000);
        assert!(!last.fed);
        assert_eq!(last.predictive, 1000.0 / 1001.0);
        assert_eq!(r.after_doom.exact, Some(q(1000, 1002)));
        // Successes telescope: Σ -ln((n+1)/(n+2)) over n < 999 = ln 1000.
        let fed_loss: f64 = r.days.iter().filter(|d| d.fed).map(|d| d.log_loss).sum();
        assert!((fed_loss - 1000f64.ln()).abs() < 1e-9);

        let r = turkey_scenario(1, &Prior::Uniform).unwrap();
        assert_eq!(r.eve_of_doom.exact, Some(q(1, 2)));
        assert_eq!(r.days.len(), 1);

        let dogmatic = Prior::point(1.0).unwrap();
        assert!(matches!(
            turkey_scenario(2, &dogmatic),
            Err(Error::ImpossibleEvidence(_))
        ));
        assert!(matches!(
            turkey_scenario(0, &Prior::Uniform),
            Err(Error::InvalidConfig(_))
        ));
    }
}
