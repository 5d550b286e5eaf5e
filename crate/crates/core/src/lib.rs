//! Posterior-predictive probabilities for exchangeable success/failure runs.
//!
//! A coin with unknown success probability `x` is drawn from a [`Prior`] and
//! tossed repeatedly. After `n` straight successes the probability of another
//! one is the moment ratio `E[x^{n+1}] / E[x^n]`; under the uniform prior this
//! is Laplace's rule of succession `(n+1)/(n+2)`.
//!
//! ```
//! use succession::{parse_prior, predictive_after_run, sunrise};
//!
//! let two_coins = parse_prior("discrete:0.9@0.5,0.1@0.5").unwrap();
//! let p = predictive_after_run(&two_coins, 5).unwrap();
//! assert_eq!(p.exact.unwrap().to_string(), "265721/295250");
//!
//! assert_eq!(sunrise(1_826_213).decimal, "0.99999945");
//! ```

pub mod decimal;
pub mod error;
pub mod moments;
pub mod montecarlo;
pub mod number;
pub mod predictive;
pub mod prior;
pub mod quadrature;
pub mod rng;

pub use error::{Error, Result};
pub use moments::{
    log_moment, mixed_moment, mixed_moment_exact, moment, moment_exact, quadrature_moment, Method, MomentValue,
    QuadratureOptions,
};
pub use montecarlo::{
    bruteforce_conditional, simulate_conditional, simulate_weighted, turkey_scenario, Estimate, EstimatorKind,
    Execution, ScenarioReport, SimulationConfig,
};
pub use number::{Number, Rational};
pub use predictive::{
    asymptotic_ratio, predictive_after_run, predictive_table, predictive_uniform, predictive_with_failures, sunrise,
    PredictiveResult, PredictiveTable, RunEvidence, SunriseReport,
};
pub use prior::{normalize, parse_prior, prior_mean, Atom, Knot, Prior};
