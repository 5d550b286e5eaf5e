//! Globally adaptive composite Gauss–Legendre integration.
//!
//! Each panel is integrated with a 10- and a 20-point Gauss–Legendre rule;
//! the 20-point value is kept and the difference is the panel's error
//! estimate. The panel with the largest estimate is bisected until the summed
//! estimate meets the tolerance. Panel order, splitting and summation are
//! fixed by the input, so results are bit-reproducible.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default absolute tolerance on a moment.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Default refinement budget.
pub const DEFAULT_MAX_PANELS: usize = 1 << 20;

const LOW_ORDER: usize = 10;
const HIGH_ORDER: usize = 20;

/// Nodes and weights of an `order`-point Gauss–Legendre rule on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes the rule by Newton iteration on the Legendre polynomial.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "Gauss-Legendre order must be positive");
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let m = order.div_ceil(2);
        let nf = order as f64;
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(order, z);
                dp = d;
                let dz = p / d;
                z -= dz;
                if dz.abs() <= 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(order, z);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - z * z) * dp * dp);
            nodes[i] = -z;
            nodes[order - 1 - i] = z;
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Integrates `f` over `[a, b]`; also returns `Σ |w f|` for roundoff estimates.
    pub fn integrate(&self, f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut sum = 0.0;
        let mut abs = 0.0;
        for (&t, &w) in self.nodes.iter().zip(&self.weights) {
            let v = w * f(mid + half * t);
            sum += v;
            abs += v.abs();
        }
        (sum * half, abs * half.abs())
    }
}

fn legendre_with_derivative(order: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=order {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let n = order as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

fn rules() -> &'static (GaussLegendre, GaussLegendre) {
    static RULES: OnceLock<(GaussLegendre, GaussLegendre)> = OnceLock::new();
    RULES.get_or_init(|| (GaussLegendre::new(LOW_ORDER), GaussLegendre::new(HIGH_ORDER)))
}

/// Stopping rule for the adaptive driver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Relative to the magnitude of the integral.
    Relative(f64),
}

impl Tolerance {
    fn target(self, integral: f64) -> f64 {
        match self {
            Tolerance::Absolute(t) => t,
            Tolerance::Relative(r) => r * integral.abs(),
        }
    }
}

/// Integral value with a conservative absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error_bound: f64,
    pub panels: usize,
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    floor: f64,
}

impl Panel {
    fn new(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Self {
        let (low, high) = rules();
        let (coarse, _) = low.integrate(f, a, b);
        let (value, abs) = high.integrate(f, a, b);
        let floor = 64.0 * f64::EPSILON * abs;
        let error = (value - coarse).abs().max(floor);
        Self {
            a,
            b,
            value,
            error,
            floor,
        }
    }

    fn splittable(&self) -> bool {
        let mid = 0.5 * (self.a + self.b);
        self.error > self.floor && mid > self.a && mid < self.b
    }
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Panel {}

impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

/// Integrates `f` over consecutive `breakpoints`, refining until the summed
/// error estimate meets `tol` or `max_panels` is exhausted.
pub fn integrate(f: impl Fn(f64) -> f64, breakpoints: &[f64], tol: Tolerance, max_panels: usize) -> Result<Integral> {
    let mut active = BinaryHeap::new();
    for pair in breakpoints.windows(2) {
        if pair[1] > pair[0] {
            active.push(Panel::new(&f, pair[0], pair[1]));
        }
    }
    let mut done: Vec<Panel> = Vec::new();
    let totals = |active: &BinaryHeap<Panel>, done: &[Panel]| {
        let mut panels: Vec<&Panel> = active.iter().chain(done.iter()).collect();
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        panels.iter().fold((0.0, 0.0), |(v, e), p| (v + p.value, e + p.error))
    };
    let (mut value, mut error) = totals(&active, &done);
    let mut since_resum = 0usize;
    loop {
        if error <= tol.target(value) {
            break;
        }
        let Some(worst) = active.pop() else {
            break;
        };
        if !worst.splittable() {
            done.push(worst);
            continue;
        }
        if active.len() + done.len() + 2 > max_panels {
            active.push(worst);
            let (v, e) = totals(&active, &done);
            return Err(Error::ToleranceNotMet {
                tol: tol.target(v),
                estimate: e,
                panels: active.len() + done.len(),
            });
        }
        let mid = 0.5 * (worst.a + worst.b);
        let left = Panel::new(&f, worst.a, mid);
        let right = Panel::new(&f, mid, worst.b);
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        active.push(left);
        active.push(right);
        since_resum += 1;
        if since_resum >= 256 {
            (value, error) = totals(&active, &done);
            since_resum = 0;
        }
    }
    let (value, error) = totals(&active, &done);
    if error > tol.target(value) {
        return Err(Error::ToleranceNotMet {
            tol: tol.target(value),
            estimate: error,
            panels: active.len() + done.len(),
        });
    }
    Ok(Integral {
        value,
        error_bound: error,
        panels: active.len() + done.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let rule = GaussLegendre::new(HIGH_ORDER);
        for degree in 0..40 {
            let (v, _) = rule.integrate(&|x: f64| x.powi(degree), 0.0, 1.0);
            let exact = 1.0 / (degree as f64 + 1.0);
            assert!((v - exact).abs() < 1e-14, "degree {degree}: {v} vs {exact}");
        }
    }

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        for order in [1, 2, 3, 10, 20, 33] {
            let rule = GaussLegendre::new(order);
            let total: f64 = rule.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "order {order}");
            for i in 0..order {
                assert!((rule.nodes[i] + rule.nodes[order - 1 - i]).abs() < 1e-15);
            }
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn adaptive_handles_sqrt_singularity() {
        let r = integrate(
            |x: f64| x.sqrt(),
            &[0.0, 1.0],
            Tolerance::Absolute(1e-12),
            DEFAULT_MAX_PANELS,
        )
        .unwrap();
        assert!((r.value - 2.0 / 3.0).abs() < 1e-12, "{r:?}");
        assert!(r.error_bound <= 1e-12);
    }

    #[test]
    fn relative_tolerance_scales_with_integral() {
        let scale = 1e-200;
        let r = integrate(
            |x: f64| scale * x.powi(70),
            &[0.0, 1.0],
            Tolerance::Relative(1e-12),
            DEFAULT_MAX_PANELS,
        )
        .unwrap();
        let exact = scale / 71.0;
        assert!(((r.value - exact) / exact).abs() < 1e-12);
    }

    #[test]
    fn budget_exhaustion_is_reported() {
        let err = integrate(|x: f64| (1.0 / x).sin(), &[1e-9, 1.0], Tolerance::Absolute(1e-14), 16).unwrap_err();
        assert!(
            matches!(err, Error::ToleranceNotMet { panels, .. } if panels <= 16),
            "{err:?}"
        );
    }

    #[test]
    fn deterministic_for_same_input() {
        let f = |x: f64| (3.0 * x).exp() * x.sqrt();
        let a = integrate(f, &[0.0, 0.3, 1.0], Tolerance::Absolute(1e-13), DEFAULT_MAX_PANELS).unwrap();
        let b = integrate(f, &[0.0, 0.3, 1.0], Tolerance::Absolute(1e-13), DEFAULT_MAX_PANELS).unwrap();
        assert_eq!(a.value.to_bits(), b.value.to_bits());
        assert_eq!(a.error_bound.to_bits(), b.error_bound.to_bits());
    }
}
