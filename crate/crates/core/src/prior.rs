//! Prior distributions over the latent success probability `x ∈ [0, 1]`.
//!
//! Every constructor validates its input. The `Prior::*` convenience
//! constructors also normalize, so any `Prior` obtained through them (or
//! through [`parse_prior`]) is ready for the moment and predictive routines.
//!
//! Prior spec grammar:
//!
//! ```text
//! uniform
//! point:<x>
//! beta:<a>,<b>
//! discrete:<x1>@<w1>,<x2>@<w2>,...
//! table:<x1>:<f1>,<x2>:<f2>,...
//! ```
//!
//! Numbers are decimal literals or fractions `p/q`; both parse exactly.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::number::{Number, Rational};

/// Tolerance on the normalized total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

fn check_probability(x: &Number, what: &str) -> Result<()> {
    let v = x.value();
    let in_range = match x.exact() {
        Some(r) => *r >= Rational::zero() && *r <= Rational::one(),
        None => (0.0..=1.0).contains(&v),
    };
    if in_range {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} {x} is outside [0, 1]")))
    }
}

fn check_nonnegative(w: &Number, what: &str) -> Result<()> {
    let ok = match w.exact() {
        Some(r) => *r >= Rational::zero(),
        None => w.value() >= 0.0 && w.value().is_finite(),
    };
    if ok {
        Ok(())
    } else {
        Err(Error::Domain(format!("{what} {w} is negative or not finite")))
    }
}

/// Degenerate prior: the success probability is known to be `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointMass {
    x: Number,
}

impl PointMass {
    pub fn new(x: Number) -> Result<Self> {
        check_probability(&x, "point mass")?;
        Ok(Self { x })
    }

    pub fn x(&self) -> &Number {
        &self.x
    }
}

/// One coin of a discrete mixture: success probability and (unnormalized) weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub x: Number,
    pub weight: Number,
}

impl Atom {
    pub fn new(x: impl Into<Number>, weight: impl Into<Number>) -> Self {
        Self {
            x: x.into(),
            weight: weight.into(),
        }
    }
}

/// Finite mixture of coins with choice weights.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMixture {
    atoms: Vec<Atom>,
}

impl DiscreteMixture {
    /// Validates the atoms without normalizing them.
    pub fn new(atoms: Vec<Atom>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Domain("discrete mixture needs at least one atom".into()));
        }
        for atom in &atoms {
            check_probability(&atom.x, "atom")?;
            check_nonnegative(&atom.weight, "weight")?;
        }
        Ok(Self { atoms })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_exact(&self) -> bool {
        self.atoms
            .iter()
            .all(|a| a.x.exact().is_some() && a.weight.exact().is_some())
    }

    pub fn total_weight(&self) -> Number {
        self.atoms
            .iter()
            .skip(1)
            .fold(self.atoms[0].weight.clone(), |acc, a| acc.add(&a.weight))
    }

    /// Merges duplicate abscissae, drops zero weights and rescales to unit mass.
    pub fn normalize(&self) -> Result<Self> {
        let mut merged: Vec<Atom> = Vec::with_capacity(self.atoms.len());
        for atom in &self.atoms {
            if atom.weight.is_zero() {
                continue;
            }
            match merged.iter_mut().find(|m| m.x.same_as(&atom.x)) {
                Some(m) => m.weight = m.weight.add(&atom.weight),
                None => merged.push(atom.clone()),
            }
        }
        if merged.is_empty() {
            return Err(Error::ZeroMass);
        }
        let total = merged
            .iter()
            .skip(1)
            .fold(merged[0].weight.clone(), |acc, a| acc.add(&a.weight));
        for atom in &mut merged {
            atom.weight = atom.weight.div(&total);
        }
        Ok(Self { atoms: merged })
    }

    /// Smallest and largest abscissa carrying positive weight.
    pub fn support(&self) -> (f64, f64) {
        self.atoms
            .iter()
            .filter(|a| !a.weight.is_zero())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), a| {
                (lo.min(a.x.value()), hi.max(a.x.value()))
            })
    }
}

/// Beta(a, b) prior; Beta(1, 1) is the uniform density.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaPrior {
    a: Number,
    b: Number,
}

impl BetaPrior {
    pub fn new(a: Number, b: Number) -> Result<Self> {
        for (name, p) in [("a", &a), ("b", &b)] {
            let positive = match p.exact() {
                Some(r) => *r > Rational::zero(),
                None => p.value() > 0.0 && p.value().is_finite(),
            };
            if !positive {
                return Err(Error::Domain(format!("Beta parameter {name} = {p} must be positive")));
            }
        }
        Ok(Self { a, b })
    }

    pub fn a(&self) -> &Number {
        &self.a
    }

    pub fn b(&self) -> &Number {
        &self.b
    }

    pub fn is_exact(&self) -> bool {
        self.a.exact().is_some() && self.b.exact().is_some()
    }
}

/// Grid point of a piecewise-linear density.
#[derive(Debug, Clone, PartialEq)]
pub struct Knot {
    pub x: Number,
    pub density: Number,
}

impl Knot {
    pub fn new(x: impl Into<Number>, density: impl Into<Number>) -> Self {
        Self {
            x: x.into(),
            density: density.into(),
        }
    }
}

/// Density given by ordinates on a grid spanning `[0, 1]`, linear in between.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    knots: Vec<Knot>,
}

impl TabulatedDensity {
    /// Validates the grid without normalizing it.
    pub fn new(knots: Vec<Knot>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::Domain("density table needs at least two grid points".into()));
        }
        if !knots[0].x.is_zero() || !knots[knots.len() - 1].x.is_one() {
            return Err(Error::Domain("density table must start at 0 and end at 1".into()));
        }
        for k in &knots {
            check_probability(&k.x, "grid abscissa")?;
            check_nonnegative(&k.density, "density ordinate")?;
        }
        for pair in knots.windows(2) {
            let increasing = match (pair[0].x.exact(), pair[1].x.exact()) {
                (Some(a), Some(b)) => a < b,
                _ => pair[0].x.value() < pair[1].x.value(),
            };
            if !increasing {
                return Err(Error::Domain(format!(
                    "grid abscissae must be strictly increasing ({} then {})",
                    pair[0].x, pair[1].x
                )));
            }
        }
        Ok(Self { knots })
    }

    pub fn knots(&self) -> &[Knot] {
        &self.knots
    }

    pub fn is_exact(&self) -> bool {
        self.knots
            .iter()
            .all(|k| k.x.exact().is_some() && k.density.exact().is_some())
    }

    /// Trapezoidal mass, exact for a piecewise-linear density.
    pub fn mass(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|p| 0.5 * (p[1].x.value() - p[0].x.value()) * (p[0].density.value() + p[1].density.value()))
            .sum()
    }

    pub fn mass_exact(&self) -> Option<Rational> {
        let half = Rational::new(1.into(), 2.into());
        let mut total = Rational::zero();
        for p in self.knots.windows(2) {
            let width = p[1].x.exact()? - p[0].x.exact()?;
            total += &half * width * (p[0].density.exact()? + p[1].density.exact()?);
        }
        Some(total)
    }

    /// Rescales the ordinates so the density integrates to one.
    pub fn normalize(&self) -> Result<Self> {
        if self.knots.iter().all(|k| k.density.is_zero()) {
            return Err(Error::ZeroMass);
        }
        let mass = match self.mass_exact() {
            Some(m) => Number::from_rational(m),
            None => Number::from_f64(self.mass()),
        };
        let knots = self
            .knots
            .iter()
            .map(|k| Knot {
                x: k.x.clone(),
                density: k.density.div(&mass),
            })
            .collect();
        Ok(Self { knots })
    }

    /// Evaluates the piecewise-linear density at `x ∈ [0, 1]`.
    pub fn density_at(&self, x: f64) -> f64 {
        let k = &self.knots;
        let i = k.partition_point(|knot| knot.x.value() <= x).clamp(1, k.len() - 1);
        let (x0, x1) = (k[i - 1].x.value(), k[i].x.value());
        let (f0, f1) = (k[i - 1].density.value(), k[i].density.value());
        let t = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
        f0 + (f1 - f0) * t
    }

    /// Right end of the support: the density vanishes on `[upper, 1]`.
    pub fn support_upper(&self) -> f64 {
        let k = &self.knots;
        match k.iter().rposition(|knot| !knot.density.is_zero()) {
            Some(i) if i + 1 < k.len() => k[i + 1].x.value(),
            _ => 1.0,
        }
    }

    /// Left end of the support: the density vanishes on `[0, lower]`.
    pub fn support_lower(&self) -> f64 {
        let k = &self.knots;
        match k.iter().position(|knot| !knot.density.is_zero()) {
            Some(i) if i > 0 => k[i - 1].x.value(),
            _ => 0.0,
        }
    }
}

/// Distribution of the latent success probability.
#[derive(Debug, Clone, PartialEq)]
pub enum Prior {
    PointMass(PointMass),
    Discrete(DiscreteMixture),
    Beta(BetaPrior),
    /// Alias of Beta(1, 1).
    Uniform,
    Tabulated(TabulatedDensity),
}

impl Prior {
    pub fn uniform() -> Self {
        Prior::Uniform
    }

    pub fn point(x: impl Into<Number>) -> Result<Self> {
        PointMass::new(x.into()).map(Prior::PointMass)
    }

    pub fn beta(a: impl Into<Number>, b: impl Into<Number>) -> Result<Self> {
        BetaPrior::new(a.into(), b.into()).map(Prior::Beta)
    }

    /// Validated and normalized discrete mixture.
    pub fn discrete(atoms: Vec<Atom>) -> Result<Self> {
        Ok(Prior::Discrete(DiscreteMixture::new(atoms)?.normalize()?))
    }

    /// Validated and normalized piecewise-linear density.
    pub fn tabulated(knots: Vec<Knot>) -> Result<Self> {
        Ok(Prior::Tabulated(TabulatedDensity::new(knots)?.normalize()?))
    }

    /// True when every parameter carries an exact rational.
    pub fn is_exact(&self) -> bool {
        match self {
            Prior::PointMass(p) => p.x.exact().is_some(),
            Prior::Discrete(d) => d.is_exact(),
            Prior::Beta(b) => b.is_exact(),
            Prior::Uniform => true,
            Prior::Tabulated(t) => t.is_exact(),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Prior::PointMass(_) => "point",
            Prior::Discrete(_) => "discrete",
            Prior::Beta(_) => "beta",
            Prior::Uniform => "uniform",
            Prior::Tabulated(_) => "table",
        }
    }

    /// Smallest and largest points of the support.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Prior::PointMass(p) => (p.x.value(), p.x.value()),
            Prior::Discrete(d) => d.support(),
            Prior::Beta(_) | Prior::Uniform => (0.0, 1.0),
            Prior::Tabulated(t) => (t.support_lower(), t.support_upper()),
        }
    }
}

/// Normalizes a prior: unit total mass, duplicate atoms merged.
pub fn normalize(prior: &Prior) -> Result<Prior> {
    match prior {
        Prior::Discrete(d) => d.normalize().map(Prior::Discrete),
        Prior::Tabulated(t) => t.normalize().map(Prior::Tabulated),
        other => Ok(other.clone()),
    }
}

/// First moment of the prior.
pub fn prior_mean(prior: &Prior) -> f64 {
    match prior {
        Prior::PointMass(p) => p.x.value(),
        Prior::Discrete(d) => {
            let total: f64 = d.atoms.iter().map(|a| a.weight.value()).sum();
            let first: f64 = d.atoms.iter().map(|a| a.weight.value() * a.x.value()).sum();
            first / total
        }
        Prior::Beta(b) => b.a.value() / (b.a.value() + b.b.value()),
        Prior::Uniform => 0.5,
        Prior::Tabulated(t) => {
            let first: f64 = t
                .knots
                .windows(2)
                .map(|p| {
                    let (x0, x1) = (p[0].x.value(), p[1].x.value());
                    let (f0, f1) = (p[0].density.value(), p[1].density.value());
                    (x1 - x0) / 6.0 * (f0 * (2.0 * x0 + x1) + f1 * (x0 + 2.0 * x1))
                })
                .sum();
            first / t.mass()
        }
    }
}

fn parse_list<T>(body: &str, item: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    body.split(',').map(|s| item(s.trim())).collect()
}

fn parse_pair(s: &str, sep: char, what: &str) -> Result<(Number, Number)> {
    let (left, right) = s
        .split_once(sep)
        .ok_or_else(|| Error::Parse(format!("expected <x>{sep}<{what}>, got {s:?}")))?;
    Ok((left.trim().parse()?, right.trim().parse()?))
}

/// Parses a prior spec string and returns the normalized prior.
pub fn parse_prior(spec: &str) -> Result<Prior> {
    let spec = spec.trim();
    if spec == "uniform" {
        return Ok(Prior::Uniform);
    }
    let (kind, body) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("unknown prior spec {spec:?}")))?;
    match kind.trim() {
        "point" => Prior::point(body.trim().parse::<Number>()?),
        "beta" => {
            let params = parse_list(body, |s| s.parse::<Number>())?;
            match <[Number; 2]>::try_from(params) {
                Ok([a, b]) => Prior::beta(a, b),
                Err(_) => Err(Error::Parse(format!("beta expects two parameters, got {body:?}"))),
            }
        }
        "discrete" => {
            let atoms = parse_list(body, |s| {
                parse_pair(s, '@', "weight").map(|(x, w)| Atom { x, weight: w })
            })?;
            Prior::discrete(atoms)
        }
        "table" => {
            let knots = parse_list(body, |s| {
                parse_pair(s, ':', "density").map(|(x, f)| Knot { x, density: f })
            })?;
            Prior::tabulated(knots)
        }
        other => Err(Error::Parse(format!("unknown prior kind {other:?}"))),
    }
}

impl FromStr for Prior {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_prior(s)
    }
}

impl fmt::Display for Prior {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn join<T>(items: &[T], render: impl Fn(&T) -> String) -> String {
            items.iter().map(render).collect::<Vec<_>>().join(",")
        }
        match self {
            Prior::PointMass(p) => write!(f, "point:{}", p.x),
            Prior::Discrete(d) => write!(f, "discrete:{}", join(&d.atoms, |a| format!("{}@{}", a.x, a.weight))),
            Prior::Beta(b) => write!(f, "beta:{},{}", b.a, b.b),
            Prior::Uniform => write!(f, "uniform"),
            Prior::Tabulated(t) => write!(f, "table:{}", join(&t.knots, |k| format!("{}:{}", k.x, k.density))),
        }
    }
}
