//! Primitive distributions: validation, seeded sampling and log densities.
//!
//! All log densities are natural logarithms. Values outside a family's
//! support score `-inf` rather than failing, so likelihoods can flow through
//! arithmetic in the inference handlers.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_factorial;
use statrs::function::gamma::ln_gamma;

use crate::env::ObsVar;
use crate::error::{Error, Result};

/// Largest binomial trial count accepted.
pub const MAX_BINOMIAL_TRIALS: u64 = 1_000_000;

/// Below this expected count of successes the binomial sampler inverts the
/// cdf; above it, it sums Bernoulli trials.
const BINOMIAL_INVERSION_LIMIT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Real,
    Int,
    Bool,
    Vec,
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::Real => "real",
            Kind::Int => "int",
            Kind::Bool => "bool",
            Kind::Vec => "vec",
        })
    }
}

/// A value any primitive distribution can produce.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PrimVal {
    Real(f64),
    Int(i64),
    Bool(bool),
    Vec(Vec<f64>),
}

impl PrimVal {
    pub fn kind(&self) -> Kind {
        match self {
            PrimVal::Real(_) => Kind::Real,
            PrimVal::Int(_) => Kind::Int,
            PrimVal::Bool(_) => Kind::Bool,
            PrimVal::Vec(_) => Kind::Vec,
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match *self {
            PrimVal::Real(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match *self {
            PrimVal::Int(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match *self {
            PrimVal::Bool(x) => Some(x),
            _ => None,
        }
    }

    pub fn as_vec(&self) -> Option<&[f64]> {
        match self {
            PrimVal::Vec(x) => Some(x),
            _ => None,
        }
    }

    /// Bitwise equality; distinguishes `0.0` from `-0.0` and equates NaNs
    /// with identical payloads.
    pub fn bit_eq(&self, other: &PrimVal) -> bool {
        match (self, other) {
            (PrimVal::Real(a), PrimVal::Real(b)) => a.to_bits() == b.to_bits(),
            (PrimVal::Vec(a), PrimVal::Vec(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (a, b) => a == b,
        }
    }
}

impl fmt::Display for PrimVal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrimVal::Real(x) => write!(f, "{x}"),
            PrimVal::Int(x) => write!(f, "{x}"),
            PrimVal::Bool(x) => write!(f, "{x}"),
            PrimVal::Vec(xs) => {
                f.write_str("[")?;
                for (i, x) in xs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{x}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl From<f64> for PrimVal {
    fn from(x: f64) -> Self {
        PrimVal::Real(x)
    }
}

impl From<i64> for PrimVal {
    fn from(x: i64) -> Self {
        PrimVal::Int(x)
    }
}

impl From<bool> for PrimVal {
    fn from(x: bool) -> Self {
        PrimVal::Bool(x)
    }
}

impl From<Vec<f64>> for PrimVal {
    fn from(x: Vec<f64>) -> Self {
        PrimVal::Vec(x)
    }
}

/// A distribution family with validated parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Normal { mu: f64, sigma: f64 },
    Uniform { lo: f64, hi: f64 },
    Bernoulli { p: f64 },
    Binomial { n: u64, p: f64 },
    Beta { a: f64, b: f64 },
    /// Shape/scale parameterisation: mean `shape * scale`.
    Gamma { shape: f64, scale: f64 },
    /// A zero rate is the point mass at zero.
    Poisson { rate: f64 },
    Discrete { choices: Arc<[(PrimVal, f64)]>, total: f64 },
    Dirichlet { alphas: Arc<[f64]> },
}

fn invalid(family: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        family,
        reason: reason.into(),
    }
}

fn check(family: &'static str, ok: bool, reason: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(invalid(family, reason()))
    }
}

fn probability(family: &'static str, p: f64) -> Result<()> {
    check(family, (0.0..=1.0).contains(&p), || {
        format!("probability {p} outside [0, 1]")
    })
}

fn positive(family: &'static str, what: &str, x: f64) -> Result<()> {
    check(family, x.is_finite() && x > 0.0, || {
        format!("{what} must be positive and finite, got {x}")
    })
}

impl Family {
    pub fn normal(mu: f64, sigma: f64) -> Result<Self> {
        check("normal", mu.is_finite(), || format!("mean {mu} is not finite"))?;
        positive("normal", "standard deviation", sigma)?;
        Ok(Family::Normal { mu, sigma })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        check("uniform", lo.is_finite() && hi.is_finite() && lo < hi, || {
            format!("need finite lo < hi, got [{lo}, {hi}]")
        })?;
        Ok(Family::Uniform { lo, hi })
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        probability("bernoulli", p)?;
        Ok(Family::Bernoulli { p })
    }

    pub fn binomial(n: i64, p: f64) -> Result<Self> {
        check("binomial", n >= 0, || format!("trial count {n} is negative"))?;
        check("binomial", n as u64 <= MAX_BINOMIAL_TRIALS, || {
            format!("trial count {n} exceeds {MAX_BINOMIAL_TRIALS}")
        })?;
        probability("binomial", p)?;
        Ok(Family::Binomial { n: n as u64, p })
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        positive("beta", "a", a)?;
        positive("beta", "b", b)?;
        Ok(Family::Beta { a, b })
    }

    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        positive("gamma", "shape", shape)?;
        positive("gamma", "scale", scale)?;
        Ok(Family::Gamma { shape, scale })
    }

    pub fn poisson(rate: f64) -> Result<Self> {
        check("poisson", rate.is_finite() && rate >= 0.0, || {
            format!("rate must be non-negative and finite, got {rate}")
        })?;
        Ok(Family::Poisson { rate })
    }

    /// Weights need not sum to one; they are normalised internally.
    pub fn discrete(choices: Vec<(PrimVal, f64)>) -> Result<Self> {
        let first = choices
            .first()
            .ok_or_else(|| invalid("discrete", "no choices"))?;
        let kind = first.0.kind();
        let mut total = 0.0;
        for (v, w) in &choices {
            check("discrete", v.kind() == kind, || {
                format!("mixed value kinds {kind} and {}", v.kind())
            })?;
            check("discrete", w.is_finite() && *w >= 0.0, || {
                format!("weight {w} must be non-negative and finite")
            })?;
            total += w;
        }
        check("discrete", total > 0.0, || "all weights are zero".into())?;
        Ok(Family::Discrete {
            choices: choices.into(),
            total,
        })
    }

    /// A discrete distribution over `0..weights.len()`.
    pub fn categorical(weights: &[f64]) -> Result<Self> {
        Family::discrete(
            weights
                .iter()
                .enumerate()
                .map(|(i, &w)| (PrimVal::Int(i as i64), w))
                .collect(),
        )
    }

    pub fn dirichlet(alphas: Vec<f64>) -> Result<Self> {
        check("dirichlet", !alphas.is_empty(), || "no concentrations".into())?;
        for &a in &alphas {
            positive("dirichlet", "concentration", a)?;
        }
        Ok(Family::Dirichlet {
            alphas: alphas.into(),
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Normal { .. } => "normal",
            Family::Uniform { .. } => "uniform",
            Family::Bernoulli { .. } => "bernoulli",
            Family::Binomial { .. } => "binomial",
            Family::Beta { .. } => "beta",
            Family::Gamma { .. } => "gamma",
            Family::Poisson { .. } => "poisson",
            Family::Discrete { .. } => "discrete",
            Family::Dirichlet { .. } => "dirichlet",
        }
    }

    /// The kind of value this family produces.
    pub fn base_kind(&self) -> Kind {
        match self {
            Family::Normal { .. }
            | Family::Uniform { .. }
            | Family::Beta { .. }
            | Family::Gamma { .. } => Kind::Real,
            Family::Bernoulli { .. } => Kind::Bool,
            Family::Binomial { .. } | Family::Poisson { .. } => Kind::Int,
            Family::Discrete { choices, .. } => choices[0].0.kind(),
            Family::Dirichlet { .. } => Kind::Vec,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PrimVal {
        match self {
            Family::Normal { mu, sigma } => PrimVal::Real(
                rand_distr::Normal::new(*mu, *sigma)
                    .expect("validated")
                    .sample(rng),
            ),
            Family::Uniform { lo, hi } => PrimVal::Real(lo + (hi - lo) * rng.random::<f64>()),
            Family::Bernoulli { p } => PrimVal::Bool(rng.random::<f64>() < *p),
            Family::Binomial { n, p } => PrimVal::Int(sample_binomial(*n, *p, rng) as i64),
            Family::Beta { a, b } => {
                PrimVal::Real(rand_distr::Beta::new(*a, *b).expect("validated").sample(rng))
            }
            Family::Gamma { shape, scale } => PrimVal::Real(
                rand_distr::Gamma::new(*shape, *scale)
                    .expect("validated")
                    .sample(rng),
            ),
            Family::Poisson { rate } => {
                if *rate == 0.0 {
                    PrimVal::Int(0)
                } else {
                    let k: f64 = rand_distr::Poisson::new(*rate)
                        .expect("validated")
                        .sample(rng);
                    PrimVal::Int(k as i64)
                }
            }
            Family::Discrete { choices, total } => {
                let target = rng.random::<f64>() * total;
                let mut acc = 0.0;
                for (v, w) in choices.iter() {
                    acc += w;
                    if target < acc {
                        return v.clone();
                    }
                }
                // rounding put the target past the last positive weight
                choices
                    .iter()
                    .rev()
                    .find(|(_, w)| *w > 0.0)
                    .map(|(v, _)| v.clone())
                    .expect("validated: some weight is positive")
            }
            Family::Dirichlet { alphas } => PrimVal::Vec(sample_dirichlet(alphas, rng)),
        }
    }

    /// Log density or mass at `v`; `-inf` outside the support.
    pub fn log_prob(&self, v: &PrimVal) -> Result<f64> {
        let kind = self.base_kind();
        if v.kind() != kind {
            return Err(Error::ValueKind {
                family: self.name(),
                found: v.kind(),
            });
        }
        Ok(match (self, v) {
            (Family::Normal { mu, sigma }, PrimVal::Real(x)) => {
                let z = (x - mu) / sigma;
                -0.5 * z * z - sigma.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
            (Family::Uniform { lo, hi }, PrimVal::Real(x)) => {
                if (*lo..=*hi).contains(x) {
                    0.0 - (hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            (Family::Bernoulli { p }, PrimVal::Bool(b)) => {
                if *b {
                    p.ln()
                } else {
                    (1.0 - p).ln()
                }
            }
            (Family::Binomial { n, p }, PrimVal::Int(k)) => binomial_log_pmf(*n, *p, *k),
            (Family::Beta { a, b }, PrimVal::Real(x)) => beta_log_pdf(*a, *b, *x),
            (Family::Gamma { shape, scale }, PrimVal::Real(x)) => {
                gamma_log_pdf(*shape, *scale, *x)
            }
            (Family::Poisson { rate }, PrimVal::Int(k)) => poisson_log_pmf(*rate, *k),
            (Family::Discrete { choices, total }, v) => {
                let mass: f64 = choices
                    .iter()
                    .filter(|(c, _)| c == v)
                    .map(|(_, w)| w)
                    .sum();
                (mass / total).ln()
            }
            (Family::Dirichlet { alphas }, PrimVal::Vec(xs)) => dirichlet_log_pdf(alphas, xs),
            _ => unreachable!("kind checked above"),
        })
    }
}

/// `x * ln(y)` with the convention `0 * ln(0) = 0`.
fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn binomial_log_pmf(n: u64, p: f64, k: i64) -> f64 {
    if k < 0 || k as u64 > n {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    let log_choose = ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k);
    log_choose + xlny(k as f64, p) + xlny((n - k) as f64, 1.0 - p)
}

fn poisson_log_pmf(rate: f64, k: i64) -> f64 {
    if k < 0 {
        return f64::NEG_INFINITY;
    }
    if rate == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * rate.ln() - rate - ln_factorial(k as u64)
}

fn beta_log_pdf(a: f64, b: f64, x: f64) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::NEG_INFINITY;
    }
    let norm = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    norm + xlny(a - 1.0, x) + xlny(b - 1.0, 1.0 - x)
}

fn gamma_log_pdf(shape: f64, scale: f64, x: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    xlny(shape - 1.0, x) - x / scale - ln_gamma(shape) - shape * scale.ln()
}

fn dirichlet_log_pdf(alphas: &[f64], xs: &[f64]) -> f64 {
    if xs.len() != alphas.len() || xs.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
        return f64::NEG_INFINITY;
    }
    if (xs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return f64::NEG_INFINITY;
    }
    let a0: f64 = alphas.iter().sum();
    let norm = ln_gamma(a0) - alphas.iter().map(|&a| ln_gamma(a)).sum::<f64>();
    norm + alphas
        .iter()
        .zip(xs)
        .map(|(&a, &x)| xlny(a - 1.0, x))
        .sum::<f64>()
}

fn sample_binomial<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    if n == 0 || p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return n;
    }
    let (q, flipped) = if p > 0.5 { (1.0 - p, true) } else { (p, false) };
    let successes = if n as f64 * q < BINOMIAL_INVERSION_LIMIT {
        // sequential search of the cdf from k = 0
        let u: f64 = rng.random();
        let odds = q / (1.0 - q);
        let mut pmf = (1.0 - q).powf(n as f64);
        let mut cdf = pmf;
        let mut k = 0;
        while u > cdf && k < n {
            pmf *= (n - k) as f64 / (k + 1) as f64 * odds;
            k += 1;
            cdf += pmf;
        }
        k
    } else {
        (0..n).filter(|_| rng.random::<f64>() < q).count() as u64
    };
    if flipped {
        n - successes
    } else {
        successes
    }
}

fn sample_dirichlet<R: Rng + ?Sized>(alphas: &[f64], rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = alphas
        .iter()
        .map(|&a| {
            rand_distr::Gamma::new(a, 1.0)
                .expect("validated")
                .sample(rng)
        })
        .collect();
    let total: f64 = draws.iter().sum();
    if total > 0.0 {
        draws.into_iter().map(|g| g / total).collect()
    } else {
        // every gamma draw underflowed: all mass on one uniformly chosen corner
        let hot = rng.random_range(0..alphas.len());
        (0..alphas.len())
            .map(|i| if i == hot { 1.0 } else { 0.0 })
            .collect()
    }
}

/// A primitive distribution: a family plus the optional observed value and
/// observable-variable tag it was created with.
#[derive(Clone, Debug, PartialEq)]
pub struct Dist {
    family: Family,
    obs: Option<PrimVal>,
    tag: Option<ObsVar>,
}

impl Dist {
    /// Checks that `obs` (when present) has the family's base kind. An
    /// observed value outside the support is allowed; it scores `-inf`.
    pub fn new(family: Family, obs: Option<PrimVal>, tag: Option<ObsVar>) -> Result<Self> {
        if let Some(v) = &obs {
            let expected = family.base_kind();
            if v.kind() != expected {
                return Err(Error::KindMismatch {
                    name: tag
                        .as_ref()
                        .map_or_else(|| family.name().to_string(), |t| t.to_string()),
                    expected,
                    found: v.kind(),
                });
            }
        }
        if let (Family::Dirichlet { alphas }, Some(PrimVal::Vec(xs))) = (&family, &obs) {
            if xs.len() != alphas.len() {
                return Err(invalid(
                    "dirichlet",
                    format!(
                        "observed vector has length {}, expected {}",
                        xs.len(),
                        alphas.len()
                    ),
                ));
            }
        }
        Ok(Dist { family, obs, tag })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn tag(&self) -> Option<&ObsVar> {
        self.tag.as_ref()
    }

    pub fn obs(&self) -> Option<&PrimVal> {
        self.obs.as_ref()
    }

    pub fn base_kind(&self) -> Kind {
        self.family.base_kind()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PrimVal {
        self.family.sample(rng)
    }

    pub fn log_prob(&self, v: &PrimVal) -> Result<f64> {
        self.family.log_prob(v)
    }
}

/// The observed value a distribution was created with, if any.
pub fn get_obs(d: &Dist) -> Option<PrimVal> {
    d.obs.clone()
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Normal { mu, sigma } => write!(f, "Normal({mu}, {sigma})"),
            Family::Uniform { lo, hi } => write!(f, "Uniform({lo}, {hi})"),
            Family::Bernoulli { p } => write!(f, "Bernoulli({p})"),
            Family::Binomial { n, p } => write!(f, "Binomial({n}, {p})"),
            Family::Beta { a, b } => write!(f, "Beta({a}, {b})"),
            Family::Gamma { shape, scale } => write!(f, "Gamma({shape}, {scale})"),
            Family::Poisson { rate } => write!(f, "Poisson({rate})"),
            Family::Discrete { choices, .. } => {
                f.write_str("Discrete[")?;
                for (i, (v, w)) in choices.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}:{w}")?;
                }
                f.write_str("]")
            }
            Family::Dirichlet { alphas } => write!(f, "Dirichlet({alphas:?})"),
        }
    }
}

impl fmt::Display for Dist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.family)
    }
}
