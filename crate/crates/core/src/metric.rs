//! Computable metrics on ℕ and on finite products of a component space.
//!
//! The central object is the weighted path metric
//!
//! ```text
//! δ(x, y) = | Σ_{k<x} u_k − Σ_{k<y} u_k |,   u_k > 0,
//! ```
//!
//! which is additive along ℕ: for `x ≤ y ≤ z`, `δ(x, z) = δ(x, y) + δ(y, z)`.
//! Additivity is what makes [`lipschitz_seminorm`] a scan over adjacent pairs.
//! For `x < y`,
//!
//! ```text
//! |f(y) − f(x)| ≤ Σ_{k=x}^{y−1} |f(k+1) − f(k)|
//!              ≤ max_k (|f(k+1) − f(k)| / u_k) · Σ_{k=x}^{y−1} u_k
//! ```
//!
//! and the last sum is exactly `δ(x, y)`, so the supremum over all pairs equals
//! the supremum over adjacent pairs.
//!
//! By convention `u_{-1} = 1`. It never enters a distance; it is only exposed
//! through [`PathMetric::weight_before`] for formulas that multiply it by a
//! vanishing death rate at the origin.

use std::fmt;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("weight {value} at index {index} is not strictly positive")]
    NonPositiveWeight { index: usize, value: f64 },
    #[error("weight table is empty")]
    EmptyTable,
    #[error("tail rule is invalid: {0}")]
    InvalidTail(String),
    #[error("state vectors have lengths {left} and {right}, expected {expected}")]
    LengthMismatch {
        left: usize,
        right: usize,
        expected: usize,
    },
    #[error("scan limit must be positive")]
    ZeroScanLimit,
    #[error("product metric needs dimension >= 1 and radix >= 1")]
    EmptyProduct,
}

/// A distance between states indexed by `usize`.
pub trait Metric: Send + Sync {
    fn distance(&self, x: usize, y: usize) -> f64;

    /// Short identifier recorded in certificates and reports.
    fn id(&self) -> String;

    /// The path-metric view, when this metric is one. Enables the 1-D
    /// transport formula and adjacent-pair scans.
    fn as_path(&self) -> Option<&PathMetric> {
        None
    }
}

impl<M: Metric + ?Sized> Metric for Box<M> {
    fn distance(&self, x: usize, y: usize) -> f64 {
        (**self).distance(x, y)
    }
    fn id(&self) -> String {
        (**self).id()
    }
    fn as_path(&self) -> Option<&PathMetric> {
        (**self).as_path()
    }
}

impl<M: Metric + ?Sized> Metric for std::sync::Arc<M> {
    fn distance(&self, x: usize, y: usize) -> f64 {
        (**self).distance(x, y)
    }
    fn id(&self) -> String {
        (**self).id()
    }
    fn as_path(&self) -> Option<&PathMetric> {
        (**self).as_path()
    }
}

/// `d(x, y) = 1{x ≠ y}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TrivialMetric;

impl Metric for TrivialMetric {
    fn distance(&self, x: usize, y: usize) -> f64 {
        if x == y {
            0.0
        } else {
            1.0
        }
    }
    fn id(&self) -> String {
        "trivial".into()
    }
}

/// How a finite weight table continues past its last entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum TailRule {
    /// `u_x = value` beyond the table.
    Constant { value: f64 },
    /// `u_x = scale · (x + 1)^(−exponent)` beyond the table.
    PowerLaw { scale: f64, exponent: f64 },
}

impl TailRule {
    fn weight(&self, x: usize) -> f64 {
        match *self {
            TailRule::Constant { value } => value,
            TailRule::PowerLaw { scale, exponent } => scale * ((x + 1) as f64).powf(-exponent),
        }
    }

    fn validate(&self) -> Result<(), MetricError> {
        match *self {
            TailRule::Constant { value } if !(value > 0.0 && value.is_finite()) => Err(
                MetricError::InvalidTail(format!("constant tail {value} must be positive")),
            ),
            TailRule::PowerLaw { scale, exponent }
                if !(scale > 0.0 && scale.is_finite() && exponent.is_finite()) =>
            {
                Err(MetricError::InvalidTail(format!(
                    "power-law tail needs positive scale, got scale={scale} exponent={exponent}"
                )))
            }
            _ => Ok(()),
        }
    }

    /// Limit of the weights at infinity, if it exists.
    fn limit(&self) -> Option<f64> {
        match *self {
            TailRule::Constant { value } => Some(value),
            TailRule::PowerLaw { exponent, .. } if exponent > 0.0 => Some(0.0),
            TailRule::PowerLaw { scale, exponent: 0.0 } => Some(scale),
            TailRule::PowerLaw { .. } => None,
        }
    }
}

/// Weight sequences with closed-form tags.
#[derive(Debug, Clone, PartialEq)]
pub enum Weights {
    /// `u ≡ 1`, giving `δ(x, y) = |x − y|`.
    Classical,
    /// `u_x = (x + 1)^(−1/2)`.
    InvSqrt,
    Table { weights: Vec<f64>, tail: TailRule },
}

/// Weighted path metric on ℕ with lazily cached partial sums.
pub struct PathMetric {
    weights: Weights,
    // partial[x] = Σ_{k<x} u_k
    partial: RwLock<Vec<f64>>,
}

impl fmt::Debug for PathMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PathMetric")
            .field("weights", &self.weights)
            .finish()
    }
}

impl Clone for PathMetric {
    fn clone(&self) -> Self {
        Self::from_weights_unchecked(self.weights.clone())
    }
}

impl PartialEq for PathMetric {
    fn eq(&self, other: &Self) -> bool {
        self.weights == other.weights
    }
}

impl PathMetric {
    pub fn classical() -> Self {
        Self::from_weights_unchecked(Weights::Classical)
    }

    pub fn inv_sqrt() -> Self {
        Self::from_weights_unchecked(Weights::InvSqrt)
    }

    pub fn table(weights: Vec<f64>, tail: TailRule) -> Result<Self, MetricError> {
        if weights.is_empty() {
            return Err(MetricError::EmptyTable);
        }
        if let Some((index, &value)) = weights
            .iter()
            .enumerate()
            .find(|(_, w)| !(**w > 0.0 && w.is_finite()))
        {
            return Err(MetricError::NonPositiveWeight { index, value });
        }
        tail.validate()?;
        Ok(Self::from_weights_unchecked(Weights::Table { weights, tail }))
    }

    fn from_weights_unchecked(weights: Weights) -> Self {
        Self {
            weights,
            partial: RwLock::new(vec![0.0]),
        }
    }

    pub fn weights(&self) -> &Weights {
        &self.weights
    }

    /// `u_x`.
    pub fn weight(&self, x: usize) -> f64 {
        match &self.weights {
            Weights::Classical => 1.0,
            Weights::InvSqrt => 1.0 / ((x + 1) as f64).sqrt(),
            Weights::Table { weights, tail } => match weights.get(x) {
                Some(&w) => w,
                None => tail.weight(x),
            },
        }
    }

    /// `u_{x−1}`, with the convention `u_{−1} = 1`.
    pub fn weight_before(&self, x: usize) -> f64 {
        if x == 0 {
            1.0
        } else {
            self.weight(x - 1)
        }
    }

    /// Limit of `u_x` as `x → ∞` when the closed form provides one.
    pub fn weight_limit(&self) -> Option<f64> {
        match &self.weights {
            Weights::Classical => Some(1.0),
            Weights::InvSqrt => Some(0.0),
            Weights::Table { tail, .. } => tail.limit(),
        }
    }

    /// `Σ_{k<x} u_k`.
    pub fn position(&self, x: usize) -> f64 {
        if let Weights::Classical = self.weights {
            return x as f64;
        }
        {
            let cache = self.partial.read().unwrap_or_else(|e| e.into_inner());
            if let Some(&s) = cache.get(x) {
                return s;
            }
        }
        let mut cache = self.partial.write().unwrap_or_else(|e| e.into_inner());
        // Another writer may have extended the cache meanwhile; the fill is
        // deterministic so resuming from the current length is idempotent.
        while cache.len() <= x {
            let k = cache.len() - 1;
            let next = cache[k] + self.weight(k);
            cache.push(next);
        }
        cache[x]
    }

    pub fn path_distance(&self, x: usize, y: usize) -> f64 {
        if x == y {
            return 0.0;
        }
        (self.position(x) - self.position(y)).abs()
    }
}

impl Metric for PathMetric {
    fn distance(&self, x: usize, y: usize) -> f64 {
        self.path_distance(x, y)
    }

    fn id(&self) -> String {
        match &self.weights {
            Weights::Classical => "classical".into(),
            Weights::InvSqrt => "inv_sqrt".into(),
            Weights::Table { weights, tail } => {
                format!("table[{}]+{:?}", weights.len(), tail)
            }
        }
    }

    fn as_path(&self) -> Option<&PathMetric> {
        Some(self)
    }
}

/// ℓ¹ metric on `dim` copies of a component space with `radix` states.
///
/// Product states are encoded as mixed-radix indices,
/// `index = Σ_i x_i · radix^i`.
#[derive(Debug, Clone)]
pub struct ProductMetric<M> {
    base: M,
    dim: usize,
    radix: usize,
}

impl<M: Metric> ProductMetric<M> {
    pub fn new(base: M, dim: usize, radix: usize) -> Result<Self, MetricError> {
        if dim == 0 || radix == 0 {
            return Err(MetricError::EmptyProduct);
        }
        Ok(Self { base, dim, radix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn base(&self) -> &M {
        &self.base
    }

    pub fn product_distance(&self, x: &[usize], y: &[usize]) -> Result<f64, MetricError> {
        if x.len() != self.dim || y.len() != self.dim {
            return Err(MetricError::LengthMismatch {
                left: x.len(),
                right: y.len(),
                expected: self.dim,
            });
        }
        Ok(x.iter()
            .zip(y)
            .map(|(&a, &b)| self.base.distance(a, b))
            .sum())
    }
}

impl ProductMetric<TrivialMetric> {
    /// Hamming distance on `{0, …, radix−1}^dim`.
    pub fn hamming(dim: usize, radix: usize) -> Result<Self, MetricError> {
        Self::new(TrivialMetric, dim, radix)
    }
}

impl<M: Metric> Metric for ProductMetric<M> {
    fn distance(&self, x: usize, y: usize) -> f64 {
        let (mut a, mut b) = (x, y);
        let mut total = 0.0;
        for _ in 0..self.dim {
            total += self.base.distance(a % self.radix, b % self.radix);
            a /= self.radix;
            b /= self.radix;
        }
        total
    }

    fn id(&self) -> String {
        format!("l1({})^{}", self.base.id(), self.dim)
    }
}

/// Result of an adjacent-pair Lipschitz scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Seminorm {
    /// Reported seminorm: the scan maximum, or the tail limit if larger.
    pub value: f64,
    pub scan_max: f64,
    pub argmax: usize,
    /// Heuristic: the maximum sits before a nonincreasing tail window.
    pub attained: bool,
    pub tail_limit: Option<f64>,
    pub scan_limit: usize,
}

/// Relative slack for rounding noise in difference quotients.
const RATIO_RTOL: f64 = 1e-9;

/// `sup_{x ≤ scan_limit} |f(x+1) − f(x)| / u_x`, equal to the full Lipschitz
/// seminorm of `f` restricted to `{0, …, scan_limit + 1}`.
///
/// `tail_limit` is the known limit of the adjacent ratios at infinity (from a
/// closed form); when it exceeds the scanned maximum it is reported as the
/// seminorm with `attained = false`.
pub fn lipschitz_seminorm<F: Fn(usize) -> f64>(
    f: F,
    metric: &PathMetric,
    scan_limit: usize,
    tail_limit: Option<f64>,
) -> Result<Seminorm, MetricError> {
    if scan_limit == 0 {
        return Err(MetricError::ZeroScanLimit);
    }
    let mut ratios = Vec::with_capacity(scan_limit + 1);
    let mut prev = f(0);
    for x in 0..=scan_limit {
        let next = f(x + 1);
        ratios.push((next - prev).abs() / metric.weight(x));
        prev = next;
    }
    let scan_max = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    // first index within rounding of the maximum
    let argmax = ratios
        .iter()
        .position(|&r| r >= scan_max * (1.0 - RATIO_RTOL))
        .unwrap_or(0);
    let window = scan_limit - scan_limit / 4;
    let tail_nonincreasing = ratios[window..]
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + RATIO_RTOL) + 1e-300);
    let mut attained = argmax < window && tail_nonincreasing;
    let mut value = scan_max;
    if let Some(limit) = tail_limit {
        if limit > scan_max {
            value = limit;
            attained = false;
        }
    }
    Ok(Seminorm {
        value,
        scan_max,
        argmax,
        attained,
        tail_limit,
        scan_limit,
    })
}
