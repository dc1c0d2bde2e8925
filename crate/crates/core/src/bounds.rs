//! Poisson-type deviation bounds for time averages of jump processes.
//!
//! Every bound is available as an exponent `E` alongside the probability
//! `2e^{−E}` (or `e^{−E}` for one-sided tails) so large horizons do not
//! underflow.

use serde::Serialize;
use thiserror::Error;

use crate::metric::PathMetric;
use crate::process::StationaryMeasure;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundError {
    #[error("bennett function needs u >= 0, got {0}")]
    NegativeArgument(f64),
    #[error("parameter {name} must be positive and finite, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("times must be strictly increasing and positive")]
    NonMonotoneTimes,
    #[error("empty grid")]
    EmptyGrid,
}

fn positive(name: &'static str, value: f64) -> Result<f64, BoundError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(BoundError::NonPositive { name, value })
    }
}

const SERIES_CROSSOVER: f64 = 1e-4;

/// `(1+u)ln(1+u) − u` without checking the sign of `u`.
fn bennett_unchecked(u: f64) -> f64 {
    if u < SERIES_CROSSOVER {
        // u²/2 − u³/6 + u⁴/12 − u⁵/20 + u⁶/30
        let u2 = u * u;
        u2 * (0.5 + u * (-1.0 / 6.0 + u * (1.0 / 12.0 + u * (-1.0 / 20.0 + u / 30.0))))
    } else if u.is_infinite() {
        f64::INFINITY
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

/// Bennett's function `g(u) = (1+u)ln(1+u) − u`.
pub fn bennett(u: f64) -> Result<f64, BoundError> {
    if u >= 0.0 {
        Ok(bennett_unchecked(u))
    } else {
        Err(BoundError::NegativeArgument(u))
    }
}

/// `1 − e^{−x}` without cancellation for small `x`.
fn one_minus_exp(x: f64) -> f64 {
    -(-x).exp_m1()
}

/// `e^{x} − x − 1`, accurate for small `x`.
fn exp_remainder(x: f64) -> f64 {
    if x.abs() < 1e-5 {
        x * x * (0.5 + x / 6.0)
    } else {
        x.exp_m1() - x
    }
}

/// Coefficient `V²(1 − e^{−2σt})/(2b²σ)` of the one-step Laplace bound.
pub fn laplace_coefficient(t: f64, sigma: f64, b: f64, v2: f64) -> f64 {
    v2 * one_minus_exp(2.0 * sigma * t) / (2.0 * b * b * sigma)
}

/// `h(τ, t, z) = V²(1 − e^{−2σt})/(2b²σ)·(e^{τz} − τz − 1)`, the log of the
/// bound on `E_x[e^{τ(f(X_t) − E_x f(X_t))}]` for `‖f‖_Lip·b ≤ z`.
pub fn laplace_exponent(tau: f64, t: f64, z: f64, sigma: f64, b: f64, v2: f64) -> f64 {
    laplace_coefficient(t, sigma, b, v2) * exp_remainder(tau * z)
}

/// `inf_{τ>0} −τy + c(e^{τz} − τz − 1) = −c·g(y/(cz))`.
pub fn chernoff_exponent(c: f64, z: f64, y: f64) -> f64 {
    -c * bennett_unchecked(y / (c * z))
}

/// Minimizer `τ* = ln(1 + y/(cz))/z` of the Chernoff objective.
pub fn chernoff_optimizer(c: f64, z: f64, y: f64) -> f64 {
    (y / (c * z)).ln_1p() / z
}

/// `s_k = Σ_{l ≥ k} e^{−σ(t_l − t_k)}`, computed backwards as
/// `s_k = 1 + e^{−σ(t_{k+1} − t_k)} s_{k+1}`.
pub fn contraction_weights(times: &[f64], sigma: f64) -> Result<Vec<f64>, BoundError> {
    positive("sigma", sigma)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(BoundError::NonMonotoneTimes);
    }
    let n = times.len();
    let mut s = vec![1.0; n];
    for k in (0..n.saturating_sub(1)).rev() {
        s[k] = 1.0 + (-sigma * (times[k + 1] - times[k])).exp() * s[k + 1];
    }
    Ok(s)
}

/// Constants entering the deviation bound for a start state `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundParams {
    pub sigma: f64,
    pub b: f64,
    pub v2: f64,
    pub lip: f64,
    /// `∫ d(x, z) π(dz)`.
    pub mean_dist: f64,
    /// Truncation error attached to `mean_dist`.
    pub mean_dist_tol: f64,
}

impl BoundParams {
    pub fn new(sigma: f64, b: f64, v2: f64, lip: f64, mean_dist: f64) -> Result<Self, BoundError> {
        positive("sigma", sigma)?;
        positive("b", b)?;
        positive("V2", v2)?;
        // a zero seminorm (constant observable) gives an infinite exponent
        if !(lip >= 0.0 && lip.is_finite()) {
            return Err(BoundError::NonPositive { name: "lip", value: lip });
        }
        if !(mean_dist >= 0.0 && mean_dist.is_finite()) {
            return Err(BoundError::NonPositive {
                name: "mean_dist",
                value: mean_dist,
            });
        }
        Ok(Self {
            sigma,
            b,
            v2,
            lip,
            mean_dist,
            mean_dist_tol: 0.0,
        })
    }

    pub fn with_mean_dist_tol(mut self, tol: f64) -> Self {
        self.mean_dist_tol = tol;
        self
    }

    /// Parameters implied by Assumption A: `b = C_A/√K`, `V² = 2C_A²`.
    pub fn from_assumption_a(
        k: f64,
        c_a: f64,
        sigma: f64,
        lip: f64,
        mean_dist: f64,
    ) -> Result<Self, BoundError> {
        positive("K", k)?;
        positive("C_A", c_a)?;
        Self::new(sigma, c_a / k.sqrt(), 2.0 * c_a * c_a, lip, mean_dist)
    }
}

/// Log of the bound on `E_x exp(τ·Σ_k f_k)` for a function of the path
/// sampled at `times`, where `lip_n` is its seminorm for the ℓ¹ metric on
/// path samples: `Σ_k h(τ, t_k − t_{k−1}, s_k·b·lip_n)` with `t_0 = 0`.
///
/// For the Riemann sum `n⁻¹ Σ φ(X_{kt/n})`, `lip_n = ‖φ‖_Lip/n`.
pub fn tensorized_laplace_bound(
    times: &[f64],
    tau: f64,
    params: &BoundParams,
    lip_n: f64,
) -> Result<f64, BoundError> {
    positive("tau", tau)?;
    if times.first().is_some_and(|&t| !(t > 0.0)) {
        return Err(BoundError::NonMonotoneTimes);
    }
    let s = contraction_weights(times, params.sigma)?;
    let mut prev = 0.0;
    let mut total = 0.0;
    for (k, &t) in times.iter().enumerate() {
        total += laplace_exponent(
            tau,
            t - prev,
            s[k] * params.b * lip_n,
            params.sigma,
            params.b,
            params.v2,
        );
        prev = t;
    }
    Ok(total)
}

/// Bias `M_t^x = (1 − e^{−σt})‖φ‖_Lip/(σt) · ∫ d(x, z) π(dz)`.
pub fn bias(sigma: f64, t: f64, lip: f64, mean_dist: f64) -> f64 {
    one_minus_exp(sigma * t) * lip / (sigma * t) * mean_dist
}

/// An exponent `E` and the probability bound it yields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValue {
    pub exponent: f64,
    pub probability: f64,
}

impl BoundValue {
    fn two_sided(exponent: f64) -> Self {
        Self {
            exponent,
            probability: 2.0 * (-exponent).exp(),
        }
    }

    fn one_sided(exponent: f64) -> Self {
        Self {
            exponent,
            probability: (-exponent).exp(),
        }
    }
}

/// `(V²t/b²)·g(byσ/(V²(1 − e^{−σt})‖φ‖_Lip))`.
pub fn deviation_exponent(params: &BoundParams, t: f64, y: f64) -> f64 {
    let BoundParams {
        sigma, b, v2, lip, ..
    } = *params;
    let u = b * y * sigma / (v2 * one_minus_exp(sigma * t) * lip);
    v2 * t / (b * b) * bennett_unchecked(u)
}

/// Bound on `P_x(|t⁻¹∫₀ᵗ φ(X_s)ds − π(φ)| ≥ y + M_t^x)`.
pub fn deviation_bound(params: &BoundParams, t: f64, y: f64) -> BoundValue {
    BoundValue::two_sided(deviation_exponent(params, t, y))
}

/// Exponent `A_n` of the bound for the Riemann sum over `n` equal steps:
/// `nV²/(2b²σ)(1 − e^{−2σt/n})·g(2byσ(1 − e^{−σt/n})/(V²(1 − e^{−2σt/n})(1 − e^{−σt})‖φ‖))`.
pub fn discretized_exponent(params: &BoundParams, t: f64, y: f64, n: u64) -> f64 {
    let BoundParams {
        sigma, b, v2, lip, ..
    } = *params;
    let n = n as f64;
    let step = one_minus_exp(sigma * t / n);
    let step2 = one_minus_exp(2.0 * sigma * t / n);
    let u = 2.0 * b * y * sigma * step / (v2 * step2 * one_minus_exp(sigma * t) * lip);
    n * v2 / (2.0 * b * b * sigma) * step2 * bennett_unchecked(u)
}

/// `2Kt·g(yσ/(2√K·C_A(1 − e^{−σt})‖φ‖))`, the birth–death bound under
/// Assumption A.
pub fn assumption_a_exponent(k: f64, c_a: f64, sigma: f64, lip: f64, t: f64, y: f64) -> f64 {
    let u = y * sigma / (2.0 * k.sqrt() * c_a * one_minus_exp(sigma * t) * lip);
    2.0 * k * t * bennett_unchecked(u)
}

pub fn assumption_a_bound(k: f64, c_a: f64, sigma: f64, lip: f64, t: f64, y: f64) -> BoundValue {
    BoundValue::two_sided(assumption_a_exponent(k, c_a, sigma, lip, t, y))
}

/// `E_x[X_t] = x·e^{−νt} + ξ(1 − e^{−νt})` for the M/M/∞ queue.
pub fn mm_infinity_mean(x0: usize, t: f64, lambda: f64, nu: f64) -> f64 {
    let decay = (-nu * t).exp();
    x0 as f64 * decay + lambda / nu * one_minus_exp(nu * t)
}

/// One-sided Poisson tail `P_x(X_t − E_x X_t ≥ y) ≤ exp(−m·g(y/m))`,
/// `m = E_x[X_t]`, for the M/M/∞ queue.
pub fn mm_infinity_transient_tail(x0: usize, t: f64, lambda: f64, nu: f64, y: f64) -> BoundValue {
    let m = mm_infinity_mean(x0, t, lambda, nu);
    BoundValue::one_sided(m * bennett_unchecked(y / m))
}

/// `∫ δ(x, z) π(dz)` summed over the truncated stationary law.
///
/// The returned tolerance is `tail_mass · max(δ(x, T+1), 1)`: an estimate of
/// the omitted part, exact only when the distance does not grow past the
/// truncation.
pub fn mean_distance(stationary: &StationaryMeasure, metric: &PathMetric, x: usize) -> (f64, f64) {
    let value = stationary.expect(|z| metric.path_distance(x, z));
    let edge = metric.path_distance(x, stationary.truncation + 1).max(1.0);
    (value, stationary.tail_mass * edge)
}

/// Which bound a curve evaluates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    General,
    AssumptionA,
}

/// Bound values over a deviation grid at a fixed horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub kind: BoundKind,
    pub t: f64,
    pub y: Vec<f64>,
    pub exponent: Vec<f64>,
    pub bound: Vec<f64>,
    pub bias: f64,
    pub bias_tol: f64,
    pub params: BoundParams,
}

impl BoundCurve {
    pub fn general(params: BoundParams, t: f64, y_grid: &[f64]) -> Result<Self, BoundError> {
        Self::build(BoundKind::General, params, t, y_grid, |y| {
            deviation_bound(&params, t, y)
        })
    }

    /// Bound under Assumption A; `params` should come from
    /// [`BoundParams::from_assumption_a`] for the reported `b`, `V²`.
    pub fn assumption_a(
        k: f64,
        c_a: f64,
        params: BoundParams,
        t: f64,
        y_grid: &[f64],
    ) -> Result<Self, BoundError> {
        Self::build(BoundKind::AssumptionA, params, t, y_grid, |y| {
            assumption_a_bound(k, c_a, params.sigma, params.lip, t, y)
        })
    }

    fn build(
        kind: BoundKind,
        params: BoundParams,
        t: f64,
        y_grid: &[f64],
        eval: impl Fn(f64) -> BoundValue,
    ) -> Result<Self, BoundError> {
        positive("t", t)?;
        if y_grid.is_empty() {
            return Err(BoundError::EmptyGrid);
        }
        for &y in y_grid {
            positive("y", y)?;
        }
        let values: Vec<BoundValue> = y_grid.iter().map(|&y| eval(y)).collect();
        let scale = bias(params.sigma, t, params.lip, 1.0);
        Ok(Self {
            kind,
            t,
            y: y_grid.to_vec(),
            exponent: values.iter().map(|v| v.exponent).collect(),
            bound: values.iter().map(|v| v.probability).collect(),
            bias: scale * params.mean_dist,
            bias_tol: scale * params.mean_dist_tol,
            params,
        })
    }

    /// CSV with header `y,exponent,bound,bias`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("y,exponent,bound,bias\n");
        for i in 0..self.y.len() {
            out.push_str(&format!(
                "{},{},{},{}\n",
                self.y[i], self.exponent[i], self.bound[i], self.bias
            ));
        }
        out
    }
}
