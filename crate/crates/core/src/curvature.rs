//! Wasserstein curvature of jump processes and the jump constants that feed
//! the deviation bounds.
//!
//! Birth–death chains under a path metric have an exact formula: the
//! curvature is the infimum over `x` of
//!
//! ```text
//! ν_{x+1} + λ_x − ν_x u_{x−1}/u_x − λ_{x+1} u_{x+1}/u_x,
//! ```
//!
//! which is `−𝓛̃δ(x, x+1)/δ(x, x+1)` for the classical coupling `𝓛̃`. For
//! general finite chains the curvature is estimated from measured contraction
//! ratios `W_d(P_t(x,·), P_t(y,·)) / d(x, y)`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::metric::{Metric, PathMetric, Weights};
use crate::process::{semigroup_rows, BirthDeathRates, Generator, ProcessError, RateModel};
use crate::transport::{wasserstein, DiscreteMeasure, TransportError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurvatureError {
    #[error("truncation {0} is below the minimum of 10")]
    TruncationTooSmall(usize),
    #[error("second moment of jump distances is unbounded (still growing at state {state}, value {value})")]
    InfiniteSecondMoment { state: usize, value: f64 },
    #[error("Assumption A fails at state {state}: {reason}")]
    AssumptionAFailed { state: usize, reason: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Transport(#[from] TransportError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ExactFormula,
    NumericContraction,
    Tensorized,
}

/// How the reported infimum relates to the scanned range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TailStatus {
    /// Finite chain, or the minimum over the scan is provably the infimum.
    Attained,
    /// The infimum is an analytic limit at infinity, not attained.
    Limit,
    /// Infinite chain without a closed-form tail: scan minimum only.
    Unverified,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureCertificate {
    /// `−∞` is serialized as `null`.
    pub sigma: f64,
    pub method: Method,
    pub metric: String,
    pub truncation: usize,
    /// Exact formula: state minimizing the scanned expression.
    pub argmin: Option<usize>,
    /// Exact formula: per-state values. Numeric: `σ̄(t)/t` per grid point.
    pub trace: Vec<f64>,
    /// Time grid of a numeric estimate (empty otherwise).
    pub t_grid: Vec<f64>,
    /// Numeric: state pair with the worst contraction at the smallest `t`.
    pub worst_pair: Option<(usize, usize)>,
    pub tail: TailStatus,
    pub tail_limit: Option<f64>,
    /// Numeric: Richardson extrapolation of `σ̄(t)/t` to `t = 0` from the two
    /// smallest grid points.
    pub extrapolated: Option<f64>,
}

/// Value of the curvature expression at `x`.
pub fn curvature_term(rates: &BirthDeathRates, metric: &PathMetric, x: usize) -> f64 {
    let ux = metric.weight(x);
    rates.death(x + 1) + rates.birth(x)
        - rates.death(x) * metric.weight_before(x) / ux
        - rates.birth(x + 1) * metric.weight(x + 1) / ux
}

/// Closed-form limit of the curvature expression as `x → ∞`.
fn analytic_tail_limit(rates: &BirthDeathRates, metric: &PathMetric) -> Option<f64> {
    if rates.capacity().is_some() {
        return None;
    }
    match (rates.model(), metric.weights()) {
        // ν(x+1) + λ − νx·√((x+1)/x) − λ·√((x+1)/(x+2)) → ν/2
        (RateModel::MmInfinity { nu, .. }, Weights::InvSqrt) => Some(nu / 2.0),
        (RateModel::MmInfinity { nu, .. }, Weights::Classical) => Some(*nu),
        (RateModel::Constant { .. }, Weights::Classical | Weights::InvSqrt) => Some(0.0),
        (
            RateModel::Affine {
                birth_slope,
                death_slope,
                ..
            },
            Weights::Classical,
        ) => Some(death_slope - birth_slope),
        _ => None,
    }
}

/// Exact curvature of a birth–death chain with respect to a path metric.
///
/// Scans `x = 0..=truncation` (or up to `capacity − 1` for a finite chain) and
/// combines the minimum with the analytic tail limit when the rate family and
/// weights carry closed forms.
pub fn birth_death_curvature(
    rates: &BirthDeathRates,
    metric: &PathMetric,
    truncation: usize,
) -> Result<CurvatureCertificate, CurvatureError> {
    let last = match rates.capacity() {
        Some(c) => c - 1,
        None => {
            if truncation < 10 {
                return Err(CurvatureError::TruncationTooSmall(truncation));
            }
            truncation
        }
    };
    let trace: Vec<f64> = (0..=last).map(|x| curvature_term(rates, metric, x)).collect();
    let (argmin, scan_min) = trace
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |(i, m), (j, v)| if v < m || v.is_nan() { (j, v) } else { (i, m) });
    let tail_limit = analytic_tail_limit(rates, metric);
    let (sigma, tail) = if !scan_min.is_finite() {
        (f64::NEG_INFINITY, TailStatus::Unverified)
    } else if rates.capacity().is_some() {
        (scan_min, TailStatus::Attained)
    } else {
        match tail_limit {
            Some(l) if l < scan_min => (l, TailStatus::Limit),
            Some(_) => (scan_min, TailStatus::Attained),
            None => (scan_min, TailStatus::Unverified),
        }
    };
    Ok(CurvatureCertificate {
        sigma,
        method: Method::ExactFormula,
        metric: metric.id(),
        truncation: last,
        argmin: Some(argmin),
        trace,
        t_grid: Vec::new(),
        worst_pair: None,
        tail,
        tail_limit,
        extrapolated: None,
    })
}

/// Drift `𝓛̃δ(x, y)` of the path distance under the classical coupling.
pub fn coupling_drift(rates: &BirthDeathRates, metric: &PathMetric, x: usize, y: usize) -> f64 {
    if x == y {
        return 0.0;
    }
    let (lo, hi) = if x < y { (x, y) } else { (y, x) };
    let side = |z: usize| rates.birth(z) * metric.weight(z) - rates.death(z) * metric.weight_before(z);
    side(hi) - side(lo)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanMax {
    pub value: f64,
    pub argmax: usize,
    pub attained: bool,
}

/// Max of `values` with a heuristic: attained when the maximizer sits before
/// the last quarter and the last quarter is nonincreasing.
fn scan_max(values: &[f64]) -> ScanMax {
    let (argmax, value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(i, m), (j, v)| if v > m { (j, v) } else { (i, m) });
    let window = values.len() - values.len() / 4;
    let tail_ok = values[window.min(values.len() - 1)..]
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
    ScanMax {
        value,
        argmax,
        attained: argmax < window && tail_ok,
    }
}

/// Growing at the end of the scan with no sign of leveling off.
fn grows_at_end(values: &[f64]) -> bool {
    let n = values.len();
    if n < 8 {
        return false;
    }
    let q = n - n / 4;
    let tail = &values[q..];
    let strictly_up = tail.windows(2).all(|w| w[1] > w[0]);
    let first_half = tail[tail.len() / 2] - tail[0];
    let second_half = tail[tail.len() - 1] - tail[tail.len() / 2];
    strictly_up && second_half >= 0.5 * first_half
}

fn scan_last(rates: &BirthDeathRates, truncation: usize) -> usize {
    match rates.capacity() {
        Some(c) => c,
        None => truncation,
    }
}

/// Largest single-jump distance `b = sup_x max(u_x, u_{x−1})` over states
/// reachable by a jump.
pub fn jump_bound(rates: &BirthDeathRates, metric: &PathMetric, truncation: usize) -> ScanMax {
    let last = scan_last(rates, truncation);
    let values: Vec<f64> = (0..=last)
        .map(|x| {
            let up = if rates.birth(x) > 0.0 { metric.weight(x) } else { 0.0 };
            let down = if rates.death(x) > 0.0 { metric.weight(x - 1) } else { 0.0 };
            up.max(down)
        })
        .collect();
    let mut s = scan_max(&values);
    if rates.capacity().is_none() {
        if let Some(limit) = metric.weight_limit() {
            if limit > s.value {
                s.value = limit;
                s.attained = false;
            } else {
                s.attained = true;
            }
        }
    } else {
        s.attained = true;
    }
    s
}

/// `V² = sup_x λ_x u_x² + ν_x u_{x−1}²`.
pub fn second_moment(
    rates: &BirthDeathRates,
    metric: &PathMetric,
    truncation: usize,
) -> Result<ScanMax, CurvatureError> {
    let last = scan_last(rates, truncation);
    let values: Vec<f64> = (0..=last)
        .map(|x| {
            rates.birth(x) * metric.weight(x).powi(2)
                + rates.death(x) * metric.weight_before(x).powi(2)
        })
        .collect();
    let s = scan_max(&values);
    let tagged_unbounded = rates.unbounded() && matches!(metric.weights(), Weights::Classical);
    if rates.capacity().is_none() && (tagged_unbounded || grows_at_end(&values)) {
        return Err(CurvatureError::InfiniteSecondMoment {
            state: last,
            value: values[last],
        });
    }
    Ok(s)
}

/// Largest single-jump distance of a finite generator.
pub fn jump_bound_generator(generator: &Generator, metric: &dyn Metric) -> f64 {
    (0..generator.len())
        .flat_map(|x| generator.row(x).iter().map(move |&(y, _)| metric.distance(x, y)))
        .fold(0.0, f64::max)
}

/// `sup_x Σ_y Q(x, y) d(x, y)²` on a finite generator.
pub fn second_moment_generator(generator: &Generator, metric: &dyn Metric) -> f64 {
    (0..generator.len())
        .map(|x| {
            generator
                .row(x)
                .iter()
                .map(|&(y, r)| r * metric.distance(x, y).powi(2))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpConstants {
    pub b: f64,
    pub v2: f64,
    pub truncation: usize,
    pub b_attained: bool,
    pub v2_attained: bool,
}

pub fn jump_constants(
    rates: &BirthDeathRates,
    metric: &PathMetric,
    truncation: usize,
) -> Result<JumpConstants, CurvatureError> {
    let b = jump_bound(rates, metric, truncation);
    let v2 = second_moment(rates, metric, truncation)?;
    Ok(JumpConstants {
        b: b.value,
        v2: v2.value,
        truncation: scan_last(rates, truncation),
        b_attained: b.attained,
        v2_attained: v2.attained,
    })
}

/// Constants `(K, C_A)` with `min(inf λ, inf_{x≥1} ν) ≥ K` and
/// `u_x ≤ C_A · min(ν_{x+1}^{−1/2}, λ_x^{−1/2})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AssumptionA {
    pub k: f64,
    pub c_a: f64,
    pub argmax: usize,
}

impl AssumptionA {
    /// Jump bound implied by the assumption, `C_A/√K`.
    pub fn implied_b(&self) -> f64 {
        self.c_a / self.k.sqrt()
    }

    /// Second-moment bound implied by the assumption, `2C_A²`.
    pub fn implied_v2(&self) -> f64 {
        2.0 * self.c_a * self.c_a
    }
}

pub fn check_assumption_a(
    rates: &BirthDeathRates,
    metric: &PathMetric,
    truncation: usize,
) -> Result<AssumptionA, CurvatureError> {
    // A finite chain has λ_capacity = 0, so the rate floor runs over the states
    // that actually give birth.
    let last = match rates.capacity() {
        Some(c) => c - 1,
        None => truncation,
    };
    let mut k = f64::INFINITY;
    for x in 0..=last {
        k = k.min(rates.birth(x)).min(rates.death(x + 1));
    }
    if !(k > 0.0) {
        return Err(CurvatureError::AssumptionAFailed {
            state: 0,
            reason: format!("rate floor K = {k}"),
        });
    }
    let values: Vec<f64> = (0..=last)
        .map(|x| metric.weight(x) * rates.death(x + 1).max(rates.birth(x)).sqrt())
        .collect();
    let s = scan_max(&values);
    let tagged_unbounded = rates.unbounded() && matches!(metric.weights(), Weights::Classical);
    if rates.capacity().is_none() && (tagged_unbounded || grows_at_end(&values)) {
        return Err(CurvatureError::AssumptionAFailed {
            state: last,
            reason: format!("weight constant still growing ({} at the end of the scan)", values[last]),
        });
    }
    Ok(AssumptionA {
        k,
        c_a: s.value,
        argmax: s.argmax,
    })
}

/// Curvature estimate for a finite chain from contraction ratios.
///
/// For each `t` in the grid, `ρ(t) = max_{x≠y} W_d(P_t(x,·), P_t(y,·))/d(x, y)`
/// over all pairs and `σ̄(t) = −log ρ(t)`. Since the curvature equals
/// `inf_{t>0} σ̄(t)/t`, the grid minimum of `σ̄(t)/t` is an upper estimate that
/// never exceeds any measured value.
pub fn estimate_curvature_numeric(
    generator: &Generator,
    metric: &dyn Metric,
    t_grid: &[f64],
    tol: f64,
) -> Result<CurvatureCertificate, CurvatureError> {
    if t_grid.is_empty() || t_grid.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
        return Err(CurvatureError::InvalidArgument(
            "time grid must be nonempty and positive".into(),
        ));
    }
    let n = generator.len();
    if n < 2 {
        return Err(CurvatureError::InvalidArgument("need at least two states".into()));
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|x| ((x + 1)..n).map(move |y| (x, y)))
        .filter(|&(x, y)| metric.distance(x, y) > 0.0)
        .collect();

    let mut trace = Vec::with_capacity(grid.len());
    let mut worst_pair = None;
    for (i, &t) in grid.iter().enumerate() {
        let rows = semigroup_rows(generator, t, &(0..n).collect::<Vec<_>>(), tol)?;
        let measures = rows
            .rows
            .iter()
            .map(|r| DiscreteMeasure::from_row(r))
            .collect::<Result<Vec<_>, _>>()?;
        let ratios = pairs
            .par_iter()
            .map(|&(x, y)| {
                wasserstein(&measures[x], &measures[y], metric).map(|w| w / metric.distance(x, y))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (arg, rho) = ratios
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(a, m), (j, r)| if r > m { (j, r) } else { (a, m) });
        if i == 0 {
            worst_pair = Some(pairs[arg]);
        }
        trace.push(-rho.ln() / t);
    }
    let sigma = trace.iter().copied().fold(f64::INFINITY, f64::min);
    let extrapolated = (grid.len() >= 2).then(|| {
        let (t1, t2) = (grid[0], grid[1]);
        let (s1, s2) = (trace[0], trace[1]);
        // first-order in t: s(t) ≈ s0 + c·t
        (s1 * t2 - s2 * t1) / (t2 - t1)
    });
    Ok(CurvatureCertificate {
        sigma,
        method: Method::NumericContraction,
        metric: metric.id(),
        truncation: n - 1,
        argmin: None,
        trace,
        t_grid: grid,
        worst_pair,
        tail: TailStatus::Attained,
        tail_limit: None,
        extrapolated,
    })
}

/// Curvature and jump constants of one component chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainConstants {
    pub sigma: f64,
    pub b: f64,
    pub v2: f64,
}

/// Constants of the product chain under the ℓ¹ metric:
/// `σ = min σ_i / N`, `b = max b_i`, `V² = Σ V_i² / N`.
pub fn tensorize(components: &[ChainConstants]) -> Result<ChainConstants, CurvatureError> {
    if components.is_empty() {
        return Err(CurvatureError::InvalidArgument("no components".into()));
    }
    let n = components.len() as f64;
    Ok(ChainConstants {
        sigma: components.iter().map(|c| c.sigma).fold(f64::INFINITY, f64::min) / n,
        b: components.iter().map(|c| c.b).fold(f64::NEG_INFINITY, f64::max),
        v2: components.iter().map(|c| c.v2).sum::<f64>() / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::TrivialMetric;
    use crate::process::hypercube;

    #[test]
    fn mm_infinity_inv_sqrt_is_half_nu() {
        for nu in [0.5, 1.0, 3.0] {
            let r = BirthDeathRates::mm_infinity(nu, nu).unwrap();
            let c = birth_death_curvature(&r, &PathMetric::inv_sqrt(), 200).unwrap();
            assert!((c.sigma - nu / 2.0).abs() < 1e-12);
            assert_eq!(c.tail, TailStatus::Limit);
            assert!(c.trace.iter().all(|&v| v > nu / 2.0));
        }
    }

    #[test]
    fn mm_infinity_classical_is_nu() {
        let r = BirthDeathRates::mm_infinity(2.0, 1.5).unwrap();
        let c = birth_death_curvature(&r, &PathMetric::classical(), 100).unwrap();
        assert!((c.sigma - 1.5).abs() < 1e-12);
        assert!(c.trace.iter().all(|&v| (v - 1.5).abs() < 1e-12));
    }

    #[test]
    fn two_state_curvature_is_one() {
        let r = BirthDeathRates::table(vec![0.5], vec![0.0, 0.5])
            .unwrap()
            .with_capacity(1)
            .unwrap();
        let c = birth_death_curvature(&r, &PathMetric::classical(), 10).unwrap();
        assert_eq!(c.trace.len(), 1);
        assert!((c.sigma - 1.0).abs() < 1e-15);
    }

    #[test]
    fn small_truncation_rejected() {
        let r = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
        assert_eq!(
            birth_death_curvature(&r, &PathMetric::classical(), 5),
            Err(CurvatureError::TruncationTooSmall(5))
        );
    }

    #[test]
    fn drift_basics() {
        let r = BirthDeathRates::mm_infinity(1.0, 2.0).unwrap();
        let m = PathMetric::classical();
        assert_eq!(coupling_drift(&r, &m, 4, 4), 0.0);
        for x in 0..50 {
            assert!((coupling_drift(&r, &m, x, x + 1) + 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn drift_equality_at_argmin() {
        let r = BirthDeathRates::table(vec![1.0, 3.0, 0.5, 2.0], vec![0.0, 1.5, 2.0, 4.0, 3.0])
            .unwrap()
            .with_capacity(4)
            .unwrap();
        let m = PathMetric::inv_sqrt();
        let c = birth_death_curvature(&r, &m, 10).unwrap();
        for x in 0..4 {
            let d = coupling_drift(&r, &m, x, x + 1);
            assert!(d <= -c.sigma * m.path_distance(x, x + 1) + 1e-12);
        }
        let x = c.argmin.unwrap();
        let d = coupling_drift(&r, &m, x, x + 1);
        assert!((d + c.sigma * m.path_distance(x, x + 1)).abs() < 1e-12);
    }

    #[test]
    fn drift_is_additive() {
        let r = BirthDeathRates::mm_infinity(1.3, 0.7).unwrap();
        let m = PathMetric::inv_sqrt();
        for (x, y) in [(0, 5), (3, 40), (10, 11)] {
            let sum: f64 = (x..y).map(|k| coupling_drift(&r, &m, k, k + 1)).sum();
            assert!((coupling_drift(&r, &m, x, y) - sum).abs() < 1e-10);
            assert_eq!(coupling_drift(&r, &m, x, y), coupling_drift(&r, &m, y, x));
        }
    }

    #[test]
    fn jump_bounds() {
        let r = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
        assert_eq!(jump_bound(&r, &PathMetric::classical(), 50).value, 1.0);
        let b = jump_bound(&r, &PathMetric::inv_sqrt(), 50);
        assert_eq!(b.value, 1.0);
        assert!(b.attained);
        let h = hypercube(3).unwrap();
        let ham = crate::metric::ProductMetric::hamming(3, 2).unwrap();
        assert_eq!(jump_bound_generator(&h.generator, &ham), 1.0);
    }

    #[test]
    fn second_moments() {
        // λ/(x+1) + ν for x ≥ 1, λ at x = 0: sup = λ/2 + ν at x = 1
        let (l, n) = (1.0, 1.0);
        let r = BirthDeathRates::mm_infinity(l, n).unwrap();
        let v = second_moment(&r, &PathMetric::inv_sqrt(), 500).unwrap();
        assert!((v.value - (l / 2.0 + n)).abs() < 1e-12);
        assert_eq!(v.argmax, 1);
        let a = check_assumption_a(&r, &PathMetric::inv_sqrt(), 500).unwrap();
        assert!(v.value <= a.implied_v2());

        assert!(matches!(
            second_moment(&r, &PathMetric::classical(), 500),
            Err(CurvatureError::InfiniteSecondMoment { .. })
        ));

        let h = hypercube(4).unwrap();
        let ham = crate::metric::ProductMetric::hamming(4, 2).unwrap();
        assert!((second_moment_generator(&h.generator, &ham) - 0.5).abs() < 1e-15);
        let two = Generator::two_state(0.3, 0.8).unwrap();
        assert!((second_moment_generator(&two, &TrivialMetric) - 0.8).abs() < 1e-15);
    }

    #[test]
    fn second_moment_growth_detected_without_tags() {
        // table rates whose last value is repeated: bounded, must not error
        let birth: Vec<f64> = (0..30).map(|x| 1.0 + x as f64).collect();
        let mut death = vec![0.0];
        death.extend((1..30).map(|x| 2.0 * x as f64));
        let r = BirthDeathRates::table(birth, death).unwrap();
        assert!(second_moment(&r, &PathMetric::classical(), 100).is_ok());
        // affine growth under a custom power-law table is caught by the trend
        let r = BirthDeathRates::new(RateModel::Affine {
            birth_intercept: 1.0,
            birth_slope: 1.0,
            death_intercept: 0.0,
            death_slope: 1.0,
        })
        .unwrap();
        let m = PathMetric::table(
            vec![1.0],
            crate::metric::TailRule::PowerLaw {
                scale: 1.0,
                exponent: 0.25,
            },
        )
        .unwrap();
        assert!(matches!(
            second_moment(&r, &m, 200),
            Err(CurvatureError::InfiniteSecondMoment { .. })
        ));
    }

    #[test]
    fn assumption_a_mm_infinity() {
        for nu in [0.5, 2.0] {
            let r = BirthDeathRates::mm_infinity(nu, nu).unwrap();
            let a = check_assumption_a(&r, &PathMetric::inv_sqrt(), 300).unwrap();
            assert!((a.k - nu).abs() < 1e-15);
            assert!((a.c_a - nu.sqrt()).abs() < 1e-12);
        }
        let r = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
        assert!(matches!(
            check_assumption_a(&r, &PathMetric::classical(), 300),
            Err(CurvatureError::AssumptionAFailed { .. })
        ));
    }

    #[test]
    fn tensorize_examples() {
        let unit = ChainConstants {
            sigma: 1.0,
            b: 1.0,
            v2: 0.5,
        };
        for n in 1..6 {
            let t = tensorize(&vec![unit; n]).unwrap();
            assert!((t.sigma - 1.0 / n as f64).abs() < 1e-15);
            assert_eq!((t.b, t.v2), (1.0, 0.5));
        }
        let t = tensorize(&[
            ChainConstants {
                sigma: 2.0,
                b: 1.0,
                v2: 1.0,
            },
            ChainConstants {
                sigma: 4.0,
                b: 2.0,
                v2: 3.0,
            },
        ])
        .unwrap();
        assert_eq!((t.sigma, t.b, t.v2), (1.0, 2.0, 2.0));
        assert!(tensorize(&[]).is_err());
    }

    #[test]
    fn numeric_two_state() {
        let g = Generator::two_state(0.5, 0.5).unwrap();
        let c = estimate_curvature_numeric(&g, &TrivialMetric, &[0.1, 0.5, 1.0, 2.0], 1e-13).unwrap();
        assert!((c.sigma - 1.0).abs() < 1e-6, "{}", c.sigma);
    }
}
