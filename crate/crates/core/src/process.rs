//! Markov jump process models: finite generators, birth–death chains on ℕ,
//! product chains, stationary measures and transient rows of the semigroup.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProcessError {
    #[error("rate {rate} from state {from} to {to} is not strictly positive and finite")]
    BadRate { from: usize, to: usize, rate: f64 },
    #[error("self-loop at state {0}")]
    SelfLoop(usize),
    #[error("target {to} from state {from} is outside the {len}-state space")]
    TargetOutOfRange { from: usize, to: usize, len: usize },
    #[error("duplicate jump {from} -> {to}")]
    DuplicateJump { from: usize, to: usize },
    #[error("birth-death rates invalid: {0}")]
    BadBirthDeath(String),
    #[error("stationary measure diverges (normalizer still growing at level {level}); chain looks non-ergodic")]
    NonErgodic { level: usize },
    #[error("semigroup leaked mass {leaked:.3e} > tol {tol:.1e} from state {state}; enlarge the truncation to at least {suggested} states")]
    TruncationTooSmall {
        state: usize,
        leaked: f64,
        tol: f64,
        suggested: usize,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("generator has no unique stationary distribution")]
    SingularGenerator,
}

/// Anything that can list the jumps out of a state. Simulation only needs
/// this, so infinite chains are evaluated lazily.
pub trait JumpKernel: Sync {
    /// Appends `(target, rate)` pairs for the jumps out of `x`.
    fn jumps_from(&self, x: usize, out: &mut Vec<(usize, f64)>);
}

/// Jump rates on a finite state space `{0, …, n−1}`.
///
/// `exit` holds rates of jumps leaving the represented space (a truncation
/// boundary). Semigroup rows lose that mass, and it is reported as leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    rows: Vec<Vec<(usize, f64)>>,
    exit: Vec<f64>,
}

impl Generator {
    pub fn new(rows: Vec<Vec<(usize, f64)>>) -> Result<Self, ProcessError> {
        let n = rows.len();
        Self::with_exits(rows, vec![0.0; n])
    }

    pub fn with_exits(rows: Vec<Vec<(usize, f64)>>, exit: Vec<f64>) -> Result<Self, ProcessError> {
        let n = rows.len();
        if exit.len() != n {
            return Err(ProcessError::InvalidArgument(format!(
                "{} exit rates for {n} states",
                exit.len()
            )));
        }
        for (from, row) in rows.iter().enumerate() {
            let mut seen = Vec::with_capacity(row.len());
            for &(to, rate) in row {
                if to == from {
                    return Err(ProcessError::SelfLoop(from));
                }
                if to >= n {
                    return Err(ProcessError::TargetOutOfRange { from, to, len: n });
                }
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(ProcessError::BadRate { from, to, rate });
                }
                if seen.contains(&to) {
                    return Err(ProcessError::DuplicateJump { from, to });
                }
                seen.push(to);
            }
            if !(exit[from] >= 0.0 && exit[from].is_finite()) {
                return Err(ProcessError::BadRate {
                    from,
                    to: n,
                    rate: exit[from],
                });
            }
        }
        Ok(Self { rows, exit })
    }

    /// Two states with rate `up` for 0 → 1 and `down` for 1 → 0.
    pub fn two_state(up: f64, down: f64) -> Result<Self, ProcessError> {
        Self::new(vec![vec![(1, up)], vec![(0, down)]])
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn exit_rate(&self, x: usize) -> f64 {
        self.exit[x]
    }

    pub fn has_exits(&self) -> bool {
        self.exit.iter().any(|&e| e > 0.0)
    }

    /// `Q(x, 𝒳)`, including any exit rate.
    pub fn total_rate(&self, x: usize) -> f64 {
        self.rows[x].iter().map(|&(_, r)| r).sum::<f64>() + self.exit[x]
    }

    pub fn max_total_rate(&self) -> f64 {
        (0..self.len())
            .map(|x| self.total_rate(x))
            .fold(0.0, f64::max)
    }

    /// `𝓛f(x) = Σ_y (f(y) − f(x)) Q(x, y)`; exits are treated as jumps to a
    /// cemetery where `f = 0`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|x| {
                self.rows[x]
                    .iter()
                    .map(|&(y, r)| (f[y] - f[x]) * r)
                    .sum::<f64>()
                    - self.exit[x] * f[x]
            })
            .collect()
    }

    /// Solves `πQ = 0, Σπ = 1` by LU on the transposed generator with one
    /// balance equation replaced by the normalization.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, ProcessError> {
        let n = self.len();
        if n == 0 {
            return Err(ProcessError::SingularGenerator);
        }
        let mut a = nalgebra::DMatrix::<f64>::zeros(n, n);
        for x in 0..n {
            for &(y, r) in &self.rows[x] {
                a[(y, x)] += r;
                a[(x, x)] -= r;
            }
        }
        for j in 0..n {
            a[(n - 1, j)] = 1.0;
        }
        let mut rhs = nalgebra::DVector::<f64>::zeros(n);
        rhs[n - 1] = 1.0;
        let pi = a.lu().solve(&rhs).ok_or(ProcessError::SingularGenerator)?;
        if pi.iter().any(|p| !p.is_finite() || *p < -1e-9) {
            return Err(ProcessError::SingularGenerator);
        }
        Ok(pi.iter().map(|p| p.max(0.0)).collect())
    }
}

impl JumpKernel for Generator {
    fn jumps_from(&self, x: usize, out: &mut Vec<(usize, f64)>) {
        out.extend_from_slice(&self.rows[x]);
    }
}

/// Rate families for birth–death chains.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum RateModel {
    /// `λ_x = lambda`, `ν_x = nu·x`.
    MmInfinity { lambda: f64, nu: f64 },
    /// `λ_x = lambda`, `ν_x = nu` for `x ≥ 1`.
    Constant { lambda: f64, nu: f64 },
    /// `λ_x = birth_intercept + birth_slope·x`, `ν_x = death_intercept + death_slope·x` for `x ≥ 1`.
    Affine {
        birth_intercept: f64,
        birth_slope: f64,
        death_intercept: f64,
        death_slope: f64,
    },
    /// Explicit tables; `death[0]` must be 0. Past the end of a table the last
    /// entry is repeated.
    Table { birth: Vec<f64>, death: Vec<f64> },
}

/// Birth and death rates `(λ_x, ν_x)` on ℕ, optionally capped at a finite
/// `capacity` where births stop (a reflecting finite chain on `{0..=capacity}`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BirthDeathRates {
    model: RateModel,
    capacity: Option<usize>,
}

impl BirthDeathRates {
    pub fn new(model: RateModel) -> Result<Self, ProcessError> {
        let bad = |m: String| Err(ProcessError::BadBirthDeath(m));
        let pos = |v: f64| v > 0.0 && v.is_finite();
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        match &model {
            RateModel::MmInfinity { lambda, nu } | RateModel::Constant { lambda, nu } => {
                if !pos(*lambda) || !pos(*nu) {
                    return bad(format!("lambda={lambda}, nu={nu} must be positive"));
                }
            }
            RateModel::Affine {
                birth_intercept,
                birth_slope,
                death_intercept,
                death_slope,
            } => {
                if !pos(*birth_intercept) || !nonneg(*birth_slope) || !nonneg(*death_intercept)
                    || !nonneg(*death_slope)
                    || death_intercept + death_slope <= 0.0
                {
                    return bad(format!(
                        "affine rates need positive birth intercept, nonnegative slopes and nu_1 > 0 \
                         (got {birth_intercept}, {birth_slope}, {death_intercept}, {death_slope})"
                    ));
                }
            }
            RateModel::Table { birth, death } => {
                if birth.is_empty() || death.len() < 2 {
                    return bad("tables need at least one birth rate and two death rates".into());
                }
                if death[0] != 0.0 {
                    return bad(format!("death[0] = {} but must be 0", death[0]));
                }
                if let Some((x, b)) = birth.iter().enumerate().find(|(_, b)| !pos(**b)) {
                    return bad(format!("birth rate {b} at {x} must be positive"));
                }
                if let Some((x, d)) = death.iter().enumerate().skip(1).find(|(_, d)| !pos(**d)) {
                    return bad(format!("death rate {d} at {x} must be positive"));
                }
            }
        }
        Ok(Self {
            model,
            capacity: None,
        })
    }

    pub fn mm_infinity(lambda: f64, nu: f64) -> Result<Self, ProcessError> {
        Self::new(RateModel::MmInfinity { lambda, nu })
    }

    pub fn constant(lambda: f64, nu: f64) -> Result<Self, ProcessError> {
        Self::new(RateModel::Constant { lambda, nu })
    }

    pub fn table(birth: Vec<f64>, death: Vec<f64>) -> Result<Self, ProcessError> {
        Self::new(RateModel::Table { birth, death })
    }

    /// Stops births at `capacity`, turning the chain into a finite one.
    pub fn with_capacity(mut self, capacity: usize) -> Result<Self, ProcessError> {
        if capacity == 0 {
            return Err(ProcessError::BadBirthDeath("capacity must be >= 1".into()));
        }
        self.capacity = Some(capacity);
        Ok(self)
    }

    pub fn model(&self) -> &RateModel {
        &self.model
    }

    pub fn capacity(&self) -> Option<usize> {
        self.capacity
    }

    /// `λ_x` (zero at and beyond the capacity).
    pub fn birth(&self, x: usize) -> f64 {
        if let Some(c) = self.capacity {
            if x >= c {
                return 0.0;
            }
        }
        let xf = x as f64;
        match &self.model {
            RateModel::MmInfinity { lambda, .. } | RateModel::Constant { lambda, .. } => *lambda,
            RateModel::Affine {
                birth_intercept,
                birth_slope,
                ..
            } => birth_intercept + birth_slope * xf,
            RateModel::Table { birth, .. } => birth[x.min(birth.len() - 1)],
        }
    }

    /// `ν_x`, with `ν_0 = 0`.
    pub fn death(&self, x: usize) -> f64 {
        if x == 0 {
            return 0.0;
        }
        if let Some(c) = self.capacity {
            if x > c {
                return 0.0;
            }
        }
        let xf = x as f64;
        match &self.model {
            RateModel::MmInfinity { nu, .. } => nu * xf,
            RateModel::Constant { nu, .. } => *nu,
            RateModel::Affine {
                death_intercept,
                death_slope,
                ..
            } => death_intercept + death_slope * xf,
            RateModel::Table { death, .. } => death[x.min(death.len() - 1)],
        }
    }

    pub fn total_rate(&self, x: usize) -> f64 {
        self.birth(x) + self.death(x)
    }

    /// Whether the rates are unbounded on ℕ (never for a finite capacity).
    pub fn unbounded(&self) -> bool {
        if self.capacity.is_some() {
            return false;
        }
        match &self.model {
            RateModel::MmInfinity { .. } => true,
            RateModel::Affine {
                birth_slope,
                death_slope,
                ..
            } => *birth_slope > 0.0 || *death_slope > 0.0,
            RateModel::Constant { .. } | RateModel::Table { .. } => false,
        }
    }

    /// Finite generator on `{0..=level}`. Births out of `level` become exit
    /// rates (leaked mass) unless the chain's capacity is `≤ level`.
    pub fn truncate(&self, level: usize) -> Generator {
        let mut rows = Vec::with_capacity(level + 1);
        let mut exit = vec![0.0; level + 1];
        for x in 0..=level {
            let mut row = Vec::with_capacity(2);
            let d = self.death(x);
            if d > 0.0 {
                row.push((x - 1, d));
            }
            let b = self.birth(x);
            if b > 0.0 {
                if x < level {
                    row.push((x + 1, b));
                } else {
                    exit[x] = b;
                }
            }
            rows.push(row);
        }
        Generator { rows, exit }
    }

    /// The finite generator of a capped chain.
    pub fn finite_generator(&self) -> Result<Generator, ProcessError> {
        let c = self.capacity.ok_or_else(|| {
            ProcessError::InvalidArgument("chain has no finite capacity".into())
        })?;
        Ok(self.truncate(c))
    }
}

impl JumpKernel for BirthDeathRates {
    fn jumps_from(&self, x: usize, out: &mut Vec<(usize, f64)>) {
        let b = self.birth(x);
        if b > 0.0 {
            out.push((x + 1, b));
        }
        let d = self.death(x);
        if d > 0.0 {
            out.push((x - 1, d));
        }
    }
}

const MAX_LEVEL: usize = 1 << 20;
const LOG_OVERFLOW_GUARD: f64 = 700.0;

/// Truncated, normalized stationary law of a birth–death chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryMeasure {
    pub truncation: usize,
    pub probs: Vec<f64>,
    /// `log C`, with `C = Σ_x μ(x)` and `μ(0) = 1`.
    pub log_normalizer: f64,
    /// Estimated stationary mass beyond the truncation.
    pub tail_mass: f64,
}

impl StationaryMeasure {
    /// `μ(x) = λ_0⋯λ_{x−1} / ν_1⋯ν_x`, accumulated in log space and cut where
    /// the geometric tail estimate `μ(x)·r/(1−r)`, `r = λ_x/ν_{x+1}`, drops
    /// below `tol·C`.
    pub fn compute(rates: &BirthDeathRates, tol: f64) -> Result<Self, ProcessError> {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(ProcessError::InvalidArgument(format!("tol {tol} not in (0,1)")));
        }
        let mut log_mu = vec![0.0f64];
        let mut log_c = 0.0f64;
        let mut tail = 0.0f64;
        let mut x = 0usize;
        loop {
            if let Some(c) = rates.capacity() {
                if x == c {
                    break;
                }
            }
            let ratio = rates.birth(x) / rates.death(x + 1);
            let next = log_mu[x] + ratio.ln();
            if ratio < 1.0 {
                let tail_est = (next - log_c).exp() / (1.0 - ratio);
                if tail_est < tol {
                    tail = tail_est;
                    break;
                }
            }
            if x + 1 >= MAX_LEVEL || next > LOG_OVERFLOW_GUARD {
                return Err(ProcessError::NonErgodic { level: x + 1 });
            }
            log_mu.push(next);
            log_c = log_add(log_c, next);
            x += 1;
        }
        let probs: Vec<f64> = log_mu.iter().map(|l| (l - log_c).exp()).collect();
        Ok(Self {
            truncation: probs.len() - 1,
            probs,
            log_normalizer: log_c,
            tail_mass: tail,
        })
    }

    pub fn prob(&self, x: usize) -> f64 {
        self.probs.get(x).copied().unwrap_or(0.0)
    }

    pub fn expect<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        self.probs.iter().enumerate().map(|(x, p)| p * f(x)).sum()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErgodicityVerdict {
    Ergodic,
    TransientSuspect,
    ExplosiveSuspect,
}

/// Partial-sum diagnostics behind an ergodicity verdict. The verdict is a
/// heuristic: divergence of an infinite series cannot be certified from
/// finitely many terms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErgodicityReport {
    pub verdict: ErgodicityVerdict,
    pub horizon: usize,
    /// `log Σ_{x≤H/2} μ(x)` and `log Σ_{x≤H} μ(x)`.
    pub log_normalizer_half: f64,
    pub log_normalizer: f64,
    /// `log Σ_{x≤H'} μ(x) Σ_{x≤y≤H'} 1/(μ(y)λ_y)` at `H' = H/2` and `H' = H`.
    pub log_double_half: f64,
    pub log_double: f64,
}

/// Numerical check of `C = Σ μ(x) < ∞` together with divergence of
/// `Σ_x μ(x) Σ_{y≥x} 1/(μ(y)λ_y)`.
///
/// `C` counts as converged when its relative growth over the second half of
/// the horizon is below `tol`; the double series counts as divergent when it
/// at least doubles over the second half.
pub fn check_ergodicity(
    rates: &BirthDeathRates,
    horizon: usize,
    tol: f64,
) -> Result<ErgodicityReport, ProcessError> {
    if horizon < 10 {
        return Err(ProcessError::InvalidArgument(format!(
            "horizon {horizon} < 10"
        )));
    }
    let horizon = match rates.capacity() {
        Some(c) => horizon.min(c),
        None => horizon,
    };
    let half = horizon / 2;
    let mut log_mu = Vec::with_capacity(horizon + 1);
    log_mu.push(0.0f64);
    for x in 0..horizon {
        log_mu.push(log_mu[x] + (rates.birth(x) / rates.death(x + 1)).ln());
    }
    let log_sum = |upto: usize| {
        log_mu[..=upto]
            .iter()
            .fold(f64::NEG_INFINITY, |acc, &l| log_add(acc, l))
    };
    let log_double = |upto: usize| {
        // inner[x] = log Σ_{y=x}^{upto} 1/(μ(y) λ_y), filled backwards.
        let mut acc = f64::NEG_INFINITY;
        let mut total = f64::NEG_INFINITY;
        for x in (0..=upto).rev() {
            let b = rates.birth(x);
            if b > 0.0 {
                acc = log_add(acc, -log_mu[x] - b.ln());
            }
            total = log_add(total, log_mu[x] + acc);
        }
        total
    };
    let (c_half, c_full) = (log_sum(half), log_sum(horizon));
    let (d_half, d_full) = (log_double(half), log_double(horizon));
    let c_converged = rates.capacity().is_some() || (c_full - c_half).exp_m1() < tol;
    let d_diverges = rates.capacity().is_some() || d_full - d_half > std::f64::consts::LN_2;
    let verdict = match (c_converged, d_diverges) {
        (false, _) => ErgodicityVerdict::TransientSuspect,
        (true, true) => ErgodicityVerdict::Ergodic,
        (true, false) => ErgodicityVerdict::ExplosiveSuspect,
    };
    Ok(ErgodicityReport {
        verdict,
        horizon,
        log_normalizer_half: c_half,
        log_normalizer: c_full,
        log_double_half: d_half,
        log_double: d_full,
    })
}

/// Closed-form transition kernel of the symmetric random walk on `{0,1}^dim`
/// in which each coordinate flips at rate `1/(2·dim)`. Vertices are bitmasks.
pub fn hypercube_kernel(dim: usize, t: f64, x: usize, y: usize) -> f64 {
    let decay = (-t / dim as f64).exp();
    let mut p = 1.0;
    for i in 0..dim {
        let differ = ((x ^ y) >> i) & 1 == 1;
        let factor = if differ { 1.0 - decay } else { 1.0 + decay };
        p *= factor / 2.0;
    }
    p
}

/// Rows `P_t(x, ·)` for a set of start states, with per-row leakage.
#[derive(Debug, Clone, PartialEq)]
pub struct SemigroupRows {
    pub starts: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
    /// `1 − Σ_y P_t(x, y)`: Poisson-series truncation plus mass that left the
    /// represented state space.
    pub leaked: Vec<f64>,
    pub uniformization_rate: f64,
    pub poisson_terms: usize,
}

/// Poisson weights `e^{−m} m^k / k!` for `k = 0..K`, where `K` is the first
/// index past the mean at which the cumulative mass reaches `1 − budget`.
fn poisson_weights(mean: f64, budget: f64) -> Vec<f64> {
    let mut weights = Vec::new();
    let mut log_w = -mean;
    let mut cum = 0.0;
    let mut k = 0usize;
    let ln_mean = mean.ln();
    loop {
        let w = log_w.exp();
        weights.push(w);
        cum += w;
        if (k as f64) > mean && 1.0 - cum < budget {
            break;
        }
        // guards against the cumulative sum stalling just below 1 − budget
        if (k as f64) > mean + 50.0 * mean.sqrt() + 100.0 {
            break;
        }
        k += 1;
        log_w += ln_mean - (k as f64).ln();
    }
    weights
}

/// `P_t(x, ·)` by uniformization: with `Λ = max_x Q(x, 𝒳)` and
/// `K = I + Q/Λ`, `P_t = Σ_k Poisson(Λt; k) K^k`. The Poisson series is cut
/// where its tail is below `tol/2`; the remaining `tol/2` is the budget for
/// mass leaking through exit rates. Rows exceeding `tol` total leakage fail.
pub fn semigroup_rows(
    generator: &Generator,
    t: f64,
    starts: &[usize],
    tol: f64,
) -> Result<SemigroupRows, ProcessError> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(ProcessError::InvalidArgument(format!("time {t}")));
    }
    if !(tol > 0.0) {
        return Err(ProcessError::InvalidArgument(format!("tol {tol}")));
    }
    let n = generator.len();
    if let Some(&bad) = starts.iter().find(|&&s| s >= n) {
        return Err(ProcessError::InvalidArgument(format!(
            "start state {bad} outside {n} states"
        )));
    }
    let rate = generator.max_total_rate();
    if t == 0.0 || rate == 0.0 {
        let rows = starts
            .iter()
            .map(|&s| {
                let mut r = vec![0.0; n];
                r[s] = 1.0;
                r
            })
            .collect();
        return Ok(SemigroupRows {
            starts: starts.to_vec(),
            rows,
            leaked: vec![0.0; starts.len()],
            uniformization_rate: rate,
            poisson_terms: 1,
        });
    }
    let weights = poisson_weights(rate * t, tol / 2.0);
    let stay: Vec<f64> = (0..n)
        .map(|x| 1.0 - generator.total_rate(x) / rate)
        .collect();
    let rows: Vec<Vec<f64>> = starts
        .par_iter()
        .map(|&s| {
            let mut v = vec![0.0; n];
            v[s] = 1.0;
            let mut next = vec![0.0; n];
            let mut acc = vec![0.0; n];
            for (k, &w) in weights.iter().enumerate() {
                if k > 0 {
                    next.iter_mut().for_each(|e| *e = 0.0);
                    for x in 0..n {
                        let mass = v[x];
                        if mass == 0.0 {
                            continue;
                        }
                        next[x] += mass * stay[x];
                        for &(y, r) in generator.row(x) {
                            next[y] += mass * r / rate;
                        }
                    }
                    std::mem::swap(&mut v, &mut next);
                }
                for (a, &m) in acc.iter_mut().zip(&v) {
                    *a += w * m;
                }
            }
            acc
        })
        .collect();
    let leaked: Vec<f64> = rows
        .iter()
        .map(|r| (1.0 - r.iter().sum::<f64>()).max(0.0))
        .collect();
    for (i, &l) in leaked.iter().enumerate() {
        if l > tol {
            return Err(ProcessError::TruncationTooSmall {
                state: starts[i],
                leaked: l,
                tol,
                suggested: 2 * n,
            });
        }
    }
    Ok(SemigroupRows {
        starts: starts.to_vec(),
        rows,
        leaked,
        uniformization_rate: rate,
        poisson_terms: weights.len(),
    })
}

/// All rows `P_t(x, ·)`, `x = 0..n`.
pub fn transition_matrix(
    generator: &Generator,
    t: f64,
    tol: f64,
) -> Result<SemigroupRows, ProcessError> {
    let starts: Vec<usize> = (0..generator.len()).collect();
    semigroup_rows(generator, t, &starts, tol)
}

/// Product chain: pick one of `dim` coordinates uniformly, then move it
/// according to its own generator.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductChain {
    pub generator: Generator,
    pub dim: usize,
    pub radix: usize,
    components: Vec<Generator>,
}

impl ProductChain {
    pub fn encode(&self, coords: &[usize]) -> usize {
        coords
            .iter()
            .rev()
            .fold(0, |acc, &c| acc * self.radix + c)
    }

    pub fn decode(&self, mut index: usize) -> Vec<usize> {
        (0..self.dim)
            .map(|_| {
                let c = index % self.radix;
                index /= self.radix;
                c
            })
            .collect()
    }

    pub fn components(&self) -> &[Generator] {
        &self.components
    }

    /// `⊗ π_i` from the component stationary laws.
    pub fn stationary_distribution(&self) -> Result<Vec<f64>, ProcessError> {
        let marginals = self
            .components
            .iter()
            .map(Generator::stationary_distribution)
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..self.generator.len())
            .map(|idx| {
                self.decode(idx)
                    .iter()
                    .zip(&marginals)
                    .map(|(&c, m)| m[c])
                    .product()
            })
            .collect())
    }
}

/// Generator on `𝒴^N` whose rate for moving coordinate `i` from `a` to `b`
/// is `Q_i(a, b) / N`.
pub fn build_product_chain(components: &[Generator]) -> Result<ProductChain, ProcessError> {
    let dim = components.len();
    if dim == 0 {
        return Err(ProcessError::InvalidArgument("no components".into()));
    }
    let radix = components[0].len();
    if components.iter().any(|c| c.len() != radix) {
        return Err(ProcessError::InvalidArgument(
            "components must share a state space".into(),
        ));
    }
    if components.iter().any(Generator::has_exits) {
        return Err(ProcessError::InvalidArgument(
            "components must not have exit rates".into(),
        ));
    }
    let size = radix
        .checked_pow(dim as u32)
        .ok_or_else(|| ProcessError::InvalidArgument("product space too large".into()))?;
    let scale = 1.0 / dim as f64;
    let mut rows = Vec::with_capacity(size);
    for idx in 0..size {
        let mut row = Vec::new();
        let mut stride = 1usize;
        let mut rest = idx;
        for comp in components {
            let a = rest % radix;
            rest /= radix;
            for &(b, r) in comp.row(a) {
                let target = idx - a * stride + b * stride;
                row.push((target, r * scale));
            }
            stride *= radix;
        }
        rows.push(row);
    }
    Ok(ProductChain {
        generator: Generator::new(rows)?,
        dim,
        radix,
        components: components.to_vec(),
    })
}

/// Symmetric walk on `{0,1}^dim`: product of `dim` two-state chains flipping at
/// rate 1/2 each way.
pub fn hypercube(dim: usize) -> Result<ProductChain, ProcessError> {
    let flip = Generator::two_state(0.5, 0.5)?;
    build_product_chain(&vec![flip; dim])
}
