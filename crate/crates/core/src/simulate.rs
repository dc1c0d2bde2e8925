//! Exact path simulation and Monte Carlo estimation.
//!
//! Replica `i` of a run with seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `i` via `set_stream(i)`.
//! `seed_from_u64` expands `s` into a 256-bit key with PCG32 as documented by
//! `rand_core`, and the stream id occupies the ChaCha nonce, so replicas are
//! independent streams that can be generated in any order or thread.
//! Bootstrap resampling uses stream `u64::MAX`.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Exp};
use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{Discrete, Poisson};
use statrs::function::beta::beta_reg;
use thiserror::Error;

use crate::process::{JumpKernel, ProcessError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimulationError {
    #[error("explosion suspected: {jumps} jumps before time {time}")]
    ExplosionSuspect { jumps: usize, time: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Process(#[from] ProcessError),
}

/// Default ceiling on jumps per path.
pub const DEFAULT_MAX_JUMPS: usize = 50_000_000;

/// RNG for replica `index` of a run seeded with `seed`.
pub fn replica_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Piecewise-constant path on `[0, horizon]`: `states[0]` holds on
/// `[0, times[0])`, `states[k]` on `[times[k−1], times[k])`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathRecord {
    pub start: usize,
    pub times: Vec<f64>,
    /// States after each jump.
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl PathRecord {
    pub fn jumps(&self) -> usize {
        self.times.len()
    }

    /// `X_s` for `0 ≤ s ≤ horizon` (right-continuous).
    pub fn state_at(&self, s: f64) -> usize {
        let k = self.times.partition_point(|&u| u <= s);
        if k == 0 {
            self.start
        } else {
            self.states[k - 1]
        }
    }

    pub fn final_state(&self) -> usize {
        self.states.last().copied().unwrap_or(self.start)
    }

    /// `(start, end, state)` for every constant segment.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, usize)> + '_ {
        let n = self.times.len();
        (0..=n).map(move |k| {
            let a = if k == 0 { 0.0 } else { self.times[k - 1] };
            let b = if k == n { self.horizon } else { self.times[k] };
            let x = if k == 0 { self.start } else { self.states[k - 1] };
            (a, b, x)
        })
    }

    /// CSV dump with columns `time,state`, starting at time 0.
    pub fn to_csv(&self) -> String {
        let mut out = format!("time,state\n0,{}\n", self.start);
        for (t, x) in self.times.iter().zip(&self.states) {
            out.push_str(&format!("{t},{x}\n"));
        }
        out
    }
}

/// Gillespie simulation: exponential holding times with rate `Q(x, 𝒳)` and
/// jump targets drawn proportionally to `Q(x, ·)`.
pub fn simulate_path<K: JumpKernel + ?Sized, R: Rng + ?Sized>(
    kernel: &K,
    x0: usize,
    horizon: f64,
    rng: &mut R,
    max_jumps: usize,
) -> Result<PathRecord, SimulationError> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SimulationError::InvalidArgument(format!("horizon {horizon}")));
    }
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut jumps = Vec::new();
    let mut x = x0;
    let mut now = 0.0;
    loop {
        jumps.clear();
        kernel.jumps_from(x, &mut jumps);
        let total: f64 = jumps.iter().map(|j| j.1).sum();
        if total <= 0.0 {
            break;
        }
        now += Exp::new(total).expect("positive rate").sample(rng);
        if now > horizon {
            break;
        }
        if times.len() >= max_jumps {
            return Err(SimulationError::ExplosionSuspect {
                jumps: times.len(),
                time: now,
            });
        }
        let mut pick = rng.random::<f64>() * total;
        let mut target = jumps[jumps.len() - 1].0;
        for &(y, r) in &jumps {
            if pick < r {
                target = y;
                break;
            }
            pick -= r;
        }
        x = target;
        times.push(now);
        states.push(x);
    }
    Ok(PathRecord {
        start: x0,
        times,
        states,
        horizon,
    })
}

/// Path for replica `index` of a run seeded with `seed`.
pub fn simulate_replica<K: JumpKernel + ?Sized>(
    kernel: &K,
    x0: usize,
    horizon: f64,
    seed: u64,
    index: u64,
) -> Result<PathRecord, SimulationError> {
    simulate_path(kernel, x0, horizon, &mut replica_rng(seed, index), DEFAULT_MAX_JUMPS)
}

/// `t⁻¹ ∫₀ᵗ φ(X_s) ds`, integrated exactly over constant segments.
pub fn empirical_mean(path: &PathRecord, phi: impl Fn(usize) -> f64) -> f64 {
    if path.horizon == 0.0 {
        return phi(path.start);
    }
    path.segments().map(|(a, b, x)| (b - a) * phi(x)).sum::<f64>() / path.horizon
}

/// `n⁻¹ Σ_{k=1}^n φ(X_{kt/n})`.
pub fn riemann_mean(path: &PathRecord, phi: impl Fn(usize) -> f64, n: usize) -> f64 {
    (1..=n)
        .map(|k| phi(path.state_at(k as f64 * path.horizon / n as f64)))
        .sum::<f64>()
        / n as f64
}

/// Exact one-sided upper confidence bound at level `1 − α` for a binomial
/// proportion with `k` successes in `n` trials: the `p` solving
/// `P(Bin(n, p) ≤ k) = α`.
pub fn clopper_pearson_upper(k: u64, n: u64, alpha: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    // P(Bin(n, p) ≤ k) = 1 − I_p(k+1, n−k), decreasing in p
    let cdf = |p: f64| 1.0 - beta_reg((k + 1) as f64, (n - k) as f64, p);
    let (mut lo, mut hi) = (k as f64 / n as f64, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    hi
}

fn run_in_pool<T: Send>(workers: Option<usize>, job: impl FnOnce() -> T + Send) -> Result<T, SimulationError> {
    match workers {
        None => Ok(job()),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| SimulationError::InvalidArgument(e.to_string()))?;
            Ok(pool.install(job))
        }
    }
}

/// Monte Carlo estimate of `P_x(|t⁻¹∫₀ᵗ φ − π(φ)| ≥ y + bias)` on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailEstimate {
    pub y: Vec<f64>,
    pub bias: f64,
    pub replicas: u64,
    pub alpha: f64,
    pub seed: u64,
    /// Replicas with deviation `≥ y + bias`.
    pub counts: Vec<u64>,
    pub estimate: Vec<f64>,
    pub upper: Vec<f64>,
    /// Replicas with deviation `≥ y`, ignoring the bias.
    pub raw_counts: Vec<u64>,
    /// Mean of the time averages over replicas.
    pub mean_average: f64,
}

/// Settings shared by the Monte Carlo estimators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarlo {
    pub replicas: u64,
    pub seed: u64,
    /// Thread count; `None` uses the global pool. Never affects results.
    pub workers: Option<usize>,
}

/// Time averages of `φ` over `replicas` independent paths from `x0`.
pub fn sample_averages<K: JumpKernel + ?Sized>(
    kernel: &K,
    phi: &(dyn Fn(usize) -> f64 + Sync),
    x0: usize,
    t: f64,
    mc: MonteCarlo,
) -> Result<Vec<f64>, SimulationError> {
    run_in_pool(mc.workers, || {
        (0..mc.replicas)
            .into_par_iter()
            .map(|i| simulate_replica(kernel, x0, t, mc.seed, i).map(|p| empirical_mean(&p, phi)))
            .collect::<Result<Vec<_>, _>>()
    })?
}

pub fn estimate_tail<K: JumpKernel + ?Sized>(
    kernel: &K,
    phi: &(dyn Fn(usize) -> f64 + Sync),
    pi_phi: f64,
    bias: f64,
    x0: usize,
    t: f64,
    y_grid: &[f64],
    alpha: f64,
    mc: MonteCarlo,
) -> Result<TailEstimate, SimulationError> {
    if mc.replicas < 100 {
        return Err(SimulationError::InvalidArgument(format!(
            "need at least 100 replicas, got {}",
            mc.replicas
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(SimulationError::InvalidArgument(format!("alpha {alpha}")));
    }
    if y_grid.is_empty() || y_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(SimulationError::InvalidArgument(
            "y grid must be nonempty and increasing".into(),
        ));
    }
    let averages = sample_averages(kernel, phi, x0, t, mc)?;
    let deviations: Vec<f64> = averages.iter().map(|a| (a - pi_phi).abs()).collect();
    let count = |level: f64| deviations.iter().filter(|&&d| d >= level).count() as u64;
    let counts: Vec<u64> = y_grid.iter().map(|&y| count(y + bias)).collect();
    let raw_counts = y_grid.iter().map(|&y| count(y)).collect();
    let n = mc.replicas;
    Ok(TailEstimate {
        y: y_grid.to_vec(),
        bias,
        replicas: n,
        alpha,
        seed: mc.seed,
        estimate: counts.iter().map(|&k| k as f64 / n as f64).collect(),
        upper: counts.iter().map(|&k| clopper_pearson_upper(k, n, alpha)).collect(),
        counts,
        raw_counts,
        mean_average: averages.iter().sum::<f64>() / n as f64,
    })
}

/// Monte Carlo estimate of `E_x[e^{τ(f(X_t) − E_x f(X_t))}]` for one `τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LaplacePoint {
    pub tau: f64,
    pub estimate: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaplaceEstimate {
    /// Plug-in estimate of `E_x f(X_t)` from the same replicas.
    pub mean: f64,
    pub points: Vec<LaplacePoint>,
    /// `τ` values where `e^{τ|f − mean|}` would overflow.
    pub rejected: Vec<f64>,
    pub level: f64,
    pub resamples: usize,
}

pub const BOOTSTRAP_RESAMPLES: usize = 1000;
const EXP_GUARD: f64 = 700.0;

/// Sample mean of `exp(τ(f(X_t) − mean))` per `τ`, with a two-sided
/// percentile bootstrap interval at `level` (the mean is re-estimated inside
/// each resample). Resampling draws multinomial counts over the distinct
/// values of `f(X_t)`, which is equivalent to resampling replicas.
pub fn empirical_laplace<K: JumpKernel + ?Sized>(
    kernel: &K,
    f: &(dyn Fn(usize) -> f64 + Sync),
    x0: usize,
    t: f64,
    tau_grid: &[f64],
    level: f64,
    mc: MonteCarlo,
) -> Result<LaplaceEstimate, SimulationError> {
    if tau_grid.iter().any(|&tau| !(tau > 0.0)) {
        return Err(SimulationError::InvalidArgument("tau must be positive".into()));
    }
    if mc.replicas == 0 {
        return Err(SimulationError::InvalidArgument("no replicas".into()));
    }
    let values = run_in_pool(mc.workers, || {
        (0..mc.replicas)
            .into_par_iter()
            .map(|i| simulate_replica(kernel, x0, t, mc.seed, i).map(|p| f(p.final_state())))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;

    let mut distinct = values.clone();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let weights: Vec<f64> = {
        let mut w = vec![0.0; distinct.len()];
        for v in &values {
            let i = distinct.partition_point(|d| d < v);
            w[i] += 1.0;
        }
        w
    };
    let spread = distinct
        .iter()
        .map(|d| (d - mean).abs())
        .fold(0.0, f64::max);
    let (accepted, rejected): (Vec<f64>, Vec<f64>) =
        tau_grid.iter().partition(|&&tau| tau * spread <= EXP_GUARD);

    let mgf = |counts: &[f64], tau: f64| {
        let total: f64 = counts.iter().sum();
        let m = counts.iter().zip(&distinct).map(|(c, d)| c * d).sum::<f64>() / total;
        counts
            .iter()
            .zip(&distinct)
            .map(|(c, d)| c * (tau * (d - m)).exp())
            .sum::<f64>()
            / total
    };

    let mut rng = replica_rng(mc.seed, u64::MAX);
    let probs: Vec<f64> = weights.iter().map(|w| w / n).collect();
    let mut boot: Vec<Vec<f64>> = vec![Vec::with_capacity(BOOTSTRAP_RESAMPLES); accepted.len()];
    for _ in 0..BOOTSTRAP_RESAMPLES {
        let counts = multinomial(mc.replicas, &probs, &mut rng);
        for (j, &tau) in accepted.iter().enumerate() {
            boot[j].push(mgf(&counts, tau));
        }
    }
    let points = accepted
        .iter()
        .zip(boot.iter_mut())
        .map(|(&tau, samples)| {
            samples.sort_by(f64::total_cmp);
            let a = (1.0 - level) / 2.0;
            LaplacePoint {
                tau,
                estimate: mgf(&weights, tau),
                lower: quantile(samples, a),
                upper: quantile(samples, 1.0 - a),
            }
        })
        .collect();
    Ok(LaplaceEstimate {
        mean,
        points,
        rejected,
        level,
        resamples: BOOTSTRAP_RESAMPLES,
    })
}

/// Multinomial draw by sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(n: u64, probs: &[f64], rng: &mut R) -> Vec<f64> {
    let mut left = n;
    let mut mass = 1.0;
    let mut out = Vec::with_capacity(probs.len());
    for (i, &p) in probs.iter().enumerate() {
        let k = if i + 1 == probs.len() || left == 0 {
            left
        } else {
            let q = (p / mass).clamp(0.0, 1.0);
            Binomial::new(left, q).expect("valid binomial").sample(rng)
        };
        out.push(k as f64);
        left -= k;
        mass -= p;
    }
    out
}

/// Type-7 sample quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Law of `X_t` for the M/M/∞ queue started at `x0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactLaw {
    pub pmf: Vec<f64>,
    pub tail_mass: f64,
}

/// `Bin(x0, e^{−νt}) ∗ Poisson(ξ(1 − e^{−νt}))` on `{0..=support_cap}`.
pub fn mm_infinity_exact_law(
    x0: usize,
    t: f64,
    lambda: f64,
    nu: f64,
    support_cap: usize,
) -> Result<ExactLaw, SimulationError> {
    if !(t >= 0.0 && lambda > 0.0 && nu > 0.0) {
        return Err(SimulationError::InvalidArgument(format!(
            "t={t}, lambda={lambda}, nu={nu}"
        )));
    }
    let keep = (-nu * t).exp();
    let rate = lambda / nu * -(-nu * t).exp_m1();
    let binom: Vec<f64> = (0..=x0)
        .map(|k| {
            let log_choose = statrs::function::factorial::ln_binomial(x0 as u64, k as u64);
            let log_p = log_choose
                + if k > 0 { k as f64 * keep.ln() } else { 0.0 }
                + if x0 > k { (x0 - k) as f64 * (-keep).ln_1p() } else { 0.0 };
            log_p.exp()
        })
        .collect();
    let poisson: Vec<f64> = match Poisson::new(rate) {
        Ok(p) => (0..=support_cap).map(|k| p.pmf(k as u64)).collect(),
        Err(_) => {
            let mut v = vec![0.0; support_cap + 1];
            v[0] = 1.0;
            v
        }
    };
    let pmf: Vec<f64> = (0..=support_cap)
        .map(|z| {
            (0..=z.min(x0))
                .map(|k| binom[k] * poisson[z - k])
                .sum::<f64>()
        })
        .collect();
    let tail_mass = (1.0 - pmf.iter().sum::<f64>()).max(0.0);
    Ok(ExactLaw { pmf, tail_mass })
}

/// `½ Σ |p − q|`, padding the shorter vector with zeros.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    0.5 * (0..n)
        .map(|i| (p.get(i).unwrap_or(&0.0) - q.get(i).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Empirical law of `X_t` over `replicas` paths, as frequencies on
/// `{0..=max observed}`.
pub fn empirical_law<K: JumpKernel + ?Sized>(
    kernel: &K,
    x0: usize,
    t: f64,
    mc: MonteCarlo,
) -> Result<Vec<f64>, SimulationError> {
    let finals = run_in_pool(mc.workers, || {
        (0..mc.replicas)
            .into_par_iter()
            .map(|i| simulate_replica(kernel, x0, t, mc.seed, i).map(|p| p.final_state()))
            .collect::<Result<Vec<_>, _>>()
    })??;
    let max = finals.iter().copied().max().unwrap_or(0);
    let mut freq = vec![0.0; max + 1];
    for x in finals {
        freq[x] += 1.0;
    }
    let n = mc.replicas as f64;
    freq.iter_mut().for_each(|v| *v /= n);
    Ok(freq)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process::{semigroup_rows, BirthDeathRates, Generator};

    fn mc(replicas: u64, seed: u64) -> MonteCarlo {
        MonteCarlo {
            replicas,
            seed,
            workers: None,
        }
    }

    #[test]
    fn absorbing_state_is_constant() {
        let g = Generator::new(vec![vec![], vec![(0, 1.0)]]).unwrap();
        let p = simulate_replica(&g, 0, 10.0, 1, 0).unwrap();
        assert_eq!(p.jumps(), 0);
        assert_eq!(empirical_mean(&p, |x| x as f64 + 2.0), 2.0);
    }

    #[test]
    fn jump_count_of_rate_one_chain() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let r = 10_000u64;
        let counts: Vec<f64> = (0..r)
            .map(|i| simulate_replica(&g, 0, 10.0, 7, i).unwrap().jumps() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / r as f64;
        let se = (10.0 / r as f64).sqrt();
        assert!((mean - 10.0).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn paths_are_valid_and_reproducible() {
        let rates = BirthDeathRates::mm_infinity(2.0, 1.0).unwrap();
        let a = simulate_replica(&rates, 3, 5.0, 42, 9).unwrap();
        let b = simulate_replica(&rates, 3, 5.0, 42, 9).unwrap();
        assert_eq!(a, b);
        let c = simulate_replica(&rates, 3, 5.0, 42, 10).unwrap();
        assert_ne!(a, c);
        let mut prev = a.start;
        let mut tprev = 0.0;
        for (&t, &x) in a.times.iter().zip(&a.states) {
            assert!(t > tprev && t <= a.horizon);
            assert_eq!((x as i64 - prev as i64).abs(), 1);
            prev = x;
            tprev = t;
        }
    }

    #[test]
    fn explosion_guard() {
        // pure birth with λ_x = 2^x explodes in finite time
        let birth: Vec<f64> = (0..200).map(|x| 2f64.powi(x)).collect();
        let rates = BirthDeathRates::table(birth, vec![0.0, 1e-9]).unwrap();
        let err = simulate_path(&rates, 0, 10.0, &mut replica_rng(1, 0), 150).unwrap_err();
        assert!(matches!(err, SimulationError::ExplosionSuspect { .. }));
    }

    #[test]
    fn empirical_mean_examples() {
        let p = PathRecord {
            start: 1,
            times: vec![2.0],
            states: vec![5],
            horizon: 4.0,
        };
        assert_eq!(empirical_mean(&p, |x| x as f64), 3.0);
        assert_eq!(empirical_mean(&p, |_| 0.25), 0.25);
        assert_eq!(p.state_at(1.999), 1);
        assert_eq!(p.state_at(2.0), 5);
        assert_eq!(p.to_csv(), "time,state\n0,1\n2,5\n");
    }

    #[test]
    fn riemann_sums_converge() {
        let rates = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
        let phi = |x: usize| (x as f64).sqrt();
        for i in 0..5 {
            let p = simulate_replica(&rates, 0, 10.0, 3, i).unwrap();
            let exact = empirical_mean(&p, phi);
            // each jump contributes at most t/n·|Δφ| of discretization error
            for k in 10..=14 {
                let n = 1usize << k;
                let bound = 10.0 / n as f64 * (p.jumps() as f64 + 1.0) * 2.0;
                assert!((riemann_mean(&p, phi, n) - exact).abs() <= bound);
            }
            let fine = (riemann_mean(&p, phi, 1 << 20) - exact).abs();
            assert!(fine < 1e-3, "{fine}");
        }
    }

    #[test]
    fn clopper_pearson_values() {
        // k = 0: closed form 1 − α^{1/n}
        let u = clopper_pearson_upper(0, 100, 0.01);
        assert!((u - (1.0 - 0.01f64.powf(0.01))).abs() < 1e-12);
        assert_eq!(clopper_pearson_upper(5, 5, 0.01), 1.0);
        // k = n−1: P(Bin ≤ n−1) = 1 − p^n
        let u = clopper_pearson_upper(9, 10, 0.05);
        assert!((u - 0.95f64.powf(0.1)).abs() < 1e-12);
        let mut prev = 0.0;
        for k in 0..20 {
            let u = clopper_pearson_upper(k, 200, 0.01);
            assert!(u > prev && u >= k as f64 / 200.0);
            prev = u;
        }
    }

    #[test]
    fn tail_estimate_trivial_cases() {
        let g = Generator::two_state(1.0, 1.0).unwrap();
        let e = estimate_tail(&g, &|_| 1.0, 1.0, 0.0, 0, 5.0, &[0.1, 0.5], 0.01, mc(200, 1)).unwrap();
        assert_eq!(e.counts, vec![0, 0]);
        let e = estimate_tail(&g, &|x| x as f64, 0.5, 0.0, 0, 5.0, &[0.6, 2.0], 0.01, mc(200, 1)).unwrap();
        assert_eq!(e.counts, vec![0, 0]);
        assert!(e.upper.iter().zip(&e.estimate).all(|(u, p)| u >= p));
        assert!(estimate_tail(&g, &|_| 1.0, 1.0, 0.0, 0, 5.0, &[0.1], 0.01, mc(50, 1)).is_err());
    }

    #[test]
    fn tail_estimate_independent_of_workers() {
        let rates = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
        let phi = |x: usize| (x as f64).sqrt();
        let grid = [0.1, 0.2, 0.4];
        let run = |w| {
            estimate_tail(
                &rates,
                &phi,
                0.8,
                0.0,
                0,
                2.0,
                &grid,
                0.01,
                MonteCarlo {
                    replicas: 500,
                    seed: 11,
                    workers: w,
                },
            )
            .unwrap()
        };
        let a = run(Some(1));
        assert_eq!(a, run(Some(4)));
        assert_eq!(a, run(None));
        assert!(a.counts.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn laplace_trivial_cases() {
        let g = Generator::two_state(0.5, 0.5).unwrap();
        let e = empirical_laplace(&g, &|_| 3.0, 0, 1.0, &[0.5, 2.0], 0.98, mc(300, 2)).unwrap();
        assert!(e.points.iter().all(|p| (p.estimate - 1.0).abs() < 1e-15));
        let e = empirical_laplace(&g, &|x| x as f64, 0, 1.0, &[1e-9, 5e3], 0.98, mc(300, 2)).unwrap();
        assert!((e.points[0].estimate - 1.0).abs() < 1e-8);
        assert_eq!(e.rejected, vec![5e3]);
        assert!(e.points[0].lower <= e.points[0].upper);
    }

    #[test]
    fn exact_law_limits() {
        let law = mm_infinity_exact_law(0, 0.7, 1.0, 1.0, 40).unwrap();
        let rate: f64 = 1.0 - (-0.7f64).exp();
        let p = Poisson::new(rate).unwrap();
        for k in 0..10 {
            assert!((law.pmf[k] - p.pmf(k as u64)).abs() < 1e-15);
        }
        let law = mm_infinity_exact_law(5, 60.0, 2.0, 1.0, 60).unwrap();
        let p = Poisson::new(2.0).unwrap();
        for k in 0..20 {
            assert!((law.pmf[k] - p.pmf(k as u64)).abs() < 1e-12);
        }
        assert!(law.tail_mass < 1e-12);
        let law = mm_infinity_exact_law(4, 0.0, 1.0, 1.0, 10).unwrap();
        assert!((law.pmf[4] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exact_law_matches_uniformization() {
        let rates = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
        let g = rates.truncate(60);
        let rows = semigroup_rows(&g, 1.0, &[3], 1e-12).unwrap();
        let law = mm_infinity_exact_law(3, 1.0, 1.0, 1.0, 60).unwrap();
        assert!(total_variation(&rows.rows[0], &law.pmf) < 1e-8);
    }

    #[test]
    fn holding_times_are_exponential() {
        // holding time in state 0 of a 3-state chain with exit rate 2.5
        let g = Generator::new(vec![
            vec![(1, 1.0), (2, 1.5)],
            vec![(0, 2.0)],
            vec![(0, 0.5), (1, 0.5)],
        ])
        .unwrap();
        let mut samples = Vec::new();
        let mut i = 0;
        while samples.len() < 10_000 {
            let p = simulate_replica(&g, 0, 50.0, 5, i).unwrap();
            samples.push(p.times.first().copied().unwrap_or(50.0).min(50.0));
            i += 1;
        }
        samples.sort_by(f64::total_cmp);
        let n = samples.len() as f64;
        let d = samples
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let f = 1.0 - (-2.5 * x).exp();
                (f - k as f64 / n).abs().max(((k + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max);
        assert!(d < 1.628 / n.sqrt(), "KS statistic {d}");
    }
}
