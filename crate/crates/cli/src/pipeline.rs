//! Subcommand pipelines. Each returns a serializable output; exit-code
//! policy lives in `lib.rs`.

use jumpcurv::bounds::{mean_distance, BoundCurve, BoundParams};
use jumpcurv::curvature::{
    birth_death_curvature, check_assumption_a, estimate_curvature_numeric, jump_bound,
    jump_bound_generator, second_moment, second_moment_generator, tensorize, ChainConstants,
    CurvatureCertificate, CurvatureError, Method, TailStatus,
};
use jumpcurv::metric::{lipschitz_seminorm, Metric, PathMetric, ProductMetric, TailRule, TrivialMetric, Weights};
use jumpcurv::process::{
    build_product_chain, hypercube, BirthDeathRates, Generator, ProcessError, RateModel,
    StationaryMeasure,
};
use jumpcurv::simulate::{empirical_laplace, estimate_tail, simulate_replica, LaplaceEstimate, MonteCarlo, PathRecord, TailEstimate};
use jumpcurv::transport::{dual_certificate, wasserstein_path_1d, wasserstein_primal, DiscreteMeasure, DualCertificate, TransportPlan};
use serde::Serialize;

use crate::config::{BoundChoice, ExperimentConfig, MetricSpec, ModelSpec, ObservableSpec};
use crate::CliError;

const DEFAULT_T_GRID: [f64; 4] = [0.01, 0.1, 0.5, 1.0];

enum Chain {
    BirthDeath {
        rates: BirthDeathRates,
        metric: PathMetric,
    },
    Finite {
        generator: Generator,
        metric: Box<dyn Metric>,
        stationary: Vec<f64>,
        /// Dimension when the chain is the symmetric hypercube.
        hypercube: Option<usize>,
    },
}

fn path_metric(spec: &MetricSpec) -> Result<Option<PathMetric>, CliError> {
    Ok(match spec {
        MetricSpec::Classical => Some(PathMetric::classical()),
        MetricSpec::InvSqrt => Some(PathMetric::inv_sqrt()),
        MetricSpec::Table { weights, tail } => Some(PathMetric::table(weights.clone(), tail.clone())?),
        MetricSpec::Trivial | MetricSpec::Hamming => None,
    })
}

fn birth_death_rates(model: &ModelSpec) -> Result<Option<BirthDeathRates>, CliError> {
    let (rates, capacity) = match model {
        ModelSpec::MmInfinity { lambda, nu, capacity } => (BirthDeathRates::mm_infinity(*lambda, *nu)?, capacity),
        ModelSpec::Constant { lambda, nu, capacity } => (BirthDeathRates::constant(*lambda, *nu)?, capacity),
        ModelSpec::Affine {
            birth_intercept,
            birth_slope,
            death_intercept,
            death_slope,
            capacity,
        } => (
            BirthDeathRates::new(RateModel::Affine {
                birth_intercept: *birth_intercept,
                birth_slope: *birth_slope,
                death_intercept: *death_intercept,
                death_slope: *death_slope,
            })?,
            capacity,
        ),
        ModelSpec::BirthDeath { birth, death, capacity } => {
            (BirthDeathRates::table(birth.clone(), death.clone())?, capacity)
        }
        _ => return Ok(None),
    };
    Ok(Some(match capacity {
        Some(c) => rates.with_capacity(*c)?,
        None => rates,
    }))
}

fn build_chain(cfg: &ExperimentConfig) -> Result<Chain, CliError> {
    if let Some(rates) = birth_death_rates(&cfg.model)? {
        let metric = path_metric(&cfg.metric)?.ok_or_else(|| {
            CliError::Usage("birth-death models need a path metric (classical, inv_sqrt or table)".into())
        })?;
        return Ok(Chain::BirthDeath { rates, metric });
    }
    let (generator, stationary, product, cube) = match &cfg.model {
        ModelSpec::Hypercube { dim } => {
            if *dim == 0 || *dim > 16 {
                return Err(CliError::Usage(format!("hypercube dim {dim} not in 1..=16")));
            }
            let chain = hypercube(*dim)?;
            let pi = chain.stationary_distribution()?;
            (chain.generator.clone(), pi, Some((chain.dim, chain.radix)), Some(*dim))
        }
        ModelSpec::Product { components } => {
            let gens = components
                .iter()
                .map(|rows| Generator::new(rows.clone()))
                .collect::<Result<Vec<_>, _>>()?;
            let chain = build_product_chain(&gens)?;
            let pi = chain.stationary_distribution()?;
            (chain.generator.clone(), pi, Some((chain.dim, chain.radix)), None)
        }
        ModelSpec::Explicit { rows } => {
            let g = Generator::new(rows.clone())?;
            let pi = g.stationary_distribution()?;
            (g, pi, None, None)
        }
        _ => unreachable!("birth-death models handled above"),
    };
    let metric: Box<dyn Metric> = match (&cfg.metric, product) {
        (MetricSpec::Hamming, Some((dim, radix))) => Box::new(ProductMetric::hamming(dim, radix)?),
        (MetricSpec::Hamming, None) => {
            return Err(CliError::Usage("hamming metric needs a product or hypercube model".into()))
        }
        (MetricSpec::Trivial, _) => Box::new(TrivialMetric),
        (spec, _) => Box::new(path_metric(spec)?.expect("path metric")),
    };
    Ok(Chain::Finite {
        generator,
        metric,
        stationary,
        hypercube: cube,
    })
}

/// Curvature of one coordinate of the hypercube, computed from the
/// birth–death formula on `{0, 1}`.
fn two_state_constants() -> Result<ChainConstants, CliError> {
    let rates = BirthDeathRates::table(vec![0.5], vec![0.0, 0.5])?.with_capacity(1)?;
    let metric = PathMetric::classical();
    let cert = birth_death_curvature(&rates, &metric, 10)?;
    Ok(ChainConstants {
        sigma: cert.sigma,
        b: jump_bound(&rates, &metric, 10).value,
        v2: second_moment(&rates, &metric, 10)?.value,
    })
}

fn curvature_of(cfg: &ExperimentConfig, chain: &Chain) -> Result<CurvatureCertificate, CliError> {
    match chain {
        Chain::BirthDeath { rates, metric } => Ok(birth_death_curvature(rates, metric, cfg.tolerances.truncation)?),
        Chain::Finite {
            hypercube: Some(dim),
            generator,
            metric,
            ..
        } => {
            let t = tensorize(&vec![two_state_constants()?; *dim])?;
            Ok(CurvatureCertificate {
                sigma: t.sigma,
                method: Method::Tensorized,
                metric: metric.id(),
                truncation: generator.len() - 1,
                argmin: None,
                trace: Vec::new(),
                t_grid: Vec::new(),
                worst_pair: None,
                tail: TailStatus::Attained,
                tail_limit: None,
                extrapolated: None,
            })
        }
        Chain::Finite { generator, metric, .. } => {
            let grid = cfg.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec());
            Ok(estimate_curvature_numeric(generator, metric.as_ref(), &grid, cfg.tolerances.uniformization)?)
        }
    }
}

/// Constants assembled for the bound and the Monte Carlo check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Constants {
    pub sigma: f64,
    pub b: f64,
    pub v2: f64,
    pub k: Option<f64>,
    pub c_a: Option<f64>,
    pub lip: f64,
    pub lip_attained: bool,
    pub mean_dist: f64,
    pub mean_dist_tol: f64,
    pub pi_phi: f64,
    pub start: usize,
}

/// Limit of `|φ(x+1) − φ(x)| / u_x` as `x → ∞` for built-in observables.
fn observable_tail_limit(obs: &ObservableSpec, metric: &PathMetric) -> Option<f64> {
    let grows = |growth_exponent: f64| -> Option<f64> {
        // φ(x+1) − φ(x) ~ c·x^{g−1}; u_x ~ s·x^{−e}
        match metric.weights() {
            Weights::Classical => Some(if growth_exponent < 1.0 { 0.0 } else { 1.0 }),
            Weights::InvSqrt => Some(if growth_exponent == 1.0 {
                f64::INFINITY
            } else {
                0.5
            }),
            Weights::Table { tail, .. } => match *tail {
                TailRule::Constant { value } => Some(if growth_exponent < 1.0 { 0.0 } else { 1.0 / value }),
                TailRule::PowerLaw { scale, exponent } => {
                    let p = growth_exponent - 1.0 + exponent;
                    Some(if p < 0.0 {
                        0.0
                    } else if p > 0.0 {
                        f64::INFINITY
                    } else {
                        growth_exponent / scale
                    })
                }
            },
        }
    };
    match obs {
        ObservableSpec::Identity => grows(1.0),
        ObservableSpec::Sqrt => grows(0.5),
        ObservableSpec::Indicator { .. } | ObservableSpec::Table { .. } => Some(0.0),
    }
}

fn finite_lipschitz(phi: impl Fn(usize) -> f64, metric: &dyn Metric, n: usize) -> f64 {
    let mut lip = 0.0f64;
    for x in 0..n {
        for y in (x + 1)..n {
            let d = metric.distance(x, y);
            if d > 0.0 {
                lip = lip.max((phi(x) - phi(y)).abs() / d);
            }
        }
    }
    lip
}

fn inapplicable_curvature(cert: &CurvatureCertificate) -> Option<String> {
    if !(cert.sigma > 0.0) {
        Some(format!(
            "curvature {} is not positive ({:?}, argmin {:?}); the deviation bounds do not apply",
            cert.sigma, cert.method, cert.argmin
        ))
    } else {
        None
    }
}

fn map_inapplicable(e: CurvatureError) -> CliError {
    match e {
        CurvatureError::InfiniteSecondMoment { .. } | CurvatureError::AssumptionAFailed { .. } => {
            CliError::Inapplicable(e.to_string())
        }
        other => other.into(),
    }
}

fn constants_of(
    cfg: &ExperimentConfig,
    chain: &Chain,
    cert: &CurvatureCertificate,
) -> Result<Constants, CliError> {
    if let Some(msg) = inapplicable_curvature(cert) {
        return Err(CliError::Inapplicable(msg));
    }
    let obs = cfg.observable()?;
    let x0 = cfg.start;
    match chain {
        Chain::BirthDeath { rates, metric } => {
            let trunc = cfg.tolerances.truncation;
            let b = jump_bound(rates, metric, trunc).value;
            let v2 = second_moment(rates, metric, trunc).map_err(map_inapplicable)?.value;
            let a = check_assumption_a(rates, metric, trunc);
            let (k, c_a) = match (&a, cfg.bound) {
                (Ok(a), _) => (Some(a.k), Some(a.c_a)),
                (Err(e), BoundChoice::AssumptionA) => return Err(map_inapplicable(e.clone())),
                (Err(_), BoundChoice::General) => (None, None),
            };
            let scan = match rates.capacity() {
                Some(c) => c.saturating_sub(1).max(1),
                None => trunc,
            };
            let tail = if rates.capacity().is_some() {
                None
            } else {
                observable_tail_limit(obs, metric)
            };
            let lip = lipschitz_seminorm(|x| obs.eval(x), metric, scan, tail)?;
            if !lip.value.is_finite() {
                return Err(CliError::Inapplicable(format!(
                    "observable is not Lipschitz for {} (tail ratio {:?})",
                    metric.id(),
                    tail
                )));
            }
            let pi = StationaryMeasure::compute(rates, cfg.tolerances.stationary).map_err(|e| match e {
                ProcessError::NonErgodic { .. } => CliError::Inapplicable(e.to_string()),
                other => other.into(),
            })?;
            let (mean_dist, mean_dist_tol) = mean_distance(&pi, metric, x0);
            Ok(Constants {
                sigma: cert.sigma,
                b,
                v2,
                k,
                c_a,
                lip: lip.value,
                lip_attained: lip.attained || tail.is_some(),
                mean_dist,
                mean_dist_tol,
                pi_phi: pi.expect(|x| obs.eval(x)),
                start: x0,
            })
        }
        Chain::Finite {
            generator,
            metric,
            stationary,
            hypercube,
        } => {
            if cfg.bound == BoundChoice::AssumptionA {
                return Err(CliError::Usage("assumption_a bound needs a birth-death model".into()));
            }
            let n = generator.len();
            if x0 >= n {
                return Err(CliError::Usage(format!("start {x0} outside {n} states")));
            }
            let (b, v2) = match hypercube {
                Some(dim) => {
                    let t = tensorize(&vec![two_state_constants()?; *dim])?;
                    (t.b, t.v2)
                }
                None => (
                    jump_bound_generator(generator, metric.as_ref()),
                    second_moment_generator(generator, metric.as_ref()),
                ),
            };
            let lip = finite_lipschitz(|x| obs.eval(x), metric.as_ref(), n);
            Ok(Constants {
                sigma: cert.sigma,
                b,
                v2,
                k: None,
                c_a: None,
                lip,
                lip_attained: true,
                mean_dist: (0..n).map(|z| stationary[z] * metric.distance(x0, z)).sum(),
                mean_dist_tol: 0.0,
                pi_phi: (0..n).map(|z| stationary[z] * obs.eval(z)).sum(),
                start: x0,
            })
        }
    }
}

fn bound_curve(cfg: &ExperimentConfig, c: &Constants) -> Result<BoundCurve, CliError> {
    let t = cfg.horizon()?;
    let y = cfg.y_grid()?;
    Ok(match (cfg.bound, c.k, c.c_a) {
        (BoundChoice::AssumptionA, Some(k), Some(c_a)) => {
            let p = BoundParams::from_assumption_a(k, c_a, c.sigma, c.lip, c.mean_dist)?
                .with_mean_dist_tol(c.mean_dist_tol);
            BoundCurve::assumption_a(k, c_a, p, t, y)?
        }
        (BoundChoice::AssumptionA, _, _) => {
            return Err(CliError::Inapplicable("Assumption A constants unavailable".into()))
        }
        (BoundChoice::General, _, _) => {
            let p = BoundParams::new(c.sigma, c.b, c.v2, c.lip, c.mean_dist)?.with_mean_dist_tol(c.mean_dist_tol);
            BoundCurve::general(p, t, y)?
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvatureOutput {
    pub config_hash: String,
    pub certificate: CurvatureCertificate,
    /// `(b, V²)` when finite.
    pub b: Option<f64>,
    pub v2: Option<f64>,
    /// Set when the bounds cannot be applied to this model.
    pub diagnostic: Option<String>,
}

pub fn run_curvature(cfg: &ExperimentConfig) -> Result<CurvatureOutput, CliError> {
    let chain = build_chain(cfg)?;
    let certificate = curvature_of(cfg, &chain)?;
    let mut diagnostic = inapplicable_curvature(&certificate);
    let (b, v2) = match &chain {
        Chain::BirthDeath { rates, metric } => {
            let trunc = cfg.tolerances.truncation;
            match second_moment(rates, metric, trunc) {
                Ok(v) => (Some(jump_bound(rates, metric, trunc).value), Some(v.value)),
                Err(e) => {
                    diagnostic.get_or_insert_with(|| e.to_string());
                    (Some(jump_bound(rates, metric, trunc).value), None)
                }
            }
        }
        Chain::Finite { generator, metric, .. } => (
            Some(jump_bound_generator(generator, metric.as_ref())),
            Some(second_moment_generator(generator, metric.as_ref())),
        ),
    };
    Ok(CurvatureOutput {
        config_hash: cfg.hash(),
        certificate,
        b,
        v2,
        diagnostic,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundOutput {
    pub config_hash: String,
    pub constants: Constants,
    pub curve: BoundCurve,
}

pub fn run_bound(cfg: &ExperimentConfig) -> Result<BoundOutput, CliError> {
    let chain = build_chain(cfg)?;
    let cert = curvature_of(cfg, &chain)?;
    let constants = constants_of(cfg, &chain, &cert)?;
    let curve = bound_curve(cfg, &constants)?;
    Ok(BoundOutput {
        config_hash: cfg.hash(),
        constants,
        curve,
    })
}

fn monte_carlo(cfg: &ExperimentConfig) -> MonteCarlo {
    MonteCarlo {
        replicas: cfg.replicas,
        seed: cfg.seed,
        workers: cfg.workers,
    }
}

fn stationary_mean(cfg: &ExperimentConfig, chain: &Chain) -> Result<f64, CliError> {
    let obs = cfg.observable()?;
    Ok(match chain {
        Chain::BirthDeath { rates, .. } => {
            StationaryMeasure::compute(rates, cfg.tolerances.stationary)?.expect(|x| obs.eval(x))
        }
        Chain::Finite { stationary, .. } => stationary.iter().enumerate().map(|(x, p)| p * obs.eval(x)).sum(),
    })
}

fn tail_of(
    cfg: &ExperimentConfig,
    chain: &Chain,
    pi_phi: f64,
    bias: f64,
) -> Result<TailEstimate, CliError> {
    let obs = cfg.observable()?;
    let phi = |x: usize| obs.eval(x);
    let t = cfg.horizon()?;
    let y = cfg.y_grid()?;
    let mc = monte_carlo(cfg);
    Ok(match chain {
        Chain::BirthDeath { rates, .. } => estimate_tail(rates, &phi, pi_phi, bias, cfg.start, t, y, cfg.alpha, mc)?,
        Chain::Finite { generator, .. } => {
            estimate_tail(generator, &phi, pi_phi, bias, cfg.start, t, y, cfg.alpha, mc)?
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulateOutput {
    pub config_hash: String,
    pub pi_phi: f64,
    /// Deviations are counted against `y` alone (no bias correction).
    pub tail: TailEstimate,
    pub laplace: Option<LaplaceEstimate>,
    /// First replica, for optional CSV dumps.
    #[serde(skip)]
    pub first_path: PathRecord,
}

pub fn run_simulate(cfg: &ExperimentConfig) -> Result<SimulateOutput, CliError> {
    let chain = build_chain(cfg)?;
    let pi_phi = stationary_mean(cfg, &chain)?;
    let tail = tail_of(cfg, &chain, pi_phi, 0.0)?;
    let obs = cfg.observable()?;
    let f = |x: usize| obs.eval(x);
    let t = cfg.horizon()?;
    let mc = monte_carlo(cfg);
    let laplace = if cfg.tau_grid.is_empty() {
        None
    } else {
        Some(match &chain {
            Chain::BirthDeath { rates, .. } => empirical_laplace(rates, &f, cfg.start, t, &cfg.tau_grid, cfg.laplace_level, mc)?,
            Chain::Finite { generator, .. } => {
                empirical_laplace(generator, &f, cfg.start, t, &cfg.tau_grid, cfg.laplace_level, mc)?
            }
        })
    };
    let first_path = match &chain {
        Chain::BirthDeath { rates, .. } => simulate_replica(rates, cfg.start, t, cfg.seed, 0)?,
        Chain::Finite { generator, .. } => simulate_replica(generator, cfg.start, t, cfg.seed, 0)?,
    };
    Ok(SimulateOutput {
        config_hash: cfg.hash(),
        pi_phi,
        tail,
        laplace,
        first_path,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub y: f64,
    pub bound: f64,
    pub upper: f64,
    pub estimate: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub config_hash: String,
    pub curvature: CurvatureCertificate,
    pub constants: Constants,
    pub bound: BoundCurve,
    pub tail: TailEstimate,
    pub verdicts: Vec<Verdict>,
    /// `"confirmed"` when every upper confidence bound is at most the bound.
    pub verdict: String,
}

impl Report {
    pub fn refuted_at(&self) -> Vec<f64> {
        self.verdicts.iter().filter(|v| !v.pass).map(|v| v.y).collect()
    }
}

/// A zero bound (constant observable) says the event is impossible, which no
/// confidence bound can certify; it passes when no replica hit it.
fn passes(bound: f64, upper: f64, count: u64) -> bool {
    if bound == 0.0 {
        count == 0
    } else {
        upper <= bound
    }
}

pub fn run_verify(cfg: &ExperimentConfig) -> Result<Report, CliError> {
    let chain = build_chain(cfg)?;
    let curvature = curvature_of(cfg, &chain)?;
    let constants = constants_of(cfg, &chain, &curvature)?;
    let bound = bound_curve(cfg, &constants)?;
    let tail = tail_of(cfg, &chain, constants.pi_phi, bound.bias + bound.bias_tol)?;
    let verdicts: Vec<Verdict> = (0..bound.y.len())
        .map(|i| Verdict {
            y: bound.y[i],
            bound: bound.bound[i],
            upper: tail.upper[i],
            estimate: tail.estimate[i],
            pass: passes(bound.bound[i], tail.upper[i], tail.counts[i]),
        })
        .collect();
    let verdict = if verdicts.iter().all(|v| v.pass) {
        "confirmed"
    } else {
        "refuted"
    };
    Ok(Report {
        config_hash: cfg.hash(),
        curvature,
        constants,
        bound,
        tail,
        verdicts,
        verdict: verdict.into(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportOutput {
    pub config_hash: String,
    pub distance: f64,
    /// Closed-form value for path metrics.
    pub path_formula: Option<f64>,
    pub plan: TransportPlan,
    pub certificate: DualCertificate,
}

pub fn run_transport(cfg: &ExperimentConfig) -> Result<TransportOutput, CliError> {
    let spec = cfg
        .transport
        .as_ref()
        .ok_or_else(|| CliError::Usage("config needs a transport section".into()))?;
    let mu = DiscreteMeasure::new(spec.mu.support.clone(), spec.mu.weights.clone())?;
    let nu = DiscreteMeasure::new(spec.nu.support.clone(), spec.nu.weights.clone())?;
    let path = path_metric(&cfg.metric)?;
    let metric: Box<dyn Metric> = match (&cfg.metric, &path) {
        (_, Some(p)) => Box::new(p.clone()),
        (MetricSpec::Trivial, None) => Box::new(TrivialMetric),
        _ => return Err(CliError::Usage("transport needs a path or trivial metric".into())),
    };
    let (distance, plan) = wasserstein_primal(&mu, &nu, metric.as_ref())?;
    let certificate = dual_certificate(&mu, &nu, metric.as_ref(), distance, cfg.tolerances.transport)?;
    Ok(TransportOutput {
        config_hash: cfg.hash(),
        distance,
        path_formula: path.as_ref().map(|p| wasserstein_path_1d(&mu, &nu, p)),
        plan,
        certificate,
    })
}
