use jumpcurv::bounds::{
    contraction_weights, laplace_exponent, tensorized_laplace_bound, BoundParams,
};
use jumpcurv::curvature::{
    birth_death_curvature, coupling_drift, estimate_curvature_numeric, jump_bound,
    second_moment, check_assumption_a,
};
use jumpcurv::metric::{PathMetric, ProductMetric, TrivialMetric};
use jumpcurv::process::{hypercube, semigroup_rows, BirthDeathRates, Generator, StationaryMeasure};
use jumpcurv::simulate::{
    empirical_laplace, empirical_law, mm_infinity_exact_law, sample_averages, total_variation,
    MonteCarlo,
};
use jumpcurv::transport::{dual_certificate, wasserstein_path_1d, wasserstein_primal, DiscreteMeasure};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mc(replicas: u64, seed: u64) -> MonteCarlo {
    MonteCarlo {
        replicas,
        seed,
        workers: None,
    }
}

#[test]
fn hypercube_numeric_curvature() {
    for n in 1..=3 {
        let chain = hypercube(n).unwrap();
        let metric = ProductMetric::hamming(n, 2).unwrap();
        let c = estimate_curvature_numeric(&chain.generator, &metric, &[0.05, 0.2, 1.0], 1e-13).unwrap();
        assert!((c.sigma - 1.0 / n as f64).abs() < 1e-3, "N={n}: {}", c.sigma);
    }
}

#[test]
fn capped_mm_infinity_numeric_vs_formula() {
    let rates = BirthDeathRates::mm_infinity(1.0, 1.0)
        .unwrap()
        .with_capacity(40)
        .unwrap();
    let metric = PathMetric::inv_sqrt();
    let exact = birth_death_curvature(&rates, &metric, 40).unwrap();
    let g = rates.finite_generator().unwrap();
    let numeric = estimate_curvature_numeric(&g, &metric, &[1e-5, 1e-3, 1e-2], 1e-14).unwrap();
    assert!(numeric.sigma >= exact.sigma - 1e-9);
    assert!(numeric.sigma <= exact.sigma + 2e-3, "{} vs {}", numeric.sigma, exact.sigma);
    let x = exact.argmin.unwrap();
    assert_eq!(numeric.worst_pair, Some((x, x + 1)));
    assert!((numeric.extrapolated.unwrap() - exact.sigma).abs() < 1e-4);
}

#[test]
fn super_additivity_of_contraction() {
    let g = Generator::new(vec![
        vec![(1, 0.7), (2, 0.2)],
        vec![(0, 0.4), (3, 1.1)],
        vec![(1, 0.9), (3, 0.3)],
        vec![(0, 0.5), (2, 0.6)],
    ])
    .unwrap();
    let grid = [0.2, 0.3, 0.5, 0.7, 1.0];
    let c = estimate_curvature_numeric(&g, &TrivialMetric, &grid, 1e-13).unwrap();
    // trace holds σ̄(t)/t
    let sbar: Vec<f64> = c.trace.iter().zip(&c.t_grid).map(|(s, t)| s * t).collect();
    for (i, j, k) in [(0, 1, 2), (0, 2, 3), (1, 3, 4)] {
        assert!((c.t_grid[i] + c.t_grid[j] - c.t_grid[k]).abs() < 1e-12);
        assert!(sbar[k] >= sbar[i] + sbar[j] - 1e-9);
    }
}

#[test]
fn coupling_inequality_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let metric = PathMetric::inv_sqrt();
    for _ in 0..3 {
        let birth: Vec<f64> = (0..30).map(|_| rng.random_range(0.2..2.0)).collect();
        let mut death = vec![0.0];
        death.extend((1..31).map(|x| x as f64 * rng.random_range(0.5..1.5)));
        let rates = BirthDeathRates::table(birth, death).unwrap();
        let c = birth_death_curvature(&rates, &metric, 200).unwrap();
        for x in 0..120 {
            for y in (x + 1)..120 {
                let d = coupling_drift(&rates, &metric, x, y);
                assert!(d <= -c.sigma * metric.path_distance(x, y) + 1e-9);
            }
        }
    }
}

#[test]
fn assumption_a_implies_constants() {
    let metric = PathMetric::inv_sqrt();
    for (l, n) in [(1.0, 1.0), (0.5, 2.0), (3.0, 1.0)] {
        let rates = BirthDeathRates::mm_infinity(l, n).unwrap();
        let a = check_assumption_a(&rates, &metric, 400).unwrap();
        let b = jump_bound(&rates, &metric, 400).value;
        let v2 = second_moment(&rates, &metric, 400).unwrap().value;
        assert!(b <= a.implied_b() + 1e-12);
        assert!(v2 <= a.implied_v2() + 1e-12);
    }
}

#[test]
fn transport_primal_dual_on_path() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let metric = PathMetric::inv_sqrt();
    for _ in 0..40 {
        let draw = |rng: &mut ChaCha8Rng| {
            let support: Vec<usize> = (0..12).filter(|_| rng.random_bool(0.5)).collect();
            let support = if support.is_empty() { vec![3] } else { support };
            let w: Vec<f64> = support.iter().map(|_| rng.random_range(0.1..1.0)).collect();
            let s: f64 = w.iter().sum();
            DiscreteMeasure::new(support, w.iter().map(|v| v / s).collect()).unwrap()
        };
        let (mu, nu) = (draw(&mut rng), draw(&mut rng));
        let (w, plan) = wasserstein_primal(&mu, &nu, &metric).unwrap();
        assert!((w - wasserstein_path_1d(&mu, &nu, &metric)).abs() < 1e-9);
        assert!(plan.marginal_error(&mu, &nu) < 1e-12);
        let cert = dual_certificate(&mu, &nu, &TrivialMetric, wasserstein_primal(&mu, &nu, &TrivialMetric).unwrap().0, 1e-9)
            .unwrap();
        assert!(cert.gap.abs() < 1e-9);
    }
}

#[test]
fn tensorized_bound_converges_to_integral() {
    // hypercube constants with N = 2
    let p = BoundParams::new(0.5, 1.0, 0.5, 1.0, 1.0).unwrap();
    let (t, tau) = (1.0, 0.5);
    let value = |n: usize| {
        let times: Vec<f64> = (1..=n).map(|k| k as f64 * t / n as f64).collect();
        tensorized_laplace_bound(&times, tau, &p, p.lip / n as f64).unwrap()
    };
    let mut prev = value(1 << 14);
    for k in 15..=17 {
        let next = value(1 << k);
        assert!((next - prev).abs() < 1e-6, "n=2^{k}: {next} vs {prev}");
        prev = next;
    }
    // limit: ∫₀ᵗ V²/b² (e^{τ b lip w} − τ b lip w − 1) ds, w(s) = (1 − e^{−σ(t−s)})/(σt)
    let m = 20_000;
    let integrand = |s: f64| {
        let z = tau * p.b * p.lip * (1.0 - (-p.sigma * (t - s)).exp()) / (p.sigma * t);
        p.v2 / (p.b * p.b) * (z.exp() - z - 1.0)
    };
    let hstep = t / m as f64;
    let simpson: f64 = (0..=m)
        .map(|i| {
            let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * integrand(i as f64 * hstep)
        })
        .sum::<f64>()
        * hstep
        / 3.0;
    assert!((prev - simpson).abs() < 1e-6, "{prev} vs {simpson}");

    // each tensorized value sits below the bound obtained with sup s_k
    for n in [4usize, 64, 1024] {
        let times: Vec<f64> = (1..=n).map(|k| k as f64 * t / n as f64).collect();
        let s = contraction_weights(&times, p.sigma).unwrap();
        let smax = s.iter().copied().fold(0.0, f64::max);
        let upper = n as f64
            * laplace_exponent(tau, t / n as f64, smax * p.b * p.lip / n as f64, p.sigma, p.b, p.v2);
        assert!(value(n) <= upper + 1e-15);
    }
}

#[test]
fn mehler_law_vs_simulation() {
    let rates = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
    let law = mm_infinity_exact_law(3, 1.0, 1.0, 1.0, 60).unwrap();
    let emp = empirical_law(&rates, 3, 1.0, mc(20_000, 8)).unwrap();
    assert!(total_variation(&emp, &law.pmf) < 0.03);
    let rows = semigroup_rows(&rates.truncate(60), 1.0, &[3], 1e-12).unwrap();
    assert!(total_variation(&rows.rows[0], &law.pmf) < 1e-8);
}

#[test]
fn ergodic_mean_bias_shrinks() {
    let rates = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
    let pi = StationaryMeasure::compute(&rates, 1e-15).unwrap();
    let phi = |x: usize| (x as f64).sqrt();
    let pi_phi = pi.expect(phi);
    let bias = |t: f64| {
        let a = sample_averages(&rates, &phi, 0, t, mc(4000, 2)).unwrap();
        let mean = a.iter().sum::<f64>() / a.len() as f64;
        let var = a.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (a.len() - 1) as f64;
        ((mean - pi_phi).abs(), (var / a.len() as f64).sqrt())
    };
    let (b1, _) = bias(1.0);
    let (b10, se10) = bias(10.0);
    let (b100, se100) = bias(100.0);
    assert!(b10 < b1);
    assert!(b100 < b10 + 3.0 * (se10 + se100));
}

#[test]
fn two_state_mgf_matches_exact_and_bound() {
    let g = Generator::two_state(0.5, 0.5).unwrap();
    let t = 1.0;
    let taus = [0.25, 0.5, 1.0, 1.5, 2.0];
    let e = empirical_laplace(&g, &|x| x as f64, 0, t, &taus, 0.98, mc(40_000, 13)).unwrap();
    let p1 = (1.0 - (-t).exp()) / 2.0;
    for pt in &e.points {
        let exact = (1.0 - p1) * (-pt.tau * p1).exp() + p1 * (pt.tau * (1.0 - p1)).exp();
        assert!(pt.lower <= exact && exact <= pt.upper, "tau {}: {exact} not in [{}, {}]", pt.tau, pt.lower, pt.upper);
        let bound = laplace_exponent(pt.tau, t, 1.0, 1.0, 1.0, 0.5).exp();
        assert!(exact <= bound && pt.upper <= bound);
    }
}
