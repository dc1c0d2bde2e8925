use jumpcurv::bounds::{bennett, deviation_bound, BoundParams};
use jumpcurv::curvature::{birth_death_curvature, coupling_drift};
use jumpcurv::metric::{Metric, PathMetric, ProductMetric, TailRule, TrivialMetric};
use jumpcurv::process::{transition_matrix, BirthDeathRates, Generator, StationaryMeasure};
use jumpcurv::simulate::{empirical_mean, simulate_replica};
use jumpcurv::transport::{wasserstein, DiscreteMeasure};
use proptest::prelude::*;

fn weights_strategy() -> impl Strategy<Value = PathMetric> {
    prop::collection::vec(0.05f64..3.0, 1..12)
        .prop_map(|w| PathMetric::table(w, TailRule::Constant { value: 0.7 }).unwrap())
}

fn measure_strategy(max_state: usize) -> impl Strategy<Value = DiscreteMeasure> {
    prop::collection::vec(0.0f64..1.0, max_state + 1).prop_map(|w| {
        let mut w = w;
        w[0] += 1e-3;
        let s: f64 = w.iter().sum();
        DiscreteMeasure::from_row(&w.iter().map(|v| v / s).collect::<Vec<_>>()).unwrap()
    })
}

/// Random irreducible generator on `n` states (a ring plus random extra edges).
fn generator_strategy() -> impl Strategy<Value = Generator> {
    (2usize..6).prop_flat_map(|n| {
        prop::collection::vec(prop::collection::vec(0.0f64..1.5, n), n).prop_map(move |m| {
            let rows = (0..n)
                .map(|x| {
                    (0..n)
                        .filter(|&y| y != x)
                        .filter_map(|y| {
                            let r = m[x][y] + if y == (x + 1) % n { 0.3 } else { 0.0 };
                            (r > 0.2).then_some((y, r))
                        })
                        .collect()
                })
                .collect();
            Generator::new(rows).unwrap()
        })
    })
}

fn matmul_row(a: &[f64], p: &[Vec<f64>]) -> Vec<f64> {
    (0..p.len())
        .map(|j| a.iter().zip(p).map(|(ai, row)| ai * row[j]).sum())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn path_metric_triangle(m in weights_strategy(), x in 0usize..30, y in 0usize..30, z in 0usize..30) {
        let d = |a, b| m.path_distance(a, b);
        prop_assert!(d(x, z) <= d(x, y) + d(y, z) + 1e-12);
        prop_assert_eq!(d(x, y), d(y, x));
        prop_assert_eq!(d(x, y) == 0.0, x == y);
    }

    #[test]
    fn hamming_triangle(x in 0usize..81, y in 0usize..81, z in 0usize..81) {
        let h = ProductMetric::hamming(4, 3).unwrap();
        prop_assert!(h.distance(x, z) <= h.distance(x, y) + h.distance(y, z));
    }

    #[test]
    fn wasserstein_is_a_metric(a in measure_strategy(7), b in measure_strategy(7), c in measure_strategy(7)) {
        let m = PathMetric::inv_sqrt();
        for metric in [&m as &dyn Metric, &TrivialMetric] {
            let w = |p: &DiscreteMeasure, q: &DiscreteMeasure| wasserstein(p, q, metric).unwrap();
            prop_assert!(w(&a, &a).abs() < 1e-12);
            prop_assert!((w(&a, &b) - w(&b, &a)).abs() < 1e-9);
            prop_assert!(w(&a, &c) <= w(&a, &b) + w(&b, &c) + 1e-9);
        }
    }

    #[test]
    fn chapman_kolmogorov(g in generator_strategy(), s in 0.05f64..1.5, t in 0.05f64..1.5) {
        let ps = transition_matrix(&g, s, 1e-13).unwrap().rows;
        let pt = transition_matrix(&g, t, 1e-13).unwrap().rows;
        let pst = transition_matrix(&g, s + t, 1e-13).unwrap().rows;
        for x in 0..g.len() {
            let composed = matmul_row(&ps[x], &pt);
            for y in 0..g.len() {
                prop_assert!((composed[y] - pst[x][y]).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn semigroup_derivative_is_generator(g in generator_strategy(), f in prop::collection::vec(-2.0f64..2.0, 6)) {
        let f = &f[..g.len()];
        let lf = g.apply(f);
        let diff = |h: f64| {
            let p = transition_matrix(&g, h, 1e-15).unwrap().rows;
            (0..g.len())
                .map(|x| (p[x].iter().zip(f).map(|(a, b)| a * b).sum::<f64>() - f[x]) / h)
                .collect::<Vec<_>>()
        };
        let h = 1e-3;
        let (d1, d2) = (diff(2.0 * h), diff(h));
        // remainder of the extrapolated quotient: ≤ (2h)²/3 · ‖𝓛³f‖ ≤ (2h)²/3 · (2Λ)³‖f‖
        let lam = g.max_total_rate();
        let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tol = 4.0 * h * h / 3.0 * (2.0 * lam).powi(3) * fmax + 1e-9;
        for x in 0..g.len() {
            let richardson = 2.0 * d2[x] - d1[x];
            prop_assert!((richardson - lf[x]).abs() <= tol, "{} vs {}", richardson, lf[x]);
        }
    }

    #[test]
    fn stationary_law_is_invariant(g in generator_strategy(), t in 0.1f64..3.0) {
        let pi = g.stationary_distribution().unwrap();
        let p = transition_matrix(&g, t, 1e-13).unwrap().rows;
        let moved = matmul_row(&pi, &p);
        for (a, b) in pi.iter().zip(&moved) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn birth_death_stationary_detailed_balance(lambda in 0.1f64..3.0, nu in 0.1f64..3.0) {
        let r = BirthDeathRates::mm_infinity(lambda, nu).unwrap();
        let pi = StationaryMeasure::compute(&r, 1e-13).unwrap();
        for x in 0..pi.truncation {
            let lhs = pi.prob(x) * r.birth(x);
            let rhs = pi.prob(x + 1) * r.death(x + 1);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1e-300));
        }
    }

    #[test]
    fn coupling_inequality_capped(
        birth in prop::collection::vec(0.1f64..3.0, 12),
        death in prop::collection::vec(0.1f64..3.0, 12),
        m in weights_strategy(),
    ) {
        let mut d = vec![0.0];
        d.extend(death);
        let rates = BirthDeathRates::table(birth, d).unwrap().with_capacity(12).unwrap();
        let c = birth_death_curvature(&rates, &m, 12).unwrap();
        for x in 0..=12 {
            for y in (x + 1)..=12 {
                prop_assert!(coupling_drift(&rates, &m, x, y) <= -c.sigma * m.path_distance(x, y) + 1e-9);
            }
        }
    }

    #[test]
    fn bound_monotonicity(
        sigma in 0.05f64..3.0, b in 0.1f64..3.0, v2 in 0.1f64..3.0, lip in 0.1f64..3.0,
        t in 0.1f64..50.0, y in 0.01f64..5.0, dy in 0.0f64..2.0, dlip in 0.0f64..2.0,
    ) {
        let p = BoundParams::new(sigma, b, v2, lip, 1.0).unwrap();
        let q = BoundParams::new(sigma, b, v2, lip + dlip, 1.0).unwrap();
        let v = deviation_bound(&p, t, y).probability;
        prop_assert!(v <= 2.0);
        prop_assert!(deviation_bound(&p, t, y + dy).probability <= v);
        prop_assert!(deviation_bound(&q, t, y).probability >= v);
    }

    #[test]
    fn bennett_is_convex_and_nonnegative(u in 0.0f64..50.0, v in 0.0f64..50.0) {
        let g = |x| bennett(x).unwrap();
        prop_assert!(g(u) >= 0.0);
        prop_assert!(g((u + v) / 2.0) <= (g(u) + g(v)) / 2.0 + 1e-12);
    }

    #[test]
    fn simulation_is_reproducible(seed in any::<u64>(), index in 0u64..1000) {
        let r = BirthDeathRates::mm_infinity(1.0, 1.0).unwrap();
        let a = simulate_replica(&r, 2, 3.0, seed, index).unwrap();
        let b = simulate_replica(&r, 2, 3.0, seed, index).unwrap();
        prop_assert_eq!(&a, &b);
        for w in a.states.windows(2) {
            prop_assert_eq!((w[0] as i64 - w[1] as i64).abs(), 1);
        }
        let m = empirical_mean(&a, |x| x as f64);
        prop_assert!(m >= 0.0);
    }
}
