//! Exact 1-Wasserstein distances between finitely supported measures.
//!
//! The general solver is a transportation simplex (MODI potentials on a
//! spanning-tree basis). For path metrics on ℕ the closed form
//! `W = Σ_k u_k |F_μ(k) − F_ν(k)|` is exact and is used to cross-check it.

use serde::Serialize;
use thiserror::Error;

use crate::metric::{Metric, PathMetric};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("measure has empty support")]
    EmptySupport,
    #[error("support has {support} points but {weights} weights")]
    LengthMismatch { support: usize, weights: usize },
    #[error("weight {0} is negative or not finite")]
    BadWeight(f64),
    #[error("weights sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("support point {0} is repeated")]
    DuplicateSupport(usize),
    #[error("transport simplex did not converge in {0} pivots")]
    NoConvergence(usize),
    #[error("dual certificate rejected: gap {gap:.3e}, lipschitz constant {lipschitz:.12}")]
    CertificateRejected { gap: f64, lipschitz: f64 },
}

const MASS_TOL: f64 = 1e-12;

/// Probability measure with finite support in ℕ (or any indexed state space).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteMeasure {
    support: Vec<usize>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(support: Vec<usize>, weights: Vec<f64>) -> Result<Self, TransportError> {
        if support.is_empty() {
            return Err(TransportError::EmptySupport);
        }
        if support.len() != weights.len() {
            return Err(TransportError::LengthMismatch {
                support: support.len(),
                weights: weights.len(),
            });
        }
        if let Some(&w) = weights.iter().find(|w| !(**w >= 0.0 && w.is_finite())) {
            return Err(TransportError::BadWeight(w));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(TransportError::NotNormalized(total));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(TransportError::DuplicateSupport(w[0]));
        }
        Ok(Self { support, weights })
    }

    pub fn point(x: usize) -> Self {
        Self {
            support: vec![x],
            weights: vec![1.0],
        }
    }

    /// Measure from a dense, possibly slightly sub-stochastic row (e.g. a
    /// semigroup row with tiny leakage); zero entries are dropped and the
    /// rest renormalized.
    pub fn from_row(row: &[f64]) -> Result<Self, TransportError> {
        let total: f64 = row.iter().sum();
        if !(total > 0.0) {
            return Err(TransportError::EmptySupport);
        }
        let (support, weights) = row
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(x, &p)| (x, p / total))
            .unzip();
        Self::new(support, weights)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn mass_at(&self, x: usize) -> f64 {
        self.support
            .iter()
            .position(|&s| s == x)
            .map_or(0.0, |i| self.weights[i])
    }

    /// `∫ f dμ`.
    pub fn integrate<F: Fn(usize) -> f64>(&self, f: F) -> f64 {
        self.support
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Optimal coupling between two discrete measures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportPlan {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    /// `flow[i][j]` is the mass moved from `rows[i]` to `cols[j]`.
    pub flow: Vec<Vec<f64>>,
    pub cost: f64,
}

impl TransportPlan {
    /// Largest deviation of the plan's marginals from `(μ, ν)`.
    pub fn marginal_error(&self, mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> f64 {
        let row_err = self
            .flow
            .iter()
            .zip(mu.weights())
            .map(|(r, &w)| (r.iter().sum::<f64>() - w).abs())
            .fold(0.0, f64::max);
        let col_err = (0..self.cols.len())
            .map(|j| (self.flow.iter().map(|r| r[j]).sum::<f64>() - nu.weights()[j]).abs())
            .fold(0.0, f64::max);
        row_err.max(col_err)
    }
}

struct Solution {
    flow: Vec<Vec<f64>>,
    col_potential: Vec<f64>,
    cost: f64,
}

/// Transportation simplex. Ties in both entering and leaving choices go to
/// the lowest `(row, col)` index, which makes pivots reproducible and rules
/// out cycling under degeneracy.
fn solve_transport(cost: &[Vec<f64>], supply: &[f64], demand: &[f64]) -> Result<Solution, TransportError> {
    let (n, m) = (supply.len(), demand.len());
    let mut flow = vec![vec![0.0; m]; n];
    let mut basic = vec![vec![false; m]; n];
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(n + m - 1);

    // North-west corner start; always n + m − 1 basic cells forming a tree.
    let (mut a, mut b) = (supply.to_vec(), demand.to_vec());
    let (mut i, mut j) = (0, 0);
    loop {
        let q = a[i].min(b[j]).max(0.0);
        flow[i][j] = q;
        basic[i][j] = true;
        basis.push((i, j));
        a[i] -= q;
        b[j] -= q;
        if i == n - 1 && j == m - 1 {
            break;
        }
        if j == m - 1 || (i < n - 1 && a[i] <= b[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }

    let scale = cost
        .iter()
        .flatten()
        .fold(0.0f64, |acc, c| acc.max(c.abs()))
        .max(1.0);
    let eps = 1e-13 * scale;
    let max_pivots = 50 * (n + m) * (n + m) + 100;
    let mut u = vec![0.0; n];
    let mut v = vec![0.0; m];

    for _ in 0..max_pivots {
        compute_potentials(cost, &basis, n, m, &mut u, &mut v);

        let mut entering = None;
        let mut best = -eps;
        for (r, row) in cost.iter().enumerate() {
            for (c, &cij) in row.iter().enumerate() {
                if basic[r][c] {
                    continue;
                }
                let reduced = cij - u[r] - v[c];
                if reduced < best {
                    best = reduced;
                    entering = Some((r, c));
                }
            }
        }
        let Some((ei, ej)) = entering else {
            let total = (0..n)
                .flat_map(|r| (0..m).map(move |c| (r, c)))
                .map(|(r, c)| flow[r][c] * cost[r][c])
                .sum();
            return Ok(Solution {
                flow,
                col_potential: v,
                cost: total,
            });
        };

        let cycle = tree_path(&basis, n, m, ej, ei);
        // cycle[k] alternates −, +, −, … starting next to column ej.
        let mut theta = f64::INFINITY;
        let mut leaving = usize::MAX;
        for (k, &idx) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                let (r, c) = basis[idx];
                let f = flow[r][c];
                let better = f < theta
                    || (f == theta && leaving != usize::MAX && basis[idx] < basis[leaving]);
                if better {
                    theta = f;
                    leaving = idx;
                }
            }
        }
        let theta = theta.max(0.0);
        flow[ei][ej] = theta;
        for (k, &idx) in cycle.iter().enumerate() {
            let (r, c) = basis[idx];
            if k % 2 == 0 {
                flow[r][c] = (flow[r][c] - theta).max(0.0);
            } else {
                flow[r][c] += theta;
            }
        }
        let (lr, lc) = basis[leaving];
        flow[lr][lc] = 0.0;
        basic[lr][lc] = false;
        basic[ei][ej] = true;
        basis[leaving] = (ei, ej);
    }
    Err(TransportError::NoConvergence(max_pivots))
}

fn compute_potentials(cost: &[Vec<f64>], basis: &[(usize, usize)], n: usize, m: usize, u: &mut [f64], v: &mut [f64]) {
    let mut row_adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut col_adj: Vec<Vec<usize>> = vec![Vec::new(); m];
    for &(r, c) in basis {
        row_adj[r].push(c);
        col_adj[c].push(r);
    }
    let mut row_done = vec![false; n];
    let mut col_done = vec![false; m];
    u[0] = 0.0;
    row_done[0] = true;
    // node < n is a row, node >= n a column
    let mut stack = vec![0usize];
    while let Some(node) = stack.pop() {
        if node < n {
            for &c in &row_adj[node] {
                if !col_done[c] {
                    v[c] = cost[node][c] - u[node];
                    col_done[c] = true;
                    stack.push(n + c);
                }
            }
        } else {
            let c = node - n;
            for &r in &col_adj[c] {
                if !row_done[r] {
                    u[r] = cost[r][c] - v[c];
                    row_done[r] = true;
                    stack.push(r);
                }
            }
        }
    }
}

/// Basis indices of the tree path from column `col` to row `row`.
fn tree_path(basis: &[(usize, usize)], n: usize, m: usize, col: usize, row: usize) -> Vec<usize> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); n + m];
    for (idx, &(r, c)) in basis.iter().enumerate() {
        adj[r].push((n + c, idx));
        adj[n + c].push((r, idx));
    }
    let start = n + col;
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n + m];
    let mut seen = vec![false; n + m];
    seen[start] = true;
    let mut queue = std::collections::VecDeque::from([start]);
    while let Some(node) = queue.pop_front() {
        if node == row {
            break;
        }
        for &(next, idx) in &adj[node] {
            if !seen[next] {
                seen[next] = true;
                parent[next] = Some((node, idx));
                queue.push_back(next);
            }
        }
    }
    let mut path = Vec::new();
    let mut node = row;
    while let Some((prev, idx)) = parent[node] {
        path.push(idx);
        node = prev;
    }
    path.reverse();
    path
}

fn cost_matrix(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: &dyn Metric) -> Vec<Vec<f64>> {
    mu.support()
        .iter()
        .map(|&x| nu.support().iter().map(|&y| metric.distance(x, y)).collect())
        .collect()
}

/// Exact `W_d(μ, ν)` with an optimal plan.
pub fn wasserstein_primal(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: &dyn Metric,
) -> Result<(f64, TransportPlan), TransportError> {
    let cost = cost_matrix(mu, nu, metric);
    let sol = solve_transport(&cost, mu.weights(), nu.weights())?;
    let plan = TransportPlan {
        rows: mu.support().to_vec(),
        cols: nu.support().to_vec(),
        flow: sol.flow,
        cost: sol.cost,
    };
    Ok((sol.cost, plan))
}

/// Union of both supports in increasing order, with `F_μ − F_ν` evaluated at
/// each point.
fn cdf_gaps(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Vec<usize>, Vec<f64>) {
    let mut points: Vec<usize> = mu.support().iter().chain(nu.support()).copied().collect();
    points.sort_unstable();
    points.dedup();
    let mut diff = vec![0.0; points.len()];
    for (measure, sign) in [(mu, 1.0), (nu, -1.0)] {
        for (&x, &w) in measure.support().iter().zip(measure.weights()) {
            let k = points.binary_search(&x).expect("point in union");
            diff[k] += sign * w;
        }
    }
    let mut run = 0.0;
    for d in diff.iter_mut() {
        run += *d;
        *d = run;
    }
    (points, diff)
}

/// `Σ_k u_k |F_μ(k) − F_ν(k)|` for measures on ℕ under a path metric.
pub fn wasserstein_path_1d(mu: &DiscreteMeasure, nu: &DiscreteMeasure, metric: &PathMetric) -> f64 {
    let (points, gaps) = cdf_gaps(mu, nu);
    points
        .windows(2)
        .zip(&gaps)
        .map(|(w, g)| g.abs() * metric.path_distance(w[0], w[1]))
        .sum()
}

/// `W_d(μ, ν)` by the fastest exact route: the 1-D formula for path metrics,
/// the transport simplex otherwise.
pub fn wasserstein(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: &dyn Metric,
) -> Result<f64, TransportError> {
    match metric.as_path() {
        Some(path) => Ok(wasserstein_path_1d(mu, nu, path)),
        None => wasserstein_primal(mu, nu, metric).map(|(w, _)| w),
    }
}

/// A 1-Lipschitz potential certifying the Kantorovich–Rubinstein dual value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualCertificate {
    pub support: Vec<usize>,
    pub potential: Vec<f64>,
    /// `|∫f dμ − ∫f dν|`.
    pub dual_value: f64,
    /// Largest `|f(a) − f(b)| / d(a, b)` over the union support.
    pub lipschitz: f64,
    /// `W − dual_value`.
    pub gap: f64,
}

/// Builds and verifies a dual potential for a primal value `w`.
///
/// Path metrics use `f(x) = Σ_{k<x} u_k · sign(F_μ(k) − F_ν(k))`. Other metrics
/// use the c-transform `f(x) = min_j (d(x, y_j) − v_j)` of the simplex column
/// potentials, which is 1-Lipschitz as a minimum of 1-Lipschitz functions.
/// A rejected certificate means the solver or the metric is broken.
pub fn dual_certificate(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    metric: &dyn Metric,
    w: f64,
    tol: f64,
) -> Result<DualCertificate, TransportError> {
    let (support, potential) = match metric.as_path() {
        Some(path) => {
            let (points, gaps) = cdf_gaps(mu, nu);
            let mut f = Vec::with_capacity(points.len());
            let mut acc = 0.0;
            for (k, &x) in points.iter().enumerate() {
                if k > 0 {
                    let g = gaps[k - 1];
                    let sign = if g > 0.0 {
                        1.0
                    } else if g < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    acc += sign * path.path_distance(points[k - 1], x);
                }
                f.push(acc);
            }
            (points, f)
        }
        None => {
            let cost = cost_matrix(mu, nu, metric);
            let sol = solve_transport(&cost, mu.weights(), nu.weights())?;
            let mut points: Vec<usize> = mu.support().iter().chain(nu.support()).copied().collect();
            points.sort_unstable();
            points.dedup();
            let f = points
                .iter()
                .map(|&x| {
                    nu.support()
                        .iter()
                        .zip(&sol.col_potential)
                        .map(|(&y, &vj)| metric.distance(x, y) - vj)
                        .fold(f64::INFINITY, f64::min)
                })
                .collect();
            (points, f)
        }
    };
    let lookup = |x: usize| potential[support.binary_search(&x).expect("point in union")];
    let dual_value = (mu.integrate(lookup) - nu.integrate(lookup)).abs();
    let mut lipschitz = 0.0f64;
    for a in 0..support.len() {
        for b in (a + 1)..support.len() {
            let d = metric.distance(support[a], support[b]);
            if d > 0.0 {
                lipschitz = lipschitz.max((potential[a] - potential[b]).abs() / d);
            }
        }
    }
    let gap = w - dual_value;
    if lipschitz > 1.0 + tol || gap > tol {
        return Err(TransportError::CertificateRejected { gap, lipschitz });
    }
    Ok(DualCertificate {
        support,
        potential,
        dual_value,
        lipschitz,
        gap,
    })
}
