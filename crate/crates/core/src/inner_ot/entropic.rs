//! Log-domain Sinkhorn with epsilon scaling.

use super::{
    c_transform_matrix, c_transform_matrix_cols, check_pair, CostKind, PotentialPair, TransportPlan,
};
use crate::error::{argument, Error, Result};
use crate::measure::Measure;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EntropicOptions {
    /// Budget of Sinkhorn sweeps summed over all scaling stages.
    pub max_iterations: usize,
    /// L1 row-marginal violation at which the final stage stops.
    pub tolerance: f64,
    /// Violation accepted before halving epsilon at intermediate stages.
    pub stage_tolerance: f64,
}

impl Default for EntropicOptions {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            tolerance: 1e-10,
            stage_tolerance: 1e-3,
        }
    }
}

/// Entropy-regularised plan `gamma_ij = exp((f_i + g_j - c_ij) / eps)`.
pub fn solve_entropic(
    mu: &Measure,
    nu: &Measure,
    epsilon: f64,
) -> Result<(TransportPlan, PotentialPair)> {
    solve_entropic_with(mu, nu, epsilon, &EntropicOptions::default())
}

pub fn solve_entropic_with(
    mu: &Measure,
    nu: &Measure,
    epsilon: f64,
    opts: &EntropicOptions,
) -> Result<(TransportPlan, PotentialPair)> {
    check_pair(mu, nu)?;
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let n = mu.len();
    let cost = mu.manifold().squared_distances();
    let rows: Vec<usize> = (0..n).filter(|&i| mu.weight(i) > 0.0).collect();
    let cols: Vec<usize> = (0..n).filter(|&j| nu.weight(j) > 0.0).collect();
    let sub: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| cost[i * n + j]))
        .collect();
    let log_a: Vec<f64> = rows.iter().map(|&i| mu.weight(i).ln()).collect();
    let log_b: Vec<f64> = cols.iter().map(|&j| nu.weight(j).ln()).collect();
    let (f, g) = sinkhorn(&sub, &log_a, &log_b, epsilon, opts)?;

    let mut gamma = vec![0.0; n * n];
    for (r, &i) in rows.iter().enumerate() {
        for (c, &j) in cols.iter().enumerate() {
            gamma[i * n + j] = ((f[r] + g[c] - sub[r * cols.len() + c]) / epsilon).exp();
        }
    }
    // Nodes without mass get exact c-transforms of the potential on the other side.
    let mut psi = vec![f64::NAN; n];
    for (c, &j) in cols.iter().enumerate() {
        psi[j] = g[c];
    }
    let mut phi = vec![f64::NAN; n];
    for (r, &i) in rows.iter().enumerate() {
        phi[i] = f[r];
    }
    let cost_from = |src: &[usize], vals: &[f64], dst: usize, by_row: bool| {
        src.iter()
            .zip(vals)
            .map(|(&k, v)| {
                let c = if by_row {
                    cost[dst * n + k]
                } else {
                    cost[k * n + dst]
                };
                c - v
            })
            .fold(f64::INFINITY, f64::min)
    };
    for i in 0..n {
        if phi[i].is_nan() {
            phi[i] = cost_from(&cols, &g, i, true);
        }
    }
    for j in 0..n {
        if psi[j].is_nan() {
            psi[j] = cost_from(&rows, &f, j, false);
        }
    }
    let plan_cost = gamma.iter().zip(cost).map(|(g, c)| g * c).sum();
    Ok((
        TransportPlan {
            rows: n,
            cols: n,
            gamma,
            cost: plan_cost,
        },
        PotentialPair {
            phi,
            psi,
            cost_kind: CostKind::SquaredDistance,
        },
    ))
}

fn log_sum_exp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.map(|v| (v - max).exp()).sum::<f64>().ln()
}

/// Returns `(f, g)` on the supports; `cost` is `rows x cols` row-major.
fn sinkhorn(
    cost: &[f64],
    log_a: &[f64],
    log_b: &[f64],
    epsilon: f64,
    opts: &EntropicOptions,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (n, m) = (log_a.len(), log_b.len());
    let cmax = cost.iter().fold(0.0f64, |acc, c| acc.max(*c));
    // Start from the unregularised c-concave pair of zero, which is a good guess at large epsilon.
    let mut g = vec![0.0; m];
    let mut f = c_transform_matrix(&g, cost, n);
    g = c_transform_matrix_cols(&f, cost, m);
    let mut eps = cmax.max(epsilon);
    let mut iterations = 0;
    loop {
        let last = eps <= epsilon;
        let tol = if last {
            opts.tolerance
        } else {
            opts.stage_tolerance
        };
        loop {
            for i in 0..n {
                let row = &cost[i * m..(i + 1) * m];
                let lse = log_sum_exp(row.iter().zip(&g).map(|(c, gj)| (gj - c) / eps));
                f[i] = eps * (log_a[i] - lse);
            }
            for j in 0..m {
                let lse = log_sum_exp((0..n).map(|i| (f[i] - cost[i * m + j]) / eps));
                g[j] = eps * (log_b[j] - lse);
            }
            iterations += 1;
            let residual: f64 = (0..n)
                .map(|i| {
                    let row = &cost[i * m..(i + 1) * m];
                    let mass: f64 = row
                        .iter()
                        .zip(&g)
                        .map(|(c, gj)| ((f[i] + gj - c) / eps).exp())
                        .sum();
                    (mass - log_a[i].exp()).abs()
                })
                .sum();
            if residual <= tol {
                break;
            }
            if iterations >= opts.max_iterations {
                return Err(Error::Convergence {
                    solver: "sinkhorn",
                    iterations,
                    residual,
                });
            }
        }
        if last {
            return Ok((f, g));
        }
        eps = (eps * 0.5).max(epsilon);
    }
}
