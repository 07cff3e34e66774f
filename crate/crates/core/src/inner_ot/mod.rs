//! Transport between two measures on the same manifold with cost `d^2`.
//!
//! Exact plans come from the transportation simplex, entropic plans from
//! log-domain Sinkhorn. Potentials are always returned in c-concave form, so the
//! dual checks and the McCann map read consistent data.

mod entropic;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use entropic::{solve_entropic, solve_entropic_with, EntropicOptions};

use crate::error::{argument, domain, Result};
use crate::manifold::{vec3, DiscreteManifold, Point, Vec3, VectorField};
use crate::measure::{Measure, PointMap};
use crate::transport::solve_transport;

/// Mass below which a plan entry is treated as off-support.
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Upper end of the multiplicative cost jitter used for tie-breaking.
pub const PERTURBATION_SCALE: f64 = 1e-10;

/// A coupling between a source and a target measure, stored row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportPlan {
    pub rows: usize,
    pub cols: usize,
    pub gamma: Vec<f64>,
    /// `sum_ij gamma_ij d(i, j)^2`.
    pub cost: f64,
}

impl TransportPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.gamma[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|i| self.row(i).iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (o, g) in out.iter_mut().zip(self.row(i)) {
                *o += g;
            }
        }
        out
    }

    /// Entries above [`SUPPORT_THRESHOLD`] as `(row, col, mass)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.gamma
            .iter()
            .enumerate()
            .filter(|(_, g)| **g > SUPPORT_THRESHOLD)
            .map(|(k, g)| (k / self.cols, k % self.cols, *g))
    }

    /// Mass-weighted mean entropy of the normalised rows; 0 for a deterministic plan.
    pub fn mean_row_entropy(&self) -> f64 {
        (0..self.rows)
            .map(|i| {
                let row = self.row(i);
                row.iter()
                    .filter(|g| **g > 0.0)
                    .map(|g| {
                        let p = g / row.iter().sum::<f64>();
                        -g * p.ln()
                    })
                    .sum::<f64>()
            })
            .sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CostKind {
    SquaredDistance,
}

/// Kantorovich potentials `(phi, psi)` with `phi_i + psi_j <= d(i, j)^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialPair {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub cost_kind: CostKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    /// `phi = psi^c`, minimising over target nodes.
    TargetToSource,
    /// `psi = phi^c`, minimising over source nodes.
    SourceToTarget,
}

/// `f^c(x) = min_y d(x, y)^2 - f(y)`, by exhaustive minimisation over nodes.
///
/// Source and target share the manifold and `d^2` is symmetric, so both directions
/// evaluate the same formula; the direction only documents intent.
pub fn c_transform(f: &[f64], _direction: Direction, m: &DiscreteManifold) -> Result<Vec<f64>> {
    if f.len() != m.len() {
        return Err(argument(format!(
            "function has {} values, manifold has {} nodes",
            f.len(),
            m.len()
        )));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(argument("c-transform of a non-finite function"));
    }
    Ok(c_transform_matrix(f, m.squared_distances(), m.len()))
}

/// `out_x = min_y cost[x][y] - f[y]` for a row-major cost with `f.len()` columns.
pub(crate) fn c_transform_matrix(f: &[f64], cost: &[f64], rows: usize) -> Vec<f64> {
    let cols = f.len();
    (0..rows)
        .map(|x| {
            cost[x * cols..(x + 1) * cols]
                .iter()
                .zip(f)
                .map(|(c, fy)| c - fy)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// `out_y = min_x cost[x][y] - f[x]`.
pub(crate) fn c_transform_matrix_cols(f: &[f64], cost: &[f64], cols: usize) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; cols];
    for (x, fx) in f.iter().enumerate() {
        for (o, c) in out.iter_mut().zip(&cost[x * cols..(x + 1) * cols]) {
            *o = o.min(c - fx);
        }
    }
    out
}

/// Options for the exact solver.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ExactOptions {
    /// Seed of the `d^2 (1 + eta)` jitter, `eta ~ U[0, 1e-10]`; `None` solves the raw cost.
    pub perturbation_seed: Option<u64>,
}

/// Multiplies every cost by an independent `1 + eta`, `eta ~ U[0, 1e-10]`.
pub fn perturb_costs(cost: &[f64], seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cost.iter()
        .map(|c| c * (1.0 + rng.random::<f64>() * PERTURBATION_SCALE))
        .collect()
}

fn check_pair(mu: &Measure, nu: &Measure) -> Result<()> {
    if !mu.same_manifold(nu) {
        return Err(argument(
            "source and target measures live on different manifolds",
        ));
    }
    Ok(())
}

/// Optimal vertex plan and c-concave optimal potentials for `d^2`.
pub fn solve_exact(mu: &Measure, nu: &Measure) -> Result<(TransportPlan, PotentialPair)> {
    solve_exact_with(mu, nu, &ExactOptions::default())
}

pub fn solve_exact_with(
    mu: &Measure,
    nu: &Measure,
    opts: &ExactOptions,
) -> Result<(TransportPlan, PotentialPair)> {
    check_pair(mu, nu)?;
    let m = mu.manifold();
    let cost = m.squared_distances();
    let (plan, phi, psi) = solve_dense(mu.weights(), nu.weights(), cost, opts.perturbation_seed)?;
    Ok((
        plan,
        PotentialPair {
            phi,
            psi,
            cost_kind: CostKind::SquaredDistance,
        },
    ))
}

/// Exact solve of a dense problem. The reported cost and the returned c-concave
/// potentials refer to the unperturbed `cost`.
pub(crate) fn solve_dense(
    a: &[f64],
    b: &[f64],
    cost: &[f64],
    perturbation_seed: Option<u64>,
) -> Result<(TransportPlan, Vec<f64>, Vec<f64>)> {
    let sol = match perturbation_seed {
        Some(seed) => solve_transport(a, b, &perturb_costs(cost, seed))?,
        None => solve_transport(a, b, cost)?,
    };
    let (n, m) = (a.len(), b.len());
    let psi = c_transform_matrix_cols(&sol.u, cost, m);
    let phi = c_transform_matrix(&psi, cost, n);
    let plan_cost = sol.plan.iter().zip(cost).map(|(g, c)| g * c).sum();
    Ok((
        TransportPlan {
            rows: n,
            cols: m,
            gamma: sol.plan,
            cost: plan_cost,
        },
        phi,
        psi,
    ))
}

/// `W2(mu, nu)`: square root of the exact optimal cost.
pub fn w2_distance(mu: &Measure, nu: &Measure) -> Result<f64> {
    Ok(solve_exact(mu, nu)?.0.cost.max(0.0).sqrt())
}

/// `W2^2(mu, nu)`.
pub fn w2_squared(mu: &Measure, nu: &Measure) -> Result<f64> {
    Ok(solve_exact(mu, nu)?.0.cost.max(0.0))
}

/// Map read off a plan: `T(x_i) = exp_{x_i}(v_i)` with `v_i = -grad phi(x_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct McCannMap {
    pub map: PointMap,
    /// The displacement field `-grad phi`.
    pub field: VectorField,
    /// Source nodes without mass whose target was copied from the nearest massive node.
    pub flagged: Vec<usize>,
}

/// Barycentric projection of each plan row, averaged in the tangent space at the source node.
pub fn extract_mccann_map(plan: &TransportPlan, m: &DiscreteManifold) -> Result<McCannMap> {
    if plan.rows != m.len() || plan.cols != m.len() {
        return Err(argument(format!(
            "plan is {} x {}, manifold has {} nodes",
            plan.rows,
            plan.cols,
            m.len()
        )));
    }
    let n = m.len();
    let mut vectors: Vec<Option<Vec3>> = vec![None; n];
    for (i, slot) in vectors.iter_mut().enumerate() {
        let row = plan.row(i);
        let mass: f64 = row.iter().sum();
        if mass <= 0.0 {
            continue;
        }
        let mut v = [0.0; 3];
        for (j, &g) in row.iter().enumerate() {
            if g <= 0.0 {
                continue;
            }
            let l = m.log_map(i, j).map_err(|e| {
                domain(format!(
                    "plan couples nodes {i} and {j} across the cut locus: {e}"
                ))
            })?;
            v = vec3::add(v, vec3::scale(l.components, g / mass));
        }
        *slot = Some(v);
    }
    let massive: Vec<usize> = (0..n).filter(|&i| vectors[i].is_some()).collect();
    if massive.is_empty() {
        return Err(argument("plan carries no mass"));
    }
    let mut targets = Vec::with_capacity(n);
    let mut field = Vec::with_capacity(n);
    let mut flagged = Vec::new();
    for i in 0..n {
        match vectors[i] {
            Some(v) => {
                targets.push(m.exp_point(m.node(i), v)?);
                field.push(v);
            }
            None => {
                let k = *massive
                    .iter()
                    .min_by(|&&a, &&b| m.dist(i, a).total_cmp(&m.dist(i, b)))
                    .expect("non-empty");
                let v = vectors[k].expect("massive node");
                let target: Point = m.exp_point(m.node(k), v)?;
                let local = m.log_point(m.node(i), target).unwrap_or(v);
                targets.push(target);
                field.push(local);
                flagged.push(i);
            }
        }
    }
    Ok(McCannMap {
        map: PointMap { targets },
        field: VectorField::new(m, field, "-grad phi")?,
        flagged,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DualityReport {
    /// `cost - (sum phi dmu + sum psi dnu)`, with the marginals read from the plan.
    pub gap: f64,
    /// `max(0, max_ij phi_i + psi_j - d(i, j)^2)`.
    pub feasibility_violation: f64,
    /// `max |phi_i + psi_j - d(i, j)^2|` over the plan's support.
    pub support_slackness: f64,
}

pub fn verify_duality(
    plan: &TransportPlan,
    pot: &PotentialPair,
    m: &DiscreteManifold,
) -> Result<DualityReport> {
    if plan.rows != pot.phi.len() || plan.cols != pot.psi.len() || plan.rows != m.len() {
        return Err(argument("plan, potentials and manifold disagree in size"));
    }
    Ok(duality_report(
        plan,
        &pot.phi,
        &pot.psi,
        m.squared_distances(),
    ))
}

pub(crate) fn duality_report(
    plan: &TransportPlan,
    phi: &[f64],
    psi: &[f64],
    cost: &[f64],
) -> DualityReport {
    let a = plan.row_sums();
    let b = plan.col_sums();
    let dual: f64 = a.iter().zip(phi).map(|(x, y)| x * y).sum::<f64>()
        + b.iter().zip(psi).map(|(x, y)| x * y).sum::<f64>();
    let mut violation = 0.0f64;
    for (i, p) in phi.iter().enumerate() {
        for (j, q) in psi.iter().enumerate() {
            violation = violation.max(p + q - cost[i * plan.cols + j]);
        }
    }
    let slackness = plan
        .support()
        .map(|(i, j, _)| (phi[i] + psi[j] - cost[i * plan.cols + j]).abs())
        .fold(0.0, f64::max);
    DualityReport {
        gap: plan.cost - dual,
        feasibility_violation: violation,
        support_slackness: slackness,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormIdentityReport {
    pub w2_squared: f64,
    /// `sum_i mu_i |grad phi(x_i)|^2` with the gradient read from the McCann map.
    pub field_norm_squared: f64,
    pub residual: f64,
}

/// Compares `W2^2(mu, nu)` with `int |grad phi|^2 dmu`.
pub fn norm_identity_check(mu: &Measure, nu: &Measure) -> Result<NormIdentityReport> {
    let (plan, _) = solve_exact(mu, nu)?;
    let map = extract_mccann_map(&plan, mu.manifold())?;
    let field_norm_squared: f64 = mu
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * vec3::dot(map.field.components(i), map.field.components(i)))
        .sum();
    Ok(NormIdentityReport {
        w2_squared: plan.cost,
        field_norm_squared,
        residual: (plan.cost - field_norm_squared).abs(),
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn circle(n: usize) -> Arc<DiscreteManifold> {
        Arc::new(DiscreteManifold::circle(n).unwrap())
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let m = circle(16);
        let mu = Measure::normalized(m.clone(), (1..=16).map(f64::from).collect()).unwrap();
        let (plan, pot) = solve_exact(&mu, &mu).unwrap();
        assert_eq!(plan.cost, 0.0);
        let r = verify_duality(&plan, &pot, &m).unwrap();
        assert!(r.gap.abs() <= 1e-12 && r.feasibility_violation <= 1e-12);
    }

    #[test]
    fn dirac_to_dirac() {
        let m = circle(16);
        let (plan, _) = solve_exact(
            &Measure::dirac(m.clone(), 0).unwrap(),
            &Measure::dirac(m, 4).unwrap(),
        )
        .unwrap();
        assert_eq!(plan.cost, 0.0625);
        assert_eq!(plan.support().collect::<Vec<_>>(), vec![(0, 4, 1.0)]);
    }

    #[test]
    fn mass_balance_forces_the_distance() {
        let m = circle(16);
        let mut a = vec![0.0; 16];
        let mut b = vec![0.0; 16];
        (a[0], a[4]) = (0.7, 0.3);
        (b[0], b[4]) = (0.4, 0.6);
        let d = w2_distance(
            &Measure::new(m.clone(), a).unwrap(),
            &Measure::new(m, b).unwrap(),
        )
        .unwrap();
        assert!((d - 0.136_930_639_376_291_5).abs() < 1e-12);
    }

    #[test]
    fn c_transform_of_zero_is_zero() {
        let m = circle(16);
        let out = c_transform(&[0.0; 16], Direction::TargetToSource, &m).unwrap();
        assert!(out.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn perturbed_dual_is_caught() {
        let m = circle(16);
        let mu = Measure::normalized(m.clone(), (0..16).map(|i| 1.0 + (i % 3) as f64).collect())
            .unwrap();
        let nu = Measure::normalized(m.clone(), (0..16).map(|i| 1.0 + (i % 5) as f64).collect())
            .unwrap();
        let (plan, mut pot) = solve_exact(&mu, &nu).unwrap();
        pot.psi[3] += 0.1;
        let r = verify_duality(&plan, &pot, &m).unwrap();
        assert!(r.feasibility_violation >= 0.1 - 1e-9);
    }

    #[test]
    fn dirac_map_points_at_target() {
        let m = circle(16);
        let (plan, _) = solve_exact(
            &Measure::dirac(m.clone(), 0).unwrap(),
            &Measure::dirac(m.clone(), 4).unwrap(),
        )
        .unwrap();
        let map = extract_mccann_map(&plan, &m).unwrap();
        assert!((map.map.targets[0].0[0] - 0.25).abs() < 1e-15);
        assert_eq!(map.field.components(0)[0], 0.25);
        assert_eq!(map.flagged.len(), 15);
    }

    #[test]
    fn norm_identity_for_diracs() {
        let m = circle(16);
        let r = norm_identity_check(
            &Measure::dirac(m.clone(), 0).unwrap(),
            &Measure::dirac(m, 4).unwrap(),
        )
        .unwrap();
        assert_eq!(r.w2_squared, 0.0625);
        assert_eq!(r.field_norm_squared, 0.0625);
    }
}
