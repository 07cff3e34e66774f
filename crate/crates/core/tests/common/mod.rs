#![allow(dead_code)]

use std::sync::Arc;

use hot_core::measure::{random_measure, EnsembleFamily};
use hot_core::{DiscreteManifold, Measure};
use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn circle(n: usize) -> Arc<DiscreteManifold> {
    Arc::new(DiscreteManifold::circle(n).unwrap())
}

pub fn torus(n_u: usize, n_v: usize) -> Arc<DiscreteManifold> {
    Arc::new(DiscreteManifold::torus(n_u, n_v).unwrap())
}

pub fn sphere(subdivisions: u32) -> Arc<DiscreteManifold> {
    Arc::new(DiscreteManifold::icosphere(subdivisions).unwrap())
}

/// Random strictly positive measure with i.i.d. uniform weights.
pub fn positive_measure(m: &Arc<DiscreteManifold>, rng: &mut ChaCha8Rng) -> Measure {
    let w = (0..m.len()).map(|_| 0.05 + rng.random::<f64>()).collect();
    Measure::normalized(m.clone(), w).unwrap()
}

pub fn smooth_measure(m: &Arc<DiscreteManifold>, rng: &mut ChaCha8Rng) -> Measure {
    random_measure(m, EnsembleFamily::Mixtures, rng).unwrap()
}

/// Minimum of `<c, x>` over all vertices of the transportation polytope, found by
/// enumerating every spanning tree of `n + m - 1` cells and solving its flows.
pub fn vertex_minimum(a: &[f64], b: &[f64], c: &[f64]) -> f64 {
    let (n, m) = (a.len(), b.len());
    let mut best = f64::INFINITY;
    for cells in (0..n * m).combinations(n + m - 1) {
        if let Some(x) = tree_flows(a, b, &cells, n, m) {
            let cost: f64 = cells.iter().zip(&x).map(|(k, v)| c[*k] * v).sum();
            best = best.min(cost);
        }
    }
    best
}

/// Flows on a candidate basis by repeatedly peeling leaves; `None` if the cells do
/// not form a spanning tree or a flow comes out negative.
fn tree_flows(a: &[f64], b: &[f64], cells: &[usize], n: usize, m: usize) -> Option<Vec<f64>> {
    let mut supply: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut alive = vec![true; cells.len()];
    let mut flows = vec![0.0; cells.len()];
    let ends = |k: usize| (cells[k] / m, n + cells[k] % m);
    for _ in 0..cells.len() {
        let mut degree = vec![0usize; n + m];
        for k in (0..cells.len()).filter(|&k| alive[k]) {
            let (r, s) = ends(k);
            degree[r] += 1;
            degree[s] += 1;
        }
        let (k, leaf) = (0..cells.len()).filter(|&k| alive[k]).find_map(|k| {
            let (r, s) = ends(k);
            if degree[r] == 1 {
                Some((k, r))
            } else if degree[s] == 1 {
                Some((k, s))
            } else {
                None
            }
        })?;
        let (r, s) = ends(k);
        let other = if leaf == r { s } else { r };
        let x = supply[leaf];
        if x < -1e-12 {
            return None;
        }
        flows[k] = x;
        supply[leaf] = 0.0;
        supply[other] -= x;
        alive[k] = false;
    }
    // A spanning tree consumes every node's supply; a forest with a cycle cannot be peeled.
    if supply.iter().any(|s| s.abs() > 1e-9) {
        return None;
    }
    let mut seen = vec![false; n + m];
    for k in 0..cells.len() {
        let (r, s) = ends(k);
        seen[r] = true;
        seen[s] = true;
    }
    seen.iter().all(|x| *x).then_some(flows)
}

/// Random combination of the low Fourier fields with coefficients in `[-amp, amp]`.
pub fn random_field(
    m: &DiscreteManifold,
    order: usize,
    amp: f64,
    rng: &mut ChaCha8Rng,
) -> hot_core::VectorField {
    let family = hot_core::manifold::fourier_family(m, order);
    let mut w = hot_core::VectorField::zero(m);
    for f in &family {
        w = w.axpy(rng.random_range(-amp..amp), f).unwrap();
    }
    w
}

/// Largest difference quotient `|w_i - w_j| / d(i, j)` over mesh neighbours.
pub fn discrete_lipschitz(m: &DiscreteManifold, w: &hot_core::VectorField) -> f64 {
    let n = m.len();
    let h = m.grid_spacing();
    let mut lip = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let d = m.dist(i, j);
            if i != j && d <= 1.5 * h {
                let diff = hot_core::manifold::vec3::sub(w.components(i), w.components(j));
                lip = lip.max(hot_core::manifold::vec3::norm(diff) / d);
            }
        }
    }
    lip
}

/// Random low-mode field rescaled to the given discrete Lipschitz constant.
pub fn field_with_lipschitz(
    m: &DiscreteManifold,
    lip: f64,
    rng: &mut ChaCha8Rng,
) -> hot_core::VectorField {
    let w = random_field(m, 2, 1.0, rng);
    let l = discrete_lipschitz(m, &w);
    w.scaled(lip / l)
}

/// Random low-mode field rescaled to the given sup norm.
pub fn field_with_sup(
    m: &DiscreteManifold,
    order: usize,
    sup: f64,
    rng: &mut ChaCha8Rng,
) -> hot_core::VectorField {
    let w = random_field(m, order, 1.0, rng);
    let s = w.sup_norm();
    w.scaled(sup / s)
}
