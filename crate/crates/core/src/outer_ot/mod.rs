//! Transport between ensembles of measures.
//!
//! The outer cost between two atoms is `W2^2` or `h(W2)`, computed by exact inner
//! solves. The finite outer problem goes through the same transportation simplex;
//! its solution is then probed for map structure, stationarity of the outer
//! potential along flows, and the map formula `exp(-DU/2)`.

mod cost;
mod duals;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cost::{CostSpec, HFunction, TabulatedH, VALIDATION_POINTS};

use crate::calculus::{tangent_inner_product, W2_FD_STEP};
use crate::error::{argument, Error, Result};
use crate::inner_ot::{
    extract_mccann_map, norm_identity_check, solve_dense, solve_exact, NormIdentityReport,
};
use crate::manifold::{vec3, DiscreteManifold, VectorField};
use crate::measure::{flow_pushforward, pushforward, Measure, MeasureEnsemble, PointMap};

/// A row is certified deterministic when one entry holds this share of its mass.
pub const CERTIFICATION_SHARE: f64 = 1.0 - 1e-6;

/// Flow step of the stationarity probe.
pub const STATIONARITY_STEP: f64 = 1e-3;

/// Seed of the cost jitter in the stability re-solve.
pub const STABILITY_SEED: u64 = 0x5eed;

/// Smallest field family accepted by the map-formula extraction.
pub const MIN_FIELD_FAMILY: usize = 4;

/// `C[i][j] = cost(src_i, dst_j)`, row-major.
///
/// Entries are independent exact solves, evaluated in parallel and gathered in
/// index order. When both ensembles hold the same atoms only the upper triangle is
/// solved and the diagonal is zero.
pub fn outer_cost_matrix(
    src: &MeasureEnsemble,
    dst: &MeasureEnsemble,
    spec: &CostSpec,
) -> Result<Vec<f64>> {
    if !src.atom(0).same_manifold(dst.atom(0)) {
        return Err(argument("ensembles live on different manifolds"));
    }
    let (n, m) = (src.len(), dst.len());
    let symmetric = src.atoms() == dst.atoms();
    let entries: Vec<Result<f64>> = (0..n * m)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k / m, k % m);
            if symmetric && j <= i {
                return Ok(0.0);
            }
            pair_cost(src.atom(i), dst.atom(j), spec).map_err(|e| Error::Pair {
                row: i,
                col: j,
                source: Box::new(e),
            })
        })
        .collect();
    let mut c = entries.into_iter().collect::<Result<Vec<f64>>>()?;
    if symmetric {
        for i in 0..n {
            for j in 0..i {
                c[i * m + j] = c[j * m + i];
            }
        }
    }
    Ok(c)
}

fn pair_cost(mu: &Measure, nu: &Measure, spec: &CostSpec) -> Result<f64> {
    if mu == nu {
        return Ok(spec.from_w2_squared(0.0));
    }
    Ok(spec.from_w2_squared(solve_exact(mu, nu)?.0.cost))
}

/// Optimal outer plan with c-concave potentials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterPlan {
    pub rows: usize,
    pub cols: usize,
    /// Row-major plan over (source atom, target atom).
    pub pi: Vec<f64>,
    pub cost: f64,
    /// Potential per source atom.
    pub u: Vec<f64>,
    /// Potential per target atom.
    pub v: Vec<f64>,
    pub cost_matrix: Vec<f64>,
    pub src_masses: Vec<f64>,
    pub dst_masses: Vec<f64>,
}

impl OuterPlan {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pi[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.pi[i * self.cols..(i + 1) * self.cols]
    }

    pub fn cost_entry(&self, i: usize, j: usize) -> f64 {
        self.cost_matrix[i * self.cols + j]
    }

    /// `cost - (sum a U + sum b V)`.
    pub fn duality_gap(&self) -> f64 {
        let dual: f64 = self
            .src_masses
            .iter()
            .zip(&self.u)
            .map(|(a, u)| a * u)
            .sum::<f64>()
            + self
                .dst_masses
                .iter()
                .zip(&self.v)
                .map(|(b, v)| b * v)
                .sum::<f64>();
        self.cost - dual
    }

    /// `max_ij U_i + V_j - C_ij`.
    pub fn feasibility_violation(&self) -> f64 {
        let mut worst = f64::NEG_INFINITY;
        for i in 0..self.rows {
            for j in 0..self.cols {
                worst = worst.max(self.u[i] + self.v[j] - self.cost_entry(i, j));
            }
        }
        worst
    }

    /// `max |U_i + V_j - C_ij|` over entries carrying mass.
    pub fn support_slackness(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if self.get(i, j) > crate::inner_ot::SUPPORT_THRESHOLD {
                    worst = worst.max((self.u[i] + self.v[j] - self.cost_entry(i, j)).abs());
                }
            }
        }
        worst
    }
}

/// Solves the outer problem over the cost matrix of `src` and `dst`.
pub fn solve_outer(
    src: &MeasureEnsemble,
    dst: &MeasureEnsemble,
    spec: &CostSpec,
) -> Result<OuterPlan> {
    let c = outer_cost_matrix(src, dst, spec)?;
    solve_outer_matrix(src.masses(), dst.masses(), c)
}

/// Solves the finite outer problem for a given cost matrix.
///
/// Among the optimal dual solutions the returned one maximizes the smallest slack
/// on entries that the support does not force tight, so the potential extension
/// has a unique minimizer at each source atom whenever the plan allows it.
pub fn solve_outer_matrix(a: &[f64], b: &[f64], cost_matrix: Vec<f64>) -> Result<OuterPlan> {
    let (plan, _, _) = solve_dense(a, b, &cost_matrix, None)?;
    let (u, v) = duals::centered_potentials(&plan.gamma, &cost_matrix, a.len(), b.len());
    Ok(OuterPlan {
        rows: a.len(),
        cols: b.len(),
        pi: plan.gamma,
        cost: plan.cost,
        u,
        v,
        cost_matrix,
        src_masses: a.to_vec(),
        dst_masses: b.to_vec(),
    })
}

/// Map structure read off an outer plan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterMap {
    /// Argmax column per source atom.
    pub assignment: Vec<usize>,
    pub certified: Vec<bool>,
    /// Assignment of the re-solve with jittered costs.
    pub perturbed_assignment: Vec<usize>,
    pub perturbed_certified: Vec<bool>,
    /// Whether the certified rows keep their assignment under the jitter.
    pub stable: bool,
}

impl OuterMap {
    pub fn all_certified(&self) -> bool {
        self.certified.iter().all(|c| *c)
    }

    pub fn certification_rate(&self) -> f64 {
        self.certified.iter().filter(|c| **c).count() as f64 / self.certified.len() as f64
    }

    /// Target masses obtained by sending each source mass to its assigned atom.
    pub fn pushed_masses(&self, src_masses: &[f64], targets: usize) -> Vec<f64> {
        let mut out = vec![0.0; targets];
        for (a, &j) in src_masses.iter().zip(&self.assignment) {
            out[j] += a;
        }
        out
    }
}

fn read_assignment(pi: &[f64], rows: usize, cols: usize) -> (Vec<usize>, Vec<bool>) {
    (0..rows)
        .map(|i| {
            let row = &pi[i * cols..(i + 1) * cols];
            let mass: f64 = row.iter().sum();
            let (j, top) = row
                .iter()
                .enumerate()
                .fold(
                    (0, f64::NEG_INFINITY),
                    |acc, (j, &g)| if g > acc.1 { (j, g) } else { acc },
                );
            (j, top >= CERTIFICATION_SHARE * mass)
        })
        .unzip()
}

/// Certifies deterministic rows and checks the assignment against a jittered re-solve.
pub fn verify_monge_structure(plan: &OuterPlan) -> Result<OuterMap> {
    let (assignment, certified) = read_assignment(&plan.pi, plan.rows, plan.cols);
    let (perturbed, _, _) = solve_dense(
        &plan.src_masses,
        &plan.dst_masses,
        &plan.cost_matrix,
        Some(STABILITY_SEED),
    )?;
    let (perturbed_assignment, perturbed_certified) =
        read_assignment(&perturbed.gamma, plan.rows, plan.cols);
    let stable = (0..plan.rows)
        .filter(|&i| certified[i])
        .all(|i| perturbed_certified[i] && perturbed_assignment[i] == assignment[i]);
    Ok(OuterMap {
        assignment,
        certified,
        perturbed_assignment,
        perturbed_certified,
        stable,
    })
}

/// The c-concave extension `U(mu) = min_j cost(mu, nu_j) - V_j` of the source potential.
#[derive(Clone, Debug)]
pub struct OuterPotential {
    dst: MeasureEnsemble,
    v: Vec<f64>,
    spec: CostSpec,
}

pub fn outer_potential_extension(
    plan: &OuterPlan,
    dst: &MeasureEnsemble,
    spec: &CostSpec,
) -> Result<OuterPotential> {
    if plan.v.len() != dst.len() {
        return Err(argument(format!(
            "plan has {} target potentials, ensemble has {} atoms",
            plan.v.len(),
            dst.len()
        )));
    }
    Ok(OuterPotential {
        dst: dst.clone(),
        v: plan.v.clone(),
        spec: spec.clone(),
    })
}

impl OuterPotential {
    /// `cost(mu, nu_j)` for every target atom.
    pub fn costs(&self, mu: &Measure) -> Result<Vec<f64>> {
        self.dst
            .atoms()
            .iter()
            .map(|nu| pair_cost(mu, nu, &self.spec))
            .collect()
    }

    pub fn evaluate(&self, mu: &Measure) -> Result<f64> {
        Ok(self
            .costs(mu)?
            .iter()
            .zip(&self.v)
            .map(|(c, v)| c - v)
            .fold(f64::INFINITY, f64::min))
    }

    /// Lowest-index minimizer of `cost(mu, nu_j) - V_j`.
    pub fn argmin(&self, mu: &Measure) -> Result<usize> {
        let c = self.costs(mu)?;
        Ok((0..c.len())
            .min_by(|&a, &b| (c[a] - self.v[a]).total_cmp(&(c[b] - self.v[b])))
            .expect("ensemble is non-empty"))
    }

    /// `U(mu) - cost(mu, nu_target)`, with the target term cancelled exactly.
    fn alpha(&self, mu: &Measure, target: usize) -> Result<f64> {
        let c = self.costs(mu)?;
        Ok(c.iter()
            .zip(&self.v)
            .map(|(cj, vj)| (cj - c[target]) - vj)
            .fold(f64::INFINITY, f64::min))
    }

    pub fn dual_values(&self) -> &[f64] {
        &self.v
    }

    pub fn spec(&self) -> &CostSpec {
        &self.spec
    }

    pub fn targets(&self) -> &MeasureEnsemble {
        &self.dst
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationarityEntry {
    pub field: String,
    /// `alpha(-tau), alpha(0), alpha(tau)`.
    pub alpha: [f64; 3],
    /// Central difference `(alpha(tau) - alpha(-tau)) / 2 tau`.
    pub alpha_prime: f64,
    /// `<DU_fd - 2 h_bar'(W2^2) grad phi, w>_mu`.
    pub inner_product_residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationarityReport {
    /// Target atom minimizing the extension at the probed measure.
    pub target: usize,
    pub u_value: f64,
    pub w2_squared: f64,
    pub step: f64,
    pub max_alpha_prime: f64,
    pub max_inner_product_residual: f64,
    pub entries: Vec<StationarityEntry>,
}

/// Flow probe of `alpha(t) = U(mu_t) - cost(mu_t, nu)` at a source atom.
///
/// `nu` is the target atom minimizing the extension at `src_atom`, which for a
/// certified atom is its assigned target. Both `alpha'(0)` and the inner-product
/// form with the finite-difference estimate of `DU` over `fields` are reported.
pub fn stationarity_check(
    src_atom: &Measure,
    plan: &OuterPlan,
    dst: &MeasureEnsemble,
    spec: &CostSpec,
    fields: &[VectorField],
) -> Result<StationarityReport> {
    stationarity_check_with(src_atom, plan, dst, spec, fields, STATIONARITY_STEP)
}

pub fn stationarity_check_with(
    src_atom: &Measure,
    plan: &OuterPlan,
    dst: &MeasureEnsemble,
    spec: &CostSpec,
    fields: &[VectorField],
    step: f64,
) -> Result<StationarityReport> {
    if !src_atom.is_strictly_positive() {
        return Err(argument(
            "stationarity probe needs a strictly positive measure",
        ));
    }
    if !(step > 0.0) {
        return Err(argument("finite-difference step must be positive"));
    }
    let potential = outer_potential_extension(plan, dst, spec)?;
    let target = potential.argmin(src_atom)?;
    let u_value = potential.evaluate(src_atom)?;
    let nu = dst.atom(target);
    let (inner_plan, _) = solve_exact(src_atom, nu)?;
    let w2_squared = inner_plan.cost;
    let map = extract_mccann_map(&inner_plan, src_atom.manifold())?;
    // The McCann field is -grad phi.
    let predicted = map
        .field
        .scaled(-2.0 * spec.derivative_in_w2_squared(w2_squared));
    let du = if fields.is_empty() {
        VectorField::zero(src_atom.manifold())
    } else {
        estimate_du(src_atom, &potential, fields, step)?.0
    };
    let difference = du.axpy(-1.0, &predicted)?;

    let entries = fields
        .par_iter()
        .map(|w| -> Result<StationarityEntry> {
            let alpha = [
                potential.alpha(&flow_pushforward(src_atom, w, -step)?, target)?,
                potential.alpha(src_atom, target)?,
                potential.alpha(&flow_pushforward(src_atom, w, step)?, target)?,
            ];
            Ok(StationarityEntry {
                field: w.label().to_string(),
                alpha,
                alpha_prime: (alpha[2] - alpha[0]) / (2.0 * step),
                inner_product_residual: tangent_inner_product(&difference, w, src_atom)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StationarityReport {
        target,
        u_value,
        w2_squared,
        step,
        max_alpha_prime: entries
            .iter()
            .map(|e| e.alpha_prime.abs())
            .fold(0.0, f64::max),
        max_inner_product_residual: entries
            .iter()
            .map(|e| e.inner_product_residual.abs())
            .fold(0.0, f64::max),
        entries,
    })
}

/// Projection of `DU(mu)` onto the span of `fields` in `L^2(mu)`, with the
/// directional derivatives `<DU, f_l>` taken by central differences of `U` along
/// the flows of the original fields. Returns the field and those derivatives.
fn estimate_du(
    mu: &Measure,
    potential: &OuterPotential,
    fields: &[VectorField],
    step: f64,
) -> Result<(VectorField, Vec<f64>)> {
    let derivatives = fields
        .par_iter()
        .map(|f| -> Result<f64> {
            let plus = potential.evaluate(&flow_pushforward(mu, f, step)?)?;
            let minus = potential.evaluate(&flow_pushforward(mu, f, -step)?)?;
            Ok((plus - minus) / (2.0 * step))
        })
        .collect::<Result<Vec<f64>>>()?;
    // Modified Gram-Schmidt: basis[k] = sum_l r[k][l] fields[l], orthonormal in L^2(mu).
    let k = fields.len();
    let mut r: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut basis: Vec<VectorField> = Vec::with_capacity(k);
    for (l, f) in fields.iter().enumerate() {
        let mut e = f.clone();
        let mut coeffs = vec![0.0; k];
        coeffs[l] = 1.0;
        for (b, rb) in basis.iter().zip(&r) {
            let p = tangent_inner_product(&e, b, mu)?;
            e = e.axpy(-p, b)?.with_label(f.label());
            for (c, x) in coeffs.iter_mut().zip(rb) {
                *c -= p * x;
            }
        }
        let norm = tangent_inner_product(&e, &e, mu)?.sqrt();
        if norm <= 1e-10 * tangent_inner_product(f, f, mu)?.sqrt() {
            continue;
        }
        basis.push(e.scaled(1.0 / norm).with_label(f.label()));
        r.push(coeffs.iter().map(|c| c / norm).collect());
    }
    let mut du = VectorField::zero(mu.manifold());
    for (b, rb) in basis.iter().zip(&r) {
        let coefficient: f64 = rb.iter().zip(&derivatives).map(|(x, d)| x * d).sum();
        du = du.axpy(coefficient, b)?.with_label("DU");
    }
    Ok((du, derivatives))
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuterMapPrediction {
    pub target: usize,
    /// Estimated `DU(mu)`.
    pub du: VectorField,
    /// `exp(-DU(mu)/2)_# mu`.
    pub predicted_target: Measure,
    /// `W2(predicted_target, nu_target)`.
    pub w2_error: f64,
}

/// Predicts the image of `src_atom` under the outer map via `exp(-DU/2)`.
pub fn extract_outer_map_formula(
    src_atom: &Measure,
    plan: &OuterPlan,
    dst: &MeasureEnsemble,
    spec: &CostSpec,
    fields: &[VectorField],
) -> Result<OuterMapPrediction> {
    if fields.len() < MIN_FIELD_FAMILY {
        return Err(argument(format!(
            "field family has {} fields, at least {MIN_FIELD_FAMILY} are needed",
            fields.len()
        )));
    }
    if *spec != CostSpec::SquaredW2 {
        return Err(argument("the map formula applies to the squared_w2 cost"));
    }
    if !src_atom.is_strictly_positive() {
        return Err(argument("map formula needs a strictly positive measure"));
    }
    let potential = outer_potential_extension(plan, dst, spec)?;
    let target = potential.argmin(src_atom)?;
    let (du, _) = estimate_du(src_atom, &potential, fields, W2_FD_STEP)?;
    let m: &DiscreteManifold = src_atom.manifold();
    let targets = (0..m.len())
        .map(|i| m.exp_point(m.node(i), vec3::scale(du.components(i), -0.5)))
        .collect::<Result<Vec<_>>>()?;
    let predicted_target = pushforward(src_atom, &PointMap { targets })?;
    let w2_error = crate::inner_ot::w2_distance(&predicted_target, dst.atom(target))?;
    Ok(OuterMapPrediction {
        target,
        du,
        predicted_target,
        w2_error,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HIdentityReport {
    pub h: String,
    /// `max_s |h'(s) - 2 s h_bar'(s^2)|` with `h_bar'` by a five-point difference.
    pub chain_rule_residual: f64,
    /// `h'` strictly increasing on the grid.
    pub h_prime_increasing: bool,
    pub norm_identity: Vec<NormIdentityReport>,
    pub max_norm_identity_residual: f64,
    /// Smallest gap between consecutive values of `s h_bar'(s^2)` on the grid.
    pub injectivity_gap: f64,
    pub injective: bool,
}

/// Lower end of the chain-rule grid.
pub const H_GRID_START: f64 = 0.01;

/// Identities behind the `h(W2)` cost: chain rule for `h_bar`, monotonicity of
/// `h'`, the norm identity on sample pairs and injectivity of `s -> s h_bar'(s^2)`.
pub fn h_identity_checks(
    spec: &CostSpec,
    samples: &[(Measure, Measure)],
) -> Result<HIdentityReport> {
    let (h, diam) = match spec {
        CostSpec::HOfW2 { h, diam } => (h, *diam),
        CostSpec::SquaredW2 => return Err(argument("h identities need an h_of_w2 cost")),
    };
    let grid: Vec<f64> = cost::validation_grid(H_GRID_START, diam)
        .chain(std::iter::once(H_GRID_START))
        .collect();
    let chain_rule_residual = grid
        .iter()
        .map(|&s| (h.h_prime(s) - 2.0 * s * cost::h_bar_prime_fd(h, s * s)).abs())
        .fold(0.0, f64::max);
    let mut sorted = grid.clone();
    sorted.sort_by(f64::total_cmp);
    let h_prime_increasing = sorted.windows(2).all(|w| h.h_prime(w[1]) > h.h_prime(w[0]));
    let scaled: Vec<f64> = sorted.iter().map(|&s| s * h.h_bar_prime(s * s)).collect();
    let injectivity_gap = scaled
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let norm_identity = samples
        .par_iter()
        .map(|(mu, nu)| norm_identity_check(mu, nu))
        .collect::<Result<Vec<_>>>()?;
    Ok(HIdentityReport {
        h: h.name().to_string(),
        chain_rule_residual,
        h_prime_increasing,
        max_norm_identity_residual: norm_identity.iter().map(|r| r.residual).fold(0.0, f64::max),
        norm_identity,
        injectivity_gap,
        injective: injectivity_gap > 0.0,
    })
}

/// Bound on how far `h_bar` can reorder assignments.
///
/// With `l(x) = a + b x` the best uniform affine fit of `h_bar` on the range of
/// squared costs and `e` its error, every assignment cost satisfies
/// `|sum h_bar(x_i) - N a - b sum x_i| <= N e`. An assignment beating all others
/// by more than `2 N e / b` in squared cost therefore stays optimal for `h_bar`.
pub fn modulus_gap(h: &HFunction, w2_squared_costs: &[f64], n: usize) -> f64 {
    let lo = w2_squared_costs
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0);
    let hi = w2_squared_costs
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return 0.0;
    }
    let (ha, hb) = (h.h_bar(lo), h.h_bar(hi));
    let slope = (hb - ha) / (hi - lo);
    // Convex h_bar lies below its chord, furthest where h_bar' equals the chord slope;
    // the best fit splits that distance.
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if h.h_bar_prime(mid) < slope {
            a = mid;
        } else {
            b = mid;
        }
    }
    let x = 0.5 * (a + b);
    let e = 0.5 * (ha + slope * (x - lo) - h.h_bar(x)).max(0.0);
    2.0 * n as f64 * e / slope
}

/// Margin by which the optimal assignment of a square cost matrix beats the
/// second-best one, by enumeration; `None` for a single atom.
pub fn assignment_margin(cost_matrix: &[f64], n: usize) -> Option<f64> {
    let mut costs: Vec<f64> = permutations(n)
        .iter()
        .map(|p| {
            p.iter()
                .enumerate()
                .map(|(i, &j)| cost_matrix[i * n + j])
                .sum()
        })
        .collect();
    if costs.len() < 2 {
        return None;
    }
    costs.sort_by(f64::total_cmp);
    Some(costs[1] - costs[0])
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for k in 0..=p.len() {
            let mut q = p.clone();
            q.insert(k, n - 1);
            out.push(q);
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MidpointProbe {
    pub cost_a: f64,
    pub cost_b: f64,
    pub cost_mid: f64,
    pub certification_a: f64,
    pub certification_b: f64,
    pub certification_mid: f64,
}

/// Compares two outer plans over the same cost matrix with their average.
pub fn midpoint_uniqueness_probe(
    pi_a: &[f64],
    pi_b: &[f64],
    cost_matrix: &[f64],
    rows: usize,
) -> Result<MidpointProbe> {
    if pi_a.len() != cost_matrix.len() || pi_b.len() != cost_matrix.len() || rows == 0 {
        return Err(argument("plans and cost matrix must have the same shape"));
    }
    if cost_matrix.len() % rows != 0 {
        return Err(argument(
            "cost matrix length is not a multiple of the row count",
        ));
    }
    let cols = cost_matrix.len() / rows;
    let mid: Vec<f64> = pi_a.iter().zip(pi_b).map(|(a, b)| 0.5 * (a + b)).collect();
    let cost = |pi: &[f64]| pi.iter().zip(cost_matrix).map(|(p, c)| p * c).sum::<f64>();
    let rate = |pi: &[f64]| {
        let (_, cert) = read_assignment(pi, rows, cols);
        cert.iter().filter(|c| **c).count() as f64 / rows as f64
    };
    Ok(MidpointProbe {
        cost_a: cost(pi_a),
        cost_b: cost(pi_b),
        cost_mid: cost(&mid),
        certification_a: rate(pi_a),
        certification_b: rate(pi_b),
        certification_mid: rate(&mid),
    })
}

/// Largest deviation of the plan's marginals from the ensemble masses.
pub fn marginal_violation(plan: &OuterPlan) -> f64 {
    let rows = (0..plan.rows).map(|i| (plan.row(i).iter().sum::<f64>() - plan.src_masses[i]).abs());
    let cols = (0..plan.cols)
        .map(|j| ((0..plan.rows).map(|i| plan.get(i, j)).sum::<f64>() - plan.dst_masses[j]).abs());
    rows.chain(cols).fold(0.0, f64::max)
}
