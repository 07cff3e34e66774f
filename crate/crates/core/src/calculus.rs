//! Differential calculus on the Wasserstein space over a discrete manifold.
//!
//! Curves in the space of measures are generated by flows: `mu_t` is the
//! pushforward of `mu` along the time-`t` flow of a vector field `w`. Smooth test
//! functions are cylinder functions `u(mu) = F(int f_1 dmu, ..., int f_k dmu)`,
//! whose gradient at `mu` is the vector field `sum_i dF_i * grad f_i`.
//!
//! Node gradients are the discrete gradients of [`DiscreteManifold::node_gradient`],
//! which are exactly the derivatives of the interpolating pushforward on circle
//! and torus. That makes the inner-product formulas and the finite differences
//! along flows agree to `O(t)`.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{argument, Error, Result};
use crate::inner_ot::{extract_mccann_map, solve_exact, w2_distance, w2_squared};
use crate::manifold::{vec3, DiscreteManifold, Point, VectorField};
use crate::measure::{flow_map, flow_pushforward, Measure};

/// Default central-difference step for cylinder functions.
pub const CYLINDER_FD_STEP: f64 = 1e-4;

/// Default central-difference step for `W2^2` along flows.
pub const W2_FD_STEP: f64 = 1e-3;

/// A function on the nodes together with its discrete gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeFunction {
    values: Vec<f64>,
    gradient: VectorField,
    label: String,
}

impl NodeFunction {
    pub fn new(m: &DiscreteManifold, values: Vec<f64>, label: impl Into<String>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(argument(format!("node function value {i} is not finite")));
        }
        let gradient = m.node_gradient(&values)?;
        Ok(Self {
            values,
            gradient,
            label: label.into(),
        })
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(
        m: &DiscreteManifold,
        label: impl Into<String>,
        f: impl Fn(Point) -> f64,
    ) -> Result<Self> {
        Self::new(m, m.nodes().iter().map(|&p| f(p)).collect(), label)
    }

    pub fn constant(m: &DiscreteManifold, c: f64) -> Result<Self> {
        Self::new(m, vec![c; m.len()], format!("const {c}"))
    }

    /// Low harmonics used as test functions: `cos`/`sin` of `2 pi k x` on the circle,
    /// of `2 pi k u` and `2 pi k v` on the torus, and the ambient coordinates
    /// followed by degree-2 harmonics on the sphere. Returns the first `count`.
    pub fn harmonics(m: &DiscreteManifold, count: usize) -> Result<Vec<Self>> {
        use crate::manifold::ManifoldKind;
        use std::f64::consts::TAU;
        type Scalar = Box<dyn Fn(Point) -> f64>;
        let mut fns: Vec<(String, Scalar)> = Vec::new();
        match m.kind() {
            ManifoldKind::Circle(_) => {
                for k in 1..=count.div_ceil(2) {
                    let w = TAU * k as f64;
                    fns.push((format!("cos{k}"), Box::new(move |p| (w * p.0[0]).cos())));
                    fns.push((format!("sin{k}"), Box::new(move |p| (w * p.0[0]).sin())));
                }
            }
            ManifoldKind::FlatTorus(..) => {
                for k in 1..=count.div_ceil(4) {
                    let w = TAU * k as f64;
                    fns.push((format!("cos_u{k}"), Box::new(move |p| (w * p.0[0]).cos())));
                    fns.push((format!("sin_v{k}"), Box::new(move |p| (w * p.0[1]).sin())));
                    fns.push((
                        format!("cos_u{k}cos_v{k}"),
                        Box::new(move |p| (w * p.0[0]).cos() * (w * p.0[1]).cos()),
                    ));
                    fns.push((format!("sin_u{k}"), Box::new(move |p| (w * p.0[0]).sin())));
                }
            }
            ManifoldKind::TriangulatedSphere(_) => {
                fns.push(("x".into(), Box::new(|p| p.0[0])));
                fns.push(("y".into(), Box::new(|p| p.0[1])));
                fns.push(("z".into(), Box::new(|p| p.0[2])));
                fns.push(("xy".into(), Box::new(|p| p.0[0] * p.0[1])));
                fns.push(("yz".into(), Box::new(|p| p.0[1] * p.0[2])));
                fns.push(("xz".into(), Box::new(|p| p.0[0] * p.0[2])));
                fns.push((
                    "x2-y2".into(),
                    Box::new(|p| p.0[0] * p.0[0] - p.0[1] * p.0[1]),
                ));
                fns.push(("3z2-1".into(), Box::new(|p| 3.0 * p.0[2] * p.0[2] - 1.0)));
                if count > fns.len() {
                    return Err(argument(format!(
                        "only {} sphere harmonics are available",
                        fns.len()
                    )));
                }
            }
        }
        fns.into_iter()
            .take(count)
            .map(|(label, f)| Self::from_fn(m, label, f))
            .collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn gradient(&self) -> &VectorField {
        &self.gradient
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `f* mu = sum_i mu_i f(x_i)`.
pub fn evaluate_potential_energy(f: &[f64], mu: &Measure) -> Result<f64> {
    if f.len() != mu.len() {
        return Err(argument(format!(
            "node function has {} values, measure has {} nodes",
            f.len(),
            mu.len()
        )));
    }
    Ok(f.iter().zip(mu.weights()).map(|(f, w)| f * w).sum())
}

type Outer = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type OuterGradient = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// `u(mu) = F(f_1* mu, ..., f_k* mu)` with `F` and its gradient supplied as closures.
#[derive(Clone)]
pub struct CylinderFunction {
    outer: Outer,
    outer_gradient: OuterGradient,
    inner: Vec<NodeFunction>,
    label: String,
}

impl fmt::Debug for CylinderFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CylinderFunction")
            .field("label", &self.label)
            .field("k", &self.inner.len())
            .finish_non_exhaustive()
    }
}

/// Sample points used to validate a supplied outer gradient.
const VALIDATION_SAMPLES: usize = 16;
/// Allowed mismatch between the supplied gradient and central differences.
const VALIDATION_TOL: f64 = 1e-6;

impl CylinderFunction {
    /// Builds the function after checking `grad F` against central differences of `F`
    /// at seeded points of the box spanned by the inner functions' ranges.
    pub fn new(
        outer: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        outer_gradient: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        inner: Vec<NodeFunction>,
        label: impl Into<String>,
    ) -> Result<Self> {
        let label = label.into();
        if inner.is_empty() {
            return Err(argument(
                "cylinder function needs at least one inner function",
            ));
        }
        let n = inner[0].len();
        if inner.iter().any(|f| f.len() != n) {
            return Err(argument("inner functions live on different node sets"));
        }
        let k = inner.len();
        let bounds: Vec<(f64, f64)> = inner
            .iter()
            .map(|f| {
                let lo = f.values.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = f.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                if hi - lo < 1e-12 {
                    (lo - 1.0, hi + 1.0)
                } else {
                    (lo, hi)
                }
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..VALIDATION_SAMPLES {
            let a: Vec<f64> = bounds
                .iter()
                .map(|(lo, hi)| rng.random_range(*lo..=*hi))
                .collect();
            let g = outer_gradient(&a);
            if g.len() != k {
                return Err(Error::Validation(format!(
                    "{label}: outer gradient has {} components, expected {k}",
                    g.len()
                )));
            }
            for i in 0..k {
                let h = 1e-5 * a[i].abs().max(1.0);
                let mut plus = a.clone();
                let mut minus = a.clone();
                plus[i] += h;
                minus[i] -= h;
                let fd = (outer(&plus) - outer(&minus)) / (2.0 * h);
                if !((fd - g[i]).abs() <= VALIDATION_TOL * (1.0 + g[i].abs())) {
                    return Err(Error::Validation(format!(
                        "{label}: dF/da_{i} = {} but central difference gives {fd} at {a:?}",
                        g[i]
                    )));
                }
            }
        }
        Ok(Self {
            outer: Arc::new(outer),
            outer_gradient: Arc::new(outer_gradient),
            inner,
            label,
        })
    }

    /// The potential energy `f*`: `k = 1`, `F = id`.
    pub fn potential_energy(f: NodeFunction) -> Self {
        let label = format!("{}*", f.label);
        Self {
            outer: Arc::new(|a| a[0]),
            outer_gradient: Arc::new(|_| vec![1.0]),
            inner: vec![f],
            label,
        }
    }

    pub fn k(&self) -> usize {
        self.inner.len()
    }

    pub fn inner(&self) -> &[NodeFunction] {
        &self.inner
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// `(f_1* mu, ..., f_k* mu)`.
    pub fn moments(&self, mu: &Measure) -> Result<Vec<f64>> {
        self.inner
            .iter()
            .map(|f| evaluate_potential_energy(&f.values, mu))
            .collect()
    }

    pub fn evaluate(&self, mu: &Measure) -> Result<f64> {
        Ok((self.outer)(&self.moments(mu)?))
    }
}

/// A tangent vector field at a measure.
#[derive(Clone, Debug, PartialEq)]
pub struct WassersteinGradient {
    pub field: VectorField,
    pub base: Measure,
}

/// `grad u(mu)(x) = sum_i dF_i(f_1* mu, ...) grad f_i(x)`.
pub fn cylinder_gradient(u: &CylinderFunction, mu: &Measure) -> Result<WassersteinGradient> {
    let m = mu.manifold();
    let a = u.moments(mu)?;
    let dfs = (u.outer_gradient)(&a);
    let mut field = VectorField::zero(m);
    for (d, f) in dfs.iter().zip(&u.inner) {
        field = field.axpy(*d, &f.gradient)?;
    }
    Ok(WassersteinGradient {
        field: field.with_label(format!("grad {}", u.label)),
        base: mu.clone(),
    })
}

/// `<a, b>_mu = sum_i mu_i <a(x_i), b(x_i)>`.
pub fn tangent_inner_product(a: &VectorField, b: &VectorField, mu: &Measure) -> Result<f64> {
    if a.len() != mu.len() || b.len() != mu.len() {
        return Err(argument(
            "vector fields and measure live on different node sets",
        ));
    }
    Ok(mu
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * vec3::dot(a.components(i), b.components(i)))
        .sum())
}

/// `(grad_w u)(mu) = <grad u(mu), w>_mu`.
pub fn directional_derivative(u: &CylinderFunction, mu: &Measure, w: &VectorField) -> Result<f64> {
    tangent_inner_product(&cylinder_gradient(u, mu)?.field, w, mu)
}

/// `(u(Psi^{w,t} mu) - u(Psi^{w,-t} mu)) / 2t`.
pub fn directional_derivative_fd(
    u: &CylinderFunction,
    mu: &Measure,
    w: &VectorField,
    t: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(argument("finite-difference step must be positive"));
    }
    let plus = u.evaluate(&flow_pushforward(mu, w, t)?)?;
    let minus = u.evaluate(&flow_pushforward(mu, w, -t)?)?;
    Ok((plus - minus) / (2.0 * t))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct WassersteinDerivativeReport {
    /// `2 <grad phi, w>_mu` with `-grad phi` read from the optimal plan.
    pub formula_value: f64,
    /// Central difference of `t -> W2^2(Psi^{w,t} mu, nu)`.
    pub fd_value: f64,
    /// `formula_value - fd_value`.
    pub residual: f64,
    pub step: f64,
    pub w2_squared: f64,
}

impl WassersteinDerivativeReport {
    /// `|residual| / (1 + |formula_value|)`.
    pub fn relative_residual(&self) -> f64 {
        self.residual.abs() / (1.0 + self.formula_value.abs())
    }
}

/// Compares the derivative formula for `W2^2(mu_t, nu)` with a central difference.
pub fn wasserstein_derivative_check(
    mu: &Measure,
    nu: &Measure,
    w: &VectorField,
) -> Result<WassersteinDerivativeReport> {
    wasserstein_derivative_check_with(mu, nu, w, W2_FD_STEP)
}

pub fn wasserstein_derivative_check_with(
    mu: &Measure,
    nu: &Measure,
    w: &VectorField,
    step: f64,
) -> Result<WassersteinDerivativeReport> {
    if !(step > 0.0) {
        return Err(argument("finite-difference step must be positive"));
    }
    let (plan, _) = solve_exact(mu, nu)?;
    let map = extract_mccann_map(&plan, mu.manifold())?;
    // The map field is -grad phi.
    let formula_value = -2.0 * tangent_inner_product(&map.field, w, mu)?;
    let plus = w2_squared(&flow_pushforward(mu, w, step)?, nu)?;
    let minus = w2_squared(&flow_pushforward(mu, w, -step)?, nu)?;
    let fd_value = (plus - minus) / (2.0 * step);
    Ok(WassersteinDerivativeReport {
        formula_value,
        fd_value,
        residual: formula_value - fd_value,
        step,
        w2_squared: plan.cost,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityEntry {
    pub test_function: String,
    pub t: f64,
    /// `d/dt int f dmu_t` by central difference.
    pub lhs: f64,
    /// `int <grad f, xi_t> dmu`, the transported-field side.
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub max_residual: f64,
    pub fd_step: f64,
    pub entries: Vec<ContinuityEntry>,
}

/// Weak-form continuity-equation check along `mu_t = Psi^{w,t} mu`.
///
/// For each test function `f` and time `t` the time derivative of `int f dmu_t` is
/// compared with `sum_i mu_i <grad(If)(psi_t x_i), w(psi_t x_i)>`, where `If` is the
/// interpolant of `f` and `w(psi_t x)` the transported field. Test functions are
/// shifted by their value at node 0, so constants contribute exactly zero.
pub fn continuity_residual(
    mu: &Measure,
    w: &VectorField,
    t_grid: &[f64],
    test_fns: &[NodeFunction],
    fd_step: f64,
) -> Result<ContinuityReport> {
    if !(fd_step > 0.0) {
        return Err(argument("finite-difference step must be positive"));
    }
    let m = mu.manifold();
    let mut entries = Vec::with_capacity(t_grid.len() * test_fns.len());
    for &t in t_grid {
        let plus = flow_pushforward(mu, w, t + fd_step)?;
        let minus = flow_pushforward(mu, w, t - fd_step)?;
        let at_t = flow_map(m, w, t)?;
        for f in test_fns {
            if f.len() != m.len() {
                return Err(argument("test function lives on a different node set"));
            }
            let shifted: Vec<f64> = f.values.iter().map(|v| v - f.values[0]).collect();
            let lhs = (evaluate_potential_energy(&shifted, &plus)?
                - evaluate_potential_energy(&shifted, &minus)?)
                / (2.0 * fd_step);
            let mut rhs = 0.0;
            for (i, &x) in at_t.targets.iter().enumerate() {
                let mass = mu.weight(i);
                if mass == 0.0 {
                    continue;
                }
                let grad = m.interpolant_gradient(&shifted, x)?;
                rhs += mass * vec3::dot(grad, w.evaluate(m, x));
            }
            entries.push(ContinuityEntry {
                test_function: f.label.clone(),
                t,
                lhs,
                rhs,
                residual: (lhs - rhs).abs(),
            });
        }
    }
    Ok(ContinuityReport {
        max_residual: entries.iter().map(|e| e.residual).fold(0.0, f64::max),
        fd_step,
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzReport {
    /// `max |U(mu_1) - U(mu_2)| / W2(mu_1, mu_2)` over the used pairs.
    pub estimate: f64,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
}

/// Estimates the `W2`-Lipschitz constant of `u` from sample pairs.
pub fn lipschitz_check(
    u: impl Fn(&Measure) -> Result<f64>,
    samples: &[(Measure, Measure)],
) -> Result<LipschitzReport> {
    let mut estimate = 0.0f64;
    let mut used = 0;
    let mut skipped = 0;
    for (a, b) in samples {
        let d = w2_distance(a, b)?;
        if d < 1e-12 {
            skipped += 1;
            continue;
        }
        estimate = estimate.max((u(a)? - u(b)?).abs() / d);
        used += 1;
    }
    if used == 0 {
        return Err(argument("no sample pair at positive distance"));
    }
    Ok(LipschitzReport {
        estimate,
        pairs_used: used,
        pairs_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(n: usize) -> Arc<DiscreteManifold> {
        Arc::new(DiscreteManifold::circle(n).unwrap())
    }

    #[test]
    fn constants_integrate_to_themselves() {
        let m = circle(16);
        let mu = Measure::normalized(m.clone(), (1..=16).map(f64::from).collect()).unwrap();
        let e = evaluate_potential_energy(&[3.0; 16], &mu).unwrap();
        assert!((e - 3.0).abs() < 1e-15);
        let mut spike = vec![0.0; 16];
        spike[0] = 2.5;
        assert_eq!(
            evaluate_potential_energy(&spike, &Measure::dirac(m, 0).unwrap()).unwrap(),
            2.5
        );
    }

    #[test]
    fn constant_outer_gives_zero_gradient() {
        let m = circle(16);
        let f = NodeFunction::harmonics(&m, 1).unwrap().remove(0);
        let u = CylinderFunction::new(|_| 4.0, |_| vec![0.0], vec![f], "four").unwrap();
        let g = cylinder_gradient(&u, &Measure::uniform(m)).unwrap();
        assert_eq!(g.field.sup_norm(), 0.0);
    }

    #[test]
    fn potential_energy_gradient_is_node_gradient() {
        let m = circle(32);
        let f =
            NodeFunction::from_fn(&m, "bump", |p| (-(p.0[0] - 0.5).powi(2) * 20.0).exp()).unwrap();
        let u = CylinderFunction::potential_energy(f.clone());
        let g = cylinder_gradient(&u, &Measure::uniform(m)).unwrap();
        assert_eq!(g.field.samples(), f.gradient().samples());
    }

    #[test]
    fn wrong_outer_gradient_is_rejected() {
        let m = circle(8);
        let f = NodeFunction::harmonics(&m, 2).unwrap();
        let err = CylinderFunction::new(|a| a[0] * a[1], |a| vec![a[1], 2.0 * a[0]], f, "ab");
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn unit_field_has_unit_norm() {
        let m = circle(16);
        let mu = Measure::normalized(m.clone(), (1..=16).map(f64::from).collect()).unwrap();
        let e = VectorField::constant(&m, [1.0, 0.0, 0.0]).unwrap();
        assert!((tangent_inner_product(&e, &e, &mu).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn lipschitz_of_constant_is_zero() {
        let m = circle(8);
        let pairs = vec![(
            Measure::dirac(m.clone(), 0).unwrap(),
            Measure::uniform(m.clone()),
        )];
        let r = lipschitz_check(|_| Ok(1.0), &pairs).unwrap();
        assert_eq!(r.estimate, 0.0);
        let same = vec![(Measure::uniform(m.clone()), Measure::uniform(m))];
        assert!(lipschitz_check(|_| Ok(1.0), &same).is_err());
    }
}
