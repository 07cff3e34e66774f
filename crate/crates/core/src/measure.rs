//! Discrete probability measures on manifold nodes, ensembles of measures,
//! pushforwards along point maps and flows, and seeded generators.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{argument, Result};
use crate::manifold::{integrate_flow, DiscreteManifold, ManifoldKind, Point, VectorField};

/// Floor applied by generators so every atom has full support.
pub const AC_FLOOR: f64 = 1e-9;

/// Tolerance on the total mass of a measure.
pub const MASS_TOL: f64 = 1e-12;

/// A probability measure: one nonnegative weight per manifold node, summing to one.
#[derive(Clone, Debug)]
pub struct Measure {
    manifold: Arc<DiscreteManifold>,
    weights: Vec<f64>,
}

impl PartialEq for Measure {
    fn eq(&self, other: &Self) -> bool {
        self.same_manifold(other) && self.weights == other.weights
    }
}

impl Measure {
    pub fn new(manifold: Arc<DiscreteManifold>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != manifold.len() {
            return Err(argument(format!(
                "measure has {} weights, manifold has {} nodes",
                weights.len(),
                manifold.len()
            )));
        }
        if let Some(i) = weights.iter().position(|w| !w.is_finite() || *w < 0.0) {
            return Err(argument(format!("weight {i} is negative or non-finite")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(argument(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { manifold, weights })
    }

    /// Rescales nonnegative weights to unit mass.
    pub fn normalized(manifold: Arc<DiscreteManifold>, mut weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(argument("weights must have positive finite total mass"));
        }
        for w in &mut weights {
            *w /= total;
        }
        Self::new(manifold, weights)
    }

    pub fn dirac(manifold: Arc<DiscreteManifold>, node: usize) -> Result<Self> {
        manifold.check_node(node)?;
        let mut weights = vec![0.0; manifold.len()];
        weights[node] = 1.0;
        Self::new(manifold, weights)
    }

    pub fn uniform(manifold: Arc<DiscreteManifold>) -> Self {
        let n = manifold.len();
        Self::normalized(manifold, vec![1.0; n]).expect("uniform weights are valid")
    }

    /// Weights proportional to a density sampled at the nodes, floored at [`AC_FLOOR`].
    pub fn from_density(
        manifold: Arc<DiscreteManifold>,
        density: impl Fn(Point) -> f64,
    ) -> Result<Self> {
        let raw: Vec<f64> = manifold.nodes().iter().map(|&p| density(p)).collect();
        Self::normalized(manifold, raw)?.floored(AC_FLOOR)
    }

    pub fn manifold(&self) -> &Arc<DiscreteManifold> {
        &self.manifold
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Full support: the discrete stand-in for absolute continuity.
    pub fn is_strictly_positive(&self) -> bool {
        self.min_weight() > 0.0
    }

    pub fn same_manifold(&self, other: &Measure) -> bool {
        Arc::ptr_eq(&self.manifold, &other.manifold) || *self.manifold == *other.manifold
    }

    /// Raises every weight to at least `floor`, then renormalizes.
    pub fn floored(&self, floor: f64) -> Result<Self> {
        let raw = self.weights.iter().map(|w| w.max(floor)).collect();
        Self::normalized(self.manifold.clone(), raw)
    }

    pub fn total_variation(&self, other: &Measure) -> f64 {
        0.5 * self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
    }
}

/// A finitely supported probability measure on the space of measures.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasureEnsemble {
    atoms: Vec<Measure>,
    masses: Vec<f64>,
}

impl MeasureEnsemble {
    pub fn new(atoms: Vec<Measure>, masses: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(argument("ensemble needs at least one atom"));
        }
        if atoms.len() != masses.len() {
            return Err(argument("one mass per atom is required"));
        }
        if atoms.iter().any(|a| !a.same_manifold(&atoms[0])) {
            return Err(argument("ensemble atoms live on different manifolds"));
        }
        if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(argument("atom masses must be nonnegative and finite"));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(argument(format!("atom masses sum to {total}, expected 1")));
        }
        Ok(Self { atoms, masses })
    }

    /// Equal mass on every atom.
    pub fn uniform(atoms: Vec<Measure>) -> Result<Self> {
        let n = atoms.len();
        Self::new(atoms, vec![1.0 / n as f64; n])
    }

    pub fn atoms(&self) -> &[Measure] {
        &self.atoms
    }

    pub fn atom(&self, i: usize) -> &Measure {
        &self.atoms[i]
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn manifold(&self) -> &Arc<DiscreteManifold> {
        self.atoms[0].manifold()
    }
}

/// A point map `T: M -> M` given by one continuous target per node.
#[derive(Clone, Debug, PartialEq)]
pub struct PointMap {
    pub targets: Vec<Point>,
}

impl PointMap {
    pub fn identity(m: &DiscreteManifold) -> Self {
        Self {
            targets: m.nodes().to_vec(),
        }
    }
}

/// `T#mu`: the mass of node `i` is split over the interpolation stencil of `T(x_i)`.
pub fn pushforward(mu: &Measure, map: &PointMap) -> Result<Measure> {
    let m = mu.manifold();
    if map.targets.len() != m.len() {
        return Err(argument(format!(
            "point map has {} targets, manifold has {} nodes",
            map.targets.len(),
            m.len()
        )));
    }
    let mut out = vec![0.0; m.len()];
    for (i, &target) in map.targets.iter().enumerate() {
        let mass = mu.weights[i];
        if mass == 0.0 {
            continue;
        }
        if target.0.iter().any(|c| !c.is_finite()) {
            return Err(argument(format!("target of node {i} is not finite")));
        }
        for (node, w) in m.stencil(m.wrap(target)).iter() {
            out[node] += mass * w;
        }
    }
    Measure::new(m.clone(), out)
}

/// Flow of every node along `w` for time `t`, as a point map.
pub fn flow_map(m: &DiscreteManifold, w: &VectorField, t: f64) -> Result<PointMap> {
    let targets = m
        .nodes()
        .iter()
        .map(|&x| integrate_flow(m, w, t, x))
        .collect::<Result<Vec<_>>>()?;
    Ok(PointMap { targets })
}

/// `Psi^{w,t} mu`: pushforward of `mu` along the time-`t` flow of `w`.
pub fn flow_pushforward(mu: &Measure, w: &VectorField, t: f64) -> Result<Measure> {
    if w.len() != mu.len() {
        return Err(argument(
            "vector field and measure live on different node sets",
        ));
    }
    if t == 0.0 {
        return Ok(mu.clone());
    }
    pushforward(mu, &flow_map(mu.manifold(), w, t)?)
}

/// Generator families for ensembles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleFamily {
    /// Single von Mises style bumps with random centre and concentration.
    Bumps,
    /// Mixtures of two to four bumps.
    Mixtures,
    /// Node weights drawn from the flat Dirichlet distribution.
    DirichletWeights,
}

impl FromStr for EnsembleFamily {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bumps" => Ok(Self::Bumps),
            "mixtures" => Ok(Self::Mixtures),
            "dirichlet_weights" => Ok(Self::DirichletWeights),
            other => Err(argument(format!("unknown ensemble family {other:?}"))),
        }
    }
}

impl fmt::Display for EnsembleFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Bumps => "bumps",
            Self::Mixtures => "mixtures",
            Self::DirichletWeights => "dirichlet_weights",
        })
    }
}

/// A smooth bump density: von Mises on circle and torus, Fisher on the sphere.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bump {
    pub center: Point,
    pub kappa: f64,
}

impl Bump {
    pub fn density(&self, m: &DiscreteManifold, p: Point) -> f64 {
        let c = self.center.0;
        let x = p.0;
        let e = match m.kind() {
            ManifoldKind::Circle(_) => (TAU * (x[0] - c[0])).cos() - 1.0,
            ManifoldKind::FlatTorus(..) => {
                (TAU * (x[0] - c[0])).cos() + (TAU * (x[1] - c[1])).cos() - 2.0
            }
            ManifoldKind::TriangulatedSphere(_) => x[0] * c[0] + x[1] * c[1] + x[2] * c[2] - 1.0,
        };
        (self.kappa * e).exp()
    }

    /// The bump discretized as a full-support measure.
    pub fn measure(&self, m: &Arc<DiscreteManifold>) -> Result<Measure> {
        let mm = m.clone();
        let b = *self;
        Measure::from_density(m.clone(), move |p| b.density(&mm, p))
    }

    fn random(m: &DiscreteManifold, rng: &mut ChaCha8Rng, kappa_lo: f64, kappa_hi: f64) -> Self {
        let center = match m.kind() {
            ManifoldKind::Circle(_) => Point([rng.random::<f64>(), 0.0, 0.0]),
            ManifoldKind::FlatTorus(..) => Point([rng.random::<f64>(), rng.random::<f64>(), 0.0]),
            ManifoldKind::TriangulatedSphere(_) => loop {
                let v: [f64; 3] = [
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                    StandardNormal.sample(rng),
                ];
                let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
                if r > 1e-9 {
                    break Point([v[0] / r, v[1] / r, v[2] / r]);
                }
            },
        };
        let kappa = rng.random_range(kappa_lo..kappa_hi);
        Self { center, kappa }
    }
}

/// Draws one measure of the given family; continuous parameters are drawn before
/// discretizing, so equal seeds give the same underlying density at every resolution.
pub fn random_measure(
    m: &Arc<DiscreteManifold>,
    family: EnsembleFamily,
    rng: &mut ChaCha8Rng,
) -> Result<Measure> {
    match family {
        EnsembleFamily::Bumps => Bump::random(m, rng, 3.0, 10.0).measure(m),
        EnsembleFamily::Mixtures => {
            let k = rng.random_range(2..=4);
            let bumps: Vec<Bump> = (0..k).map(|_| Bump::random(m, rng, 4.0, 16.0)).collect();
            let mix: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
            let mm = m.clone();
            Measure::from_density(m.clone(), move |p| {
                bumps
                    .iter()
                    .zip(&mix)
                    .map(|(b, w)| w * b.density(&mm, p))
                    .sum()
            })
        }
        EnsembleFamily::DirichletWeights => {
            let raw: Vec<f64> = (0..m.len()).map(|_| Exp1.sample(rng)).collect();
            Measure::normalized(m.clone(), raw)?.floored(AC_FLOOR)
        }
    }
}

/// Seeded ensemble with `n_atoms` equally weighted, full-support atoms.
pub fn generate_ensemble(
    m: &Arc<DiscreteManifold>,
    n_atoms: usize,
    family: EnsembleFamily,
    seed: u64,
) -> Result<MeasureEnsemble> {
    if n_atoms == 0 {
        return Err(argument("n_atoms must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = (0..n_atoms)
        .map(|_| random_measure(m, family, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    MeasureEnsemble::uniform(atoms)
}
