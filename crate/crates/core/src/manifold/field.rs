use std::f64::consts::TAU;

use super::sphere::project_tangent;
use super::vec3::{add, cross, is_finite, norm, scale};
use super::{DiscreteManifold, ManifoldKind, Point, TangentVector, Vec3};
use crate::error::{argument, Result};

/// A vector field sampled at every manifold node; evaluated elsewhere by interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    vectors: Vec<Vec3>,
    label: String,
}

impl VectorField {
    /// On the sphere, samples are projected onto the tangent plane of their node.
    pub fn new(m: &DiscreteManifold, vectors: Vec<Vec3>, label: impl Into<String>) -> Result<Self> {
        if vectors.len() != m.len() {
            return Err(argument(format!(
                "vector field has {} samples, manifold has {} nodes",
                vectors.len(),
                m.len()
            )));
        }
        if let Some(i) = vectors.iter().position(|v| !is_finite(*v)) {
            return Err(argument(format!("vector field is not finite at node {i}")));
        }
        let vectors = match m.kind() {
            ManifoldKind::TriangulatedSphere(_) => vectors
                .iter()
                .zip(m.nodes())
                .map(|(v, p)| project_tangent(p.0, *v))
                .collect(),
            ManifoldKind::Circle(_) => vectors.iter().map(|v| [v[0], 0.0, 0.0]).collect(),
            ManifoldKind::FlatTorus(..) => vectors.iter().map(|v| [v[0], v[1], 0.0]).collect(),
        };
        Ok(Self {
            vectors,
            label: label.into(),
        })
    }

    pub fn zero(m: &DiscreteManifold) -> Self {
        Self {
            vectors: vec![[0.0; 3]; m.len()],
            label: "zero".into(),
        }
    }

    /// The same chart components at every node.
    pub fn constant(m: &DiscreteManifold, components: Vec3) -> Result<Self> {
        Self::new(m, vec![components; m.len()], "constant")
    }

    /// Samples `f` at the nodes.
    pub fn from_fn(
        m: &DiscreteManifold,
        label: impl Into<String>,
        f: impl Fn(Point) -> Vec3,
    ) -> Result<Self> {
        Self::new(m, m.nodes().iter().map(|&p| f(p)).collect(), label)
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn components(&self, i: usize) -> Vec3 {
        self.vectors[i]
    }

    pub fn vector(&self, i: usize) -> TangentVector {
        TangentVector {
            base: i,
            components: self.vectors[i],
        }
    }

    pub fn samples(&self) -> &[Vec3] {
        &self.vectors
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| scale(*v, s)).collect(),
            label: format!("{s}*{}", self.label),
        }
    }

    pub fn negated(&self) -> Self {
        Self {
            vectors: self.vectors.iter().map(|v| scale(*v, -1.0)).collect(),
            label: format!("-{}", self.label),
        }
    }

    /// `self + s * other`.
    pub fn axpy(&self, s: f64, other: &VectorField) -> Result<Self> {
        if other.len() != self.len() {
            return Err(argument("vector fields on different node sets"));
        }
        Ok(Self {
            vectors: self
                .vectors
                .iter()
                .zip(&other.vectors)
                .map(|(a, b)| add(*a, scale(*b, s)))
                .collect(),
            label: format!("{}+{s}*{}", self.label, other.label),
        })
    }

    /// Largest pointwise norm.
    pub fn sup_norm(&self) -> f64 {
        self.vectors.iter().map(|v| norm(*v)).fold(0.0, f64::max)
    }

    /// Value at an arbitrary point by interpolating node samples.
    pub fn evaluate(&self, m: &DiscreteManifold, p: Point) -> Vec3 {
        let mut v = [0.0; 3];
        for (node, w) in m.stencil(p).iter() {
            v = add(v, scale(self.vectors[node], w));
        }
        match m.kind() {
            ManifoldKind::TriangulatedSphere(_) => project_tangent(p.0, v),
            _ => v,
        }
    }
}

/// Truncated Fourier family of vector fields.
///
/// Circle: the constant field followed by `cos(2 pi k x)`, `sin(2 pi k x)` for
/// `k = 1..=order` (`2 order + 1` fields). Torus: the two constant directions
/// followed by each axis direction times `cos`/`sin` of `2 pi k u` and `2 pi k v`
/// (`8 order + 2` fields). Sphere: gradient and rotation fields of the real
/// spherical harmonics of degree 1 and, for `order >= 2`, degree 2.
pub fn fourier_family(m: &DiscreteManifold, order: usize) -> Vec<VectorField> {
    let mut out = Vec::new();
    let mut push = |label: String, f: &dyn Fn(Point) -> Vec3| {
        out.push(VectorField::from_fn(m, label, f).expect("analytic fields are finite"));
    };
    match m.kind() {
        ManifoldKind::Circle(_) => {
            push("const".into(), &|_| [1.0, 0.0, 0.0]);
            for k in 1..=order {
                let w = TAU * k as f64;
                push(format!("cos{k}"), &move |p| [(w * p.0[0]).cos(), 0.0, 0.0]);
                push(format!("sin{k}"), &move |p| [(w * p.0[0]).sin(), 0.0, 0.0]);
            }
        }
        ManifoldKind::FlatTorus(..) => {
            push("const_u".into(), &|_| [1.0, 0.0, 0.0]);
            push("const_v".into(), &|_| [0.0, 1.0, 0.0]);
            for k in 1..=order {
                let w = TAU * k as f64;
                let bases: [(&str, Box<dyn Fn(Point) -> f64>); 4] = [
                    ("cos_u", Box::new(move |p: Point| (w * p.0[0]).cos())),
                    ("sin_u", Box::new(move |p: Point| (w * p.0[0]).sin())),
                    ("cos_v", Box::new(move |p: Point| (w * p.0[1]).cos())),
                    ("sin_v", Box::new(move |p: Point| (w * p.0[1]).sin())),
                ];
                for (name, g) in &bases {
                    push(format!("{name}{k}*e_u"), &|p| [g(p), 0.0, 0.0]);
                    push(format!("{name}{k}*e_v"), &|p| [0.0, g(p), 0.0]);
                }
            }
        }
        ManifoldKind::TriangulatedSphere(_) => {
            // Euclidean gradients of the harmonic polynomials; projected onto the sphere below.
            let mut harmonics: Vec<(&str, Box<dyn Fn(Vec3) -> Vec3>)> = vec![
                ("x", Box::new(|_| [1.0, 0.0, 0.0])),
                ("y", Box::new(|_| [0.0, 1.0, 0.0])),
                ("z", Box::new(|_| [0.0, 0.0, 1.0])),
            ];
            if order >= 2 {
                harmonics.push(("xy", Box::new(|p| [p[1], p[0], 0.0])));
                harmonics.push(("yz", Box::new(|p| [0.0, p[2], p[1]])));
                harmonics.push(("xz", Box::new(|p| [p[2], 0.0, p[0]])));
                harmonics.push(("x2-y2", Box::new(|p| [2.0 * p[0], -2.0 * p[1], 0.0])));
                harmonics.push((
                    "3z2-r2",
                    Box::new(|p| [-2.0 * p[0], -2.0 * p[1], 4.0 * p[2]]),
                ));
            }
            for (name, grad) in &harmonics {
                push(format!("grad_{name}"), &|p| project_tangent(p.0, grad(p.0)));
            }
            for (name, grad) in &harmonics {
                push(format!("rot_{name}"), &|p| {
                    cross(p.0, project_tangent(p.0, grad(p.0)))
                });
            }
        }
    }
    out
}
