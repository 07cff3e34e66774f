//! Compact manifolds represented as finite geodesic metric structures.
//!
//! Three discretizations are supported: the unit-circumference circle, the flat
//! unit torus and a triangulated unit sphere. Circle and torus carry closed-form
//! distances and exponential/logarithm maps in chart coordinates; the sphere uses
//! mesh shortest paths for distances and great-circle exp/log on the embedded
//! coordinates.

mod field;
mod flow;
pub mod sphere;
pub mod vec3;

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

pub use field::{fourier_family, VectorField};
pub use flow::integrate_flow;
pub use sphere::SphereMesh;

use crate::error::{argument, domain, Result};
use sphere::{angle_between, project_tangent};
use vec3::{add, cross, dot, norm, normalize, scale};

pub type Vec3 = [f64; 3];

/// Point coordinates. Circle: `[angle, 0, 0]` with angle in `[0, 1)`; torus:
/// `[u, v, 0]` in `[0, 1)^2`; sphere: a unit vector in R^3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub Vec3);

/// A tangent vector at a manifold node, in chart (circle/torus) or embedded (sphere) components.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentVector {
    pub base: usize,
    pub components: Vec3,
}

impl TangentVector {
    pub fn norm(&self) -> f64 {
        norm(self.components)
    }
}

/// Config record selecting a discretization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldSpec {
    Circle { n: usize },
    Torus { n_u: usize, n_v: usize },
    Sphere { subdivisions: u32 },
    SphereOff { path: String },
}

#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldKind {
    Circle(usize),
    FlatTorus(usize, usize),
    TriangulatedSphere(SphereMesh),
}

/// Interpolation stencil: up to four nodes with nonnegative weights summing to one.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    nodes: [usize; 4],
    weights: [f64; 4],
    len: usize,
}

impl Stencil {
    fn single(node: usize) -> Self {
        Self {
            nodes: [node, 0, 0, 0],
            weights: [1.0, 0.0, 0.0, 0.0],
            len: 1,
        }
    }

    fn push(&mut self, node: usize, weight: f64) {
        if weight == 0.0 {
            return;
        }
        if let Some(k) = self.nodes[..self.len].iter().position(|&n| n == node) {
            self.weights[k] += weight;
        } else {
            self.nodes[self.len] = node;
            self.weights[self.len] = weight;
            self.len += 1;
        }
    }

    fn empty() -> Self {
        Self {
            nodes: [0; 4],
            weights: [0.0; 4],
            len: 0,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.nodes[..self.len]
            .iter()
            .copied()
            .zip(self.weights[..self.len].iter().copied())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Offsets closer than this (in cells) to a node are snapped onto it.
const SNAP: f64 = 1e-10;

/// A compact manifold discretized to finitely many nodes. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteManifold {
    spec: Option<ManifoldSpec>,
    kind: ManifoldKind,
    nodes: Vec<Point>,
    dist: Vec<f64>,
    sq_dist: Vec<f64>,
    inj_radius: f64,
    spacing: f64,
    diameter: f64,
}

impl DiscreteManifold {
    /// `n` equally spaced nodes on the circle of unit circumference.
    pub fn circle(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(argument("circle needs at least 2 nodes"));
        }
        let nodes = (0..n)
            .map(|i| Point([i as f64 / n as f64, 0.0, 0.0]))
            .collect();
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                let k = i.abs_diff(j);
                dist[i * n + j] = k.min(n - k) as f64 / n as f64;
            }
        }
        Ok(Self::assemble(
            Some(ManifoldSpec::Circle { n }),
            ManifoldKind::Circle(n),
            nodes,
            dist,
            0.5,
            1.0 / n as f64,
        ))
    }

    /// `n_u x n_v` grid on the flat unit torus; node `(iu, iv)` has index `iu * n_v + iv`.
    pub fn torus(n_u: usize, n_v: usize) -> Result<Self> {
        if n_u < 2 || n_v < 2 {
            return Err(argument("torus needs at least 2 nodes per axis"));
        }
        let n = n_u * n_v;
        let mut nodes = Vec::with_capacity(n);
        for iu in 0..n_u {
            for iv in 0..n_v {
                nodes.push(Point([iu as f64 / n_u as f64, iv as f64 / n_v as f64, 0.0]));
            }
        }
        let mut dist = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let (au, av) = (a / n_v, a % n_v);
                let (bu, bv) = (b / n_v, b % n_v);
                let ku = au.abs_diff(bu);
                let kv = av.abs_diff(bv);
                let du = ku.min(n_u - ku) as f64 / n_u as f64;
                let dv = kv.min(n_v - kv) as f64 / n_v as f64;
                dist[a * n + b] = (du * du + dv * dv).sqrt();
            }
        }
        Ok(Self::assemble(
            Some(ManifoldSpec::Torus { n_u, n_v }),
            ManifoldKind::FlatTorus(n_u, n_v),
            nodes,
            dist,
            0.5,
            (1.0 / n_u as f64).max(1.0 / n_v as f64),
        ))
    }

    /// Icosphere with the given number of midpoint subdivisions.
    pub fn icosphere(subdivisions: u32) -> Result<Self> {
        let mut m = Self::sphere(SphereMesh::icosphere(subdivisions))?;
        m.spec = Some(ManifoldSpec::Sphere { subdivisions });
        Ok(m)
    }

    /// Sphere from an arbitrary mesh; distances are shortest paths along great-circle edges.
    pub fn sphere(mesh: SphereMesh) -> Result<Self> {
        let n = mesh.vertices().len();
        let mut dist = vec![f64::INFINITY; n * n];
        for src in 0..n {
            let row = &mut dist[src * n..(src + 1) * n];
            row[src] = 0.0;
            // Non-negative f64 bit patterns order like the values themselves.
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0f64.to_bits(), src)));
            while let Some(Reverse((bits, v))) = heap.pop() {
                let d = f64::from_bits(bits);
                if d > row[v] {
                    continue;
                }
                for &w in mesh.neighbors(v) {
                    let nd = d + mesh.arc(v, w);
                    if nd < row[w] {
                        row[w] = nd;
                        heap.push(Reverse((nd.to_bits(), w)));
                    }
                }
            }
            if row.iter().any(|d| !d.is_finite()) {
                return Err(argument("sphere mesh is not connected"));
            }
        }
        // Shortest paths are symmetric in exact arithmetic; enforce it bitwise.
        for i in 0..n {
            for j in i + 1..n {
                let d = dist[i * n + j].min(dist[j * n + i]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        let spacing = (0..n)
            .flat_map(|v| mesh.neighbors(v).iter().map(move |&w| (v, w)))
            .map(|(v, w)| mesh.arc(v, w))
            .fold(0.0, f64::max);
        let nodes = mesh.vertices().iter().map(|&v| Point(v)).collect();
        Ok(Self::assemble(
            None,
            ManifoldKind::TriangulatedSphere(mesh),
            nodes,
            dist,
            std::f64::consts::PI,
            spacing,
        ))
    }

    pub fn from_spec(spec: &ManifoldSpec) -> Result<Self> {
        match spec {
            ManifoldSpec::Circle { n } => Self::circle(*n),
            ManifoldSpec::Torus { n_u, n_v } => Self::torus(*n_u, *n_v),
            ManifoldSpec::Sphere { subdivisions } => {
                if *subdivisions > 5 {
                    return Err(argument("icosphere subdivisions above 5 are not supported"));
                }
                Self::icosphere(*subdivisions)
            }
            ManifoldSpec::SphereOff { path } => {
                let text = std::fs::read_to_string(path)?;
                let mut m = Self::sphere(SphereMesh::from_off(&text)?)?;
                m.spec = Some(spec.clone());
                Ok(m)
            }
        }
    }

    fn assemble(
        spec: Option<ManifoldSpec>,
        kind: ManifoldKind,
        nodes: Vec<Point>,
        dist: Vec<f64>,
        inj_radius: f64,
        spacing: f64,
    ) -> Self {
        let sq_dist = dist.iter().map(|d| d * d).collect();
        let diameter = dist.iter().copied().fold(0.0, f64::max);
        Self {
            spec,
            kind,
            nodes,
            dist,
            sq_dist,
            inj_radius,
            spacing,
            diameter,
        }
    }

    pub fn spec(&self) -> Option<&ManifoldSpec> {
        self.spec.as_ref()
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> Point {
        self.nodes[i]
    }

    pub fn injectivity_radius(&self) -> f64 {
        self.inj_radius
    }

    /// Largest distance between neighbouring nodes.
    pub fn grid_spacing(&self) -> f64 {
        self.spacing
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Number of meaningful coordinate components (1, 2 or 3).
    pub fn chart_dim(&self) -> usize {
        match self.kind {
            ManifoldKind::Circle(_) => 1,
            ManifoldKind::FlatTorus(..) => 2,
            ManifoldKind::TriangulatedSphere(_) => 3,
        }
    }

    /// Short text identifier, equal for manifolds built from equal specs.
    pub fn id(&self) -> String {
        match &self.kind {
            ManifoldKind::Circle(n) => format!("circle:{n}"),
            ManifoldKind::FlatTorus(a, b) => format!("torus:{a}x{b}"),
            ManifoldKind::TriangulatedSphere(mesh) => {
                format!("sphere:{}v{}f", mesh.vertices().len(), mesh.faces().len())
            }
        }
    }

    /// Unchecked distance lookup.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.nodes.len() + j]
    }

    /// Row-major matrix of squared distances, the inner transport cost.
    pub fn squared_distances(&self) -> &[f64] {
        &self.sq_dist
    }

    pub fn geodesic_distance(&self, i: usize, j: usize) -> Result<f64> {
        self.check_node(i)?;
        self.check_node(j)?;
        Ok(self.dist(i, j))
    }

    pub(crate) fn check_node(&self, i: usize) -> Result<()> {
        if i >= self.nodes.len() {
            return Err(argument(format!(
                "node index {i} out of range for {} nodes",
                self.nodes.len()
            )));
        }
        Ok(())
    }

    /// Brings continuous coordinates back into the chart domain.
    pub fn wrap(&self, p: Point) -> Point {
        match self.kind {
            ManifoldKind::Circle(_) => Point([unit_wrap(p.0[0]), 0.0, 0.0]),
            ManifoldKind::FlatTorus(..) => Point([unit_wrap(p.0[0]), unit_wrap(p.0[1]), 0.0]),
            ManifoldKind::TriangulatedSphere(_) => Point(normalize(p.0)),
        }
    }

    /// Exponential map at a node.
    pub fn exp_map(&self, v: &TangentVector) -> Result<Point> {
        self.check_node(v.base)?;
        self.exp_point(self.nodes[v.base], v.components)
    }

    /// Exponential map at an arbitrary point.
    pub fn exp_point(&self, p: Point, v: Vec3) -> Result<Point> {
        if !vec3::is_finite(v) {
            return Err(argument("tangent vector has non-finite components"));
        }
        match self.kind {
            ManifoldKind::Circle(_) => Ok(Point([unit_wrap(p.0[0] + v[0]), 0.0, 0.0])),
            ManifoldKind::FlatTorus(..) => Ok(Point([
                unit_wrap(p.0[0] + v[0]),
                unit_wrap(p.0[1] + v[1]),
                0.0,
            ])),
            ManifoldKind::TriangulatedSphere(_) => {
                let v = project_tangent(p.0, v);
                let theta = norm(v);
                if theta > std::f64::consts::PI * (1.0 + 1e-12) {
                    return Err(domain(format!(
                        "sphere exponential with |v| = {theta} beyond pi"
                    )));
                }
                if theta == 0.0 {
                    return Ok(p);
                }
                let q = add(scale(p.0, theta.cos()), scale(v, theta.sin() / theta));
                Ok(Point(normalize(q)))
            }
        }
    }

    /// Logarithm map between nodes; fails on the cut locus (`d(i, j) >= inj_radius`).
    pub fn log_map(&self, i: usize, j: usize) -> Result<TangentVector> {
        self.check_node(i)?;
        self.check_node(j)?;
        if i == j {
            return Ok(TangentVector {
                base: i,
                components: [0.0; 3],
            });
        }
        if self.dist(i, j) >= self.inj_radius {
            return Err(domain(format!(
                "nodes {i} and {j} are at distance {} >= injectivity radius {}",
                self.dist(i, j),
                self.inj_radius
            )));
        }
        Ok(TangentVector {
            base: i,
            components: self.log_point(self.nodes[i], self.nodes[j])?,
        })
    }

    /// Logarithm map between arbitrary points; fails when no unique minimizing geodesic exists.
    pub fn log_point(&self, p: Point, q: Point) -> Result<Vec3> {
        match self.kind {
            ManifoldKind::Circle(_) => {
                let d = periodic_offset(q.0[0] - p.0[0])
                    .ok_or_else(|| domain("antipodal points on the circle"))?;
                Ok([d, 0.0, 0.0])
            }
            ManifoldKind::FlatTorus(..) => {
                let du = periodic_offset(q.0[0] - p.0[0]);
                let dv = periodic_offset(q.0[1] - p.0[1]);
                match (du, dv) {
                    (Some(du), Some(dv)) => Ok([du, dv, 0.0]),
                    _ => Err(domain("points on the torus cut locus")),
                }
            }
            ManifoldKind::TriangulatedSphere(_) => {
                let angle = angle_between(p.0, q.0);
                if angle == 0.0 {
                    return Ok([0.0; 3]);
                }
                if angle >= std::f64::consts::PI - 1e-9 {
                    return Err(domain("antipodal points on the sphere"));
                }
                let dir = project_tangent(p.0, q.0);
                Ok(scale(dir, angle / norm(dir)))
            }
        }
    }

    /// Geodesic distance between continuous points (great circle on the sphere).
    pub fn point_distance(&self, p: Point, q: Point) -> f64 {
        match self.kind {
            ManifoldKind::Circle(_) => circle_gap(p.0[0], q.0[0]),
            ManifoldKind::FlatTorus(..) => {
                let du = circle_gap(p.0[0], q.0[0]);
                let dv = circle_gap(p.0[1], q.0[1]);
                (du * du + dv * dv).sqrt()
            }
            ManifoldKind::TriangulatedSphere(_) => angle_between(p.0, q.0),
        }
    }

    /// Node closest to `p` (ties broken towards the lower index).
    pub fn nearest_node(&self, p: Point) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &x) in self.nodes.iter().enumerate() {
            let d = self.point_distance(p, x);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    /// Linear (circle), bilinear (torus) or barycentric (sphere) interpolation stencil of `p`.
    pub fn stencil(&self, p: Point) -> Stencil {
        match &self.kind {
            ManifoldKind::Circle(n) => {
                let mut s = Stencil::empty();
                for (node, w) in axis_weights(p.0[0], *n).iter().take_while(|e| e.1 > 0.0) {
                    s.push(*node, *w);
                }
                s
            }
            ManifoldKind::FlatTorus(n_u, n_v) => {
                let wu = axis_weights(p.0[0], *n_u);
                let wv = axis_weights(p.0[1], *n_v);
                let mut s = Stencil::empty();
                for (iu, a) in wu.iter().filter(|e| e.1 > 0.0) {
                    for (iv, b) in wv.iter().filter(|e| e.1 > 0.0) {
                        s.push(iu * n_v + iv, a * b);
                    }
                }
                s
            }
            ManifoldKind::TriangulatedSphere(mesh) => {
                let (fi, bary) = mesh.locate(normalize(p.0));
                let face = mesh.faces()[fi];
                if let Some(k) = bary.iter().position(|&b| b >= 1.0 - SNAP) {
                    return Stencil::single(face[k]);
                }
                let mut s = Stencil::empty();
                for k in 0..3 {
                    if bary[k] > SNAP {
                        s.push(face[k], bary[k]);
                    }
                }
                let total: f64 = s.weights[..s.len].iter().sum();
                for w in &mut s.weights[..s.len] {
                    *w /= total;
                }
                s
            }
        }
    }

    /// Discrete gradient of a node function, consistent with the interpolation used by
    /// pushforwards: central differences on circle and torus, one-ring least squares on
    /// the sphere.
    pub fn node_gradient(&self, values: &[f64]) -> Result<VectorField> {
        if values.len() != self.len() {
            return Err(argument(format!(
                "node function has {} values, manifold has {} nodes",
                values.len(),
                self.len()
            )));
        }
        let grads: Vec<Vec3> = match &self.kind {
            ManifoldKind::Circle(n) => {
                let n = *n;
                let h = 1.0 / n as f64;
                (0..n)
                    .map(|i| {
                        let df = values[(i + 1) % n] - values[(i + n - 1) % n];
                        [df / (2.0 * h), 0.0, 0.0]
                    })
                    .collect()
            }
            ManifoldKind::FlatTorus(n_u, n_v) => {
                let (n_u, n_v) = (*n_u, *n_v);
                let idx = |iu: usize, iv: usize| (iu % n_u) * n_v + (iv % n_v);
                let mut g = Vec::with_capacity(n_u * n_v);
                for iu in 0..n_u {
                    for iv in 0..n_v {
                        let du = values[idx(iu + 1, iv)] - values[idx(iu + n_u - 1, iv)];
                        let dv = values[idx(iu, iv + 1)] - values[idx(iu, iv + n_v - 1)];
                        g.push([du * n_u as f64 / 2.0, dv * n_v as f64 / 2.0, 0.0]);
                    }
                }
                g
            }
            ManifoldKind::TriangulatedSphere(mesh) => (0..self.len())
                .map(|i| self.one_ring_gradient(mesh, values, i))
                .collect(),
        };
        VectorField::new(self, grads, "gradient")
    }
}

impl DiscreteManifold {
    /// Least-squares gradient over the one-ring of sphere vertex `i`.
    fn one_ring_gradient(&self, mesh: &SphereMesh, values: &[f64], i: usize) -> Vec3 {
        let p = self.nodes[i].0;
        let (e1, e2) = tangent_basis(p);
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &j in mesh.neighbors(i) {
            let l = self
                .log_point(self.nodes[i], self.nodes[j])
                .expect("mesh neighbours are never antipodal");
            let (x, y) = (dot(l, e1), dot(l, e2));
            let df = values[j] - values[i];
            a11 += x * x;
            a12 += x * y;
            a22 += y * y;
            b1 += x * df;
            b2 += y * df;
        }
        let det = a11 * a22 - a12 * a12;
        let g1 = (a22 * b1 - a12 * b2) / det;
        let g2 = (a11 * b2 - a12 * b1) / det;
        add(scale(e1, g1), scale(e2, g2))
    }

    /// Gradient of the interpolant of node values at `p`.
    ///
    /// Inside a cell this is the exact gradient of the linear, bilinear or barycentric
    /// interpolant. Where the interpolant has a kink (at nodes, and on grid lines of
    /// the torus) the one-sided gradients are averaged, which reproduces
    /// [`DiscreteManifold::node_gradient`] at the nodes.
    pub fn interpolant_gradient(&self, values: &[f64], p: Point) -> Result<Vec3> {
        if values.len() != self.len() {
            return Err(argument(format!(
                "node function has {} values, manifold has {} nodes",
                values.len(),
                self.len()
            )));
        }
        Ok(match &self.kind {
            ManifoldKind::Circle(n) => {
                let n = *n;
                let at = |k: usize| values[k % n];
                [axis_slope(p.0[0], n, |k| at(k)), 0.0, 0.0]
            }
            ManifoldKind::FlatTorus(n_u, n_v) => {
                let (n_u, n_v) = (*n_u, *n_v);
                let f = |iu: usize, iv: usize| values[(iu % n_u) * n_v + iv % n_v];
                let wu = axis_weights(p.0[0], n_u);
                let wv = axis_weights(p.0[1], n_v);
                let du: f64 = wv
                    .iter()
                    .filter(|e| e.1 > 0.0)
                    .map(|(iv, b)| b * axis_slope(p.0[0], n_u, |k| f(k, *iv)))
                    .sum();
                let dv: f64 = wu
                    .iter()
                    .filter(|e| e.1 > 0.0)
                    .map(|(iu, a)| a * axis_slope(p.0[1], n_v, |k| f(*iu, k)))
                    .sum();
                [du, dv, 0.0]
            }
            ManifoldKind::TriangulatedSphere(mesh) => {
                let q = normalize(p.0);
                let (fi, bary) = mesh.locate(q);
                let face = mesh.faces()[fi];
                if let Some(k) = bary.iter().position(|&b| b >= 1.0 - SNAP) {
                    return Ok(self.one_ring_gradient(mesh, values, face[k]));
                }
                let [a, b, c] = face.map(|v| mesh.vertices()[v]);
                let e1 = vec3::sub(b, a);
                let e2 = vec3::sub(c, a);
                let (d1, d2) = (
                    values[face[1]] - values[face[0]],
                    values[face[2]] - values[face[0]],
                );
                let (g11, g12, g22) = (dot(e1, e1), dot(e1, e2), dot(e2, e2));
                let det = g11 * g22 - g12 * g12;
                let alpha = (g22 * d1 - g12 * d2) / det;
                let beta = (g11 * d2 - g12 * d1) / det;
                project_tangent(q, add(scale(e1, alpha), scale(e2, beta)))
            }
        })
    }
}

/// Derivative along one periodic axis of the piecewise-linear interpolant of `f`
/// (indexed by grid position, wrapped by the caller) at coordinate `x`.
fn axis_slope(x: f64, n: usize, f: impl Fn(usize) -> f64) -> f64 {
    let pos = unit_wrap(x) * n as f64;
    let k = pos.floor();
    let s = pos - k;
    let k = k as usize % n;
    let scale = n as f64;
    if s < SNAP {
        (f(k + 1) - f(k + n - 1)) * scale / 2.0
    } else if s > 1.0 - SNAP {
        (f(k + 2) - f(k)) * scale / 2.0
    } else {
        (f(k + 1) - f(k)) * scale
    }
}

/// Orthonormal basis of the tangent plane at a unit vector.
pub(crate) fn tangent_basis(p: Vec3) -> (Vec3, Vec3) {
    let helper = if p[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let e1 = normalize(project_tangent(p, helper));
    let e2 = cross(p, e1);
    (e1, e2)
}

/// Maps a real coordinate into `[0, 1)`.
pub(crate) fn unit_wrap(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Shortest signed offset on the unit circle, `None` exactly at the antipode.
fn periodic_offset(d: f64) -> Option<f64> {
    let r = d - d.round();
    if r.abs() >= 0.5 {
        None
    } else {
        Some(r)
    }
}

fn circle_gap(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(1.0);
    r.min(1.0 - r)
}

/// Two-node linear weights along one periodic axis with `n` cells.
fn axis_weights(x: f64, n: usize) -> [(usize, f64); 2] {
    let pos = unit_wrap(x) * n as f64;
    let k = pos.floor();
    let s = pos - k;
    let k = (k as usize) % n;
    if s < SNAP {
        [(k, 1.0), (0, 0.0)]
    } else if s > 1.0 - SNAP {
        [((k + 1) % n, 1.0), (0, 0.0)]
    } else {
        [(k, 1.0 - s), ((k + 1) % n, s)]
    }
}
