//! Triangulated unit sphere: icosphere construction, OFF loading, point location.

use std::collections::HashMap;

use super::vec3::{add, cross, dot, normalize, scale, sub};
use super::Vec3;
use crate::error::{argument, Error, Result};

/// A closed triangle mesh whose vertices lie on the unit sphere.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereMesh {
    vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    neighbors: Vec<Vec<usize>>,
    vertex_faces: Vec<Vec<usize>>,
}

impl SphereMesh {
    /// Builds a mesh from raw vertices and triangles; vertices are projected radially onto the sphere.
    pub fn new(vertices: Vec<Vec3>, faces: Vec<[usize; 3]>) -> Result<Self> {
        if vertices.len() < 4 || faces.len() < 4 {
            return Err(argument(
                "sphere mesh needs at least 4 vertices and 4 faces",
            ));
        }
        let mut projected = Vec::with_capacity(vertices.len());
        for v in &vertices {
            let r = dot(*v, *v).sqrt();
            if !r.is_finite() || r < 1e-12 {
                return Err(argument("sphere mesh vertex at the origin or non-finite"));
            }
            projected.push(scale(*v, 1.0 / r));
        }
        let n = projected.len();
        let mut neighbors = vec![Vec::new(); n];
        let mut vertex_faces = vec![Vec::new(); n];
        for (fi, f) in faces.iter().enumerate() {
            for k in 0..3 {
                let a = f[k];
                let b = f[(k + 1) % 3];
                if a >= n || b >= n || a == b {
                    return Err(argument(format!("face {fi} has an invalid vertex index")));
                }
                if !neighbors[a].contains(&b) {
                    neighbors[a].push(b);
                }
                if !neighbors[b].contains(&a) {
                    neighbors[b].push(a);
                }
                vertex_faces[a].push(fi);
            }
        }
        for nb in &mut neighbors {
            nb.sort_unstable();
        }
        if let Some(v) = neighbors.iter().position(|nb| nb.is_empty()) {
            return Err(argument(format!("vertex {v} is not used by any face")));
        }
        Ok(Self {
            vertices: projected,
            faces,
            neighbors,
            vertex_faces,
        })
    }

    /// Icosahedron refined `subdivisions` times by edge midpoints (12, 42, 162, 642, ... vertices).
    pub fn icosphere(subdivisions: u32) -> Self {
        let t = (1.0 + 5f64.sqrt()) / 2.0;
        let mut vertices: Vec<Vec3> = vec![
            [-1.0, t, 0.0],
            [1.0, t, 0.0],
            [-1.0, -t, 0.0],
            [1.0, -t, 0.0],
            [0.0, -1.0, t],
            [0.0, 1.0, t],
            [0.0, -1.0, -t],
            [0.0, 1.0, -t],
            [t, 0.0, -1.0],
            [t, 0.0, 1.0],
            [-t, 0.0, -1.0],
            [-t, 0.0, 1.0],
        ]
        .into_iter()
        .map(normalize)
        .collect();
        let mut faces: Vec<[usize; 3]> = vec![
            [0, 11, 5],
            [0, 5, 1],
            [0, 1, 7],
            [0, 7, 10],
            [0, 10, 11],
            [1, 5, 9],
            [5, 11, 4],
            [11, 10, 2],
            [10, 7, 6],
            [7, 1, 8],
            [3, 9, 4],
            [3, 4, 2],
            [3, 2, 6],
            [3, 6, 8],
            [3, 8, 9],
            [4, 9, 5],
            [2, 4, 11],
            [6, 2, 10],
            [8, 6, 7],
            [9, 8, 1],
        ];
        for _ in 0..subdivisions {
            let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
            let mut mid = |a: usize, b: usize, vertices: &mut Vec<Vec3>| -> usize {
                let key = (a.min(b), a.max(b));
                *midpoint.entry(key).or_insert_with(|| {
                    vertices.push(normalize(scale(add(vertices[a], vertices[b]), 0.5)));
                    vertices.len() - 1
                })
            };
            let mut next = Vec::with_capacity(faces.len() * 4);
            for &[a, b, c] in &faces {
                let ab = mid(a, b, &mut vertices);
                let bc = mid(b, c, &mut vertices);
                let ca = mid(c, a, &mut vertices);
                next.push([a, ab, ca]);
                next.push([b, bc, ab]);
                next.push([c, ca, bc]);
                next.push([ab, bc, ca]);
            }
            faces = next;
        }
        Self::new(vertices, faces).expect("icosphere construction is valid")
    }

    /// Parses an OFF document (`OFF`, counts line, vertex lines, `k i0 i1 ...` face lines).
    ///
    /// Polygonal faces are fan-triangulated.
    pub fn from_off(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(str::split_whitespace);
        let header = tokens
            .next()
            .ok_or_else(|| Error::Parse("empty OFF file".into()))?;
        let mut counts = Vec::new();
        if header == "OFF" {
        } else if let Some(rest) = header.strip_prefix("OFF") {
            counts.push(rest.to_string());
        } else {
            return Err(Error::Parse(format!(
                "expected OFF header, found {header:?}"
            )));
        }
        let mut next_num = |what: &str| -> Result<String> {
            tokens
                .next()
                .map(str::to_string)
                .ok_or_else(|| Error::Parse(format!("unexpected end of OFF file reading {what}")))
        };
        while counts.len() < 3 {
            counts.push(next_num("counts")?);
        }
        let parse_usize = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad integer {s:?}")))
        };
        let nv = parse_usize(&counts[0])?;
        let nf = parse_usize(&counts[1])?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let mut v = [0.0; 3];
            for c in &mut v {
                let s = next_num("vertex")?;
                *c = s
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad coordinate {s:?}")))?;
            }
            vertices.push(v);
        }
        let mut faces = Vec::with_capacity(nf);
        for _ in 0..nf {
            let k = parse_usize(&next_num("face size")?)?;
            if k < 3 {
                return Err(Error::Parse(format!("face with {k} vertices")));
            }
            let mut idx = Vec::with_capacity(k);
            for _ in 0..k {
                idx.push(parse_usize(&next_num("face index")?)?);
            }
            for w in 1..k - 1 {
                faces.push([idx[0], idx[w], idx[w + 1]]);
            }
        }
        Self::new(vertices, faces)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[v]
    }

    /// Finds the face whose cone from the origin contains `p`, with normalized
    /// (gnomonic) barycentric coordinates.
    pub fn locate(&self, p: Vec3) -> (usize, [f64; 3]) {
        // Try the faces around the nearest vertex first; fall back to a full scan.
        let nearest = (0..self.vertices.len())
            .max_by(|&a, &b| dot(self.vertices[a], p).total_cmp(&dot(self.vertices[b], p)))
            .expect("non-empty mesh");
        let mut best: Option<(usize, [f64; 3], f64)> = None;
        let consider = |fi: usize, best: &mut Option<(usize, [f64; 3], f64)>| {
            if let Some(bary) = self.cone_coordinates(fi, p) {
                let worst = bary[0].min(bary[1]).min(bary[2]);
                if best.as_ref().is_none_or(|b| worst > b.2) {
                    *best = Some((fi, bary, worst));
                }
            }
        };
        for &fi in &self.vertex_faces[nearest] {
            consider(fi, &mut best);
        }
        if best.as_ref().is_none_or(|b| b.2 < -1e-12) {
            for fi in 0..self.faces.len() {
                consider(fi, &mut best);
            }
        }
        let (fi, bary, _) = best.expect("every direction lies in some face cone");
        (fi, bary)
    }

    /// Solves `p = a*A + b*B + c*C` for the face and normalizes to sum 1.
    /// Returns `None` when `p` points away from the face.
    fn cone_coordinates(&self, fi: usize, p: Vec3) -> Option<[f64; 3]> {
        let [a, b, c] = self.faces[fi].map(|i| self.vertices[i]);
        let det = dot(a, cross(b, c));
        if det.abs() < 1e-300 {
            return None;
        }
        let alpha = dot(p, cross(b, c)) / det;
        let beta = dot(a, cross(p, c)) / det;
        let gamma = dot(a, cross(b, p)) / det;
        let sum = alpha + beta + gamma;
        if sum <= 0.0 {
            return None;
        }
        Some([alpha / sum, beta / sum, gamma / sum])
    }

    /// Great-circle length of the edge `a -> b`.
    pub(crate) fn arc(&self, a: usize, b: usize) -> f64 {
        angle_between(self.vertices[a], self.vertices[b])
    }
}

/// Angle between two unit vectors, accurate near 0 and pi.
pub(crate) fn angle_between(p: Vec3, q: Vec3) -> f64 {
    let c = cross(p, q);
    dot(c, c).sqrt().atan2(dot(p, q))
}

/// Component of `v` orthogonal to the unit vector `p`.
pub(crate) fn project_tangent(p: Vec3, v: Vec3) -> Vec3 {
    sub(v, scale(p, dot(p, v)))
}
