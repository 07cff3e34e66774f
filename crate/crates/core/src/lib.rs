//! Hierarchical optimal transport on discretized compact manifolds.
//!
//! The crate is organised bottom-up:
//!
//! - [`manifold`]: circle, flat torus and triangulated sphere with geodesic
//!   distances, exp/log maps, vector fields and their flows;
//! - [`measure`]: discrete probability measures, ensembles of them, pushforwards;
//! - [`transport`]: an exact transportation-simplex solver for dense cost matrices;
//! - [`inner_ot`]: transport between two measures (exact and entropic), potentials,
//!   c-transforms, map extraction and duality checks;
//! - [`calculus`]: cylinder functions, directional derivatives along flows and the
//!   derivative of the squared Wasserstein distance;
//! - [`outer_ot`]: transport between ensembles of measures with cost `W2^2` or
//!   `h(W2)`, and the structural checks on its solution.

pub mod calculus;
pub mod error;
pub mod inner_ot;
pub mod io;
pub mod manifold;
pub mod measure;
pub mod outer_ot;
pub mod transport;

pub use error::{Error, Result};
pub use manifold::{DiscreteManifold, ManifoldSpec, Point, TangentVector, VectorField};
pub use measure::{Measure, MeasureEnsemble, PointMap};
