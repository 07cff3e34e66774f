use super::vec3::{add, normalize, scale};
use super::{DiscreteManifold, ManifoldKind, Point, VectorField};
use crate::error::{argument, Result};

const MAX_STEP: f64 = 0.01;
const MIN_STEPS: usize = 100;

/// Time-`t` flow of `w` started at `x0`, by classical RK4 with step
/// `min(0.01, |t| / 100)`. The field is interpolated between nodes. Negative
/// times integrate backwards; `t = 0` and the zero field return `x0` unchanged.
pub fn integrate_flow(m: &DiscreteManifold, w: &VectorField, t: f64, x0: Point) -> Result<Point> {
    if w.len() != m.len() {
        return Err(argument(format!(
            "vector field has {} samples, manifold has {} nodes",
            w.len(),
            m.len()
        )));
    }
    if !t.is_finite() {
        return Err(argument("flow time must be finite"));
    }
    if t == 0.0 || w.sup_norm() == 0.0 {
        return Ok(x0);
    }
    let steps = MIN_STEPS.max((t.abs() / MAX_STEP).ceil() as usize);
    let h = t / steps as f64;
    let on_sphere = matches!(m.kind(), ManifoldKind::TriangulatedSphere(_));
    // Circle and torus integrate in unwrapped chart coordinates; the sphere is
    // re-projected after every stage.
    let settle = |x: [f64; 3]| if on_sphere { normalize(x) } else { x };
    let field = |x: [f64; 3]| w.evaluate(m, m.wrap(Point(x)));
    let mut x = x0.0;
    for _ in 0..steps {
        let k1 = field(x);
        let k2 = field(settle(add(x, scale(k1, h / 2.0))));
        let k3 = field(settle(add(x, scale(k2, h / 2.0))));
        let k4 = field(settle(add(x, scale(k3, h))));
        let incr = add(add(k1, scale(k2, 2.0)), add(scale(k3, 2.0), k4));
        x = settle(add(x, scale(incr, h / 6.0)));
    }
    Ok(m.wrap(Point(x)))
}
