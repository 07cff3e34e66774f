//! Outer costs `W2^2` and `h(W2)` for strictly increasing, strictly convex `h`.

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

/// Number of grid points used to validate `h` and to run the identity checks.
pub const VALIDATION_POINTS: usize = 100;

/// Natural cubic spline through `(s_k, h_k)`, extended linearly outside the knots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabulatedH {
    knots: Vec<f64>,
    values: Vec<f64>,
    /// Second derivatives at the knots.
    moments: Vec<f64>,
}

impl TabulatedH {
    pub fn new(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let n = knots.len();
        if n < 3 || values.len() != n {
            return Err(argument("a tabulated h needs at least three (s, h) pairs"));
        }
        if knots.iter().chain(&values).any(|x| !x.is_finite()) {
            return Err(argument("tabulated h contains non-finite entries"));
        }
        if knots.windows(2).any(|w| w[1] <= w[0]) {
            return Err(argument("tabulated h knots must be strictly increasing"));
        }
        // Tridiagonal system for the interior moments (Thomas algorithm).
        let h: Vec<f64> = knots.windows(2).map(|w| w[1] - w[0]).collect();
        let mut moments = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for i in 1..n - 1 {
            diag[i] = 2.0 * (h[i - 1] + h[i]);
            rhs[i] =
                6.0 * ((values[i + 1] - values[i]) / h[i] - (values[i] - values[i - 1]) / h[i - 1]);
        }
        for i in 2..n - 1 {
            let f = h[i - 1] / diag[i - 1];
            diag[i] -= f * h[i - 1];
            rhs[i] -= f * rhs[i - 1];
        }
        for i in (1..n - 1).rev() {
            let next = if i + 1 < n - 1 { moments[i + 1] } else { 0.0 };
            moments[i] = (rhs[i] - h[i] * next) / diag[i];
        }
        Ok(Self {
            knots,
            values,
            moments,
        })
    }

    /// `(h, h', h'')` at `s`.
    fn eval(&self, s: f64) -> (f64, f64, f64) {
        let n = self.knots.len();
        let (x, y, m) = (&self.knots, &self.values, &self.moments);
        if s <= x[0] || s >= x[n - 1] {
            let (k, dir) = if s <= x[0] { (0, 1) } else { (n - 2, 0) };
            let d = x[k + 1] - x[k];
            let slope = (y[k + 1] - y[k]) / d
                + if dir == 1 {
                    -d * (2.0 * m[k] + m[k + 1]) / 6.0
                } else {
                    d * (m[k] + 2.0 * m[k + 1]) / 6.0
                };
            let end = if dir == 1 { 0 } else { n - 1 };
            return (y[end] + slope * (s - x[end]), slope, 0.0);
        }
        let k = x.partition_point(|&t| t <= s).saturating_sub(1).min(n - 2);
        let d = x[k + 1] - x[k];
        let a = (x[k + 1] - s) / d;
        let b = (s - x[k]) / d;
        let value = a * y[k]
            + b * y[k + 1]
            + ((a * a * a - a) * m[k] + (b * b * b - b) * m[k + 1]) * d * d / 6.0;
        let slope = (y[k + 1] - y[k]) / d - (3.0 * a * a - 1.0) * d * m[k] / 6.0
            + (3.0 * b * b - 1.0) * d * m[k + 1] / 6.0;
        (value, slope, a * m[k] + b * m[k + 1])
    }
}

/// The function `h` of an `h(W2)` cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HFunction {
    /// `h(s) = s^2`.
    Square,
    /// `h(s) = s^4`.
    Quartic,
    /// `h(s) = cosh(s) - 1`.
    CoshMinusOne,
    Tabulated(TabulatedH),
}

impl HFunction {
    /// Built-in functions by name: `square`, `quartic`, `cosh_minus_one`.
    pub fn named(name: &str) -> Result<Self> {
        match name {
            "square" => Ok(Self::Square),
            "quartic" => Ok(Self::Quartic),
            "cosh_minus_one" => Ok(Self::CoshMinusOne),
            other => Err(argument(format!("unknown h function {other:?}"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Square => "square",
            Self::Quartic => "quartic",
            Self::CoshMinusOne => "cosh_minus_one",
            Self::Tabulated(_) => "tabulated",
        }
    }

    pub fn h(&self, s: f64) -> f64 {
        match self {
            Self::Square => s * s,
            Self::Quartic => (s * s) * (s * s),
            // 2 sinh^2(s/2) avoids cancellation near 0.
            Self::CoshMinusOne => 2.0 * (0.5 * s).sinh().powi(2),
            Self::Tabulated(t) => t.eval(s).0,
        }
    }

    pub fn h_prime(&self, s: f64) -> f64 {
        match self {
            Self::Square => 2.0 * s,
            Self::Quartic => 4.0 * s * s * s,
            Self::CoshMinusOne => s.sinh(),
            Self::Tabulated(t) => t.eval(s).1,
        }
    }

    pub fn h_second(&self, s: f64) -> f64 {
        match self {
            Self::Square => 2.0,
            Self::Quartic => 12.0 * s * s,
            Self::CoshMinusOne => s.cosh(),
            Self::Tabulated(t) => t.eval(s).2,
        }
    }

    /// `h_bar(x) = h(sqrt x)`, the cost as a function of `W2^2`.
    pub fn h_bar(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Self::Square => x,
            Self::Quartic => x * x,
            _ => self.h(x.sqrt()),
        }
    }

    /// `h_bar'(x) = h'(sqrt x) / (2 sqrt x)`.
    pub fn h_bar_prime(&self, x: f64) -> f64 {
        let x = x.max(0.0);
        match self {
            Self::Square => 1.0,
            Self::Quartic => 2.0 * x,
            Self::CoshMinusOne if x < 1e-12 => 0.5,
            Self::Tabulated(t) if x < 1e-24 => 0.5 * t.eval(0.0).2,
            _ => {
                let s = x.sqrt();
                self.h_prime(s) / (2.0 * s)
            }
        }
    }
}

/// Outer cost between two measures as a function of their squared distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    SquaredW2,
    HOfW2 {
        h: HFunction,
        /// Upper end of the validation interval `(0, diam]`.
        diam: f64,
    },
}

impl CostSpec {
    /// An `h(W2)` cost; `h' > 0` and `h'' > 0` are checked on a grid over `(0, diam]`.
    pub fn h_of_w2(h: HFunction, diam: f64) -> Result<Self> {
        if !(diam > 0.0 && diam.is_finite()) {
            return Err(argument("diameter must be positive and finite"));
        }
        for s in validation_grid(0.0, diam) {
            let (d1, d2) = (h.h_prime(s), h.h_second(s));
            if !(d1 > 0.0) || !(d2 > 0.0) {
                return Err(Error::Validation(format!(
                    "h = {} is not strictly increasing and convex at s = {s}: h' = {d1}, h'' = {d2}",
                    h.name()
                )));
            }
        }
        Ok(Self::HOfW2 { h, diam })
    }

    /// Cost from a squared Wasserstein distance.
    pub fn from_w2_squared(&self, w2sq: f64) -> f64 {
        match self {
            Self::SquaredW2 => w2sq,
            Self::HOfW2 { h, .. } => h.h_bar(w2sq),
        }
    }

    /// Derivative of the cost with respect to `W2^2`.
    pub fn derivative_in_w2_squared(&self, w2sq: f64) -> f64 {
        match self {
            Self::SquaredW2 => 1.0,
            Self::HOfW2 { h, .. } => h.h_bar_prime(w2sq),
        }
    }

    pub fn h(&self) -> Option<&HFunction> {
        match self {
            Self::SquaredW2 => None,
            Self::HOfW2 { h, .. } => Some(h),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::SquaredW2 => "squared_w2".into(),
            Self::HOfW2 { h, .. } => format!("h_of_w2({})", h.name()),
        }
    }
}

/// `VALIDATION_POINTS` equispaced points in `(lo, hi]`.
pub(crate) fn validation_grid(lo: f64, hi: f64) -> impl Iterator<Item = f64> {
    (1..=VALIDATION_POINTS).map(move |k| lo + (hi - lo) * k as f64 / VALIDATION_POINTS as f64)
}

/// Five-point central difference of `h_bar` at `x`.
pub(crate) fn h_bar_prime_fd(h: &HFunction, x: f64) -> f64 {
    let d = (0.25 * x).min(1e-3);
    let f = |y: f64| h.h_bar(y);
    (f(x - 2.0 * d) - 8.0 * f(x - d) + 8.0 * f(x + d) - f(x + 2.0 * d)) / (12.0 * d)
}
