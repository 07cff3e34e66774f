//! Exact solver for the dense transportation problem
//!
//! `min sum_ij c_ij x_ij` subject to `sum_j x_ij = a_i`, `sum_i x_ij = b_j`, `x >= 0`.
//!
//! This is the network simplex specialised to the complete bipartite graph: the
//! basis is a spanning tree on the `n + m` row/column nodes, node potentials are
//! read off the tree, entering cells are chosen by block pricing, and pivots run
//! around the unique cycle closed by the entering cell. After a long run of
//! degenerate pivots the solver switches to Bland's rule, which cannot cycle.

use crate::error::{argument, Error, Result};

const NONE: usize = usize::MAX;

/// Optimal basic solution together with the dual potentials of its basis.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportSolution {
    /// Row-major `n x m` flows.
    pub plan: Vec<f64>,
    /// Row potentials.
    pub u: Vec<f64>,
    /// Column potentials.
    pub v: Vec<f64>,
    /// `sum_ij c_ij x_ij` for the cost the solver was given.
    pub cost: f64,
    pub pivots: usize,
    /// The `n + m - 1` basic cells (row-major indices) of the final basis.
    pub basis: Vec<usize>,
}

/// Total-mass mismatch tolerated between the two marginals.
pub const MARGINAL_TOL: f64 = 1e-9;

pub fn solve_transport(a: &[f64], b: &[f64], cost: &[f64]) -> Result<TransportSolution> {
    let (n, m) = (a.len(), b.len());
    if n == 0 || m == 0 {
        return Err(argument("transport problem with an empty marginal"));
    }
    if cost.len() != n * m {
        return Err(argument(format!(
            "cost matrix has {} entries, expected {n} x {m}",
            cost.len()
        )));
    }
    if a.iter().chain(b).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(argument("marginals must be nonnegative and finite"));
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(argument("cost matrix must be finite"));
    }
    let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
    if (sa - sb).abs() > MARGINAL_TOL {
        return Err(argument(format!(
            "marginal total masses differ: {sa} vs {sb}"
        )));
    }
    let mut s = Simplex::new(a, b, cost);
    s.run()?;
    Ok(s.finish())
}

struct Simplex<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    flow: Vec<f64>,
    basic: Vec<bool>,
    adj: Vec<Vec<usize>>,
    parent: Vec<usize>,
    depth: Vec<usize>,
    pot: Vec<f64>,
    tol: f64,
    cursor: usize,
    block: usize,
    pivots: usize,
}

impl<'a> Simplex<'a> {
    fn new(a: &[f64], b: &[f64], cost: &'a [f64]) -> Self {
        let (n, m) = (a.len(), b.len());
        let cmax = cost.iter().fold(0.0f64, |acc, c| acc.max(c.abs()));
        let mut s = Self {
            n,
            m,
            cost,
            flow: vec![0.0; n * m],
            basic: vec![false; n * m],
            adj: vec![Vec::new(); n + m],
            parent: vec![NONE; n + m],
            depth: vec![0; n + m],
            pot: vec![0.0; n + m],
            tol: 1e-12 * cmax,
            cursor: 0,
            block: ((n * m) as f64).sqrt().ceil().max(16.0) as usize,
            pivots: 0,
        };
        s.northwest_corner(a, b);
        s.rebuild_tree();
        s
    }

    /// Staircase starting basis: always exactly `n + m - 1` cells forming a tree.
    fn northwest_corner(&mut self, a: &[f64], b: &[f64]) {
        let (n, m) = (self.n, self.m);
        let mut ra = a.to_vec();
        let mut rb = b.to_vec();
        let (mut i, mut j) = (0, 0);
        loop {
            let cell = i * m + j;
            let last_row = i == n - 1;
            let last_col = j == m - 1;
            if last_row && last_col {
                // Whatever mass is left over is rounding noise between the totals.
                self.add_basic(cell, ra[i].min(rb[j]).max(0.0));
                break;
            }
            let take_row = !last_row && (last_col || ra[i] <= rb[j]);
            if take_row {
                let q = ra[i].min(rb[j]).max(0.0);
                self.add_basic(cell, q);
                rb[j] = (rb[j] - q).max(0.0);
                ra[i] = 0.0;
                i += 1;
            } else {
                let q = rb[j].min(ra[i]).max(0.0);
                self.add_basic(cell, q);
                ra[i] = (ra[i] - q).max(0.0);
                rb[j] = 0.0;
                j += 1;
            }
        }
    }

    fn add_basic(&mut self, cell: usize, q: f64) {
        let (i, j) = (cell / self.m, cell % self.m);
        self.flow[cell] = q;
        self.basic[cell] = true;
        self.adj[i].push(self.n + j);
        self.adj[self.n + j].push(i);
    }

    fn remove_basic(&mut self, cell: usize) {
        let (i, j) = (cell / self.m, cell % self.m);
        self.flow[cell] = 0.0;
        self.basic[cell] = false;
        let col = self.n + j;
        self.adj[i].retain(|&x| x != col);
        self.adj[col].retain(|&x| x != i);
    }

    #[inline]
    fn cell_between(&self, x: usize, y: usize) -> usize {
        let (r, c) = if x < self.n {
            (x, y - self.n)
        } else {
            (y, x - self.n)
        };
        r * self.m + c
    }

    /// Recomputes parents, depths and potentials (`u_0 = 0`, `u_i + v_j = c_ij` on the basis).
    fn rebuild_tree(&mut self) {
        let total = self.n + self.m;
        self.parent.iter_mut().for_each(|p| *p = NONE);
        let mut seen = vec![false; total];
        let mut stack = vec![0usize];
        seen[0] = true;
        self.depth[0] = 0;
        self.pot[0] = 0.0;
        while let Some(x) = stack.pop() {
            for k in 0..self.adj[x].len() {
                let y = self.adj[x][k];
                if seen[y] {
                    continue;
                }
                seen[y] = true;
                self.parent[y] = x;
                self.depth[y] = self.depth[x] + 1;
                let c = self.cost[self.cell_between(x, y)];
                self.pot[y] = c - self.pot[x];
                stack.push(y);
            }
        }
        debug_assert!(seen.iter().all(|&s| s), "basis must span all nodes");
    }

    #[inline]
    fn reduced_cost(&self, cell: usize) -> f64 {
        let (i, j) = (cell / self.m, cell % self.m);
        self.cost[cell] - self.pot[i] - self.pot[self.n + j]
    }

    /// Block pricing: most negative reduced cost within the first block that has one.
    fn price_block(&mut self) -> Option<usize> {
        let total = self.n * self.m;
        let mut best = None;
        let mut best_rc = -self.tol;
        let mut scanned = 0;
        while scanned < total {
            let end = (scanned + self.block).min(total);
            while scanned < end {
                let cell = self.cursor;
                self.cursor = if self.cursor + 1 == total {
                    0
                } else {
                    self.cursor + 1
                };
                scanned += 1;
                if self.basic[cell] {
                    continue;
                }
                let rc = self.reduced_cost(cell);
                if rc < best_rc {
                    best_rc = rc;
                    best = Some(cell);
                }
            }
            if best.is_some() {
                return best;
            }
        }
        None
    }

    /// Bland's rule: lowest-index cell with a negative reduced cost.
    fn price_bland(&self) -> Option<usize> {
        (0..self.n * self.m).find(|&cell| !self.basic[cell] && self.reduced_cost(cell) < -self.tol)
    }

    /// Cells of the cycle closed by `entering`, in order, starting at its column;
    /// even positions lose flow, odd positions gain it.
    fn cycle(&self, entering: usize) -> Vec<usize> {
        let (i, j) = (entering / self.m, entering % self.m);
        let (mut a, mut b) = (i, self.n + j);
        let mut from_row = vec![a];
        let mut from_col = vec![b];
        while a != b {
            if self.depth[a] >= self.depth[b] {
                a = self.parent[a];
                from_row.push(a);
            } else {
                b = self.parent[b];
                from_col.push(b);
            }
        }
        // Both paths end at the common ancestor; keep it once.
        from_row.pop();
        let mut nodes = from_col;
        nodes.extend(from_row.into_iter().rev());
        nodes
            .windows(2)
            .map(|w| self.cell_between(w[0], w[1]))
            .collect()
    }

    fn run(&mut self) -> Result<()> {
        let max_pivots = 50 * self.n * self.m + 10_000;
        let degenerate_limit = 20 * (self.n + self.m);
        let mut degenerate_run = 0;
        let mut bland = false;
        loop {
            let entering = if bland {
                self.price_bland()
            } else {
                self.price_block()
            };
            let Some(entering) = entering else {
                return Ok(());
            };
            let cycle = self.cycle(entering);
            let mut theta = f64::INFINITY;
            let mut leaving = NONE;
            for &cell in cycle.iter().step_by(2) {
                let f = self.flow[cell];
                let better = f < theta || (bland && f == theta && cell < leaving);
                if better {
                    theta = f;
                    leaving = cell;
                }
            }
            for (k, &cell) in cycle.iter().enumerate() {
                if k % 2 == 0 {
                    self.flow[cell] = (self.flow[cell] - theta).max(0.0);
                } else {
                    self.flow[cell] += theta;
                }
            }
            self.remove_basic(leaving);
            self.add_basic(entering, theta);
            self.rebuild_tree();
            self.pivots += 1;
            if theta == 0.0 {
                degenerate_run += 1;
                if degenerate_run > degenerate_limit {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            if self.pivots > max_pivots {
                let worst = (0..self.n * self.m)
                    .filter(|&c| !self.basic[c])
                    .map(|c| self.reduced_cost(c))
                    .fold(0.0, f64::min);
                return Err(Error::Convergence {
                    solver: "transportation simplex",
                    iterations: self.pivots,
                    residual: -worst,
                });
            }
        }
    }

    fn finish(self) -> TransportSolution {
        let cost = self.flow.iter().zip(self.cost).map(|(x, c)| x * c).sum();
        let basis = (0..self.n * self.m).filter(|&c| self.basic[c]).collect();
        TransportSolution {
            u: self.pot[..self.n].to_vec(),
            v: self.pot[self.n..].to_vec(),
            plan: self.flow,
            cost,
            pivots: self.pivots,
            basis,
        }
    }
}
