//! Choice of optimal outer potentials.
//!
//! Optimal duals are unique only up to one shift per connected component of the
//! plan's support graph. The shifts are chosen to maximize the smallest slack
//! `C_ij - U_i - V_j` between components, a minimum-mean-cycle problem on the
//! component graph.

use std::collections::VecDeque;

use crate::inner_ot::SUPPORT_THRESHOLD;

pub(crate) fn centered_potentials(
    pi: &[f64],
    cost: &[f64],
    rows: usize,
    cols: usize,
) -> (Vec<f64>, Vec<f64>) {
    // Nodes 0..rows are rows, rows..rows+cols are columns.
    let total = rows + cols;
    let mut adjacency = vec![Vec::new(); total];
    for i in 0..rows {
        for j in 0..cols {
            if pi[i * cols + j] > SUPPORT_THRESHOLD {
                adjacency[i].push(rows + j);
                adjacency[rows + j].push(i);
            }
        }
    }
    // Potentials within each component, rooted at its first node.
    let mut component = vec![usize::MAX; total];
    let mut value = vec![0.0; total];
    let mut count = 0;
    for start in 0..total {
        if component[start] != usize::MAX {
            continue;
        }
        component[start] = count;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for &y in &adjacency[x] {
                if component[y] == usize::MAX {
                    component[y] = count;
                    let (i, j) = if x < rows {
                        (x, y - rows)
                    } else {
                        (y, x - rows)
                    };
                    value[y] = cost[i * cols + j] - value[x];
                    queue.push_back(y);
                }
            }
        }
        count += 1;
    }
    // Row component A, column component B: s_A - s_B <= w[A][B] - delta.
    let mut w = vec![vec![f64::INFINITY; count]; count];
    for i in 0..rows {
        for j in 0..cols {
            let (a, b) = (component[i], component[rows + j]);
            if a != b {
                let slack = cost[i * cols + j] - value[i] - value[rows + j];
                w[a][b] = w[a][b].min(slack);
            }
        }
    }
    let delta = min_mean_cycle(&w).unwrap_or(0.0);
    let shift = shortest_potentials(&w, delta);
    let mut u: Vec<f64> = (0..rows).map(|i| value[i] + shift[component[i]]).collect();
    let v: Vec<f64> = (0..cols)
        .map(|j| value[rows + j] - shift[component[rows + j]])
        .collect();
    // Polish: U = V^c keeps U c-concave and tight on the support.
    for (i, ui) in u.iter_mut().enumerate() {
        *ui = (0..cols)
            .map(|j| cost[i * cols + j] - v[j])
            .fold(f64::INFINITY, f64::min);
    }
    (u, v)
}

/// Karp's minimum mean cycle of the graph with an edge `B -> A` of weight `w[A][B]`.
fn min_mean_cycle(w: &[Vec<f64>]) -> Option<f64> {
    let k = w.len();
    if k < 2 {
        return None;
    }
    // d[s][x]: lightest walk with exactly s edges ending at x.
    let mut d = vec![vec![f64::INFINITY; k]; k + 1];
    d[0].iter_mut().for_each(|x| *x = 0.0);
    for s in 1..=k {
        for a in 0..k {
            for b in 0..k {
                let cand = d[s - 1][b] + w[a][b];
                if cand < d[s][a] {
                    d[s][a] = cand;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    for x in 0..k {
        if !d[k][x].is_finite() {
            continue;
        }
        let worst = (0..k)
            .filter(|&s| d[s][x].is_finite())
            .map(|s| (d[k][x] - d[s][x]) / (k - s) as f64)
            .fold(f64::NEG_INFINITY, f64::max);
        best = best.min(worst);
    }
    best.is_finite().then_some(best)
}

/// Bellman-Ford solution of `s_A <= s_B + w[A][B] - delta` from a virtual source.
fn shortest_potentials(w: &[Vec<f64>], delta: f64) -> Vec<f64> {
    let k = w.len();
    let mut s = vec![0.0; k];
    for _ in 0..k {
        let mut changed = false;
        for a in 0..k {
            for b in 0..k {
                let cand = s[b] + w[a][b] - delta;
                if cand < s[a] {
                    s[a] = cand;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    s
}
