//! Transportation simplex (MODI potentials on a spanning-tree basis) for
//! discrete optimal transport with general weights.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub struct Solution<T> {
    /// Basic cells `(i, j, flow)`; zero flows are degenerate basics.
    pub flows: Vec<(usize, usize, T)>,
}

pub fn solve<T: Real>(supply: &[T], demand: &[T], cost: impl Fn(usize, usize) -> T) -> Result<Solution<T>> {
    let m = supply.len();
    let n = demand.len();
    let c: Vec<T> = (0..m * n).map(|k| cost(k / n, k % n)).collect();
    let cmax = c.iter().fold(T::zero(), |a, &b| a.max(b.abs()));
    let tol = T::epsilon() * T::of(64.0) * cmax.max(T::one());

    // north-west corner start; every step advances exactly one index, so the
    // basis has m + n - 1 cells and spans a tree
    let mut s = supply.to_vec();
    let mut d = demand.to_vec();
    let mut basis: Vec<(usize, usize, T)> = Vec::with_capacity(m + n - 1);
    let (mut i, mut j) = (0, 0);
    loop {
        let x = s[i].min(d[j]).max(T::zero());
        basis.push((i, j, x));
        s[i] -= x;
        d[j] -= x;
        if i == m - 1 && j == n - 1 {
            break;
        }
        if j == n - 1 || (i < m - 1 && s[i] <= d[j]) {
            i += 1;
        } else {
            j += 1;
        }
    }

    let max_iter = 50 * (m + n) * (m + n) + 1000;
    for _ in 0..max_iter {
        let (u, v) = potentials(m, n, &basis, &c);
        // entering cell: most negative reduced cost, lowest (i, j) on ties
        let mut best = (-tol, usize::MAX, usize::MAX);
        for i in 0..m {
            for j in 0..n {
                let r = c[i * n + j] - u[i] - v[j];
                if r < best.0 {
                    best = (r, i, j);
                }
            }
        }
        if best.1 == usize::MAX {
            return Ok(Solution { flows: basis });
        }
        let (ei, ej) = (best.1, best.2);
        let path = tree_path(m, n, &basis, m + ej, ei);
        // path alternates: cells at odd positions lose flow
        let mut theta = T::infinity();
        let mut leave = usize::MAX;
        for (k, &b) in path.iter().enumerate() {
            if k % 2 == 0 {
                let x = basis[b].2;
                if x < theta || (x == theta && leave != usize::MAX && b < leave) {
                    theta = x;
                    leave = b;
                }
            }
        }
        for (k, &b) in path.iter().enumerate() {
            if k % 2 == 0 {
                basis[b].2 -= theta;
            } else {
                basis[b].2 += theta;
            }
        }
        basis[leave] = (ei, ej, theta);
        for b in basis.iter_mut() {
            if b.2 < T::zero() {
                b.2 = T::zero();
            }
        }
    }
    Err(Error::Convergence {
        iterations: max_iter,
        residual: f64::NAN,
    })
}

fn adjacency<T>(m: usize, n: usize, basis: &[(usize, usize, T)]) -> Vec<Vec<(usize, usize)>> {
    // nodes 0..m are rows, m..m+n columns; edge payload is the basis index
    let mut adj = vec![Vec::new(); m + n];
    for (k, (i, j, _)) in basis.iter().enumerate() {
        adj[*i].push((m + *j, k));
        adj[m + *j].push((*i, k));
    }
    adj
}

fn potentials<T: Real>(m: usize, n: usize, basis: &[(usize, usize, T)], c: &[T]) -> (Vec<T>, Vec<T>) {
    let adj = adjacency(m, n, basis);
    let mut pot = vec![T::nan(); m + n];
    let mut seen = vec![false; m + n];
    pot[0] = T::zero();
    seen[0] = true;
    let mut q = VecDeque::from([0usize]);
    while let Some(a) = q.pop_front() {
        for &(b, k) in &adj[a] {
            if seen[b] {
                continue;
            }
            let (i, j, _) = basis[k];
            let cij = c[i * n + j];
            // u_i + v_j = c_ij on basic cells
            pot[b] = cij - pot[a];
            seen[b] = true;
            q.push_back(b);
        }
    }
    let u = pot[..m].to_vec();
    let v = pot[m..].to_vec();
    (u, v)
}

/// Basis indices along the tree path from `from` to `to`, starting with the
/// cell touching `from`.
fn tree_path<T>(m: usize, n: usize, basis: &[(usize, usize, T)], from: usize, to: usize) -> Vec<usize> {
    let adj = adjacency(m, n, basis);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
    let mut seen = vec![false; m + n];
    seen[from] = true;
    let mut q = VecDeque::from([from]);
    while let Some(a) = q.pop_front() {
        if a == to {
            break;
        }
        for &(b, k) in &adj[a] {
            if !seen[b] {
                seen[b] = true;
                parent[b] = Some((a, k));
                q.push_back(b);
            }
        }
    }
    let mut path = Vec::new();
    let mut cur = to;
    while cur != from {
        let (p, k) = parent[cur].expect("basis spans a tree");
        path.push(k);
        cur = p;
    }
    path.reverse();
    path
}
