//! Profile (skyline) storage with an unpivoted LU factorization.
//!
//! The pattern is symmetric while the values need not be. Row `i` of the
//! strict lower triangle and column `i` of the strict upper triangle both
//! start at `first[i]`, so `L` rows and `U` columns are contiguous slices.

use crate::error::{FemError, Result};

#[derive(Clone, Debug)]
pub struct SkylineMatrix {
    n: usize,
    first: Vec<usize>,
    ptr: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
    factored: bool,
}

impl SkylineMatrix {
    /// Empty matrix whose row/column `i` reaches back to `first[i] ≤ i`.
    pub fn new(first: Vec<usize>) -> Self {
        let n = first.len();
        let mut ptr = Vec::with_capacity(n + 1);
        ptr.push(0);
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "profile start beyond the diagonal");
            ptr.push(ptr[i] + (i - f));
        }
        let len = ptr[n];
        SkylineMatrix { n, first, ptr, lower: vec![0.0; len], upper: vec![0.0; len], diag: vec![0.0; n], factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of stored off-diagonal entries in each triangle.
    pub fn profile_len(&self) -> usize {
        self.ptr[self.n]
    }

    pub fn clear(&mut self) {
        self.lower.iter_mut().for_each(|v| *v = 0.0);
        self.upper.iter_mut().for_each(|v| *v = 0.0);
        self.diag.iter_mut().for_each(|v| *v = 0.0);
        self.factored = false;
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i > j {
            (j >= self.first[i]).then(|| self.ptr[i] + j - self.first[i])
        } else {
            (i >= self.first[j]).then(|| self.ptr[j] + i - self.first[j])
        }
    }

    /// Adds `v` to entry `(i, j)`; panics outside the profile.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if i == j {
            self.diag[i] += v;
            return;
        }
        let s = self.slot(i, j).expect("entry outside the skyline profile");
        if i > j {
            self.lower[s] += v;
        } else {
            self.upper[s] += v;
        }
    }

    /// Entry `(i, j)` of the assembled matrix (zero outside the profile).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert!(!self.factored, "matrix already factored");
        if i == j {
            return self.diag[i];
        }
        match self.slot(i, j) {
            Some(s) if i > j => self.lower[s],
            Some(s) => self.upper[s],
            None => 0.0,
        }
    }

    pub fn max_diagonal(&self) -> f64 {
        self.diag.iter().fold(0.0, |m, d| m.max(d.abs()))
    }

    /// `y = A x` on the assembled (unfactored) matrix.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert!(!self.factored, "matrix already factored");
        let mut y: Vec<f64> = (0..self.n).map(|i| self.diag[i] * x[i]).collect();
        for i in 0..self.n {
            let f = self.first[i];
            for (k, j) in (f..i).enumerate() {
                y[i] += self.lower[self.ptr[i] + k] * x[j];
                y[j] += self.upper[self.ptr[i] + k] * x[i];
            }
        }
        y
    }

    /// In-place `A = L U` with unit lower `L`. A pivot below
    /// `1e-14 · max|A_ii|` raises [`FemError::SingularSystem`].
    pub fn factor(&mut self) -> Result<()> {
        let floor = 1e-14 * self.max_diagonal();
        for j in 0..self.n {
            let fj = self.first[j];
            let pj = self.ptr[j];
            for i in fj..j {
                let fi = self.first[i];
                let pi = self.ptr[i];
                let k0 = fi.max(fj);
                let li = &self.lower[pi + k0 - fi..pi + i - fi];
                let uj = &self.upper[pj + k0 - fj..pj + i - fj];
                let u_ij = self.upper[pj + i - fj] - dot(li, uj);
                self.upper[pj + i - fj] = u_ij;

                let lj = &self.lower[pj + k0 - fj..pj + i - fj];
                let ui = &self.upper[pi + k0 - fi..pi + i - fi];
                let l_ji = (self.lower[pj + i - fj] - dot(lj, ui)) / self.diag[i];
                self.lower[pj + i - fj] = l_ji;
            }
            let lj = &self.lower[pj..pj + j - fj];
            let uj = &self.upper[pj..pj + j - fj];
            let d = self.diag[j] - dot(lj, uj);
            if !(d.abs() > floor) {
                self.factored = true;
                return Err(FemError::SingularSystem(j));
            }
            self.diag[j] = d;
        }
        self.factored = true;
        Ok(())
    }

    /// Solves with the factors from [`Self::factor`].
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert!(self.factored, "factor before solving");
        let mut x = b.to_vec();
        for i in 0..self.n {
            let f = self.first[i];
            let p = self.ptr[i];
            x[i] -= dot(&self.lower[p..p + i - f], &x[f..i]);
        }
        for j in (0..self.n).rev() {
            x[j] /= self.diag[j];
            let xj = x[j];
            let f = self.first[j];
            let p = self.ptr[j];
            for (k, xi) in x[f..j].iter_mut().enumerate() {
                *xi -= self.upper[p + k] * xj;
            }
        }
        x
    }
}

/// Dot product with independent partial sums so the loop vectorizes.
fn dot(a: &[f64], b: &[f64]) -> f64 {
    const W: usize = 16;
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; W];
    let (ca, cb) = (a.chunks_exact(W), b.chunks_exact(W));
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for k in 0..W {
            acc[k] += x[k] * y[k];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    acc.iter().sum::<f64>() + tail
}

/// Reverse Cuthill–McKee ordering of a graph given by adjacency lists.
///
/// Each connected component starts from a pseudo-peripheral vertex found by
/// repeated breadth-first sweeps. Returns `order[k] = vertex`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let degree: Vec<usize> = adj.iter().map(|a| a.len()).collect();
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut seeds: Vec<usize> = (0..n).collect();
    seeds.sort_by_key(|&v| (degree[v], v));
    for &s in &seeds {
        if visited[s] {
            continue;
        }
        let start = pseudo_peripheral(adj, &degree, s);
        let begin = order.len();
        visited[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&w| !visited[w]).collect();
            next.sort_by_key(|&w| (degree[w], w));
            for w in next {
                visited[w] = true;
                order.push(w);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_levels(adj: &[Vec<usize>], start: usize) -> Vec<Vec<usize>> {
    let mut level = std::collections::HashMap::new();
    level.insert(start, 0usize);
    let mut levels = vec![vec![start]];
    loop {
        let mut next = Vec::new();
        for &v in levels.last().unwrap() {
            for &w in &adj[v] {
                if let std::collections::hash_map::Entry::Vacant(e) = level.entry(w) {
                    e.insert(levels.len());
                    next.push(w);
                }
            }
        }
        if next.is_empty() {
            return levels;
        }
        next.sort_unstable();
        levels.push(next);
    }
}

fn pseudo_peripheral(adj: &[Vec<usize>], degree: &[usize], start: usize) -> usize {
    let mut v = start;
    let mut depth = bfs_levels(adj, v).len();
    loop {
        let levels = bfs_levels(adj, v);
        let cand = *levels.last().unwrap().iter().min_by_key(|&&w| (degree[w], w)).unwrap();
        let d = bfs_levels(adj, cand).len();
        if d > depth {
            depth = d;
            v = cand;
        } else {
            return v;
        }
    }
}
