//! Independent reference implementations used by the integration and
//! acceptance tests. Written for clarity, not speed.
#![allow(dead_code)]

use std::collections::VecDeque;

/// Reaction terms of one isolated node.
#[derive(Clone, Copy)]
pub struct Ode {
    pub a: f64,
    pub b: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Ode {
    pub fn rhs(&self, u: f64, v: f64) -> (f64, f64) {
        (
            self.c1 * u * (u - self.a) * (1.0 - u) - self.c2 * u * v,
            self.b * (u - v),
        )
    }

    fn rk4(&self, (u, v): (f64, f64), h: f64) -> (f64, f64) {
        let k1 = self.rhs(u, v);
        let k2 = self.rhs(u + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = self.rhs(u + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = self.rhs(u + h * k3.0, v + h * k3.1);
        (
            u + h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0),
            v + h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1),
        )
    }

    /// Adaptive RK4 by step doubling; returns the state at each multiple of `dt`.
    pub fn solve(&self, start: (f64, f64), dt: f64, samples: usize, tol: f64) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(samples + 1);
        let mut y = start;
        let mut h = dt;
        out.push(y);
        for _ in 0..samples {
            let mut left = dt;
            while left > 0.0 {
                let step = h.min(left);
                let full = self.rk4(y, step);
                let half = self.rk4(self.rk4(y, step / 2.0), step / 2.0);
                let err = (full.0 - half.0).abs().max((full.1 - half.1).abs()) / 15.0;
                if err <= tol || step < 1e-9 {
                    y = half;
                    left -= step;
                    if err < tol / 64.0 {
                        h = (step * 2.0).min(dt);
                    }
                } else {
                    h = step / 2.0;
                }
            }
            out.push(y);
        }
        out
    }
}

/// Laplacian with zero-flux boundaries: the grid is surrounded by ghost cells
/// and every non-conductive or out-of-grid neighbour copies the centre value.
pub fn ghost_laplacian(values: &[Option<f64>], width: usize, height: usize, dx: f64) -> Vec<Option<f64>> {
    let pw = width + 2;
    let mut padded = vec![None; pw * (height + 2)];
    for y in 0..height {
        for x in 0..width {
            padded[(y + 1) * pw + x + 1] = values[y * width + x];
        }
    }
    let mut out = vec![None; width * height];
    for y in 0..height {
        for x in 0..width {
            let p = (y + 1) * pw + x + 1;
            let Some(c) = padded[p] else { continue };
            let around: f64 = [p - 1, p + 1, p - pw, p + pw].iter().map(|&q| padded[q].unwrap_or(c)).sum();
            out[y * width + x] = Some((around - 4.0 * c) / (dx * dx));
        }
    }
    out
}

/// Breadth-first distances from every vertex; `None` when unreachable.
pub fn bfs_distances(successor: &[usize]) -> Vec<Vec<Option<u32>>> {
    let n = successor.len();
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut queue = VecDeque::from([s]);
            while let Some(v) = queue.pop_front() {
                let w = successor[v];
                if dist[w].is_none() {
                    dist[w] = Some(dist[v].unwrap() + 1);
                    queue.push_back(w);
                }
            }
            dist
        })
        .collect()
}

/// Eccentricity over reachable targets, then radius and diameter.
pub fn eccentricities(dist: &[Vec<Option<u32>>]) -> (Vec<usize>, usize, usize) {
    let ecc: Vec<usize> = dist
        .iter()
        .map(|row| row.iter().flatten().map(|&d| d as usize).max().unwrap_or(0))
        .collect();
    let radius = *ecc.iter().min().unwrap();
    let diameter = *ecc.iter().max().unwrap();
    (ecc, radius, diameter)
}

/// Hamming distance to the nearest affine function, by enumeration.
pub fn nonlinearity_by_enumeration(table: &[bool], k: usize) -> usize {
    let n = 1usize << k;
    let mut best = usize::MAX;
    for mask in 0..n {
        for constant in [false, true] {
            let d = (0..n)
                .filter(|&x| table[x] != (((x & mask).count_ones() % 2 == 1) ^ constant))
                .count();
            best = best.min(d);
        }
    }
    best
}

/// Algebraic normal form coefficients by the subset-sum definition.
pub fn anf_by_subsets(table: &[bool]) -> Vec<bool> {
    let n = table.len();
    (0..n)
        .map(|m| (0..n).filter(|&s| s & m == s).fold(false, |acc, s| acc ^ table[s]))
        .collect()
}

pub fn sensitivity_brute(table: &[bool], k: usize) -> usize {
    (0..table.len())
        .map(|x| (0..k).filter(|&i| table[x] != table[x ^ (1 << i)]).count())
        .max()
        .unwrap_or(0)
}

/// Largest number of disjoint sensitive blocks, by search over block lists.
pub fn block_sensitivity_brute(table: &[bool], k: usize) -> usize {
    let n = 1usize << k;
    let mut best = 0;
    for x in 0..n {
        let sensitive: Vec<usize> = (1..n).filter(|&b| table[x] != table[x ^ b]).collect();
        best = best.max(max_disjoint(&sensitive, 0, 0));
    }
    best
}

fn max_disjoint(blocks: &[usize], from: usize, used: usize) -> usize {
    let mut best = 0;
    for i in from..blocks.len() {
        if blocks[i] & used == 0 {
            best = best.max(1 + max_disjoint(blocks, i + 1, used | blocks[i]));
        }
    }
    best
}

/// Smallest set of fixed coordinates forcing the value, maximised over inputs.
pub fn certificate_brute(table: &[bool], k: usize) -> usize {
    let n = 1usize << k;
    (0..n)
        .map(|x| {
            (0..n)
                .filter(|&fixed| (0..n).all(|y| (y ^ x) & fixed != 0 || table[y] == table[x]))
                .map(|fixed| fixed.count_ones() as usize)
                .min()
                .unwrap()
        })
        .max()
        .unwrap()
}

/// Walsh coefficients straight from the definition.
pub fn walsh_direct(table: &[bool]) -> Vec<i64> {
    let n = table.len();
    (0..n)
        .map(|w| {
            (0..n)
                .map(|x| {
                    let sign = table[x] ^ ((x & w).count_ones() % 2 == 1);
                    if sign {
                        -1
                    } else {
                        1
                    }
                })
                .sum()
        })
        .collect()
}
