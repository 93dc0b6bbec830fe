//! Metrics of the functional graph `s -> E(s)` of a mapping.
//!
//! Every vertex has exactly one outgoing edge, so the set reachable from a
//! vertex is the walk that starts there and runs into a cycle. Distances,
//! eccentricities and closeness are read off these walks and only cover
//! reachable pairs. Radius and diameter are the minimum and maximum of those
//! finite eccentricities.
//!
//! Conventions:
//! - self-loops add one to both the in- and out-degree of their vertex;
//! - closeness uses outgoing distances with the Wasserman-Faust correction
//!   `((r-1)/(n-1)) * ((r-1)/sum)` where `r` counts reachable vertices;
//! - degree centrality is `(in + out) / (n - 1)`, or 1 for a single vertex;
//! - eigenvector centrality is power iteration on `x <- (I + Aᵀ) x` with L2
//!   normalisation from a uniform start, stopping when the L1 change drops
//!   below `n * 1e-10`. With several cycles the leading eigenvalue is
//!   repeated and the result depends on that start vector;
//! - node and edge connectivity are those of the underlying simple
//!   undirected graph.

use std::collections::BTreeMap;
use std::fmt::Write as _;

pub const EIGENVECTOR_TOLERANCE: f64 = 1e-10;
pub const EIGENVECTOR_MAX_ITER: usize = 100_000;
/// Largest vertex count for which the full distance matrix is materialised.
pub const MAX_MATRIX_VERTICES: usize = 1 << 12;

pub const UNREACHABLE: u32 = u32::MAX;

#[derive(Clone, Debug, PartialEq)]
pub struct GraphMetrics {
    pub vertices: usize,
    pub in_degrees: Vec<usize>,
    /// degree -> number of vertices.
    pub in_degree_distribution: BTreeMap<usize, usize>,
    pub out_degree_distribution: BTreeMap<usize, usize>,
    /// Row-major `n x n`, [`UNREACHABLE`] where no path exists. `None` above
    /// [`MAX_MATRIX_VERTICES`] vertices.
    pub distances: Option<Vec<u32>>,
    pub eccentricity: Vec<usize>,
    pub radius: usize,
    pub diameter: usize,
    pub node_connectivity: usize,
    pub edge_connectivity: usize,
    pub closeness: Vec<f64>,
    pub degree_centrality: Vec<f64>,
    pub eigenvector: Vec<f64>,
    pub eigenvector_converged: bool,
    pub eigenvector_iterations: usize,
}

/// Walk from `start`, returning the distinct vertices in visiting order.
fn walk(successor: &[usize], start: usize, seen: &mut [u32], stamp: u32) -> Vec<usize> {
    let mut path = Vec::new();
    let mut v = start;
    while seen[v] != stamp {
        seen[v] = stamp;
        path.push(v);
        v = successor[v];
    }
    path
}

pub fn graph_metrics(successor: &[usize]) -> GraphMetrics {
    let n = successor.len();
    assert!(successor.iter().all(|&s| s < n), "successor out of range");

    let mut in_degrees = vec![0usize; n];
    for &s in successor {
        in_degrees[s] += 1;
    }
    let mut in_degree_distribution = BTreeMap::new();
    for &d in &in_degrees {
        *in_degree_distribution.entry(d).or_insert(0) += 1;
    }
    let out_degree_distribution = if n == 0 { BTreeMap::new() } else { BTreeMap::from([(1, n)]) };

    let want_matrix = n <= MAX_MATRIX_VERTICES;
    let mut distances = want_matrix.then(|| vec![UNREACHABLE; n * n]);
    let mut eccentricity = vec![0usize; n];
    let mut closeness = vec![0.0; n];
    let mut seen = vec![u32::MAX; n];
    for v in 0..n {
        let path = walk(successor, v, &mut seen, v as u32);
        eccentricity[v] = path.len() - 1;
        if let Some(d) = distances.as_mut() {
            for (step, &w) in path.iter().enumerate() {
                d[v * n + w] = step as u32;
            }
        }
        let r = path.len();
        if r > 1 && n > 1 {
            let total: f64 = (0..r).map(|s| s as f64).sum();
            closeness[v] = ((r - 1) as f64 / (n - 1) as f64) * ((r - 1) as f64 / total);
        }
    }
    let radius = eccentricity.iter().copied().min().unwrap_or(0);
    let diameter = eccentricity.iter().copied().max().unwrap_or(0);

    let degree_centrality = if n <= 1 {
        vec![1.0; n]
    } else {
        in_degrees.iter().map(|&d| (d + 1) as f64 / (n - 1) as f64).collect()
    };

    let (eigenvector, eigenvector_converged, eigenvector_iterations) = eigenvector_centrality(successor);
    let (node_connectivity, edge_connectivity) = connectivity(successor);

    GraphMetrics {
        vertices: n,
        in_degrees,
        in_degree_distribution,
        out_degree_distribution,
        distances,
        eccentricity,
        radius,
        diameter,
        node_connectivity,
        edge_connectivity,
        closeness,
        degree_centrality,
        eigenvector,
        eigenvector_converged,
        eigenvector_iterations,
    }
}

fn eigenvector_centrality(successor: &[usize]) -> (Vec<f64>, bool, usize) {
    let n = successor.len();
    if n == 0 {
        return (Vec::new(), true, 0);
    }
    let mut x = vec![1.0 / n as f64; n];
    for iter in 1..=EIGENVECTOR_MAX_ITER {
        let last = x.clone();
        for (u, &s) in successor.iter().enumerate() {
            x[s] += last[u];
        }
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter_mut().for_each(|v| *v /= norm);
        let change: f64 = x.iter().zip(&last).map(|(a, b)| (a - b).abs()).sum();
        if change < n as f64 * EIGENVECTOR_TOLERANCE {
            return (x, true, iter);
        }
    }
    (x, false, EIGENVECTOR_MAX_ITER)
}

/// Node and edge connectivity of the underlying simple undirected graph.
///
/// That graph has at most one edge per vertex, so a connected one on `n`
/// vertices is a tree (`n - 1` edges) or has a single cycle (`n` edges), and
/// its minimum degree is at most 2. Hence both connectivities are 0 when
/// disconnected, 2 when it is exactly a cycle, and 1 otherwise.
fn connectivity(successor: &[usize]) -> (usize, usize) {
    let n = successor.len();
    if n <= 1 {
        return (0, 0);
    }
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut edges = std::collections::BTreeSet::new();
    for (v, &s) in successor.iter().enumerate() {
        if v != s {
            edges.insert((v.min(s), v.max(s)));
        }
    }
    let mut degree = vec![0usize; n];
    for &(a, b) in &edges {
        degree[a] += 1;
        degree[b] += 1;
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    if (1..n).any(|v| find(&mut parent, v) != root) {
        return (0, 0);
    }
    if n >= 3 && degree.iter().all(|&d| d == 2) {
        (2, 2)
    } else {
        (1, 1)
    }
}

impl GraphMetrics {
    pub fn distance(&self, from: usize, to: usize) -> Option<Option<u32>> {
        self.distances.as_ref().map(|d| {
            let v = d[from * self.vertices + to];
            (v != UNREACHABLE).then_some(v)
        })
    }

    /// Flat `key=value` report, vertex-indexed series as comma lists.
    pub fn report(&self) -> String {
        let list = |xs: &[f64]| xs.iter().map(|x| format!("{x:.10}")).collect::<Vec<_>>().join(",");
        let dist = |m: &BTreeMap<usize, usize>| {
            m.iter().map(|(d, c)| format!("{d}:{c}")).collect::<Vec<_>>().join(",")
        };
        let mut out = String::new();
        let _ = writeln!(out, "graph.convention=functional graph s->E(s); finite distances within reachable sets; connectivity on underlying simple undirected graph");
        let _ = writeln!(out, "graph.vertices={}", self.vertices);
        let _ = writeln!(out, "graph.in_degree_distribution={}", dist(&self.in_degree_distribution));
        let _ = writeln!(out, "graph.out_degree_distribution={}", dist(&self.out_degree_distribution));
        let _ = writeln!(out, "graph.radius={}", self.radius);
        let _ = writeln!(out, "graph.diameter={}", self.diameter);
        let _ = writeln!(out, "graph.node_connectivity={}", self.node_connectivity);
        let _ = writeln!(out, "graph.edge_connectivity={}", self.edge_connectivity);
        let _ = writeln!(
            out,
            "graph.eccentricity={}",
            self.eccentricity.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(",")
        );
        let _ = writeln!(out, "graph.closeness_centrality={}", list(&self.closeness));
        let _ = writeln!(out, "graph.degree_centrality={}", list(&self.degree_centrality));
        let _ = writeln!(out, "graph.eigenvector_centrality={}", list(&self.eigenvector));
        let _ = writeln!(out, "graph.eigenvector_converged={}", self.eigenvector_converged);
        let _ = writeln!(out, "graph.eigenvector_iterations={}", self.eigenvector_iterations);
        out
    }

    /// Distance matrix as CSV rows; unreachable pairs are empty cells.
    pub fn distance_csv(&self) -> Option<String> {
        let d = self.distances.as_ref()?;
        let n = self.vertices;
        let mut out = String::new();
        for row in d.chunks(n.max(1)).take(n) {
            let cells: Vec<String> = row
                .iter()
                .map(|&v| if v == UNREACHABLE { String::new() } else { v.to_string() })
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        Some(out)
    }
}
