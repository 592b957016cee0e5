//! Weighted undirected graphs, Laplacians, clustering partitions, and the small-world
//! benchmark generator.
//!
//! Vertices are 0-based throughout the library; file formats and CLI output use 1-based
//! labels.

use std::collections::BTreeSet;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::spectral_norm;
use crate::sys2::{validate, SecondOrderNetwork};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

/// Simple undirected graph with positive edge weights; edges satisfy `i < j` and are unique.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
}

impl WeightedGraph {
    /// Builds a graph from `(i, j, w)` triples. Endpoints may be given in either order;
    /// they are stored with `i < j` and edges sorted lexicographically.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize, f64)>) -> Result<Self> {
        let mut out: Vec<Edge> = Vec::new();
        for (a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) out of range for {n} vertices",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!(
                    "self-loop at vertex {}",
                    a + 1
                )));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidGraph(format!(
                    "edge ({}, {}) has non-positive weight {w}",
                    a + 1,
                    b + 1
                )));
            }
            out.push(Edge {
                i: a.min(b),
                j: a.max(b),
                w,
            });
        }
        out.sort_by_key(|e| (e.i, e.j));
        if let Some(dup) = out
            .windows(2)
            .find(|p| (p[0].i, p[0].j) == (p[1].i, p[1].j))
        {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                dup[0].i + 1,
                dup[0].j + 1
            )));
        }
        Ok(WeightedGraph { n, edges: out })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for e in &self.edges {
            deg[e.i] += 1;
            deg[e.j] += 1;
        }
        deg
    }

    pub fn is_connected(&self) -> bool {
        if self.n <= 1 {
            return true;
        }
        let mut uf = UnionFind::new(self.n);
        let mut comps = self.n;
        for e in &self.edges {
            if uf.union(e.i, e.j) {
                comps -= 1;
            }
        }
        comps == 1
    }

    /// The same topology with every weight replaced by `f(edge)`.
    pub fn reweighted(&self, mut f: impl FnMut(&Edge) -> f64) -> Result<Self> {
        WeightedGraph::new(self.n, self.edges.iter().map(|e| (e.i, e.j, f(e))))
    }
}

/// Incidence matrix with one column per edge: `+1` at the lower endpoint, `-1` at the higher.
pub fn incidence_matrix(g: &WeightedGraph) -> DMatrix<f64> {
    let mut r = DMatrix::zeros(g.n, g.edges.len());
    for (k, e) in g.edges.iter().enumerate() {
        r[(e.i, k)] = 1.0;
        r[(e.j, k)] = -1.0;
    }
    r
}

/// Weighted Laplacian `R diag(w) R^T`, assembled edge by edge.
pub fn laplacian(g: &WeightedGraph) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(g.n, g.n);
    for e in &g.edges {
        l[(e.i, e.i)] += e.w;
        l[(e.j, e.j)] += e.w;
        l[(e.i, e.j)] -= e.w;
        l[(e.j, e.i)] -= e.w;
    }
    l
}

/// Recovers the graph of a weighted Laplacian: one edge per off-diagonal entry below
/// `-1e-12 * ||l||_2`.
pub fn graph_from_laplacian(l: &DMatrix<f64>) -> Result<WeightedGraph> {
    if !l.is_square() {
        return Err(Error::NotALaplacian(format!(
            "matrix is {}x{}",
            l.nrows(),
            l.ncols()
        )));
    }
    if !l.iter().all(|x| x.is_finite()) {
        return Err(Error::NotALaplacian("non-finite entries".into()));
    }
    let n = l.nrows();
    let scale = spectral_norm(l);
    let off_tol = 1e-12 * scale;
    let sum_tol = 1e-9 * scale;
    let mut edges = Vec::new();
    for i in 0..n {
        let sum: f64 = l.row(i).iter().sum();
        if sum.abs() > sum_tol {
            return Err(Error::NotALaplacian(format!(
                "row {} sums to {sum:e}",
                i + 1
            )));
        }
        for j in i + 1..n {
            if (l[(i, j)] - l[(j, i)]).abs() > off_tol {
                return Err(Error::NotALaplacian(format!(
                    "asymmetric at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            let v = l[(i, j)];
            if v > off_tol {
                return Err(Error::NotALaplacian(format!(
                    "positive off-diagonal {v:e} at ({}, {})",
                    i + 1,
                    j + 1
                )));
            }
            if v < -off_tol {
                edges.push((i, j, -v));
            }
        }
    }
    WeightedGraph::new(n, edges)
}

/// A partition of `{0, .., n-1}` into ordered, non-empty, disjoint clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusteringPartition {
    n: usize,
    clusters: Vec<Vec<usize>>,
}

impl ClusteringPartition {
    /// Validates the cover; the order of clusters is kept, members are sorted.
    pub fn new(n: usize, clusters: Vec<Vec<usize>>) -> Result<Self> {
        let mut seen = vec![false; n];
        let mut clusters = clusters;
        for (k, c) in clusters.iter_mut().enumerate() {
            if c.is_empty() {
                return Err(Error::InvalidPartition(format!(
                    "cluster {} is empty",
                    k + 1
                )));
            }
            c.sort_unstable();
            for &v in c.iter() {
                if v >= n {
                    return Err(Error::InvalidPartition(format!(
                        "vertex {} out of range for {n} vertices",
                        v + 1
                    )));
                }
                if seen[v] {
                    return Err(Error::InvalidPartition(format!(
                        "vertex {} appears more than once",
                        v + 1
                    )));
                }
                seen[v] = true;
            }
        }
        if let Some(v) = seen.iter().position(|s| !s) {
            return Err(Error::InvalidPartition(format!(
                "vertex {} is not covered",
                v + 1
            )));
        }
        Ok(ClusteringPartition { n, clusters })
    }

    /// Clusters from a per-vertex label vector; clusters are ordered by smallest member.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (v, &l) in labels.iter().enumerate() {
            groups.entry(l).or_default().push(v);
        }
        let mut clusters: Vec<Vec<usize>> = groups.into_values().collect();
        clusters.sort_by_key(|c| c[0]);
        ClusteringPartition::new(labels.len(), clusters)
    }

    pub fn singletons(n: usize) -> Self {
        ClusteringPartition {
            n,
            clusters: (0..n).map(|i| vec![i]).collect(),
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    /// Cluster index of every vertex.
    pub fn labels(&self) -> Vec<usize> {
        let mut lab = vec![0; self.n];
        for (k, c) in self.clusters.iter().enumerate() {
            for &v in c {
                lab[v] = k;
            }
        }
        lab
    }

    /// The same partition with clusters ordered by their smallest member.
    pub fn canonical(&self) -> Self {
        let mut clusters = self.clusters.clone();
        clusters.sort_by_key(|c| c[0]);
        ClusteringPartition {
            n: self.n,
            clusters,
        }
    }
}

/// Binary `n x r` matrix whose columns are the cluster indicator vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicMatrix {
    p: DMatrix<f64>,
}

impl CharacteristicMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.p
    }
}

pub fn characteristic_matrix(part: &ClusteringPartition, n: usize) -> Result<CharacteristicMatrix> {
    if part.n != n {
        return Err(Error::Dimension(format!(
            "partition covers {} vertices, expected {n}",
            part.n
        )));
    }
    let mut p = DMatrix::zeros(n, part.cluster_count());
    for (k, c) in part.clusters.iter().enumerate() {
        for &v in c {
            p[(v, k)] = 1.0;
        }
    }
    Ok(CharacteristicMatrix { p })
}

const WS_MAX_ATTEMPTS: usize = 1000;

/// Connected Watts-Strogatz small-world graph with unit weights.
///
/// Starts from a ring lattice where every vertex links to its `k / 2` nearest neighbours
/// on each side, then rewires the far endpoint of each lattice edge with probability
/// `beta`, avoiding self-loops and duplicate edges. Disconnected draws are regenerated
/// from the same random stream.
pub fn watts_strogatz(n: usize, k: usize, beta: f64, seed: u64) -> Result<WeightedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    watts_strogatz_with_rng(n, k, beta, &mut rng)
}

pub(crate) fn watts_strogatz_with_rng<R: Rng>(
    n: usize,
    k: usize,
    beta: f64,
    rng: &mut R,
) -> Result<WeightedGraph> {
    if !k.is_multiple_of(2) || k < 2 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "Watts-Strogatz needs an even degree 2 <= k < n, got k = {k}, n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidArgument(format!(
            "rewiring probability {beta} not in [0, 1]"
        )));
    }
    for _ in 0..WS_MAX_ATTEMPTS {
        let edges = ws_draw(n, k, beta, rng);
        let g = WeightedGraph::new(n, edges.into_iter().map(|(i, j)| (i, j, 1.0)))?;
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(Error::GenerationFailure {
        attempts: WS_MAX_ATTEMPTS,
    })
}

fn ws_draw<R: Rng>(n: usize, k: usize, beta: f64, rng: &mut R) -> BTreeSet<(usize, usize)> {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for u in 0..n {
        for s in 1..=k / 2 {
            let v = (u + s) % n;
            adj[u].insert(v);
            adj[v].insert(u);
        }
    }
    for s in 1..=k / 2 {
        for u in 0..n {
            let v = (u + s) % n;
            if !adj[u].contains(&v) || !rng.random_bool(beta) {
                continue;
            }
            if adj[u].len() >= n - 1 {
                continue;
            }
            let mut w = rng.random_range(0..n);
            while w == u || adj[u].contains(&w) {
                w = rng.random_range(0..n);
            }
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(w);
            adj[w].insert(u);
        }
    }
    let mut edges = BTreeSet::new();
    for (u, nb) in adj.iter().enumerate() {
        for &v in nb {
            edges.insert(key(u, v));
        }
    }
    edges
}

/// Parameters of the mass-damper-spring benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkConfig {
    /// Number of inputs.
    pub inputs: usize,
    /// Mean degree of both Watts-Strogatz topologies.
    pub k: usize,
    /// Rewiring probability of both topologies.
    pub beta: f64,
    /// Vertex damper constant: each vertex gets a damper `alpha * m_i` to ground.
    pub alpha: f64,
    /// Edge weights are drawn uniformly from this range.
    pub weight_range: (f64, f64),
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            inputs: 5,
            k: 4,
            beta: 0.3,
            alpha: 0.5,
            weight_range: (0.5, 1.5),
        }
    }
}

/// A generated benchmark together with the graphs it was built from.
#[derive(Debug, Clone)]
pub struct BenchmarkInstance {
    pub system: SecondOrderNetwork,
    pub springs: WeightedGraph,
    pub dampers: WeightedGraph,
    pub alpha: f64,
}

/// Mass-damper-spring network on `n` vertices.
///
/// Masses follow `m_i = (i mod 10) + 1` for 1-based `i`; spring and damper couplings are
/// independent Watts-Strogatz draws with uniform random weights; every vertex has a damper
/// to ground proportional to its mass; the input matrix is uniform on `[-1, 1]`.
pub fn benchmark_system(n: usize, cfg: &BenchmarkConfig, seed: u64) -> Result<SecondOrderNetwork> {
    Ok(benchmark_instance(n, cfg, seed)?.system)
}

pub fn benchmark_instance(n: usize, cfg: &BenchmarkConfig, seed: u64) -> Result<BenchmarkInstance> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "benchmark needs n >= 2, got {n}"
        )));
    }
    if !(cfg.alpha > 0.0) || !cfg.alpha.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "vertex damper constant must be positive, got {}",
            cfg.alpha
        )));
    }
    let (lo, hi) = cfg.weight_range;
    if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "invalid weight range [{lo}, {hi}]"
        )));
    }
    if cfg.inputs == 0 {
        return Err(Error::InvalidArgument(
            "benchmark needs at least one input".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weight = |rng: &mut ChaCha8Rng| {
        if hi > lo {
            rng.random_range(lo..hi)
        } else {
            lo
        }
    };

    let springs = watts_strogatz_with_rng(n, cfg.k, cfg.beta, &mut rng)?;
    let springs = springs.reweighted(|_| weight(&mut rng))?;
    let dampers = watts_strogatz_with_rng(n, cfg.k, cfg.beta, &mut rng)?;
    let dampers = dampers.reweighted(|_| weight(&mut rng))?;

    let masses: Vec<f64> = (1..=n).map(|i| ((i % 10) + 1) as f64).collect();
    let mut d = laplacian(&dampers);
    for (i, m) in masses.iter().enumerate() {
        d[(i, i)] += cfg.alpha * m;
    }
    let l = laplacian(&springs);
    let f = DMatrix::from_fn(n, cfg.inputs, |_, _| rng.random_range(-1.0..=1.0));
    let system = validate(nalgebra::DVector::from_vec(masses), d, l, f)?;
    Ok(BenchmarkInstance {
        system,
        springs,
        dampers,
        alpha: cfg.alpha,
    })
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns true when two distinct sets were merged.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}
