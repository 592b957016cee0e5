//! Pairwise H2 vertex dissimilarities and the clustering strategies built on them.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gramian::{selector_quadratic, NetworkGramian};
use crate::network::{ClusteringPartition, UnionFind};
use crate::sys2::SecondOrderNetwork;

/// Which state a dissimilarity compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DissimilarityKind {
    Position,
    Velocity,
}

/// Symmetric, nonnegative, zero-diagonal matrix of vertex distances.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    d: DMatrix<f64>,
    kind: DissimilarityKind,
}

impl DissimilarityMatrix {
    /// Wraps a precomputed distance matrix after checking symmetry, sign, and diagonal.
    pub fn new(d: DMatrix<f64>, kind: DissimilarityKind) -> Result<Self> {
        if !d.is_square() {
            return Err(Error::Dimension(format!(
                "dissimilarity is {}x{}",
                d.nrows(),
                d.ncols()
            )));
        }
        let n = d.nrows();
        for i in 0..n {
            if d[(i, i)] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "nonzero diagonal at {}",
                    i + 1
                )));
            }
            for j in 0..n {
                let v = d[(i, j)];
                if !(v >= 0.0 && v.is_finite()) || v != d[(j, i)] {
                    return Err(Error::InvalidArgument(format!(
                        "entry ({}, {}) is negative, non-finite, or asymmetric",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(DissimilarityMatrix { d, kind })
    }

    pub fn n(&self) -> usize {
        self.d.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn kind(&self) -> DissimilarityKind {
        self.kind
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    /// The same matrix with every entry multiplied by `c > 0`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        DissimilarityMatrix::new(&self.d * c, self.kind)
    }
}

/// H2 distance between the impulse responses of vertex positions.
pub fn dissimilarity_position(
    sys: &SecondOrderNetwork,
    g: &NetworkGramian,
) -> Result<DissimilarityMatrix> {
    dissimilarity(sys, g, DissimilarityKind::Position)
}

/// H2 distance between the impulse responses of vertex velocities.
pub fn dissimilarity_velocity(
    sys: &SecondOrderNetwork,
    g: &NetworkGramian,
) -> Result<DissimilarityMatrix> {
    dissimilarity(sys, g, DissimilarityKind::Velocity)
}

/// `d_ij = sqrt(h^T P h)` with `h = e_i - e_j` placed on the chosen state block.
///
/// Entries are evaluated in parallel on the current rayon pool; each is a pure function
/// of `P`, so the result does not depend on scheduling.
pub fn dissimilarity(
    sys: &SecondOrderNetwork,
    g: &NetworkGramian,
    kind: DissimilarityKind,
) -> Result<DissimilarityMatrix> {
    let n = sys.n();
    if g.n() != n {
        return Err(Error::Dimension(format!(
            "Gramian is for {} vertices, network has {n}",
            g.n()
        )));
    }
    let offset = match kind {
        DissimilarityKind::Position => 0,
        DissimilarityKind::Velocity => n,
    };
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = pairs
        .par_iter()
        .map(|&(i, j)| selector_quadratic(g.p(), &[(offset + i, 1.0), (offset + j, -1.0)]).sqrt())
        .collect::<Result<_>>()?;
    let mut d = DMatrix::zeros(n, n);
    for (&(i, j), v) in pairs.iter().zip(values) {
        d[(i, j)] = v;
        d[(j, i)] = v;
    }
    Ok(DissimilarityMatrix { d, kind })
}

/// Mean dissimilarity over all cross pairs of two disjoint vertex sets.
pub fn linkage(d: &DissimilarityMatrix, ca: &[usize], cb: &[usize]) -> Result<f64> {
    if ca.is_empty() || cb.is_empty() {
        return Err(Error::InvalidArgument("linkage of an empty cluster".into()));
    }
    let n = d.n();
    if let Some(&v) = ca.iter().chain(cb).find(|&&v| v >= n) {
        return Err(Error::InvalidArgument(format!(
            "vertex {} out of range",
            v + 1
        )));
    }
    if let Some(&v) = ca.iter().find(|v| cb.contains(v)) {
        return Err(Error::InvalidArgument(format!(
            "vertex {} is in both clusters",
            v + 1
        )));
    }
    let mut sum = 0.0;
    for &i in ca {
        for &j in cb {
            sum += d.d[(i, j)];
        }
    }
    Ok(sum / (ca.len() * cb.len()) as f64)
}

/// One agglomeration step: clusters `a` and `b` merged into `merged` at `height`.
///
/// Leaves carry ids `0..n`; the cluster formed by the `k`-th merge gets id `n + k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub merged: usize,
}

/// Complete merge tree of an agglomerative clustering.
#[derive(Debug, Clone, PartialEq)]
pub struct Dendrogram {
    n: usize,
    merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn leaf_count(&self) -> usize {
        self.n
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    /// Partition obtained by applying the first `n - r` merges.
    pub fn cut(&self, r: usize) -> Result<ClusteringPartition> {
        check_order(self.n, r)?;
        if self.merges.len() < self.n - r {
            return Err(Error::InvalidArgument(format!(
                "dendrogram has {} merges, {} needed",
                self.merges.len(),
                self.n - r
            )));
        }
        let mut uf = UnionFind::new(self.n);
        let mut representative: Vec<usize> = (0..self.n).collect();
        for m in &self.merges[..self.n - r] {
            let (ra, rb) = (representative[m.a], representative[m.b]);
            uf.union(ra, rb);
            representative.push(ra);
        }
        partition_from_union_find(&mut uf, self.n)
    }
}

/// Average-linkage agglomeration with Lance-Williams updates.
///
/// Clusters occupy slots named after their smallest member; a merge keeps the lower slot.
/// Each step merges the active pair of minimal linkage, breaking ties by the
/// lexicographically smallest slot pair.
#[derive(Debug, Clone)]
pub struct Agglomeration {
    linkage: DMatrix<f64>,
    members: Vec<Option<Vec<usize>>>,
    ids: Vec<usize>,
    merges: Vec<Merge>,
}

impl Agglomeration {
    pub fn new(d: &DissimilarityMatrix) -> Self {
        let n = d.n();
        Agglomeration {
            linkage: d.d.clone(),
            members: (0..n).map(|i| Some(vec![i])).collect(),
            ids: (0..n).collect(),
            merges: Vec::with_capacity(n.saturating_sub(1)),
        }
    }

    pub fn cluster_count(&self) -> usize {
        self.members.len() - self.merges.len()
    }

    /// Active clusters as `(slot, members)`, in slot order.
    pub fn clusters(&self) -> impl Iterator<Item = (usize, &[usize])> {
        self.members
            .iter()
            .enumerate()
            .filter_map(|(s, m)| m.as_deref().map(|m| (s, m)))
    }

    /// Maintained linkage between two active slots.
    pub fn linkage(&self, a: usize, b: usize) -> f64 {
        self.linkage[(a, b)]
    }

    /// Performs one merge, or returns `None` when a single cluster remains.
    pub fn step(&mut self) -> Option<Merge> {
        let active: Vec<usize> = self.clusters().map(|(s, _)| s).collect();
        if active.len() < 2 {
            return None;
        }
        let mut best = (active[0], active[1]);
        let mut best_val = self.linkage[best];
        for (x, &a) in active.iter().enumerate() {
            for &b in &active[x + 1..] {
                let v = self.linkage[(a, b)];
                if v < best_val {
                    best_val = v;
                    best = (a, b);
                }
            }
        }
        let (a, b) = best;
        let na = self.members[a].as_ref().map_or(0, Vec::len) as f64;
        let nb = self.members[b].as_ref().map_or(0, Vec::len) as f64;
        for &c in &active {
            if c == a || c == b {
                continue;
            }
            let (lo, hi, w) = {
                let (x, y) = (self.linkage[(a, c)], self.linkage[(b, c)]);
                if x <= y {
                    (x, y, nb / (na + nb))
                } else {
                    (y, x, na / (na + nb))
                }
            };
            // Weighted mean written as lo + w (hi - lo) so it never drops below lo.
            let v = lo + w * (hi - lo);
            self.linkage[(a, c)] = v;
            self.linkage[(c, a)] = v;
        }
        let mut moved = self.members[b].take().unwrap_or_default();
        let target = self.members[a].get_or_insert_with(Vec::new);
        target.append(&mut moved);
        target.sort_unstable();

        let merged = self.members.len() + self.merges.len();
        let merge = Merge {
            a: self.ids[a],
            b: self.ids[b],
            height: best_val,
            merged,
        };
        self.ids[a] = merged;
        self.merges.push(merge);
        Some(merge)
    }

    pub fn partition(&self) -> ClusteringPartition {
        let n = self.members.len();
        let clusters = self.clusters().map(|(_, m)| m.to_vec()).collect();
        ClusteringPartition::new(n, clusters)
            .expect("active clusters always partition the vertices")
    }

    pub fn into_dendrogram(self) -> Dendrogram {
        Dendrogram {
            n: self.members.len(),
            merges: self.merges,
        }
    }
}

/// Greedy average-linkage clustering down to `r` clusters, plus the complete merge tree.
pub fn hierarchical_clustering(
    d: &DissimilarityMatrix,
    r: usize,
) -> Result<(ClusteringPartition, Dendrogram)> {
    check_order(d.n(), r)?;
    let mut agg = Agglomeration::new(d);
    while agg.cluster_count() > r {
        agg.step();
    }
    let partition = agg.partition();
    while agg.step().is_some() {}
    Ok((partition, agg.into_dendrogram()))
}

/// Random partition into exactly `r` non-empty clusters: a seeded permutation puts its
/// first `r` vertices into distinct clusters and assigns the rest uniformly.
pub fn random_clustering(n: usize, r: usize, seed: u64) -> Result<ClusteringPartition> {
    check_order(n, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut labels = vec![0; n];
    for (pos, &v) in perm.iter().enumerate() {
        labels[v] = if pos < r { pos } else { rng.random_range(0..r) };
    }
    ClusteringPartition::from_labels(&labels)
}

/// Unites the clusters of `i` and `j` for vertex pairs in ascending dissimilarity until
/// `r` clusters remain (single linkage). Equal distances are taken in `(i, j)` order.
pub fn greedy_clustering(d: &DissimilarityMatrix, r: usize) -> Result<ClusteringPartition> {
    let n = d.n();
    check_order(n, r)?;
    let mut pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    pairs.sort_by(|p, q| d.d[*p].total_cmp(&d.d[*q]).then(p.cmp(q)));
    let mut uf = UnionFind::new(n);
    let mut count = n;
    for (i, j) in pairs {
        if count == r {
            break;
        }
        if uf.union(i, j) {
            count -= 1;
        }
    }
    partition_from_union_find(&mut uf, n)
}

fn partition_from_union_find(uf: &mut UnionFind, n: usize) -> Result<ClusteringPartition> {
    let labels: Vec<usize> = (0..n).map(|v| uf.find(v)).collect();
    ClusteringPartition::from_labels(&labels)
}

fn check_order(n: usize, r: usize) -> Result<()> {
    if r == 0 || r > n {
        return Err(Error::InvalidArgument(format!(
            "cluster count {r} not in [1, {n}]"
        )));
    }
    Ok(())
}
