#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, SVD};
use netred_core::network::{benchmark_system, BenchmarkConfig};
use netred_core::sys2::{validate, SecondOrderNetwork};

pub fn four_vertex_network() -> SecondOrderNetwork {
    let masses = DVector::from_vec(vec![1.0, 2.0, 1.0, 2.0]);
    let d = DMatrix::from_row_slice(
        4,
        4,
        &[
            4., -2., 0., -1., -2., 2., 0., 0., 0., 0., 3.5, -3., -1., 0., -3., 4.,
        ],
    );
    let l = DMatrix::from_row_slice(
        4,
        4,
        &[
            4., -1., -2., -1., -1., 3., -1., -1., -2., -1., 5., -2., -1., -1., -2., 4.,
        ],
    );
    let f = DMatrix::from_row_slice(4, 2, &[1., 0., 0., 0., 0., 0., 0., 1.]);
    validate(masses, d, l, f).unwrap()
}

/// Benchmark network with a lattice degree that is valid for every `n >= 3`.
pub fn benchmark(n: usize, inputs: usize, seed: u64) -> SecondOrderNetwork {
    let k = if n > 4 { 4 } else { 2 };
    let cfg = BenchmarkConfig {
        inputs,
        k,
        ..Default::default()
    };
    benchmark_system(n, &cfg, seed).unwrap()
}

pub fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let scale = b.norm().max(a.norm());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).norm() / scale
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// Solves `a X + X b + c = 0` together with `l_k^T X r_k = 0` for every pair in
/// `constraints`, by least squares on the vectorized system.
pub fn kron_solve(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    c: &DMatrix<f64>,
    constraints: &[(DVector<f64>, DVector<f64>)],
) -> DMatrix<f64> {
    let (p, q) = (a.nrows(), b.nrows());
    let unknowns = p * q;
    let rows = unknowns + constraints.len();
    let mut k = DMatrix::zeros(rows, unknowns);
    // column-major vec: X[(i, j)] lives at i + p * j
    for j in 0..q {
        for i in 0..p {
            let row = i + p * j;
            for t in 0..p {
                k[(row, t + p * j)] += a[(i, t)];
            }
            for t in 0..q {
                k[(row, i + p * t)] += b[(t, j)];
            }
        }
    }
    let mut rhs = DVector::zeros(rows);
    for j in 0..q {
        for i in 0..p {
            rhs[i + p * j] = -c[(i, j)];
        }
    }
    for (s, (l, r)) in constraints.iter().enumerate() {
        for j in 0..q {
            for i in 0..p {
                k[(unknowns + s, i + p * j)] = l[i] * r[j];
            }
        }
    }
    let svd = SVD::new(k, true, true);
    let x = svd.solve(&rhs, 1e-13).unwrap();
    DMatrix::from_column_slice(p, q, x.as_slice())
}

/// Average-linkage agglomeration that recomputes every cluster distance from scratch.
/// Returns, per merge, the merged member sets and the height.
pub fn brute_average_linkage(d: &DMatrix<f64>) -> Vec<(Vec<usize>, Vec<usize>, f64)> {
    let n = d.nrows();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    let mut out = Vec::new();
    while clusters.len() > 1 {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut s = 0.0;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        s += d[(i, j)];
                    }
                }
                let v = s / (clusters[a].len() * clusters[b].len()) as f64;
                if v < best.2 {
                    best = (a, b, v);
                }
            }
        }
        let (a, b, h) = best;
        let cb = clusters.remove(b);
        let ca = clusters[a].clone();
        clusters[a].extend(cb.iter().copied());
        clusters[a].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
        out.push((ca, cb, h));
    }
    out
}

/// Single-linkage clustering cut at `r` clusters by repeatedly merging the two clusters
/// with the closest members.
pub fn brute_single_linkage(d: &DMatrix<f64>, r: usize) -> Vec<Vec<usize>> {
    let n = d.nrows();
    let mut clusters: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    while clusters.len() > r {
        let mut best = (0, 1, f64::INFINITY);
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let mut v = f64::INFINITY;
                for &i in &clusters[a] {
                    for &j in &clusters[b] {
                        v = v.min(d[(i, j)]);
                    }
                }
                if v < best.2 {
                    best = (a, b, v);
                }
            }
        }
        let cb = clusters.remove(best.1);
        clusters[best.0].extend(cb);
        clusters[best.0].sort_unstable();
        clusters.sort_by_key(|c| c[0]);
    }
    clusters
}
