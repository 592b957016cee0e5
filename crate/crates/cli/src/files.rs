//! JSON network and partition files. Vertex indices in files are 1-based.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use netred_core::network::{graph_from_laplacian, ClusteringPartition};
use netred_core::sys2::{validate, SecondOrderNetwork};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: &str = "1";

/// Damping given densely or as damper edges plus a grounded damper `alpha * m_i` per vertex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Damping {
    Dense {
        matrix: Vec<Vec<f64>>,
    },
    Edges {
        edges: Vec<(usize, usize, f64)>,
        alpha: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub schema_version: String,
    pub n: usize,
    pub m: usize,
    pub masses: Vec<f64>,
    pub damping: Damping,
    pub stiffness_edges: Vec<(usize, usize, f64)>,
    pub input_matrix: Vec<Vec<f64>>,
}

/// Raw matrices of a network file, before structural validation.
#[derive(Debug, Clone)]
pub struct RawNetwork {
    pub masses: DVector<f64>,
    pub d: DMatrix<f64>,
    pub l: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

impl RawNetwork {
    pub fn validate(self) -> CliResult<SecondOrderNetwork> {
        Ok(validate(self.masses, self.d, self.l, self.f)?)
    }
}

impl NetworkFile {
    pub fn from_system(sys: &SecondOrderNetwork) -> CliResult<Self> {
        let graph = graph_from_laplacian(sys.l())?;
        Ok(NetworkFile {
            schema_version: SCHEMA_VERSION.into(),
            n: sys.n(),
            m: sys.m(),
            masses: sys.masses().iter().copied().collect(),
            damping: Damping::Dense {
                matrix: rows(sys.d()),
            },
            stiffness_edges: graph
                .edges()
                .iter()
                .map(|e| (e.i + 1, e.j + 1, e.w))
                .collect(),
            input_matrix: rows(sys.f()),
        })
    }

    /// Checks shapes and indices and assembles the matrices.
    pub fn to_raw(&self, path: &Path) -> CliResult<RawNetwork> {
        let bad = |msg: String| CliError::parse(path, msg);
        if self.schema_version != SCHEMA_VERSION {
            return Err(bad(format!(
                "unsupported schema_version {:?}",
                self.schema_version
            )));
        }
        let (n, m) = (self.n, self.m);
        if n == 0 {
            return Err(bad("n must be at least 1".into()));
        }
        if self.masses.len() != n {
            return Err(bad(format!("{} masses for n = {n}", self.masses.len())));
        }
        let masses = DVector::from_vec(self.masses.clone());
        let f = dense(&self.input_matrix, n, m, "input_matrix").map_err(bad)?;
        let l = edge_laplacian(&self.stiffness_edges, n, "stiffness_edges").map_err(bad)?;
        let d = match &self.damping {
            Damping::Dense { matrix } => dense(matrix, n, n, "damping").map_err(bad)?,
            Damping::Edges { edges, alpha } => {
                let mut d = edge_laplacian(edges, n, "damping edges").map_err(bad)?;
                for i in 0..n {
                    d[(i, i)] += alpha * masses[i];
                }
                d
            }
        };
        Ok(RawNetwork { masses, d, l, f })
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn dense(rows: &[Vec<f64>], n: usize, m: usize, name: &str) -> Result<DMatrix<f64>, String> {
    if rows.len() != n || rows.iter().any(|r| r.len() != m) {
        return Err(format!("{name} must be {n} rows of {m} entries"));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn edge_laplacian(
    edges: &[(usize, usize, f64)],
    n: usize,
    name: &str,
) -> Result<DMatrix<f64>, String> {
    let mut l = DMatrix::zeros(n, n);
    for &(i, j, w) in edges {
        if i == 0 || j == 0 || i > n || j > n || i == j {
            return Err(format!(
                "{name} entry [{i}, {j}] is not a pair of distinct vertices in 1..={n}"
            ));
        }
        let (i, j) = (i - 1, j - 1);
        l[(i, i)] += w;
        l[(j, j)] += w;
        l[(i, j)] -= w;
        l[(j, i)] -= w;
    }
    Ok(l)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub schema_version: String,
    pub n: usize,
    pub clusters: Vec<Vec<usize>>,
}

impl PartitionFile {
    pub fn from_partition(p: &ClusteringPartition) -> Self {
        PartitionFile {
            schema_version: SCHEMA_VERSION.into(),
            n: p.vertex_count(),
            clusters: p
                .clusters()
                .iter()
                .map(|c| c.iter().map(|&v| v + 1).collect())
                .collect(),
        }
    }

    pub fn to_partition(&self, path: &Path) -> CliResult<ClusteringPartition> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::parse(
                path,
                format!("unsupported schema_version {:?}", self.schema_version),
            ));
        }
        let mut clusters = Vec::with_capacity(self.clusters.len());
        for c in &self.clusters {
            let mut members = Vec::with_capacity(c.len());
            for &v in c {
                if v == 0 {
                    return Err(CliError::parse(path, "vertex indices are 1-based"));
                }
                members.push(v - 1);
            }
            clusters.push(members);
        }
        Ok(ClusteringPartition::new(self.n, clusters)?)
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::parse(path, e.to_string()))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("file types always serialize");
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_network(path: &Path) -> CliResult<SecondOrderNetwork> {
    read_json::<NetworkFile>(path)?.to_raw(path)?.validate()
}
