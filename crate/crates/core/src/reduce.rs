//! Clustering-based Galerkin projection and the exact H2 approximation error.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gramian::{coupling_between, CouplingGramian, NetworkGramian, Trace};
use crate::linalg::block_diag;
use crate::matrixeq::SingularOptions;
use crate::network::{
    characteristic_matrix, graph_from_laplacian, CharacteristicMatrix, ClusteringPartition,
    WeightedGraph,
};
use crate::sys2::{
    convergence_matrix, first_order, validate, ConvergenceData, FirstOrderRealization,
    SecondOrderNetwork,
};

/// A reduced network `P^T M P z'' + P^T D P z' + P^T L P z = P^T F u`.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    system: SecondOrderNetwork,
    partition: ClusteringPartition,
    p: CharacteristicMatrix,
    graph: WeightedGraph,
    original_sigma_d: f64,
}

impl ReducedModel {
    /// The reduced network as a validated second-order network.
    pub fn system(&self) -> &SecondOrderNetwork {
        &self.system
    }

    pub fn partition(&self) -> &ClusteringPartition {
        &self.partition
    }

    pub fn characteristic(&self) -> &CharacteristicMatrix {
        &self.p
    }

    /// Graph of the reduced stiffness Laplacian.
    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Reduced order.
    pub fn r(&self) -> usize {
        self.system.n()
    }

    /// Total damping of the original network.
    pub fn original_sigma_d(&self) -> f64 {
        self.original_sigma_d
    }
}

/// Projects `sys` onto the clusters of `part`.
///
/// Every reduced entry is a plain sum of original entries over cluster index sets, and
/// the reduced `D` and `L` are filled from their upper triangles so they are exactly
/// symmetric.
pub fn project(sys: &SecondOrderNetwork, part: &ClusteringPartition) -> Result<ReducedModel> {
    let n = sys.n();
    let p = characteristic_matrix(part, n)?;
    let clusters = part.clusters();
    let r = clusters.len();

    let masses = DVector::from_iterator(
        r,
        clusters
            .iter()
            .map(|c| c.iter().map(|&i| sys.masses()[i]).sum()),
    );
    let block_sum = |m: &DMatrix<f64>| {
        let mut out = DMatrix::zeros(r, r);
        for k in 0..r {
            for l in k..r {
                let mut s = 0.0;
                for &i in &clusters[k] {
                    for &j in &clusters[l] {
                        s += m[(i, j)];
                    }
                }
                out[(k, l)] = s;
                out[(l, k)] = s;
            }
        }
        out
    };
    let d = block_sum(sys.d());
    // a single cluster sums every row of L, which is zero up to round-off
    let l = if r == 1 {
        DMatrix::zeros(1, 1)
    } else {
        block_sum(sys.l())
    };
    let f = DMatrix::from_fn(r, sys.m(), |k, c| {
        clusters[k].iter().map(|&i| sys.f()[(i, c)]).sum()
    });

    let system = validate(masses, d, l, f).map_err(|e| {
        Error::InternalConsistency(format!("projection of a valid network is invalid: {e}"))
    })?;
    let graph = graph_from_laplacian(system.l()).map_err(|e| {
        Error::InternalConsistency(format!("reduced stiffness is not a Laplacian: {e}"))
    })?;
    Ok(ReducedModel {
        system,
        partition: part.clone(),
        p,
        graph,
        original_sigma_d: sys.sigma_d(),
    })
}

/// Realization of the reduced network and its convergence data, normalized by the
/// original total damping.
pub fn reduced_first_order(red: &ReducedModel) -> (FirstOrderRealization, ConvergenceData) {
    let s = &red.system;
    (
        first_order(s),
        ConvergenceData::from_parts(s.masses(), s.d(), red.original_sigma_d),
    )
}

/// Which output the approximation error measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ErrorVariant {
    /// `x - P z`.
    Position,
    /// `x' - P z'`.
    Velocity,
}

/// Joint realization of the full and reduced networks driven by the same input.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSystem {
    /// `diag(a, a_r)`.
    pub a_e: DMatrix<f64>,
    /// `[b; b_r]`.
    pub b_e: DMatrix<f64>,
    /// `[I, 0, -P, 0]`.
    pub c_e: DMatrix<f64>,
    /// `[0, I, 0, -P]`.
    pub c_e_velocity: DMatrix<f64>,
    /// `diag(j, j_r)`.
    pub j_e: DMatrix<f64>,
}

impl ErrorSystem {
    pub fn output(&self, variant: ErrorVariant) -> &DMatrix<f64> {
        match variant {
            ErrorVariant::Position => &self.c_e,
            ErrorVariant::Velocity => &self.c_e_velocity,
        }
    }
}

pub fn error_system(sys: &SecondOrderNetwork, red: &ReducedModel) -> ErrorSystem {
    let n = sys.n();
    let r = red.r();
    let fo = first_order(sys);
    let cd = convergence_matrix(sys);
    let (fr, cr) = reduced_first_order(red);
    let p = red.p.matrix();
    let mut b_e = DMatrix::zeros(2 * n + 2 * r, sys.m());
    b_e.view_mut((0, 0), fo.b.shape()).copy_from(&fo.b);
    b_e.view_mut((2 * n, 0), fr.b.shape()).copy_from(&fr.b);
    let selector = |offset_full: usize, offset_red: usize| {
        let mut c = DMatrix::zeros(n, 2 * n + 2 * r);
        c.view_mut((0, offset_full), (n, n)).fill_with_identity();
        c.view_mut((0, 2 * n + offset_red), (n, r)).copy_from(&(-p));
        c
    };
    ErrorSystem {
        a_e: block_diag(&fo.a, &fr.a),
        b_e,
        c_e: selector(0, 0),
        c_e_velocity: selector(n, r),
        j_e: block_diag(&cd.j, &cr.j),
    }
}

/// The three Gramian blocks of the error system.
#[derive(Debug, Clone)]
pub struct ErrorGramians {
    pub full: NetworkGramian,
    pub reduced: NetworkGramian,
    pub coupling: CouplingGramian,
    labels: Vec<usize>,
    cluster_sizes: Vec<usize>,
}

impl ErrorGramians {
    /// Computes the reduced and coupling Gramians against an existing full Gramian.
    pub fn with_full(
        full: NetworkGramian,
        red: &ReducedModel,
        opts: &SingularOptions,
    ) -> Result<Self> {
        if full.n() != red.partition.vertex_count() {
            return Err(Error::Dimension(format!(
                "Gramian is for {} vertices, partition for {}",
                full.n(),
                red.partition.vertex_count()
            )));
        }
        let (fr, cr) = reduced_first_order(red);
        let reduced = NetworkGramian::from_realization(fr, cr, red.system.f().clone(), opts)?;
        let coupling = coupling_between(&full, &reduced, opts)?;
        Ok(ErrorGramians {
            full,
            reduced,
            coupling,
            labels: red.partition.labels(),
            cluster_sizes: red.partition.clusters().iter().map(Vec::len).collect(),
        })
    }

    /// `sqrt(tr(C P_e C^T))` for the selector of `variant`, using only the diagonal and
    /// cluster-indexed entries the selector touches.
    pub fn error(&self, variant: ErrorVariant) -> Result<f64> {
        let n = self.full.n();
        let r = self.reduced.n();
        let (of, or) = match variant {
            ErrorVariant::Position => (0, 0),
            ErrorVariant::Velocity => (n, r),
        };
        let pn = self.full.p();
        let px = self.coupling.px();
        let pr = self.reduced.p();
        let mut own = 0.0;
        let mut cross = 0.0;
        for i in 0..n {
            own += pn[(of + i, of + i)];
            cross += px[(of + i, or + self.labels[i])];
        }
        let mut reduced = 0.0;
        for k in 0..r {
            reduced += self.cluster_sizes[k] as f64 * pr[(or + k, or + k)];
        }
        let value = (own - 2.0 * cross) + reduced;
        Trace {
            value,
            gross: own.abs() + 2.0 * cross.abs() + reduced.abs(),
        }
        .sqrt()
    }
}

/// H2 norm of the difference between the full and reduced impulse responses.
pub fn approximation_error_h2(
    sys: &SecondOrderNetwork,
    red: &ReducedModel,
    variant: ErrorVariant,
) -> Result<f64> {
    let full = crate::gramian::network_gramian(sys)?;
    approximation_error_with(full, red, variant)
}

/// As [`approximation_error_h2`], reusing an already computed full Gramian.
pub fn approximation_error_with(
    full: NetworkGramian,
    red: &ReducedModel,
    variant: ErrorVariant,
) -> Result<f64> {
    ErrorGramians::with_full(full, red, &SingularOptions::default())?.error(variant)
}
