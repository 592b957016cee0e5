//! End-to-end reduction with per-phase wall-clock timings.

use std::time::{Duration, Instant};

use crate::cluster::{
    dissimilarity, greedy_clustering, hierarchical_clustering, random_clustering, Dendrogram,
    DissimilarityKind, DissimilarityMatrix,
};
use crate::error::Result;
use crate::gramian::{network_gramian_with, NetworkGramian};
use crate::matrixeq::SingularOptions;
use crate::network::ClusteringPartition;
use crate::reduce::{project, ErrorGramians, ErrorVariant, ReducedModel};
use crate::sys2::SecondOrderNetwork;

/// How vertices are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Average-linkage agglomeration on H2 dissimilarities.
    Hierarchical,
    /// Seeded random partition.
    Random { seed: u64 },
    /// Single-linkage union of the closest vertex pairs.
    Greedy,
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Hierarchical => "hierarchical",
            Strategy::Random { .. } => "random",
            Strategy::Greedy => "greedy",
        }
    }
}

/// Wall-clock time spent in each phase.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub gramian: Duration,
    pub dissimilarity: Duration,
    pub clustering: Duration,
    pub projection: Duration,
    pub error: Duration,
}

impl PhaseTimings {
    pub fn total(&self) -> Duration {
        self.gramian + self.dissimilarity + self.clustering + self.projection + self.error
    }
}

/// Result of one reduction.
#[derive(Debug, Clone)]
pub struct ReductionOutcome {
    pub reduced: ReducedModel,
    pub partition: ClusteringPartition,
    /// Present for hierarchical clustering.
    pub dendrogram: Option<Dendrogram>,
    pub error_h2: f64,
    pub timings: PhaseTimings,
}

/// A network prepared for repeated reductions: its Gramian and dissimilarities are
/// computed once.
#[derive(Debug, Clone)]
pub struct Reducer {
    sys: SecondOrderNetwork,
    variant: ErrorVariant,
    options: SingularOptions,
    gramian: NetworkGramian,
    dissimilarity: DissimilarityMatrix,
    setup: PhaseTimings,
}

impl Reducer {
    pub fn new(sys: SecondOrderNetwork, variant: ErrorVariant) -> Result<Self> {
        Reducer::with_options(sys, variant, SingularOptions::default())
    }

    pub fn with_options(
        sys: SecondOrderNetwork,
        variant: ErrorVariant,
        options: SingularOptions,
    ) -> Result<Self> {
        let mut setup = PhaseTimings::default();
        let t = Instant::now();
        let gramian = network_gramian_with(&sys, &options)?;
        setup.gramian = t.elapsed();

        let t = Instant::now();
        let kind = match variant {
            ErrorVariant::Position => DissimilarityKind::Position,
            ErrorVariant::Velocity => DissimilarityKind::Velocity,
        };
        let dissimilarity = dissimilarity(&sys, &gramian, kind)?;
        setup.dissimilarity = t.elapsed();
        Ok(Reducer {
            sys,
            variant,
            options,
            gramian,
            dissimilarity,
            setup,
        })
    }

    pub fn system(&self) -> &SecondOrderNetwork {
        &self.sys
    }

    pub fn gramian(&self) -> &NetworkGramian {
        &self.gramian
    }

    pub fn dissimilarity(&self) -> &DissimilarityMatrix {
        &self.dissimilarity
    }

    /// Time spent on the Gramian and dissimilarities.
    pub fn setup_timings(&self) -> PhaseTimings {
        self.setup
    }

    /// Full dendrogram of the average-linkage clustering.
    pub fn dendrogram(&self) -> Result<Dendrogram> {
        Ok(hierarchical_clustering(&self.dissimilarity, 1)?.1)
    }

    /// Reduces to `r` clusters chosen by `strategy`. Timings include the shared setup.
    pub fn reduce(&self, r: usize, strategy: Strategy) -> Result<ReductionOutcome> {
        let n = self.sys.n();
        let mut timings = self.setup;
        let t = Instant::now();
        let (partition, dendrogram) = match strategy {
            Strategy::Hierarchical => {
                let (p, tree) = hierarchical_clustering(&self.dissimilarity, r)?;
                (p, Some(tree))
            }
            Strategy::Random { seed } => (random_clustering(n, r, seed)?, None),
            Strategy::Greedy => (greedy_clustering(&self.dissimilarity, r)?, None),
        };
        timings.clustering = t.elapsed();
        self.finish(partition, dendrogram, timings)
    }

    /// Reduces with a given partition; the clustering phase is skipped.
    pub fn reduce_with_partition(
        &self,
        partition: ClusteringPartition,
    ) -> Result<ReductionOutcome> {
        self.finish(partition, None, self.setup)
    }

    fn finish(
        &self,
        partition: ClusteringPartition,
        dendrogram: Option<Dendrogram>,
        mut timings: PhaseTimings,
    ) -> Result<ReductionOutcome> {
        let t = Instant::now();
        let reduced = project(&self.sys, &partition)?;
        timings.projection = t.elapsed();

        let t = Instant::now();
        let gramians = ErrorGramians::with_full(self.gramian.clone(), &reduced, &self.options)?;
        let error_h2 = gramians.error(self.variant)?;
        timings.error = t.elapsed();
        Ok(ReductionOutcome {
            reduced,
            partition,
            dendrogram,
            error_h2,
            timings,
        })
    }
}
