//! JSON report shapes. Vertex and cluster numbers are 1-based throughout.

use nalgebra::DVector;
use serde::Serialize;

use mwc_core::clustering::{ClusterPartition, MergeRule};
use mwc_core::graph::{MatrixWeightedGraph, WeightClass};
use mwc_core::spectral::SpectralReport;

pub fn one_based(sets: &[Vec<usize>]) -> Vec<Vec<usize>> {
    sets.iter().map(|s| s.iter().map(|v| v + 1).collect()).collect()
}

pub fn sorted_sets(mut sets: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for s in sets.iter_mut() {
        s.sort_unstable();
    }
    sets.sort();
    sets
}

/// One row per agent.
pub fn agent_rows(x: &DVector<f64>, d: usize) -> Vec<Vec<f64>> {
    x.as_slice().chunks(d).map(<[f64]>::to_vec).collect()
}

#[derive(Debug, Serialize)]
pub struct EdgeRow {
    pub i: usize,
    pub j: usize,
    pub class: &'static str,
    pub min_eigenvalue: f64,
}

#[derive(Debug, Serialize)]
pub struct TreeRow {
    pub vertices: Vec<usize>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum MergeRow {
    EdgeSum {
        first: Vec<usize>,
        second: Vec<usize>,
        edges: Vec<[usize; 2]>,
    },
    PathCondition {
        first: Vec<usize>,
        second: Vec<usize>,
        vertex: usize,
        paths: Vec<Vec<usize>>,
    },
}

#[derive(Debug, Serialize)]
pub struct TruncatedRow {
    pub vertex: usize,
    pub cluster: Vec<usize>,
}

#[derive(Debug, Serialize)]
pub struct AnalysisReport {
    pub scenario: String,
    pub n: usize,
    pub d: usize,
    pub edges: Vec<EdgeRow>,
    pub positive_trees: Vec<TreeRow>,
    pub merges: Vec<MergeRow>,
    pub clusters: Vec<Vec<usize>>,
    pub spanning_cluster: bool,
    pub truncated_queries: Vec<TruncatedRow>,
    pub nullspace_dim: usize,
    pub lambda_d_plus_1: f64,
    pub consensus_predicted: bool,
    /// Agents that agree at every equilibrium, read from the nullspace basis.
    pub nullspace_partition: Vec<Vec<usize>>,
    /// Structural and spectral consensus predictions coincide.
    pub agreement: bool,
}

fn class_name(c: WeightClass) -> &'static str {
    match c {
        WeightClass::PositiveDefinite => "positive_definite",
        WeightClass::PositiveSemidefinite => "positive_semidefinite",
        WeightClass::Zero => "zero",
    }
}

impl AnalysisReport {
    pub fn new(
        scenario: &str,
        g: &MatrixWeightedGraph,
        partition: &ClusterPartition,
        spectrum: &SpectralReport,
        nullspace_partition: &[Vec<usize>],
    ) -> Self {
        let edges = g.edges();
        let pair = |k: usize| [edges[k].tail + 1, edges[k].head + 1];
        Self {
            scenario: scenario.to_string(),
            n: g.vertex_count(),
            d: g.dim(),
            edges: edges
                .iter()
                .map(|e| EdgeRow {
                    i: e.tail + 1,
                    j: e.head + 1,
                    class: class_name(e.weight.class()),
                    min_eigenvalue: e.weight.min_eigenvalue(),
                })
                .collect(),
            positive_trees: partition
                .trees
                .trees
                .iter()
                .map(|t| TreeRow {
                    vertices: t.vertices.iter().map(|v| v + 1).collect(),
                    edges: t.edges.iter().map(|&k| pair(k)).collect(),
                })
                .collect(),
            merges: partition
                .merges
                .iter()
                .map(|m| {
                    let (first, second) = (m.first.iter().map(|v| v + 1).collect(), m.second.iter().map(|v| v + 1).collect());
                    match &m.rule {
                        MergeRule::EdgeSum { edges } => MergeRow::EdgeSum {
                            first,
                            second,
                            edges: edges.iter().map(|&(a, b)| [a + 1, b + 1]).collect(),
                        },
                        MergeRule::PathCondition { vertex, paths } => MergeRow::PathCondition {
                            first,
                            second,
                            vertex: vertex + 1,
                            paths: one_based(paths),
                        },
                    }
                })
                .collect(),
            clusters: one_based(&partition.vertex_sets()),
            spanning_cluster: partition.spanning(),
            truncated_queries: partition
                .truncated
                .iter()
                .map(|q| TruncatedRow {
                    vertex: q.vertex + 1,
                    cluster: q.cluster.iter().map(|v| v + 1).collect(),
                })
                .collect(),
            nullspace_dim: spectrum.nullspace_dim,
            lambda_d_plus_1: spectrum.lambda_d_plus_1,
            consensus_predicted: spectrum.consensus_predicted,
            nullspace_partition: one_based(nullspace_partition),
            agreement: partition.spanning() == spectrum.consensus_predicted,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SpectrumReport {
    pub scenario: String,
    pub eigenvalues: Vec<f64>,
    pub zero_threshold: f64,
    pub nullspace_dim: usize,
    pub lambda_d_plus_1: f64,
    pub lambda_max: f64,
    pub consensus_predicted: bool,
    /// Orthonormal nullspace basis, one entry per vector.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nullspace_basis: Option<Vec<Vec<f64>>>,
}

impl SpectrumReport {
    pub fn new(scenario: &str, spectrum: &SpectralReport, basis: bool) -> Self {
        Self {
            scenario: scenario.to_string(),
            eigenvalues: spectrum.eigenvalues.clone(),
            zero_threshold: spectrum.zero_threshold,
            nullspace_dim: spectrum.nullspace_dim,
            lambda_d_plus_1: spectrum.lambda_d_plus_1,
            lambda_max: spectrum.lambda_max(),
            consensus_predicted: spectrum.consensus_predicted,
            nullspace_basis: basis.then(|| {
                spectrum
                    .nullspace_basis
                    .column_iter()
                    .map(|c| c.iter().copied().collect())
                    .collect()
            }),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PairRow {
    pub first: usize,
    pub second: usize,
    pub intersection_dim: usize,
    pub residual: f64,
    pub relative_residual: f64,
    pub truncated: bool,
}

#[derive(Debug, Serialize)]
pub struct EquilibriumSection {
    pub clusters: Vec<Vec<usize>>,
    pub cluster_states: Vec<Vec<f64>>,
    pub average_residual: f64,
    pub pairs: Vec<PairRow>,
}

#[derive(Debug, Serialize)]
pub struct DecaySection {
    pub rate: f64,
    pub lambda_d_plus_1: f64,
    pub samples: usize,
    pub window_end: f64,
    pub within_bound: bool,
}

#[derive(Debug, Serialize)]
pub struct FormationSection {
    pub max_relative_residual: f64,
    pub laplacian_residual: f64,
    pub ok: bool,
}

#[derive(Debug, Serialize)]
pub struct SimulationReport {
    pub scenario: String,
    pub seed: Option<u64>,
    pub step: f64,
    pub horizon: f64,
    pub record_stride: usize,
    pub samples: usize,
    pub final_time: f64,
    pub converged: bool,
    pub initial_average: Vec<f64>,
    pub final_states: Vec<Vec<f64>>,
    pub average_drift: f64,
    pub lyapunov_increase: f64,
    pub predicted_clusters: Vec<Vec<usize>>,
    /// Present only for converged runs.
    pub observed_clusters: Option<Vec<Vec<usize>>>,
    pub agreement: Option<bool>,
    pub equilibrium: Option<EquilibriumSection>,
    pub decay: Option<DecaySection>,
    pub formation: Option<FormationSection>,
    pub trajectory_file: String,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub checks: Vec<Check>,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct RandomFailure {
    pub seed: u64,
    pub failed: Vec<&'static str>,
}

#[derive(Debug, Serialize)]
pub struct RandomVerifyReport {
    pub n: usize,
    pub d: usize,
    pub first_seed: u64,
    pub count: usize,
    pub passed: usize,
    pub pass_rate: f64,
    pub failures: Vec<RandomFailure>,
}
