//! Eigen-analysis of the matrix-weighted Laplacian.
//!
//! The Laplacian always has the `d`-dimensional consensus space
//! `span{1_n (x) I_d}` in its nullspace. Average consensus is reached for
//! every initial condition exactly when the nullspace is no larger than that,
//! and the smallest positive eigenvalue then bounds the decay rate of the
//! disagreement.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::MatrixWeightedGraph;
use crate::linalg::{select_columns, sorted_symmetric_eigen};
use crate::subspace::Subspace;
use crate::tolerance::eig_scale;

#[derive(Debug, Clone)]
pub struct SpectralReport {
    /// All `dn` eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    pub nullspace_dim: usize,
    /// Smallest eigenvalue above the zero threshold, `0.0` if there is none.
    pub lambda_d_plus_1: f64,
    pub consensus_predicted: bool,
    /// `dn x nullspace_dim`, orthonormal columns.
    pub nullspace_basis: DMatrix<f64>,
    /// Eigenvalues at or below this are treated as zero.
    pub zero_threshold: f64,
}

impl SpectralReport {
    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues.last().copied().unwrap_or(0.0)
    }
}

pub fn analyze_spectrum(g: &MatrixWeightedGraph) -> Result<SpectralReport> {
    let (eigenvalues, vectors) = sorted_symmetric_eigen(&g.laplacian())?;
    let top = eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let zero_threshold = g.tolerances().rank_tol * eig_scale(top);
    let nullspace_dim = eigenvalues.iter().filter(|&&v| v <= zero_threshold).count();
    let lambda_d_plus_1 = eigenvalues
        .iter()
        .copied()
        .find(|&v| v > zero_threshold)
        .unwrap_or(0.0);
    let nullspace_basis = select_columns(&eigenvalues, &vectors, |v| v <= zero_threshold);
    Ok(SpectralReport {
        consensus_predicted: nullspace_dim == g.dim(),
        eigenvalues,
        nullspace_dim,
        lambda_d_plus_1,
        nullspace_basis,
        zero_threshold,
    })
}

/// `N(L)` as a subspace of `R^{dn}`.
pub fn laplacian_nullspace(g: &MatrixWeightedGraph) -> Result<Subspace> {
    Ok(Subspace::from_orthonormal(analyze_spectrum(g)?.nullspace_basis))
}

/// `λ_{d+1}(L)` for a graph that reaches consensus.
pub fn convergence_rate(g: &MatrixWeightedGraph) -> Result<f64> {
    let report = analyze_spectrum(g)?;
    if !report.consensus_predicted {
        return Err(Error::NotConsensusGraph {
            nullspace_dim: report.nullspace_dim,
            d: g.dim(),
        });
    }
    Ok(report.lambda_d_plus_1)
}

/// Vertex grouping implied by `N(L)`: `i` and `j` share a group when every
/// nullspace vector has equal `i` and `j` blocks, i.e. they agree at
/// equilibrium from every initial condition.
pub fn nullspace_partition(g: &MatrixWeightedGraph, report: &SpectralReport, tol: f64) -> Vec<Vec<usize>> {
    let d = g.dim();
    let basis = &report.nullspace_basis;
    let mut groups: Vec<Vec<usize>> = Vec::new();
    'vertex: for v in 0..g.vertex_count() {
        for group in groups.iter_mut() {
            let rep = group[0];
            let diff = basis.rows(v * d, d) - basis.rows(rep * d, d);
            if diff.iter().all(|x| x.abs() <= tol) {
                group.push(v);
                continue 'vertex;
            }
        }
        groups.push(vec![v]);
    }
    groups
}
