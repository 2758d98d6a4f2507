//! Bearing-based formation control as a matrix-weighted network.
//!
//! Each constrained pair `(i, j)` is weighted by the projector
//! `P = I - g gᵀ` onto the orthogonal complement of the desired bearing `g`.
//! The resulting Laplacian is an ordinary matrix-weighted Laplacian, so
//! analysis and simulation go through the generic modules unchanged.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::dynamics::{simulate, SimulationConfig, Trajectory};
use crate::error::{Error, Result};
use crate::graph::{build_graph, MatrixWeight, MatrixWeightedGraph};
use crate::linalg::agent;

/// Accepted deviation of a bearing norm from 1.
pub const UNIT_TOL: f64 = 1e-10;

/// Residual bound for a final state to count as a formation.
pub const FORMATION_TOL: f64 = 1e-6;

/// Desired bearing `g` from agent `from` towards agent `to`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bearing {
    pub from: usize,
    pub to: usize,
    pub direction: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BearingSpec {
    pub n: usize,
    pub d: usize,
    pub bearings: Vec<Bearing>,
}

impl BearingSpec {
    /// Bearings read off target positions: `g_ij = (p_j - p_i) / ‖p_j - p_i‖`.
    pub fn from_target(positions: &[DVector<f64>], edges: &[(usize, usize)]) -> Result<Self> {
        let n = positions.len();
        let d = positions.first().map(|p| p.len()).unwrap_or(0);
        if let Some(bad) = positions.iter().find(|p| p.len() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        let mut bearings = Vec::with_capacity(edges.len());
        for &(i, j) in edges {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            let diff = &positions[j] - &positions[i];
            let len = diff.norm();
            if len <= f64::EPSILON * positions[i].norm().max(1.0) {
                return Err(Error::InconsistentBearings {
                    i,
                    j,
                    reason: "target positions coincide".into(),
                });
            }
            bearings.push(Bearing {
                from: i,
                to: j,
                direction: diff / len,
            });
        }
        Ok(Self { n, d, bearings })
    }

    /// One bearing per unordered pair, oriented from the smaller index.
    /// Checks unit norms, dimensions and `g_ji = -g_ij` for pairs given both
    /// ways.
    pub fn canonical_bearings(&self) -> Result<Vec<Bearing>> {
        let mut pairs: BTreeMap<(usize, usize), DVector<f64>> = BTreeMap::new();
        for b in &self.bearings {
            let (i, j) = (b.from, b.to);
            for v in [i, j] {
                if v >= self.n {
                    return Err(Error::VertexOutOfRange { vertex: v, n: self.n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if b.direction.len() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: b.direction.len(),
                });
            }
            let norm = b.direction.norm();
            if (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::NotUnitVector { i, j, norm });
            }
            let (key, g) = if i < j {
                ((i, j), b.direction.clone())
            } else {
                ((j, i), -&b.direction)
            };
            if let Some(prev) = pairs.get(&key) {
                let gap = (prev - &g).norm();
                if gap > UNIT_TOL {
                    return Err(Error::InconsistentBearings {
                        i,
                        j,
                        reason: format!("g_ji differs from -g_ij by {gap:e}"),
                    });
                }
                continue;
            }
            pairs.insert(key, g);
        }
        Ok(pairs
            .into_iter()
            .map(|((from, to), direction)| Bearing { from, to, direction })
            .collect())
    }
}

/// `I - g gᵀ` for a unit vector `g`.
pub fn projection_weight(g: &DVector<f64>) -> Result<MatrixWeight> {
    let norm = g.norm();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::NotUnitVector { i: 0, j: 0, norm });
    }
    MatrixWeight::new(projection_matrix(g))
}

fn projection_matrix(g: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::identity(g.len(), g.len()) - g * g.transpose()
}

/// Matrix-weighted graph whose Laplacian is the bearing Laplacian of `spec`.
pub fn bearing_laplacian(spec: &BearingSpec) -> Result<MatrixWeightedGraph> {
    let edges = spec
        .canonical_bearings()?
        .into_iter()
        .map(|b| (b.from, b.to, projection_matrix(&b.direction)))
        .collect();
    build_graph(spec.n, spec.d, edges)
}

/// `‖P_g (p_j - p_i)‖` and its bound for one constrained pair.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeResidual {
    pub from: usize,
    pub to: usize,
    pub residual: f64,
    pub bound: f64,
}

impl EdgeResidual {
    pub fn ok(&self) -> bool {
        self.residual <= self.bound
    }
}

#[derive(Debug, Clone)]
pub struct FormationOutcome {
    pub trajectory: Trajectory,
    pub edge_residuals: Vec<EdgeResidual>,
    pub max_relative_residual: f64,
    /// `‖L_B p_final‖`.
    pub laplacian_residual: f64,
    pub ok: bool,
}

/// Component of each displacement orthogonal to its desired bearing.
pub fn edge_residuals(spec: &BearingSpec, state: &DVector<f64>) -> Result<Vec<EdgeResidual>> {
    if state.len() != spec.n * spec.d {
        return Err(Error::DimensionMismatch {
            expected: spec.n * spec.d,
            found: state.len(),
        });
    }
    Ok(spec
        .canonical_bearings()?
        .into_iter()
        .map(|b| {
            let diff = agent(state, b.to, spec.d) - agent(state, b.from, spec.d);
            EdgeResidual {
                from: b.from,
                to: b.to,
                residual: (projection_matrix(&b.direction) * &diff).norm(),
                bound: FORMATION_TOL * diff.norm().max(1.0),
            }
        })
        .collect())
}

/// Runs `ṗ = -L_B p` from `x0` and checks the end state against every
/// bearing constraint and against `N(L_B)`.
pub fn formation_converges_to(
    spec: &BearingSpec,
    x0: &DVector<f64>,
    cfg: &SimulationConfig,
) -> Result<FormationOutcome> {
    let g = bearing_laplacian(spec)?;
    let trajectory = simulate(&g, x0, cfg)?;
    let edge_residuals = edge_residuals(spec, &trajectory.final_state)?;
    let max_relative_residual = edge_residuals
        .iter()
        .map(|r| r.residual / (r.bound / FORMATION_TOL))
        .fold(0.0, f64::max);
    let laplacian_residual = (g.laplacian() * &trajectory.final_state).norm();
    let ok = trajectory.converged
        && edge_residuals.iter().all(EdgeResidual::ok)
        && laplacian_residual <= FORMATION_TOL;
    Ok(FormationOutcome {
        trajectory,
        edge_residuals,
        max_relative_residual,
        laplacian_residual,
        ok,
    })
}

/// Four agents on the unit square, constrained along the four sides and the
/// diagonal from agent 0 to agent 2.
pub fn square_formation() -> BearingSpec {
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let positions: Vec<DVector<f64>> = corners.iter().map(|c| DVector::from_row_slice(c)).collect();
    BearingSpec::from_target(&positions, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)])
        .expect("square corners are distinct")
}
