//! Built-in example networks.
//!
//! Vertices are 0-based here; the published labels are one higher.
//!
//! The nine-agent weights `A_14`, `A_17` and `A_46` are rank one but were
//! published rounded to four digits. Taken literally the rounding makes
//! `A_46` slightly indefinite and `A_14`, `A_17` slightly definite, which
//! would reject the graph or collapse every cluster. The built-ins use the
//! exact rank-one matrices the rounded values come from; the literal values
//! are kept in [`nine_agent_printed_weights`] for comparison.

use nalgebra::{dmatrix, DMatrix, DVector};

use crate::bearing::{bearing_laplacian, square_formation};
use crate::graph::{build_graph, MatrixWeightedGraph};

pub type WeightedEdges = Vec<(usize, usize, DMatrix<f64>)>;

fn diag(entries: &[f64]) -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_row_slice(entries))
}

/// Four agents in `R^3`: one definite edge and three semidefinite ones.
/// Agent 2 ends apart from the other three.
pub fn four_agent_weights() -> WeightedEdges {
    vec![
        (0, 1, diag(&[0.0, 1.0, 1.0])),
        (0, 2, diag(&[1.0, 0.0, 0.0])),
        (1, 2, diag(&[1.0, 0.0, 1.0])),
        (0, 3, diag(&[1.0, 2.0, 1.0])),
    ]
}

pub fn four_agent() -> MatrixWeightedGraph {
    build_graph(4, 3, four_agent_weights()).expect("valid built-in")
}

/// `√3 / 4`, the off-diagonal of the rank-one 30° weights.
const SQRT3_OVER_4: f64 = 0.433_012_701_892_219_3;

/// `A_46 = a aᵀ` with `a = (√0.9518, -√0.0482)`.
fn a46() -> DMatrix<f64> {
    let off = -(0.9518_f64 * 0.0482).sqrt();
    dmatrix![0.9518, off; off, 0.0482]
}

/// Nine agents in the plane with three intended clusters
/// `{0,1,2}`, `{3,4,5}`, `{6,7,8}`.
pub fn nine_agent_clustered_weights() -> WeightedEdges {
    vec![
        (0, 1, dmatrix![2.0, 0.0; 0.0, 1.0]),
        (0, 2, dmatrix![2.0, 3.0; 3.0, 5.0]),
        (3, 6, dmatrix![0.0, 0.0; 0.0, 1.0]),
        (0, 3, dmatrix![0.75, -SQRT3_OVER_4; -SQRT3_OVER_4, 0.25]),
        (0, 6, dmatrix![0.75, SQRT3_OVER_4; SQRT3_OVER_4, 0.25]),
        (3, 4, dmatrix![1.0, 0.5; 0.5, 1.0]),
        (3, 5, a46()),
        (4, 5, dmatrix![1.0, 0.0; 0.0, 0.0]),
        (6, 7, dmatrix![3.0, 2.0; 2.0, 3.0]),
        (7, 8, dmatrix![2.0, 0.0; 0.0, 2.0]),
    ]
}

pub fn nine_agent_clustered() -> MatrixWeightedGraph {
    build_graph(9, 2, nine_agent_clustered_weights()).expect("valid built-in")
}

/// The clustered network plus a semidefinite edge between agents 1 and 7,
/// which joins all three clusters.
pub fn nine_agent_spanning_weights() -> WeightedEdges {
    let mut edges = nine_agent_clustered_weights();
    edges.push((1, 7, dmatrix![0.0, 0.0; 0.0, 1.0]));
    edges
}

pub fn nine_agent_spanning() -> MatrixWeightedGraph {
    build_graph(9, 2, nine_agent_spanning_weights()).expect("valid built-in")
}

/// The nine-agent weights exactly as published, four significant digits.
pub fn nine_agent_printed_weights() -> WeightedEdges {
    let mut edges = nine_agent_clustered_weights();
    for (i, j, w) in edges.iter_mut() {
        match (*i, *j) {
            (0, 3) => *w = dmatrix![0.75, -0.433; -0.433, 0.25],
            (0, 6) => *w = dmatrix![0.75, 0.433; 0.433, 0.25],
            (3, 5) => *w = dmatrix![0.9518, -0.2142; -0.2142, 0.0482],
            _ => {}
        }
    }
    edges
}

/// Bearing Laplacian of the unit-square formation.
pub fn square_bearing_graph() -> MatrixWeightedGraph {
    bearing_laplacian(&square_formation()).expect("valid built-in")
}

/// Name, description and graph of every built-in.
pub fn builtins() -> Vec<(&'static str, &'static str, MatrixWeightedGraph)> {
    vec![
        ("example1", "four agents in R^3, two clusters", four_agent()),
        ("cluster9_case1", "nine agents in R^2, three clusters", nine_agent_clustered()),
        ("cluster9_case2", "nine agents in R^2, consensus", nine_agent_spanning()),
        ("bearing_square", "bearing Laplacian of a unit square", square_bearing_graph()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::graph::WeightClass;

    #[test]
    fn printed_weights_round_to_the_built_ins() {
        for ((_, _, exact), (_, _, printed)) in nine_agent_clustered_weights().iter().zip(nine_agent_printed_weights()) {
            assert!((exact - printed).amax() < 5e-5);
        }
    }

    #[test]
    fn printed_a46_is_indefinite() {
        assert!(matches!(
            build_graph(9, 2, nine_agent_printed_weights()),
            Err(Error::NotPositiveSemidefinite { i: 3, j: 5, .. })
        ));
    }

    #[test]
    fn semidefinite_edges_as_published() {
        let g = nine_agent_clustered();
        let semi: Vec<(usize, usize)> = g
            .edges()
            .iter()
            .filter(|e| e.weight.class() == WeightClass::PositiveSemidefinite)
            .map(|e| (e.tail, e.head))
            .collect();
        assert_eq!(semi, vec![(0, 3), (0, 6), (3, 5), (3, 6), (4, 5)]);
    }
}
