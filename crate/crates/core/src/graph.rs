//! Matrix-weighted graphs and their structural matrices.
//!
//! A graph on `n` vertices carries one `d x d` symmetric positive-semidefinite
//! weight per undirected edge. The Laplacian is the `dn x dn` block matrix
//! `L = D - A` with degree blocks `D_i = sum_j A_ij` and off-diagonal blocks
//! `-A_ij`; it also factors as `(H (x) I_d)^T blkdiag(A_k) (H (x) I_d)` where
//! `H` is the oriented incidence matrix.
//!
//! Vertices are 0-based. Edges are stored in lexicographic order of
//! `(min, max)` and oriented with the lower index as tail.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{self, sorted_symmetric_eigen};
use crate::tolerance::{eig_scale, Tolerances};

/// Definiteness class of an edge weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WeightClass {
    PositiveDefinite,
    PositiveSemidefinite,
    Zero,
}

impl WeightClass {
    pub fn is_definite(self) -> bool {
        self == WeightClass::PositiveDefinite
    }
}

impl std::fmt::Display for WeightClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            WeightClass::PositiveDefinite => "positive definite",
            WeightClass::PositiveSemidefinite => "positive semidefinite",
            WeightClass::Zero => "zero",
        })
    }
}

/// A validated `d x d` symmetric positive-semidefinite coupling matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixWeight {
    entries: DMatrix<f64>,
    class: WeightClass,
    min_eigenvalue: f64,
    max_abs_eigenvalue: f64,
}

impl MatrixWeight {
    /// Validates `m` with the default tolerances.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerances(m, &Tolerances::default())
    }

    /// Validates symmetry and positive semidefiniteness, then symmetrizes.
    ///
    /// Edge endpoints in errors are reported as `(0, 0)`; [`build_graph`]
    /// rewrites them with the actual edge.
    pub fn with_tolerances(m: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        let deviation = linalg::max_abs(&(&m - m.transpose()));
        if deviation > tol.sym_tol {
            return Err(Error::AsymmetricWeight { i: 0, j: 0, deviation });
        }
        let entries = linalg::symmetrize(&m);
        let (values, _) = sorted_symmetric_eigen(&entries)?;
        let min_eigenvalue = values.first().copied().unwrap_or(0.0);
        let max_abs_eigenvalue = values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        let scale = eig_scale(max_abs_eigenvalue);
        if min_eigenvalue < -tol.psd_tol * scale {
            return Err(Error::NotPositiveSemidefinite {
                i: 0,
                j: 0,
                min_eigenvalue,
            });
        }
        let class = if entries.iter().all(|&x| x == 0.0) {
            WeightClass::Zero
        } else if min_eigenvalue > tol.psd_tol * scale {
            WeightClass::PositiveDefinite
        } else {
            WeightClass::PositiveSemidefinite
        };
        Ok(Self {
            entries,
            class,
            min_eigenvalue,
            max_abs_eigenvalue,
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d)).expect("identity is positive definite")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_row_slice(diag)))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn class(&self) -> WeightClass {
        self.class
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.min_eigenvalue
    }

    pub fn max_abs_eigenvalue(&self) -> f64 {
        self.max_abs_eigenvalue
    }
}

/// Classification of an already validated weight.
pub fn classify_edge(w: &MatrixWeight) -> WeightClass {
    w.class()
}

/// Undirected edge with `tail < head`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub tail: usize,
    pub head: usize,
    pub weight: MatrixWeight,
}

impl Edge {
    pub fn other(&self, v: usize) -> usize {
        if v == self.tail {
            self.head
        } else {
            self.tail
        }
    }
}

/// Fixed undirected graph with one matrix weight per edge.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixWeightedGraph {
    n: usize,
    d: usize,
    edges: Vec<Edge>,
    /// Per vertex: `(neighbor, edge index)` sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    tolerances: Tolerances,
}

/// Builds and validates a graph from `(i, j, weight)` triples with default
/// tolerances.
pub fn build_graph(
    n: usize,
    d: usize,
    weighted_edges: Vec<(usize, usize, DMatrix<f64>)>,
) -> Result<MatrixWeightedGraph> {
    MatrixWeightedGraph::with_tolerances(n, d, weighted_edges, Tolerances::default())
}

impl MatrixWeightedGraph {
    pub fn new(
        n: usize,
        d: usize,
        weighted_edges: Vec<(usize, usize, DMatrix<f64>)>,
    ) -> Result<Self> {
        Self::with_tolerances(n, d, weighted_edges, Tolerances::default())
    }

    pub fn with_tolerances(
        n: usize,
        d: usize,
        weighted_edges: Vec<(usize, usize, DMatrix<f64>)>,
        tolerances: Tolerances,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::DimensionMismatch { expected: 1, found: 0 });
        }
        let mut by_pair: BTreeMap<(usize, usize), MatrixWeight> = BTreeMap::new();
        for (i, j, m) in weighted_edges {
            for v in [i, j] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            if i == j {
                return Err(Error::SelfLoop(i));
            }
            if m.nrows() != d || m.ncols() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: if m.nrows() != d { m.nrows() } else { m.ncols() },
                });
            }
            let key = (i.min(j), i.max(j));
            let weight = MatrixWeight::with_tolerances(m, &tolerances).map_err(|e| match e {
                Error::AsymmetricWeight { deviation, .. } => Error::AsymmetricWeight {
                    i: key.0,
                    j: key.1,
                    deviation,
                },
                Error::NotPositiveSemidefinite { min_eigenvalue, .. } => {
                    Error::NotPositiveSemidefinite {
                        i: key.0,
                        j: key.1,
                        min_eigenvalue,
                    }
                }
                other => other,
            })?;
            if weight.class() == WeightClass::Zero {
                return Err(Error::ZeroWeight { i: key.0, j: key.1 });
            }
            if by_pair.insert(key, weight).is_some() {
                return Err(Error::DuplicateEdge { i: key.0, j: key.1 });
            }
        }
        let edges: Vec<Edge> = by_pair
            .into_iter()
            .map(|((tail, head), weight)| Edge { tail, head, weight })
            .collect();
        let mut adjacency = vec![Vec::new(); n];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.tail].push((e.head, k));
            adjacency[e.head].push((e.tail, k));
        }
        for nbrs in &mut adjacency {
            nbrs.sort_unstable();
        }
        Ok(Self {
            n,
            d,
            edges,
            adjacency,
            tolerances,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in canonical order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn tolerances(&self) -> &Tolerances {
        &self.tolerances
    }

    /// `(neighbor, edge index)` pairs of `v`, ascending by neighbor.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn edge_index(&self, i: usize, j: usize) -> Option<usize> {
        self.adjacency
            .get(i)?
            .binary_search_by_key(&j, |&(nbr, _)| nbr)
            .ok()
            .map(|pos| self.adjacency[i][pos].1)
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<&MatrixWeight> {
        self.edge_index(i, j).map(|k| &self.edges[k].weight)
    }

    /// Block adjacency matrix: `A_ij` at block `(i, j)` for every edge.
    pub fn adjacency_matrix(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut a = DMatrix::zeros(d * self.n, d * self.n);
        for e in &self.edges {
            let w = e.weight.matrix();
            a.view_mut((e.tail * d, e.head * d), (d, d)).copy_from(w);
            a.view_mut((e.head * d, e.tail * d), (d, d)).copy_from(w);
        }
        a
    }

    /// Block diagonal matrix of vertex degree matrices `D_i = sum_j A_ij`.
    pub fn degree_matrix(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut deg = DMatrix::zeros(d * self.n, d * self.n);
        for e in &self.edges {
            let w = e.weight.matrix();
            for v in [e.tail, e.head] {
                let mut blk = deg.view_mut((v * d, v * d), (d, d));
                blk += w;
            }
        }
        deg
    }

    /// `L = D - A`, assembled block by block.
    pub fn laplacian(&self) -> DMatrix<f64> {
        self.degree_matrix() - self.adjacency_matrix()
    }

    /// Oriented incidence matrix, one row per edge in canonical order.
    pub fn incidence_matrix(&self) -> IncidenceMatrix {
        let mut h = DMatrix::zeros(self.edges.len(), self.n);
        for (k, e) in self.edges.iter().enumerate() {
            h[(k, e.tail)] = 1.0;
            h[(k, e.head)] = -1.0;
        }
        IncidenceMatrix(h)
    }

    /// `(H (x) I_d)^T blkdiag(A_k) (H (x) I_d)`.
    pub fn laplacian_from_incidence(&self) -> DMatrix<f64> {
        let d = self.d;
        let h_bar = self.incidence_matrix().kron_identity(d);
        let m = self.edges.len();
        let mut blk = DMatrix::zeros(d * m, d * m);
        for (k, e) in self.edges.iter().enumerate() {
            blk.view_mut((k * d, k * d), (d, d))
                .copy_from(e.weight.matrix());
        }
        h_bar.transpose() * blk * h_bar
    }

    /// `sum over edges (v_i - v_j)^T A_ij (v_i - v_j)`.
    pub fn quadratic_form(&self, v: &DVector<f64>) -> Result<f64> {
        let d = self.d;
        if v.len() != d * self.n {
            return Err(Error::DimensionMismatch {
                expected: d * self.n,
                found: v.len(),
            });
        }
        Ok(self
            .edges
            .iter()
            .map(|e| {
                let diff = v.rows(e.tail * d, d) - v.rows(e.head * d, d);
                diff.dot(&(e.weight.matrix() * &diff))
            })
            .sum())
    }

    /// The stacked `1_n (x) I_d` basis of the consensus space (`dn x d`).
    pub fn consensus_basis(&self) -> DMatrix<f64> {
        let d = self.d;
        let mut r = DMatrix::zeros(d * self.n, d);
        for i in 0..self.n {
            r.view_mut((i * d, 0), (d, d))
                .copy_from(&DMatrix::identity(d, d));
        }
        r
    }

    /// Edges with one endpoint in `a` and the other in `b`.
    pub fn crossing_edges(&self, a: &[usize], b: &[usize]) -> Vec<usize> {
        let in_b = self.membership(b);
        let mut out: Vec<usize> = a
            .iter()
            .flat_map(|&u| self.adjacency[u].iter())
            .filter(|&&(nbr, _)| in_b[nbr])
            .map(|&(_, k)| k)
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    pub(crate) fn membership(&self, set: &[usize]) -> Vec<bool> {
        let mut mask = vec![false; self.n];
        for &v in set {
            mask[v] = true;
        }
        mask
    }

    /// Same graph with vertices renamed by `perm` (`old -> perm[old]`).
    pub fn relabeled(&self, perm: &[usize]) -> Result<Self> {
        let edges = self
            .edges
            .iter()
            .map(|e| (perm[e.tail], perm[e.head], e.weight.matrix().clone()))
            .collect();
        Self::with_tolerances(self.n, self.d, edges, self.tolerances)
    }
}

/// `m x n` oriented incidence matrix with entries in `{-1, 0, +1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncidenceMatrix(pub DMatrix<f64>);

impl IncidenceMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// `H (x) I_d`.
    pub fn kron_identity(&self, d: usize) -> DMatrix<f64> {
        self.0.kronecker(&DMatrix::<f64>::identity(d, d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn example_weights() -> Vec<(usize, usize, DMatrix<f64>)> {
        vec![
            (0, 1, DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 1.0, 1.0]))),
            (0, 2, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]))),
            (1, 2, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 1.0]))),
            (0, 3, DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 1.0]))),
        ]
    }

    fn path3() -> MatrixWeightedGraph {
        build_graph(
            3,
            1,
            vec![(0, 1, dmatrix![1.0]), (1, 2, dmatrix![1.0])],
        )
        .unwrap()
    }

    #[test]
    fn four_agent_edge_classes() {
        let g = build_graph(4, 3, example_weights()).unwrap();
        let class = |i, j| g.weight(i, j).unwrap().class();
        assert_eq!(class(0, 3), WeightClass::PositiveDefinite);
        assert_eq!(class(0, 1), WeightClass::PositiveSemidefinite);
        assert_eq!(class(0, 2), WeightClass::PositiveSemidefinite);
        assert_eq!(class(1, 2), WeightClass::PositiveSemidefinite);
    }

    #[test]
    fn scalar_edge_is_definite() {
        let g = build_graph(2, 1, vec![(0, 1, dmatrix![1.0])]).unwrap();
        assert!(g.edges()[0].weight.class().is_definite());
    }

    #[test]
    fn rejects_indefinite_weight() {
        let err = build_graph(2, 2, vec![(0, 1, dmatrix![1.0, 2.0; 2.0, 1.0])]).unwrap_err();
        match err {
            Error::NotPositiveSemidefinite { i, j, min_eigenvalue } => {
                assert_eq!((i, j), (0, 1));
                assert!((min_eigenvalue + 1.0).abs() < 1e-12);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_structural_errors() {
        let id = DMatrix::<f64>::identity(2, 2);
        assert_eq!(
            build_graph(2, 2, vec![(1, 1, id.clone())]).unwrap_err(),
            Error::SelfLoop(1)
        );
        assert_eq!(
            build_graph(3, 2, vec![(0, 1, id.clone()), (1, 0, id.clone())]).unwrap_err(),
            Error::DuplicateEdge { i: 0, j: 1 }
        );
        assert!(matches!(
            build_graph(2, 3, vec![(0, 1, id.clone())]).unwrap_err(),
            Error::DimensionMismatch { .. }
        ));
        assert!(matches!(
            build_graph(2, 2, vec![(0, 1, dmatrix![1.0, 0.1; 0.0, 1.0])]).unwrap_err(),
            Error::AsymmetricWeight { .. }
        ));
        assert_eq!(
            build_graph(2, 2, vec![(0, 1, DMatrix::zeros(2, 2))]).unwrap_err(),
            Error::ZeroWeight { i: 0, j: 1 }
        );
        assert!(matches!(
            build_graph(2, 2, vec![(0, 5, id)]).unwrap_err(),
            Error::VertexOutOfRange { vertex: 5, n: 2 }
        ));
    }

    #[test]
    fn tiny_asymmetry_is_symmetrized() {
        let m = dmatrix![1.0, 0.5 + 1e-13; 0.5, 1.0];
        let w = MatrixWeight::new(m).unwrap();
        assert_eq!(w.matrix()[(0, 1)], w.matrix()[(1, 0)]);
    }

    #[test]
    fn classify_examples() {
        assert_eq!(
            classify_edge(&MatrixWeight::from_diagonal(&[1.0, 2.0, 1.0]).unwrap()),
            WeightClass::PositiveDefinite
        );
        assert_eq!(
            classify_edge(&MatrixWeight::from_diagonal(&[0.0, 1.0, 1.0]).unwrap()),
            WeightClass::PositiveSemidefinite
        );
        for d in 1..5 {
            assert_eq!(MatrixWeight::identity(d).class(), WeightClass::PositiveDefinite);
        }
    }

    #[test]
    fn adjacency_blocks() {
        let g = build_graph(4, 3, example_weights()).unwrap();
        let a = g.adjacency_matrix();
        assert_eq!(a.shape(), (12, 12));
        assert_eq!(a, a.transpose());
        for e in g.edges() {
            assert_eq!(&linalg::block(&a, e.tail, e.head, 3), e.weight.matrix());
        }
        for i in 0..4 {
            assert!(linalg::block(&a, i, i, 3).iter().all(|&x| x == 0.0));
        }
        assert!(linalg::block(&a, 2, 3, 3).iter().all(|&x| x == 0.0));

        let empty = build_graph(3, 2, vec![]).unwrap();
        assert!(empty.adjacency_matrix().iter().all(|&x| x == 0.0));
        assert_eq!(
            path3().adjacency_matrix(),
            dmatrix![0.0, 1.0, 0.0; 1.0, 0.0, 1.0; 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn path_laplacian_is_classical() {
        assert_eq!(
            path3().laplacian(),
            dmatrix![1.0, -1.0, 0.0; -1.0, 2.0, -1.0; 0.0, -1.0, 1.0]
        );
    }

    #[test]
    fn laplacian_kills_consensus_space() {
        let g = build_graph(4, 3, example_weights()).unwrap();
        let l = g.laplacian();
        let r = g.consensus_basis();
        assert!(linalg::max_abs(&(&l * &r)) <= 1e-12);
        for i in 0..4 {
            let mut row_sum = DMatrix::<f64>::zeros(3, 3);
            for j in 0..4 {
                row_sum += linalg::block(&l, i, j, 3);
            }
            assert!(linalg::max_abs(&row_sum) == 0.0);
        }
    }

    #[test]
    fn incidence_orientation() {
        let g = build_graph(2, 1, vec![(1, 0, dmatrix![1.0])]).unwrap();
        assert_eq!(g.incidence_matrix().matrix(), &dmatrix![1.0, -1.0]);

        let id = DMatrix::<f64>::identity(1, 1);
        let tri = build_graph(
            3,
            1,
            vec![(2, 1, id.clone()), (0, 2, id.clone()), (0, 1, id)],
        )
        .unwrap();
        assert_eq!(
            tri.incidence_matrix().matrix(),
            &dmatrix![1.0, -1.0, 0.0; 1.0, 0.0, -1.0; 0.0, 1.0, -1.0]
        );
        let ones = DVector::from_element(3, 1.0);
        assert!((tri.incidence_matrix().matrix() * ones).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn incidence_factorization_single_edge() {
        let w = dmatrix![2.0, 1.0; 1.0, 3.0];
        let g = build_graph(2, 2, vec![(0, 1, w.clone())]).unwrap();
        let mut expected = DMatrix::zeros(4, 4);
        expected.view_mut((0, 0), (2, 2)).copy_from(&w);
        expected.view_mut((2, 2), (2, 2)).copy_from(&w);
        expected.view_mut((0, 2), (2, 2)).copy_from(&(-&w));
        expected.view_mut((2, 0), (2, 2)).copy_from(&(-&w));
        assert_eq!(g.laplacian_from_incidence(), expected);

        let empty = build_graph(3, 2, vec![]).unwrap();
        assert!(empty.laplacian_from_incidence().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn incidence_factorization_matches_assembly() {
        let g = build_graph(4, 3, example_weights()).unwrap();
        let diff = linalg::max_abs(&(g.laplacian() - g.laplacian_from_incidence()));
        assert!(diff <= 1e-12 * linalg::max_abs(&g.laplacian()));
    }

    #[test]
    fn quadratic_form_zero_cases() {
        let g = build_graph(4, 3, example_weights()).unwrap();
        let w = DVector::from_vec(vec![0.3, -1.2, 4.0]);
        let consensus = g.consensus_basis() * &w;
        assert!(g.quadratic_form(&consensus).unwrap().abs() < 1e-12);

        let mut v = DVector::zeros(12);
        v[2 * 3 + 1] = 1.0;
        assert_eq!(g.quadratic_form(&v).unwrap(), 0.0);

        assert!(matches!(
            g.quadratic_form(&DVector::zeros(5)),
            Err(Error::DimensionMismatch { expected: 12, found: 5 })
        ));
    }

    #[test]
    fn relabeling_preserves_classes() {
        let g = build_graph(4, 3, example_weights()).unwrap();
        let perm = [3, 0, 2, 1];
        let h = g.relabeled(&perm).unwrap();
        for e in g.edges() {
            let mapped = h.weight(perm[e.tail], perm[e.head]).unwrap();
            assert_eq!(mapped.class(), e.weight.class());
        }
    }

    #[test]
    fn crossing_edges_between_sets() {
        let g = build_graph(4, 3, example_weights()).unwrap();
        let crossing = g.crossing_edges(&[0, 3], &[1, 2]);
        let pairs: Vec<_> = crossing
            .iter()
            .map(|&k| (g.edges()[k].tail, g.edges()[k].head))
            .collect();
        assert_eq!(pairs, vec![(0, 1), (0, 2)]);
    }
}
