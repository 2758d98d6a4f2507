//! Seeded generators for test corpora.
//!
//! Every generator takes the RNG explicitly; callers seed a
//! [`ChaCha8Rng`] so corpora are reproducible across platforms.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::Result;
use crate::graph::{build_graph, MatrixWeightedGraph};
use crate::subspace::Subspace;

/// Probability of each non-tree pair becoming an edge.
pub const EXTRA_EDGE_PROBABILITY: f64 = 0.35;

/// Smallest eigenvalue added to definite weights.
const DEFINITE_SHIFT: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    /// `B Bᵀ + 0.2 I`.
    Definite,
    /// `B Bᵀ` with `B` of rank `1..d-1`.
    Semidefinite,
    /// `b bᵀ`.
    RankOne,
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

pub fn random_weight<R: Rng + ?Sized>(rng: &mut R, d: usize, kind: WeightKind) -> DMatrix<f64> {
    // In one dimension every nonzero PSD weight is definite.
    let kind = if d == 1 { WeightKind::Definite } else { kind };
    let b = match kind {
        WeightKind::Definite => gaussian_matrix(rng, d, d),
        WeightKind::Semidefinite => {
            let rank = rng.random_range(1..d);
            gaussian_matrix(rng, d, rank)
        }
        WeightKind::RankOne => gaussian_matrix(rng, d, 1),
    };
    let mut m = &b * b.transpose();
    if kind == WeightKind::Definite {
        m += DMatrix::identity(d, d) * DEFINITE_SHIFT;
    }
    m
}

pub fn random_weight_kind<R: Rng + ?Sized>(rng: &mut R) -> WeightKind {
    [WeightKind::Definite, WeightKind::Semidefinite, WeightKind::RankOne][rng.random_range(0..3)]
}

/// Connected graph on `n` vertices: a uniformly shuffled random tree plus
/// each remaining pair with probability [`EXTRA_EDGE_PROBABILITY`], every
/// weight of a uniformly chosen kind.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> Result<MatrixWeightedGraph> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut present = vec![vec![false; n]; n];
    let mut pairs = Vec::new();
    for k in 1..n {
        let parent = order[rng.random_range(0..k)];
        let child = order[k];
        present[parent][child] = true;
        present[child][parent] = true;
        pairs.push((parent.min(child), parent.max(child)));
    }
    for i in 0..n {
        for j in i + 1..n {
            if !present[i][j] && rng.random_bool(EXTRA_EDGE_PROBABILITY) {
                pairs.push((i, j));
            }
        }
    }
    let edges = pairs
        .into_iter()
        .map(|(i, j)| {
            let kind = random_weight_kind(rng);
            (i, j, random_weight(rng, d, kind))
        })
        .collect();
    build_graph(n, d, edges)
}

/// Uniform in `[-5, 5]^{nd}`.
pub fn random_initial_state<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize) -> DVector<f64> {
    DVector::from_fn(n * d, |_, _| rng.random_range(-5.0..=5.0))
}

pub fn random_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

/// Two random subspaces of `R^d`. Half of the time they share a random
/// common part, so intersections of every dimension turn up.
pub fn random_subspace_pair<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Result<(Subspace, Subspace)> {
    let shared = if rng.random_bool(0.5) { rng.random_range(0..=d) } else { 0 };
    let common: Vec<DVector<f64>> = (0..shared).map(|_| random_vector(rng, d)).collect();
    let side = |rng: &mut R| -> Result<Subspace> {
        let extra = rng.random_range(0..=d - shared);
        let mut vs = common.clone();
        vs.extend((0..extra).map(|_| random_vector(rng, d)));
        if vs.is_empty() {
            Ok(Subspace::zero(d))
        } else {
            Subspace::from_vectors(&vs)
        }
    };
    let a = side(rng)?;
    let b = side(rng)?;
    Ok((a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightClass;

    #[test]
    fn kinds_classify_as_intended() {
        let mut rng = rng_from_seed(7);
        for d in 2..=4 {
            for _ in 0..20 {
                let class = |m| crate::graph::MatrixWeight::new(m).unwrap().class();
                assert_eq!(class(random_weight(&mut rng, d, WeightKind::Definite)), WeightClass::PositiveDefinite);
                assert_eq!(
                    class(random_weight(&mut rng, d, WeightKind::Semidefinite)),
                    WeightClass::PositiveSemidefinite
                );
                assert_eq!(class(random_weight(&mut rng, d, WeightKind::RankOne)), WeightClass::PositiveSemidefinite);
            }
        }
    }

    #[test]
    fn graphs_are_connected_and_reproducible() {
        for seed in 0..20 {
            let g1 = random_graph(&mut rng_from_seed(seed), 6, 2).unwrap();
            let g2 = random_graph(&mut rng_from_seed(seed), 6, 2).unwrap();
            assert_eq!(g1, g2);
            assert!(g1.edge_count() >= 5);
            let mut seen = vec![false; 6];
            let mut stack = vec![0];
            while let Some(v) = stack.pop() {
                if !std::mem::replace(&mut seen[v], true) {
                    stack.extend(g1.neighbors(v).iter().map(|&(u, _)| u));
                }
            }
            assert!(seen.iter().all(|&s| s));
        }
    }

    #[test]
    fn initial_states_in_box() {
        let x = random_initial_state(&mut rng_from_seed(1), 5, 3);
        assert_eq!(x.len(), 15);
        assert!(x.iter().all(|v| v.abs() <= 5.0));
    }
}
