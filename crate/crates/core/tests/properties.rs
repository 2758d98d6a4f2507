//! Invariants checked over randomly generated graphs and subspaces.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use mwc_core::bearing::{bearing_laplacian, BearingSpec};
use mwc_core::clustering::find_clusters;
use mwc_core::graph::MatrixWeightedGraph;
use mwc_core::random::{random_graph, random_subspace_pair, random_vector, rng_from_seed};
use mwc_core::spectral::{analyze_spectrum, nullspace_partition, SpectralReport};
use mwc_core::subspace::Subspace;
use mwc_core::tolerance::DEFAULT_MAX_PATHS;

fn graph(seed: u64, n: usize, d: usize) -> MatrixWeightedGraph {
    random_graph(&mut rng_from_seed(seed), n, d).unwrap()
}

fn graphs() -> impl Strategy<Value = MatrixWeightedGraph> {
    (any::<u64>(), 2usize..=7, 1usize..=3).prop_map(|(seed, n, d)| graph(seed, n, d))
}

/// No eigenvalue sits in the band between round-off and the zero threshold,
/// where the rank decision is a judgement call.
fn clear_gap(report: &SpectralReport) -> bool {
    report.eigenvalues[report.nullspace_dim - 1] <= 1e-13 * report.lambda_max().max(1.0)
}

fn subspace_pairs() -> impl Strategy<Value = (Subspace, Subspace)> {
    (any::<u64>(), 1usize..=5).prop_map(|(seed, d)| random_subspace_pair(&mut rng_from_seed(seed), d).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dimension_formula((a, b) in subspace_pairs()) {
        let sum = a.sum(&b).unwrap();
        let meet = a.intersect(&b).unwrap();
        prop_assert_eq!(a.dimension() + b.dimension(), sum.dimension() + meet.dimension());
    }

    #[test]
    fn sum_and_intersection_bracket_both((a, b) in subspace_pairs()) {
        let sum = a.sum(&b).unwrap();
        let meet = a.intersect(&b).unwrap();
        for v in a.basis().column_iter().chain(b.basis().column_iter()) {
            prop_assert!(sum.contains(&v.into_owned(), 1e-9).unwrap());
        }
        for v in meet.basis().column_iter() {
            let v = v.into_owned();
            prop_assert!(a.contains(&v, 1e-9).unwrap() && b.contains(&v, 1e-9).unwrap());
        }
    }

    #[test]
    fn operations_commute_and_are_idempotent((a, b) in subspace_pairs()) {
        prop_assert!(a.sum(&b).unwrap().approx_eq(&b.sum(&a).unwrap(), 1e-9));
        prop_assert!(a.intersect(&b).unwrap().approx_eq(&b.intersect(&a).unwrap(), 1e-9));
        prop_assert!(a.sum(&a).unwrap().approx_eq(&a, 1e-9));
        prop_assert!(a.intersect(&a).unwrap().approx_eq(&a, 1e-9));
    }

    #[test]
    fn projector_is_idempotent((a, _b) in subspace_pairs()) {
        let p = a.projector();
        prop_assert!((&p * &p - &p).amax() <= 1e-12);
        prop_assert!((p.trace() - a.dimension() as f64).abs() <= 1e-12);
    }

    #[test]
    fn incidence_factorization_matches(g in graphs()) {
        let l = g.laplacian();
        prop_assert!((&l - g.laplacian_from_incidence()).amax() <= 1e-12 * l.amax());
        prop_assert!((&l - l.transpose()).amax() == 0.0);
        prop_assert!((&l * g.consensus_basis()).amax() <= 1e-12 * l.amax().max(1.0));
    }

    #[test]
    fn quadratic_form_is_edge_sum(g in graphs(), seed in any::<u64>()) {
        let d = g.dim();
        let v = random_vector(&mut rng_from_seed(seed), g.vertex_count() * d);
        let edge_sum: f64 = g
            .edges()
            .iter()
            .map(|e| {
                let diff = v.rows(e.head * d, d) - v.rows(e.tail * d, d);
                diff.dot(&(e.weight.matrix() * &diff))
            })
            .sum();
        let q = g.quadratic_form(&v).unwrap();
        prop_assert!(q >= -1e-12);
        prop_assert!((q - edge_sum).abs() <= 1e-10 * edge_sum.abs().max(1.0));
    }

    /// Near the zero threshold an eigenvalue bounds the edge residual by
    /// `sqrt(λ ‖A‖)` rather than by round-off, so only clear gaps count.
    #[test]
    fn nullspace_satisfies_every_edge(g in graphs()) {
        let d = g.dim();
        let report = analyze_spectrum(&g).unwrap();
        prop_assert!(report.nullspace_dim >= d);
        prop_assume!(clear_gap(&report));
        for v in report.nullspace_basis.column_iter() {
            for e in g.edges() {
                let diff = v.rows(e.head * d, d) - v.rows(e.tail * d, d);
                prop_assert!((e.weight.matrix() * diff).norm() <= 1e-8);
            }
        }
    }

    /// Clusters are sound: agents placed together agree at every equilibrium.
    #[test]
    fn clusters_refine_the_nullspace_partition(g in graphs()) {
        let report = analyze_spectrum(&g).unwrap();
        prop_assume!(clear_gap(&report));
        let groups = nullspace_partition(&g, &report, 1e-7);
        let clusters = find_clusters(&g, DEFAULT_MAX_PATHS).unwrap();
        for c in clusters.vertex_sets() {
            prop_assert!(groups.iter().any(|grp| c.iter().all(|v| grp.contains(v))), "{:?} vs {:?}", c, groups);
        }
        if clusters.spanning() {
            prop_assert!(report.consensus_predicted);
        }
    }

    #[test]
    fn clusters_follow_relabeling(g in graphs(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let n = g.vertex_count();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng_from_seed(seed));
        let h = g.relabeled(&perm).unwrap();
        let mut mapped: Vec<Vec<usize>> = find_clusters(&g, DEFAULT_MAX_PATHS)
            .unwrap()
            .vertex_sets()
            .into_iter()
            .map(|c| {
                let mut c: Vec<usize> = c.into_iter().map(|v| perm[v]).collect();
                c.sort_unstable();
                c
            })
            .collect();
        mapped.sort();
        let mut direct = find_clusters(&h, DEFAULT_MAX_PATHS).unwrap().vertex_sets();
        direct.sort();
        prop_assert_eq!(mapped, direct);
        let a = analyze_spectrum(&g).unwrap();
        let b = analyze_spectrum(&h).unwrap();
        prop_assert_eq!(a.nullspace_dim, b.nullspace_dim);
    }

    /// Every bearing nullspace vector moves each edge along its own bearing.
    #[test]
    fn bearing_nullspace_is_edgewise_parallel(seed in any::<u64>(), n in 2usize..=5) {
        let mut rng = rng_from_seed(seed);
        let positions: Vec<DVector<f64>> = (0..n).map(|_| random_vector(&mut rng, 2)).collect();
        let mut edges: Vec<(usize, usize)> = (1..n).map(|k| (k - 1, k)).collect();
        if n > 2 {
            edges.push((0, n - 1));
        }
        let spec = BearingSpec::from_target(&positions, &edges).unwrap();
        let g = bearing_laplacian(&spec).unwrap();
        let report = analyze_spectrum(&g).unwrap();
        for v in report.nullspace_basis.column_iter() {
            for b in &spec.bearings {
                let diff = v.rows(b.to * 2, 2) - v.rows(b.from * 2, 2);
                let p = DMatrix::identity(2, 2) - &b.direction * b.direction.transpose();
                prop_assert!((p * diff).norm() <= 1e-8);
            }
        }
        let target = DVector::from_iterator(2 * n, positions.iter().flat_map(|p| p.iter().copied()));
        prop_assert!((g.laplacian() * target).amax() <= 1e-10);
    }
}
