//! Simulated end states against the structural and spectral predictions.

use rand::Rng;

use mwc_core::clustering::find_clusters;
use mwc_core::dynamics::{detect_clusters_from_states, simulate, verify_equilibrium_constraints, SimulationConfig};
use mwc_core::random::{random_graph, random_initial_state, rng_from_seed};
use mwc_core::scenarios::{four_agent, nine_agent_clustered};
use mwc_core::spectral::{analyze_spectrum, nullspace_partition};
use mwc_core::tolerance::{DEFAULT_CONVERGENCE_TOL, DEFAULT_GROUP_TOL, DEFAULT_MAX_PATHS};

const TRIALS: u64 = 400;

fn sorted(mut p: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for c in p.iter_mut() {
        c.sort_unstable();
    }
    p.sort();
    p
}

/// Converged runs group agents exactly as the cluster algorithm predicts in
/// at least 99% of trials. Every disagreement must be one where the run
/// matches the nullspace of the Laplacian, i.e. the algorithm under-merged.
#[test]
fn simulated_clusters_match_predictions() {
    let (mut compared, mut agree) = (0, 0);
    let mut unexplained = Vec::new();
    for k in 0..TRIALS {
        let seed = 0xa9ee_0000 + k;
        let mut rng = rng_from_seed(seed);
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=3);
        let g = random_graph(&mut rng, n, d).unwrap();
        let x0 = random_initial_state(&mut rng, n, d);
        let t = simulate(&g, &x0, &SimulationConfig::with_horizon(2000.0)).unwrap();
        let partition = find_clusters(&g, DEFAULT_MAX_PATHS).unwrap();
        if !t.converged || partition.is_truncated() {
            continue;
        }
        compared += 1;
        let observed = sorted(detect_clusters_from_states(&t.final_state, d, DEFAULT_GROUP_TOL));
        if observed == sorted(partition.vertex_sets()) {
            agree += 1;
            continue;
        }
        let report = analyze_spectrum(&g).unwrap();
        let spectral = sorted(nullspace_partition(&g, &report, 1e-7));
        if observed != spectral {
            unexplained.push((seed, observed, spectral));
        } else {
            eprintln!("seed {seed:#x}: run and nullspace agree on {observed:?}; cluster algorithm under-merged");
        }
    }
    assert!(compared >= TRIALS * 9 / 10, "only {compared} converged runs");
    assert!(unexplained.is_empty(), "unexplained disagreements: {unexplained:?}");
    assert!(agree * 100 >= compared * 99, "{agree} of {compared} agree");
}

/// Consensus-predicted graphs converge to the initial average.
#[test]
fn consensus_graphs_reach_the_average() {
    let mut checked = 0;
    for k in 0..200 {
        let mut rng = rng_from_seed(0xc0_0000 + k);
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=3);
        let g = random_graph(&mut rng, n, d).unwrap();
        let report = analyze_spectrum(&g).unwrap();
        if !report.consensus_predicted || report.lambda_d_plus_1 < 1e-3 {
            continue;
        }
        let x0 = random_initial_state(&mut rng, n, d);
        // Long enough for the slowest mode to decay by e^-40.
        let horizon = 40.0 / report.lambda_d_plus_1;
        let t = simulate(&g, &x0, &SimulationConfig::with_horizon(horizon)).unwrap();
        assert!(t.converged, "k = {k}");
        let target = g.consensus_basis() * t.initial_average();
        let gap = (&t.final_state - &target).norm() / target.norm().max(1.0);
        assert!(gap <= 1e-6, "k = {k}: relative gap {gap:e}");
        checked += 1;
    }
    assert!(checked >= 50);
}

/// `‖L x‖` at a converged end state is bounded by the stopping tolerance.
#[test]
fn converged_runs_are_equilibria() {
    for k in 0..100 {
        let mut rng = rng_from_seed(0xe9_0000 + k);
        let n = rng.random_range(2..=8);
        let d = rng.random_range(1..=3);
        let g = random_graph(&mut rng, n, d).unwrap();
        let x0 = random_initial_state(&mut rng, n, d);
        let t = simulate(&g, &x0, &SimulationConfig::with_horizon(2000.0)).unwrap();
        if t.converged {
            let residual = (g.laplacian() * &t.final_state).norm();
            assert!(residual <= 10.0 * DEFAULT_CONVERGENCE_TOL, "k = {k}: {residual:e}");
        }
    }
}

#[test]
fn four_agent_end_states_group_as_predicted() {
    let g = four_agent();
    for seed in 0..5 {
        let x0 = random_initial_state(&mut rng_from_seed(seed), 4, 3);
        let t = simulate(&g, &x0, &SimulationConfig::default()).unwrap();
        assert_eq!(detect_clusters_from_states(&t.final_state, 3, DEFAULT_GROUP_TOL), vec![vec![0, 1, 3], vec![2]]);
    }
}

#[test]
fn nine_agent_case_one_constraints() {
    let g = nine_agent_clustered();
    let clusters = vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8]];
    let x0 = random_initial_state(&mut rng_from_seed(3), 9, 2);
    let t = simulate(&g, &x0, &SimulationConfig::with_horizon(5000.0)).unwrap();
    let report = verify_equilibrium_constraints(&g, &t, &clusters, DEFAULT_MAX_PATHS).unwrap();
    assert_eq!(report.detected_partition, clusters);
    assert!(report.average_residual <= 1e-6);
    assert_eq!(report.pair_constraints.len(), 3);
    for pc in &report.pair_constraints {
        assert_eq!(pc.intersection_dim, 1);
        assert!(pc.relative_residual <= 1e-6);
    }
}
