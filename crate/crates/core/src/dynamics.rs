//! Continuous-time protocol `ẋ = -L x` and checks on its trajectories.
//!
//! Integration uses the classical fourth-order Runge-Kutta scheme with a
//! fixed step. For a linear system one step is the polynomial propagator
//! `I - hL + (hL)^2/2 - (hL)^3/6 + (hL)^4/24`, which is formed once and then
//! applied per step; runs are therefore bit-reproducible. With
//! `h <= 1/λ_max` every eigenvalue of the propagator lies in `[0.375, 1]`, so
//! the state norm never grows.

use nalgebra::{DMatrix, DVector};
use petgraph::unionfind::UnionFind;

use crate::clustering::{edge_nullspaces, membership_test};
use crate::error::{Error, Result};
use crate::graph::MatrixWeightedGraph;
use crate::linalg::agent;
use crate::spectral::{analyze_spectrum, convergence_rate};
use crate::subspace::Subspace;
use crate::tolerance::{DEFAULT_CONVERGENCE_TOL, DEFAULT_GROUP_TOL};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    /// Fixed step in seconds; `None` picks the largest allowed step.
    pub step: Option<f64>,
    pub horizon: f64,
    /// Run stops once `‖x(t+h) - x(t)‖ / h` drops to this.
    pub convergence_tol: f64,
    /// Record every `record_stride`-th step (the final state is always kept).
    pub record_stride: usize,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            step: None,
            horizon: 100.0,
            convergence_tol: DEFAULT_CONVERGENCE_TOL,
            record_stride: 1,
        }
    }
}

impl SimulationConfig {
    pub fn with_horizon(horizon: f64) -> Self {
        Self {
            horizon,
            ..Self::default()
        }
    }
}

/// Largest step accepted for a Laplacian with top eigenvalue `lambda_max`:
/// half of the explicit-scheme bound `2 / λ_max`.
pub fn max_stable_step(lambda_max: f64) -> f64 {
    if lambda_max > 0.0 {
        0.5 * (2.0 / lambda_max)
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub n: usize,
    pub d: usize,
    pub step: f64,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub converged: bool,
    pub final_state: DVector<f64>,
}

impl Trajectory {
    /// Agent `i`'s state at every recorded time.
    pub fn agent_series(&self, i: usize) -> Vec<DVector<f64>> {
        self.states.iter().map(|x| agent(x, i, self.d)).collect()
    }

    pub fn initial_state(&self) -> &DVector<f64> {
        &self.states[0]
    }

    pub fn initial_average(&self) -> DVector<f64> {
        average(&self.states[0], self.n, self.d)
    }

    pub fn final_agent(&self, i: usize) -> DVector<f64> {
        agent(&self.final_state, i, self.d)
    }
}

/// `x̄ = (1/n) sum_i x_i`.
pub fn average(x: &DVector<f64>, n: usize, d: usize) -> DVector<f64> {
    let mut acc = DVector::zeros(d);
    for i in 0..n {
        acc += x.rows(i * d, d);
    }
    acc / n.max(1) as f64
}

fn rk4_propagator(l: &DMatrix<f64>, h: f64) -> DMatrix<f64> {
    let dim = l.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    let a = l * (-h);
    let mut m = &id + &a * 0.25;
    m = &id + (&a * m) / 3.0;
    m = &id + (&a * m) * 0.5;
    &id + &a * m
}

pub fn simulate(
    g: &MatrixWeightedGraph,
    x0: &DVector<f64>,
    cfg: &SimulationConfig,
) -> Result<Trajectory> {
    let (n, d) = (g.vertex_count(), g.dim());
    if x0.len() != n * d {
        return Err(Error::DimensionMismatch {
            expected: n * d,
            found: x0.len(),
        });
    }
    if !(cfg.horizon >= 0.0) || !cfg.horizon.is_finite() {
        return Err(Error::InvalidConfig(format!("horizon {} must be finite and >= 0", cfg.horizon)));
    }
    if !(cfg.convergence_tol > 0.0) {
        return Err(Error::InvalidConfig("convergence_tol must be positive".into()));
    }
    if cfg.record_stride == 0 {
        return Err(Error::InvalidConfig("record_stride must be at least 1".into()));
    }
    let l = g.laplacian();
    let lambda_max = analyze_spectrum(g)?.lambda_max();
    let bound = max_stable_step(lambda_max);
    let step = match cfg.step {
        Some(h) if !(h > 0.0) || !h.is_finite() => {
            return Err(Error::InvalidConfig(format!("step {h} must be positive")))
        }
        Some(h) if h > bound => return Err(Error::StepTooLarge { step: h, bound }),
        Some(h) => h,
        None if bound.is_finite() => bound,
        None => 1.0,
    };
    let step = if cfg.step.is_none() && cfg.horizon > 0.0 {
        step.min(cfg.horizon)
    } else {
        step
    };

    let propagator = rk4_propagator(&l, step);
    let steps = (cfg.horizon / step * (1.0 + 1e-12)).floor() as usize;
    let mut times = vec![0.0];
    let mut states = vec![x0.clone()];
    let mut x = x0.clone();
    let mut converged = false;
    let mut taken = 0;
    for k in 1..=steps {
        let next = &propagator * &x;
        let rate = (&next - &x).norm() / step;
        x = next;
        taken = k;
        if rate <= cfg.convergence_tol {
            converged = true;
            break;
        }
        if k % cfg.record_stride == 0 {
            times.push(k as f64 * step);
            states.push(x.clone());
        }
    }
    if taken > 0 && (converged || taken % cfg.record_stride != 0) {
        times.push(taken as f64 * step);
        states.push(x.clone());
    }
    Ok(Trajectory {
        n,
        d,
        step,
        times,
        states,
        converged,
        final_state: x,
    })
}

/// `max_t ‖x̄(t) - x̄(0)‖` over recorded samples.
pub fn check_average_invariance(traj: &Trajectory) -> f64 {
    let start = traj.initial_average();
    traj.states
        .iter()
        .map(|x| (average(x, traj.n, traj.d) - &start).norm())
        .fold(0.0, f64::max)
}

/// Largest increase of `V = ½‖x‖²` between consecutive samples (0 if none).
pub fn lyapunov_increase(traj: &Trajectory) -> f64 {
    traj.states
        .windows(2)
        .map(|w| 0.5 * (w[1].norm_squared() - w[0].norm_squared()))
        .fold(0.0, f64::max)
}

/// Groups agents whose final states are within `group_tol` of each other,
/// closed transitively. Groups are ordered by smallest member.
pub fn detect_clusters_from_states(state: &DVector<f64>, d: usize, group_tol: f64) -> Vec<Vec<usize>> {
    let n = state.len() / d;
    let mut uf = UnionFind::<usize>::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if (state.rows(i * d, d) - state.rows(j * d, d)).norm() <= group_tol {
                uf.union(i, j);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: Vec<Option<usize>> = vec![None; n];
    for v in 0..n {
        let root = uf.find(v);
        match slot[root] {
            Some(s) => groups[s].push(v),
            None => {
                slot[root] = Some(groups.len());
                groups.push(vec![v]);
            }
        }
    }
    groups
}

/// Difference constraint between the end states of two clusters.
#[derive(Debug, Clone)]
pub struct PairConstraint {
    pub first: usize,
    pub second: usize,
    /// Dimension of the intersection of path nullspaces between the pair.
    pub intersection_dim: usize,
    /// Distance of `x*_first - x*_second` from that intersection.
    pub residual: f64,
    /// `residual / max(‖x*_first - x*_second‖, 1)`.
    pub relative_residual: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct EquilibriumReport {
    /// Mean final state of each cluster, in the order clusters were given.
    pub cluster_states: Vec<DVector<f64>>,
    /// Grouping read directly from the final states.
    pub detected_partition: Vec<Vec<usize>>,
    /// `‖sum_i |C_i| x*_{C_i} - n x̄(0)‖ / max(‖n x̄(0)‖, 1)`.
    pub average_residual: f64,
    /// One entry per cluster pair joined by at least one path.
    pub pair_constraints: Vec<PairConstraint>,
}

impl EquilibriumReport {
    pub fn max_pair_residual(&self) -> f64 {
        self.pair_constraints
            .iter()
            .map(|p| p.relative_residual)
            .fold(0.0, f64::max)
    }
}

/// Checks a converged run against the end-state constraints of a cluster
/// partition: weighted cluster states reproduce the conserved average, and
/// each pair of cluster states differs only along directions every
/// connecting path leaves free.
pub fn verify_equilibrium_constraints(
    g: &MatrixWeightedGraph,
    traj: &Trajectory,
    clusters: &[Vec<usize>],
    max_paths: usize,
) -> Result<EquilibriumReport> {
    if !traj.converged {
        return Err(Error::NotConverged);
    }
    let (n, d) = (g.vertex_count(), g.dim());
    let mut covered = vec![false; n];
    for c in clusters {
        if c.is_empty() {
            return Err(Error::InvalidVertexSet("empty cluster".into()));
        }
        for &v in c {
            if v >= n || covered[v] {
                return Err(Error::InvalidVertexSet(format!(
                    "vertex {v} missing from the graph or listed twice"
                )));
            }
            covered[v] = true;
        }
    }
    if covered.iter().any(|c| !c) {
        return Err(Error::InvalidVertexSet("clusters do not cover every vertex".into()));
    }

    let cluster_states: Vec<DVector<f64>> = clusters
        .iter()
        .map(|c| {
            c.iter()
                .fold(DVector::zeros(d), |acc, &v| acc + traj.final_agent(v))
                / c.len() as f64
        })
        .collect();
    let weighted = clusters
        .iter()
        .zip(&cluster_states)
        .fold(DVector::zeros(d), |acc, (c, s)| acc + s * c.len() as f64);
    let total0 = traj.initial_average() * n as f64;
    let average_residual = (&weighted - &total0).norm() / total0.norm().max(1.0);

    let edge_null = edge_nullspaces(g)?;
    let mut pair_constraints = Vec::new();
    for a in 0..clusters.len() {
        for b in a + 1..clusters.len() {
            let mut meet: Option<Subspace> = None;
            let mut truncated = false;
            for &s in &clusters[a] {
                let test = membership_test(g, &edge_null, s, &clusters[b], max_paths)?;
                truncated |= test.truncated;
                if let Some(ns) = test.intersection {
                    meet = Some(match meet {
                        None => ns,
                        Some(m) => m.intersect(&ns)?,
                    });
                }
            }
            let Some(meet) = meet else { continue };
            let diff = &cluster_states[a] - &cluster_states[b];
            let residual = meet.residual(&diff)?;
            pair_constraints.push(PairConstraint {
                first: a,
                second: b,
                intersection_dim: meet.dimension(),
                residual,
                relative_residual: residual / diff.norm().max(1.0),
                truncated,
            });
        }
    }

    Ok(EquilibriumReport {
        cluster_states,
        detected_partition: detect_clusters_from_states(&traj.final_state, d, DEFAULT_GROUP_TOL),
        average_residual,
        pair_constraints,
    })
}

/// Least-squares fit of `log ‖δ(t)‖` against `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecayFit {
    /// Fitted slope; negative for a decaying disagreement.
    pub rate: f64,
    pub lambda_d_plus_1: f64,
    pub samples: usize,
    pub window_end: f64,
}

impl DecayFit {
    /// `rate <= -λ_{d+1} (1 - slack)`.
    pub fn within_bound(&self, slack: f64) -> bool {
        self.rate <= -self.lambda_d_plus_1 * (1.0 - slack)
    }
}

/// Fits the decay of the disagreement `δ = x - 1_n (x) x̄(0)` over the
/// samples where it is still above round-off.
pub fn measure_decay_rate(traj: &Trajectory, g: &MatrixWeightedGraph) -> Result<DecayFit> {
    let lambda = convergence_rate(g)?;
    let mean = traj.initial_average();
    let consensus = g.consensus_basis() * &mean;
    let norms: Vec<f64> = traj.states.iter().map(|x| (x - &consensus).norm()).collect();
    let start = norms[0];
    let floor = (start * 1e-9).max(1e-12);
    let window: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&norms)
        .take_while(|(_, &r)| r > floor)
        .map(|(&t, &r)| (t, r.ln()))
        .collect();
    if window.len() < 2 {
        return Err(Error::DegenerateWindow);
    }
    let count = window.len() as f64;
    let t_mean = window.iter().map(|p| p.0).sum::<f64>() / count;
    let y_mean = window.iter().map(|p| p.1).sum::<f64>() / count;
    let (num, den) = window.iter().fold((0.0, 0.0), |(num, den), &(t, y)| {
        (num + (t - t_mean) * (y - y_mean), den + (t - t_mean).powi(2))
    });
    Ok(DecayFit {
        rate: num / den,
        lambda_d_plus_1: lambda,
        samples: window.len(),
        window_end: window.last().map(|p| p.0).unwrap_or(0.0),
    })
}
