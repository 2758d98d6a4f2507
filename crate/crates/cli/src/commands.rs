//! Subcommand bodies. Each returns the report it wrote plus a short summary.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use mwc_core::bearing::{edge_residuals, FORMATION_TOL};
use mwc_core::clustering::find_clusters;
use mwc_core::dynamics::{
    check_average_invariance, detect_clusters_from_states, lyapunov_increase, max_stable_step, measure_decay_rate,
    simulate, verify_equilibrium_constraints, SimulationConfig, Trajectory,
};
use mwc_core::random::{random_graph, rng_from_seed};
use mwc_core::spectral::{analyze_spectrum, nullspace_partition, SpectralReport};
use mwc_core::tolerance::{Tolerances, DEFAULT_CONVERGENCE_TOL, DEFAULT_GROUP_TOL, DEFAULT_MAX_PATHS};

use crate::error::CliError;
use crate::report::{
    agent_rows, one_based, sorted_sets, AnalysisReport, Check, DecaySection, EquilibriumSection, FormationSection,
    PairRow, RandomFailure, RandomVerifyReport, SimulationReport, SpectrumReport, VerifyReport,
};
use crate::scenario::{Built, Scenario};

/// Bounds on the horizon picked when a scenario leaves it unset.
pub const AUTO_HORIZON_MIN: f64 = 100.0;
pub const AUTO_HORIZON_MAX: f64 = 1e5;
/// Automatic record strides keep at most this many samples.
pub const AUTO_MAX_SAMPLES: usize = 20_000;
/// Relative slack on the decay-rate bound.
pub const DECAY_SLACK: f64 = 0.05;
/// Grouping tolerance when reading agreement off the nullspace basis.
pub const NULLSPACE_GROUP_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct Options {
    pub output_dir: PathBuf,
    /// Replaces the scenario's own seed.
    pub seed: Option<u64>,
    pub max_paths: usize,
    pub tolerances: Tolerances,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("."),
            seed: None,
            max_paths: DEFAULT_MAX_PATHS,
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug)]
pub struct Outcome {
    pub summary: String,
    pub files: Vec<PathBuf>,
    /// False when predictions and observations disagree.
    pub agreement: bool,
}

struct Prepared {
    scenario: Scenario,
    built: Built,
    spectrum: SpectralReport,
}

fn prepare(scenario: &Scenario, opts: &Options) -> Result<Prepared, CliError> {
    let mut scenario = scenario.clone();
    if opts.seed.is_some() {
        scenario.seed = opts.seed;
    }
    let built = scenario.build(opts.tolerances)?;
    let spectrum = analyze_spectrum(&built.graph)?;
    Ok(Prepared {
        scenario,
        built,
        spectrum,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn output_path(opts: &Options, name: &str, suffix: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(&opts.output_dir).map_err(|e| CliError::io(&opts.output_dir, e))?;
    Ok(opts.output_dir.join(format!("{name}.{suffix}")))
}

/// Horizon long enough for the slowest nonzero mode to decay by `e^-40`,
/// clamped to `[AUTO_HORIZON_MIN, AUTO_HORIZON_MAX]`.
pub fn auto_horizon(lambda_d_plus_1: f64) -> f64 {
    if lambda_d_plus_1 > 0.0 {
        (40.0 / lambda_d_plus_1).clamp(AUTO_HORIZON_MIN, AUTO_HORIZON_MAX)
    } else {
        AUTO_HORIZON_MIN
    }
}

pub fn simulation_config(scenario: &Scenario, spectrum: &SpectralReport) -> SimulationConfig {
    let sim = scenario.sim.clone().unwrap_or_default();
    let horizon = sim.horizon.unwrap_or_else(|| auto_horizon(spectrum.lambda_d_plus_1));
    let record_stride = sim.record_stride.unwrap_or_else(|| {
        let step = sim.step.unwrap_or_else(|| max_stable_step(spectrum.lambda_max()).min(horizon));
        if step > 0.0 && step.is_finite() {
            let steps = (horizon / step).ceil() as usize;
            steps.div_ceil(AUTO_MAX_SAMPLES).max(1)
        } else {
            1
        }
    });
    SimulationConfig {
        step: sim.step,
        horizon,
        convergence_tol: sim.convergence_tol.unwrap_or(DEFAULT_CONVERGENCE_TOL),
        record_stride,
    }
}

fn group_tol(scenario: &Scenario) -> f64 {
    scenario.sim.as_ref().and_then(|s| s.group_tol).unwrap_or(DEFAULT_GROUP_TOL)
}

fn analysis_of(p: &Prepared, opts: &Options) -> Result<AnalysisReport, CliError> {
    let g = &p.built.graph;
    let partition = find_clusters(g, opts.max_paths)?;
    let groups = nullspace_partition(g, &p.spectrum, NULLSPACE_GROUP_TOL);
    Ok(AnalysisReport::new(&p.scenario.name, g, &partition, &p.spectrum, &groups))
}

pub fn analysis_report(scenario: &Scenario, opts: &Options) -> Result<AnalysisReport, CliError> {
    analysis_of(&prepare(scenario, opts)?, opts)
}

pub fn analyze(scenario: &Scenario, opts: &Options) -> Result<Outcome, CliError> {
    let report = analysis_report(scenario, opts)?;
    let path = output_path(opts, &report.scenario, "analysis.json")?;
    write_json(&path, &report)?;
    let mut summary = format!(
        "{}: {} agents in R^{}, {} positive trees, {} merges\nclusters: {:?}\nnullspace dimension {} (lambda_d+1 = {:.6e}); consensus: structural {}, spectral {}",
        report.scenario,
        report.n,
        report.d,
        report.positive_trees.len(),
        report.merges.len(),
        report.clusters,
        report.nullspace_dim,
        report.lambda_d_plus_1,
        report.spanning_cluster,
        report.consensus_predicted,
    );
    if !report.truncated_queries.is_empty() {
        summary.push_str(&format!("\n{} membership queries hit the path budget", report.truncated_queries.len()));
    }
    Ok(Outcome {
        summary,
        files: vec![path],
        agreement: report.agreement,
    })
}

pub fn spectrum(scenario: &Scenario, opts: &Options, basis: bool) -> Result<Outcome, CliError> {
    let p = prepare(scenario, opts)?;
    let report = SpectrumReport::new(&p.scenario.name, &p.spectrum, basis);
    let path = output_path(opts, &report.scenario, "spectrum.json")?;
    write_json(&path, &report)?;
    Ok(Outcome {
        summary: format!(
            "{}: nullspace dimension {} of {}, lambda_d+1 = {:.6e}, lambda_max = {:.6e}; consensus {}",
            report.scenario,
            report.nullspace_dim,
            report.eigenvalues.len(),
            report.lambda_d_plus_1,
            report.lambda_max,
            report.consensus_predicted
        ),
        files: vec![path],
        agreement: true,
    })
}

/// `t,x1_1,...,xn_d` with 17 significant digits per value.
pub fn write_trajectory_csv(traj: &Trajectory, out: &mut impl Write) -> std::io::Result<()> {
    let mut header = String::from("t");
    for i in 1..=traj.n {
        for k in 1..=traj.d {
            header.push_str(&format!(",x{i}_{k}"));
        }
    }
    writeln!(out, "{header}")?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        write!(out, "{t:.16e}")?;
        for v in x.iter() {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

fn simulation_of(p: &Prepared, opts: &Options, trajectory_file: String) -> Result<(SimulationReport, Trajectory), CliError> {
    let g = &p.built.graph;
    let d = g.dim();
    let cfg = simulation_config(&p.scenario, &p.spectrum);
    let traj = simulate(g, &p.built.initial_state, &cfg)?;
    let partition = find_clusters(g, opts.max_paths)?;
    let predicted = partition.vertex_sets();

    let observed = traj
        .converged
        .then(|| detect_clusters_from_states(&traj.final_state, d, group_tol(&p.scenario)));
    let agreement = observed
        .as_ref()
        .map(|o| sorted_sets(o.clone()) == sorted_sets(predicted.clone()));
    let equilibrium = if traj.converged {
        let eq = verify_equilibrium_constraints(g, &traj, &predicted, opts.max_paths)?;
        Some(EquilibriumSection {
            clusters: one_based(&predicted),
            cluster_states: eq.cluster_states.iter().map(|x| x.iter().copied().collect()).collect(),
            average_residual: eq.average_residual,
            pairs: eq
                .pair_constraints
                .iter()
                .map(|pc| PairRow {
                    first: pc.first + 1,
                    second: pc.second + 1,
                    intersection_dim: pc.intersection_dim,
                    residual: pc.residual,
                    relative_residual: pc.relative_residual,
                    truncated: pc.truncated,
                })
                .collect(),
        })
    } else {
        None
    };
    let decay = if p.spectrum.consensus_predicted && p.spectrum.lambda_d_plus_1 > 0.0 {
        measure_decay_rate(&traj, g).ok().map(|fit| DecaySection {
            rate: fit.rate,
            lambda_d_plus_1: fit.lambda_d_plus_1,
            samples: fit.samples,
            window_end: fit.window_end,
            within_bound: fit.within_bound(DECAY_SLACK),
        })
    } else {
        None
    };
    let formation = match &p.built.bearings {
        Some(spec) => {
            let residuals = edge_residuals(spec, &traj.final_state)?;
            let laplacian_residual = (g.laplacian() * &traj.final_state).norm();
            Some(FormationSection {
                max_relative_residual: residuals
                    .iter()
                    .map(|r| r.residual / (r.bound / FORMATION_TOL))
                    .fold(0.0, f64::max),
                laplacian_residual,
                ok: traj.converged && residuals.iter().all(|r| r.ok()) && laplacian_residual <= FORMATION_TOL,
            })
        }
        None => None,
    };
    let report = SimulationReport {
        scenario: p.scenario.name.clone(),
        seed: if p.scenario.initial_states.is_some() { None } else { p.scenario.seed },
        step: traj.step,
        horizon: cfg.horizon,
        record_stride: cfg.record_stride,
        samples: traj.times.len(),
        final_time: traj.times.last().copied().unwrap_or(0.0),
        converged: traj.converged,
        initial_average: traj.initial_average().iter().copied().collect(),
        final_states: agent_rows(&traj.final_state, d),
        average_drift: check_average_invariance(&traj) / traj.initial_average().norm().max(1.0),
        lyapunov_increase: lyapunov_increase(&traj),
        predicted_clusters: one_based(&predicted),
        observed_clusters: observed.as_deref().map(one_based),
        agreement,
        equilibrium,
        decay,
        formation,
        trajectory_file,
    };
    Ok((report, traj))
}

pub fn simulation_report(scenario: &Scenario, opts: &Options) -> Result<(SimulationReport, Trajectory), CliError> {
    let p = prepare(scenario, opts)?;
    let file = format!("{}.trajectory.csv", p.scenario.name);
    simulation_of(&p, opts, file)
}

pub fn simulate_scenario(scenario: &Scenario, opts: &Options) -> Result<Outcome, CliError> {
    let (report, traj) = simulation_report(scenario, opts)?;
    let csv = output_path(opts, &report.scenario, "trajectory.csv")?;
    let file = std::fs::File::create(&csv).map_err(|e| CliError::io(&csv, e))?;
    let mut out = std::io::BufWriter::new(file);
    write_trajectory_csv(&traj, &mut out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(&csv, e))?;
    let json = output_path(opts, &report.scenario, "simulation.json")?;
    write_json(&json, &report)?;

    let mut summary = format!(
        "{}: {} samples, step {:.6e}, t = {:.6e}, converged {}",
        report.scenario, report.samples, report.step, report.final_time, report.converged
    );
    summary.push_str(&format!("\npredicted clusters: {:?}", report.predicted_clusters));
    if let Some(observed) = &report.observed_clusters {
        summary.push_str(&format!("\nobserved clusters:  {observed:?}"));
    }
    Ok(Outcome {
        summary,
        files: vec![csv, json],
        agreement: report.agreement.unwrap_or(true),
    })
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, pass, detail }
}

/// Cross-checks the structural, spectral and simulated answers and the
/// invariants of the run.
pub fn verify_report(scenario: &Scenario, opts: &Options) -> Result<VerifyReport, CliError> {
    let p = prepare(scenario, opts)?;
    let analysis = analysis_of(&p, opts)?;
    let (sim, _) = simulation_of(&p, opts, String::new())?;
    let mut checks = vec![check(
        "structural_vs_spectral",
        analysis.agreement,
        format!(
            "spanning cluster {}, nullspace dimension {} (d = {})",
            analysis.spanning_cluster, analysis.nullspace_dim, analysis.d
        ),
    )];
    checks.push(check(
        "converged",
        sim.converged,
        format!("t = {:.6e} of {:.6e}", sim.final_time, sim.horizon),
    ));
    if let Some(observed) = &sim.observed_clusters {
        let observed = sorted_sets(observed.clone());
        checks.push(check(
            "observed_vs_structural",
            observed == sorted_sets(analysis.clusters.clone()),
            format!("observed {observed:?}, predicted {:?}", analysis.clusters),
        ));
        checks.push(check(
            "observed_vs_spectral",
            observed == sorted_sets(analysis.nullspace_partition.clone()),
            format!("observed {observed:?}, nullspace {:?}", analysis.nullspace_partition),
        ));
    }
    checks.push(check(
        "average_invariance",
        sim.average_drift <= 1e-8,
        format!("relative drift {:.3e}", sim.average_drift),
    ));
    checks.push(check(
        "lyapunov_decrease",
        sim.lyapunov_increase <= 1e-10,
        format!("largest increase {:.3e}", sim.lyapunov_increase),
    ));
    if let Some(eq) = &sim.equilibrium {
        let pair = eq.pairs.iter().map(|p| p.relative_residual).fold(0.0, f64::max);
        checks.push(check(
            "equilibrium_constraints",
            eq.average_residual <= 1e-6 && pair <= 1e-6,
            format!("average residual {:.3e}, worst pair {:.3e}", eq.average_residual, pair),
        ));
    }
    if let Some(decay) = &sim.decay {
        checks.push(check(
            "decay_rate",
            decay.within_bound,
            format!("fitted {:.6e}, bound -{:.6e}", decay.rate, decay.lambda_d_plus_1),
        ));
    }
    if let Some(f) = &sim.formation {
        checks.push(check(
            "formation",
            f.ok,
            format!(
                "edge residual {:.3e}, Laplacian residual {:.3e}",
                f.max_relative_residual, f.laplacian_residual
            ),
        ));
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        scenario: p.scenario.name,
        checks,
        pass,
    })
}

pub fn verify(scenario: &Scenario, opts: &Options) -> Result<Outcome, CliError> {
    let report = verify_report(scenario, opts)?;
    let path = output_path(opts, &report.scenario, "verify.json")?;
    write_json(&path, &report)?;
    let mut summary = report.scenario.clone();
    for c in &report.checks {
        summary.push_str(&format!("\n[{}] {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail));
    }
    Ok(Outcome {
        summary,
        files: vec![path],
        agreement: report.pass,
    })
}

/// Runs [`verify_report`] on `count` random graphs with `n` agents in
/// `R^d`, seeded `first_seed`, `first_seed + 1`, and so on. The same seed drives
/// the initial state.
pub fn verify_random_report(
    n: usize,
    d: usize,
    first_seed: u64,
    count: usize,
    opts: &Options,
) -> Result<RandomVerifyReport, CliError> {
    if n < 2 || d == 0 {
        return Err(CliError::Validation {
            field: "random".into(),
            message: "need n >= 2 and d >= 1".into(),
        });
    }
    let mut failures = Vec::new();
    for k in 0..count as u64 {
        let seed = first_seed.wrapping_add(k);
        let mut rng = rng_from_seed(seed);
        let g = random_graph(&mut rng, n, d)?;
        let scenario = Scenario::from_graph(&format!("random-{seed}"), &g, Some(seed));
        let local = Options { seed: None, ..opts.clone() };
        let report = verify_report(&scenario, &local)?;
        if !report.pass {
            failures.push(RandomFailure {
                seed,
                failed: report.checks.iter().filter(|c| !c.pass).map(|c| c.name).collect(),
            });
        }
    }
    let passed = count - failures.len();
    Ok(RandomVerifyReport {
        n,
        d,
        first_seed,
        count,
        passed,
        pass_rate: if count == 0 { 1.0 } else { passed as f64 / count as f64 },
        failures,
    })
}

pub fn verify_random(n: usize, d: usize, first_seed: u64, count: usize, opts: &Options) -> Result<Outcome, CliError> {
    let report = verify_random_report(n, d, first_seed, count, opts)?;
    let path = output_path(opts, &format!("random-n{n}-d{d}-s{first_seed}"), "verify.json")?;
    write_json(&path, &report)?;
    let mut summary = format!(
        "{} of {} random graphs pass every check ({:.1}%)",
        report.passed,
        report.count,
        100.0 * report.pass_rate
    );
    for f in &report.failures {
        summary.push_str(&format!("\nseed {}: {}", f.seed, f.failed.join(", ")));
    }
    Ok(Outcome {
        summary,
        files: vec![path],
        agreement: report.failures.is_empty(),
    })
}
