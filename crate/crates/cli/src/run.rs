//! Mode dispatch: turns a validated configuration into tables and scalars.

use lindkrotov::dynamics::TimeGrid;
use lindkrotov::liouville::DensityMatrix;
use lindkrotov::optimizer::{
    closed_optimize, delta_j_decomposition, optimize, qsl_time, ClosedControlProblem,
    ControlProblem, ControlSystem, OptimizationResult,
};
use lindkrotov::thermal::{
    density_from_bloch, distance_curve, epsilon_free_time, first_passage_time, speedup_experiment,
    SpeedupSettings,
};
use lindkrotov::{CMatrix, CVector};
use serde_json::{json, Map, Value};

use crate::config::{density, matrix, vector, ExperimentConfig, FieldSpec, Mode};
use crate::error::CliError;
use crate::output::{convergence_csv, fmt_f64, trajectory_csv, TrajectoryTable};

/// Everything a run produces before it is written out.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub convergence: Option<String>,
    pub trajectory: Option<String>,
    pub scalars: Map<String, Value>,
    /// Human-readable lines for stdout.
    pub summary: Vec<String>,
}

pub fn execute(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    match config.mode {
        Mode::ThermalSpeedup => thermal_speedup(config),
        Mode::OpenOptimize => open_optimize(config),
        Mode::ClosedOptimize => closed_mode(config),
        Mode::FreeTime => free_time(config),
        Mode::Qsl => qsl_mode(config),
    }
}

fn explicit_grid(config: &ExperimentConfig) -> Result<TimeGrid, CliError> {
    let g = config.grid()?;
    let t = g
        .t_final
        .ok_or_else(|| CliError::Validation("grid.t_final is required".into()))?;
    Ok(TimeGrid::new(t, g.n_steps)?)
}

fn epsilon(config: &ExperimentConfig) -> Result<f64, CliError> {
    config.require(&config.epsilon, "epsilon")
}

/// Decomposition check over the whole history.
fn decomposition_scalars(
    system: &ControlSystem,
    result: &OptimizationResult,
    scalars: &mut Map<String, Value>,
) -> Result<(), CliError> {
    let dt = system.grid().dt();
    let mut max_error: f64 = 0.0;
    let mut holds = true;
    for pair in result.snapshots.windows(2) {
        let r = delta_j_decomposition(system, &pair[0], &pair[1])?;
        max_error = max_error.max(r.difference.abs());
        holds &= r.holds(dt);
    }
    scalars.insert("delta_j_identity_max_error".into(), json!(max_error));
    scalars.insert("delta_j_identity_holds".into(), json!(holds));
    Ok(())
}

fn history_scalars(result: &OptimizationResult, scalars: &mut Map<String, Value>) {
    let last = result.final_record();
    let monotone = result.records.iter().all(|r| r.delta_cost >= 0.0);
    scalars.insert("iterations".into(), json!(result.records.len()));
    scalars.insert("initial_cost".into(), json!(result.initial.cost));
    scalars.insert("final_cost".into(), json!(last.cost));
    scalars.insert("final_fidelity".into(), json!(last.fidelity));
    scalars.insert("final_fluence".into(), json!(last.fluence));
    scalars.insert("non_decreasing".into(), json!(monotone));
}

fn thermal_speedup(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let model = config.thermal_model()?;
    let r0 = config.initial_bloch()?;
    let g = config.grid()?;
    if g.t_final.is_some() {
        return Err(CliError::Validation(
            "thermal-speedup derives the final time from `speedup`; drop grid.t_final".into(),
        ));
    }
    let settings = SpeedupSettings {
        epsilon: epsilon(config)?,
        speedup: config.require(&config.speedup, "speedup")?,
        alpha: config.optimizer.alpha,
        n_steps: g.n_steps,
        optimizer: config.optimizer_config()?,
    };
    let rho0 = DensityMatrix::new(density_from_bloch(&r0))?;
    let tau = model.gibbs_state();
    let report = speedup_experiment(&model, &rho0, &tau, &settings)?;

    let grid = TimeGrid::new(report.t_final, settings.n_steps)?;
    let problem = model.control_problem(rho0, tau, settings.alpha, grid)?;
    let system = problem.control_system()?;

    let mut s = Map::new();
    s.insert("t_free".into(), json!(report.t_free));
    s.insert("t_final".into(), json!(report.t_final));
    s.insert("epsilon".into(), json!(settings.epsilon));
    s.insert(
        "free_final_distance".into(),
        json!(report.free_final_distance),
    );
    s.insert(
        "controlled_final_distance".into(),
        json!(report.final_distance),
    );
    s.insert("reached".into(), json!(report.reached));
    history_scalars(&report.optimization, &mut s);
    decomposition_scalars(&system, &report.optimization, &mut s)?;

    let summary = vec![
        format!(
            "T_free = {}, T = {}",
            fmt_f64(report.t_free),
            fmt_f64(report.t_final)
        ),
        format!(
            "D1 at T: free {}, controlled {} (epsilon {})",
            fmt_f64(report.free_final_distance),
            fmt_f64(report.final_distance),
            settings.epsilon
        ),
        format!(
            "J: {} -> {} over {} iterations",
            fmt_f64(report.initial.cost),
            fmt_f64(report.optimization.final_record().cost),
            report.records.len()
        ),
    ];
    Ok(RunOutput {
        convergence: Some(convergence_csv(&report.initial, &report.records)),
        trajectory: Some(trajectory_csv(&TrajectoryTable {
            t: report.times,
            d1_free: report.free_distance,
            d1_controlled: report.controlled_distance,
            xi: report.field.xi,
        })),
        scalars: s,
        summary,
    })
}

fn open_optimize(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let sys = config.system()?;
    let grid = explicit_grid(config)?;
    let ops = sys
        .lindblad_ops
        .iter()
        .enumerate()
        .map(|(i, m)| matrix(m, &format!("lindblad_ops[{i}]")))
        .collect::<Result<Vec<CMatrix>, _>>()?;
    let target = density(&sys.target, "target")?;
    let problem = ControlProblem::new(
        matrix(&sys.h0, "h0")?,
        matrix(&sys.mu_prime, "mu_prime")?,
        ops,
        density(&sys.rho0, "rho0")?,
        target.clone(),
        config.optimizer.alpha,
        grid,
    )?;
    let opt = config.optimizer_config()?;
    let system = problem.control_system()?;
    let result = optimize(&problem, &opt)?;
    let free = system.propagate(&vec![0.0; grid.n_nodes()])?;
    let d1_free = distance_curve(&problem, &free, &target)?;
    let d1_controlled = distance_curve(&problem, &result.state, &target)?;

    let mut s = Map::new();
    s.insert("free_final_distance".into(), json!(d1_free[grid.n_steps()]));
    s.insert(
        "controlled_final_distance".into(),
        json!(d1_controlled[grid.n_steps()]),
    );
    history_scalars(&result, &mut s);
    decomposition_scalars(&system, &result, &mut s)?;
    Ok(finish_optimization(grid, d1_free, d1_controlled, result, s))
}

fn finish_optimization(
    grid: TimeGrid,
    d1_free: Vec<f64>,
    d1_controlled: Vec<f64>,
    result: OptimizationResult,
    scalars: Map<String, Value>,
) -> RunOutput {
    let last = result.final_record();
    let summary = vec![
        format!(
            "J: {} -> {} over {} iterations",
            fmt_f64(result.initial.cost),
            fmt_f64(last.cost),
            result.records.len()
        ),
        format!("final fidelity {}", fmt_f64(last.fidelity)),
    ];
    RunOutput {
        convergence: Some(convergence_csv(&result.initial, &result.records)),
        trajectory: Some(trajectory_csv(&TrajectoryTable {
            t: grid.times(),
            d1_free,
            d1_controlled,
            xi: result.field.xi,
        })),
        scalars,
        summary,
    }
}

/// Trace distance between pure states, `√(1 − |⟨a|b⟩|²)`.
fn pure_distance(a: &CVector, b: &CVector) -> f64 {
    (1.0 - a.dotc(b).norm_sqr()).max(0.0).sqrt()
}

fn pure_states(
    config: &ExperimentConfig,
) -> Result<(CMatrix, CMatrix, CVector, CVector), CliError> {
    let sys = config.system()?;
    let psi0 = sys
        .psi0
        .as_ref()
        .ok_or_else(|| CliError::Validation("system.psi0 is required".into()))?;
    let target = sys
        .target_state
        .as_ref()
        .ok_or_else(|| CliError::Validation("system.target_state is required".into()))?;
    if !sys.lindblad_ops.is_empty() {
        return Err(CliError::Validation(
            "closed modes take no lindblad_ops".into(),
        ));
    }
    Ok((
        matrix(&sys.h0, "h0")?,
        matrix(&sys.mu_prime, "mu_prime")?,
        vector(psi0, "psi0")?,
        vector(target, "target_state")?,
    ))
}

fn closed_mode(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (h0, mu, psi0, target) = pure_states(config)?;
    let grid = explicit_grid(config)?;
    let problem = ClosedControlProblem::new(
        h0,
        mu,
        psi0.clone(),
        target.clone(),
        config.optimizer.alpha,
        grid,
    )?;
    let opt = config.optimizer_config()?;
    let system = problem.control_system()?;
    let result = closed_optimize(&problem, &opt)?;
    let free = system.propagate(&vec![0.0; grid.n_nodes()])?;
    let d1_free: Vec<f64> = free
        .states
        .iter()
        .map(|p| pure_distance(p, &target))
        .collect();
    let d1_controlled: Vec<f64> = result
        .state
        .states
        .iter()
        .map(|p| pure_distance(p, &target))
        .collect();
    let qsl = qsl_time(
        &psi0,
        &target,
        &problem.hamiltonian_samples(&result.field.xi),
        &grid,
    )?;

    let mut s = Map::new();
    s.insert("free_final_distance".into(), json!(d1_free[grid.n_steps()]));
    s.insert(
        "controlled_final_distance".into(),
        json!(d1_controlled[grid.n_steps()]),
    );
    s.insert("t_qsl".into(), qsl_value(qsl.t_qsl));
    s.insert(
        "fubini_study_distance".into(),
        json!(qsl.fubini_study_distance),
    );
    history_scalars(&result, &mut s);
    decomposition_scalars(&system, &result, &mut s)?;
    let mut out = finish_optimization(grid, d1_free, d1_controlled, result, s);
    out.summary.push(format!("t_QSL = {}", fmt_f64(qsl.t_qsl)));
    Ok(out)
}

/// JSON has no infinity; an unreachable target is reported as `null`.
fn qsl_value(t: f64) -> Value {
    if t.is_finite() {
        json!(t)
    } else {
        Value::Null
    }
}

fn qsl_mode(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let (h0, mu, psi0, target) = pure_states(config)?;
    let grid = explicit_grid(config)?;
    let field = match config.require(&config.field, "field")? {
        FieldSpec::Constant(v) => vec![v; grid.n_nodes()],
        FieldSpec::Samples(v) => v,
    };
    let problem = ClosedControlProblem::new(h0, mu, psi0.clone(), target.clone(), 1.0, grid)?;
    if field.len() != grid.n_nodes() {
        return Err(lindkrotov::Error::GridMismatch {
            expected: grid.n_nodes(),
            found: field.len(),
        }
        .into());
    }
    let r = qsl_time(&psi0, &target, &problem.hamiltonian_samples(&field), &grid)?;
    let mut s = Map::new();
    s.insert(
        "fubini_study_distance".into(),
        json!(r.fubini_study_distance),
    );
    s.insert("avg_energy".into(), json!(r.avg_energy));
    s.insert("avg_std_dev".into(), json!(r.avg_std_dev));
    s.insert("t_qsl".into(), qsl_value(r.t_qsl));
    s.insert(
        "reachable_within_t".into(),
        json!(r.t_qsl <= grid.t_final()),
    );
    Ok(RunOutput {
        scalars: s,
        summary: vec![format!("t_QSL = {}", fmt_f64(r.t_qsl))],
        ..Default::default()
    })
}

/// Closed-form and first-passage ε-free times.
pub fn free_time(config: &ExperimentConfig) -> Result<RunOutput, CliError> {
    let model = config.thermal_model()?;
    let r0 = config.initial_bloch()?;
    let eps = epsilon(config)?;
    let closed = epsilon_free_time(&r0, &model, eps)?;
    let rho0 = DensityMatrix::new(density_from_bloch(&r0))?;
    let oracle = first_passage_time(&rho0, &model, eps, config.oracle.dt, config.oracle.t_max)?;
    let rel = if closed == 0.0 && oracle == 0.0 {
        0.0
    } else {
        (closed - oracle).abs() / closed.abs().max(oracle.abs())
    };
    let mut s = Map::new();
    s.insert("epsilon".into(), json!(eps));
    s.insert("closed_form".into(), json!(closed));
    s.insert("oracle".into(), json!(oracle));
    s.insert("relative_difference".into(), json!(rel));
    s.insert("gamma1".into(), json!(model.gamma1));
    Ok(RunOutput {
        scalars: s,
        summary: vec![
            format!("closed-form T_free = {}", fmt_f64(closed)),
            format!("first-passage T_free = {}", fmt_f64(oracle)),
            format!("relative difference = {}", fmt_f64(rel)),
        ],
        ..Default::default()
    })
}
