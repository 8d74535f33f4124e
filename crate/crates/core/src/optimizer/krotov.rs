use super::{
    ClosedControlProblem, ControlField, ControlProblem, ControlSystem, IterationRecord,
    OptimizerConfig, StepParams, MONOTONICITY_TOL,
};
use crate::dynamics::{Trajectory, Workspace};
use crate::optimizer::decomposition::IterationSnapshot;
use crate::{CVector, Error, Result, C64};

const SECANT_MAX_ITER: usize = 12;

/// Fields, state and costate of one iteration.
#[derive(Debug, Clone)]
pub struct KrotovIterate {
    pub field: ControlField,
    pub state: Trajectory,
    pub costate: Trajectory,
    pub record: IterationRecord,
    /// Intervals where the implicit update did not converge and the previous
    /// field value was kept.
    pub unsolved_intervals: usize,
}

impl KrotovIterate {
    pub fn cost(&self) -> f64 {
        self.record.cost
    }
}

/// Output of [`optimize`] and [`closed_optimize`].
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Seed field evaluation, iteration 0.
    pub initial: IterationRecord,
    /// One record per iteration `k = 1..`.
    pub records: Vec<IterationRecord>,
    pub field: ControlField,
    pub state: Trajectory,
    pub costate: Trajectory,
    /// Seed plus one snapshot per iteration, for the `ΔJ` decomposition.
    pub snapshots: Vec<IterationSnapshot>,
}

impl OptimizationResult {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().unwrap_or(&self.initial)
    }

    pub fn costs(&self) -> Vec<f64> {
        std::iter::once(self.initial.cost)
            .chain(self.records.iter().map(|r| r.cost))
            .collect()
    }
}

/// Solves `a = base + coef·g(a)` by secant iteration started at `start`.
///
/// Returns `None` if the iteration does not settle; callers then keep the
/// previous field, which leaves the cost unchanged on that interval.
fn solve_update(base: f64, coef: f64, start: f64, mut g: impl FnMut(f64) -> f64) -> Option<f64> {
    if coef == 0.0 {
        return Some(base);
    }
    let residual = |a: f64, ga: f64| a - base - coef * ga;
    let mut a0 = start;
    let g0 = g(a0);
    let mut r0 = residual(a0, g0);
    let mut a1 = base + coef * g0;
    if a1 == a0 {
        return Some(a1);
    }
    let mut r1 = residual(a1, g(a1));
    for _ in 0..SECANT_MAX_ITER {
        let denom = r1 - r0;
        if r1 == 0.0 || denom == 0.0 {
            break;
        }
        let a2 = a1 - r1 * (a1 - a0) / denom;
        if !a2.is_finite() {
            return None;
        }
        if (a2 - a1).abs() <= 1e-12 * (1.0 + a2.abs()) {
            return (r1.abs() <= 1e-7 * (1.0 + a1.abs())).then_some(a2);
        }
        a0 = a1;
        r0 = r1;
        a1 = a2;
        r1 = residual(a1, g(a1));
    }
    (r1.abs() <= 1e-7 * (1.0 + a1.abs())).then_some(a1)
}

/// Evaluates a field on the system: forward trajectory and its record.
fn evaluate_on(system: &ControlSystem, xi: &[f64]) -> Result<(Trajectory, IterationRecord)> {
    let state = system.propagate(xi)?;
    let record = system.record(0, xi, state.last());
    Ok((state, record))
}

/// Cost of `field.xi` on an open problem. The constraint term of the
/// functional vanishes because the state is propagated exactly.
pub fn evaluate_cost(problem: &ControlProblem, field: &ControlField) -> Result<IterationRecord> {
    let system = problem.control_system()?;
    field.check(system.grid())?;
    Ok(evaluate_on(&system, &field.xi)?.1)
}

/// Iteration 0: the state under `field.xi` and the costate propagated back
/// from `Q ψ(T)` under `field.xi_tilde`.
pub fn cold_start(system: &ControlSystem, field: ControlField) -> Result<KrotovIterate> {
    field.check(system.grid())?;
    let (state, record) = evaluate_on(system, &field.xi)?;
    let costate = system.propagate_costate(&field.xi_tilde, &system.project(state.last()))?;
    Ok(KrotovIterate {
        field,
        state,
        costate,
        record,
        unsolved_intervals: 0,
    })
}

/// One sweep pair of the `(δ, η)` iteration.
///
/// Forward: on each interval solve
/// `ξ_n = (1 − δ) ξ̃_n^{prev} ± (δ/α) g_n(ξ_n, ξ̃_n^{prev})` with the previous
/// costate and the freshly propagated state, then step the state. Backward:
/// from `χ(T) = Q ψ(T)` solve `ξ̃_n = (1 − η) ξ_n ± (η/α) g_n(ξ̃_n, ξ_n)` with
/// the fresh costate and the stored state, then step the costate.
#[allow(clippy::needless_range_loop)]
pub fn krotov_step(
    system: &ControlSystem,
    prev: &KrotovIterate,
    params: StepParams,
) -> Result<KrotovIterate> {
    params.validate()?;
    prev.field.check(system.grid())?;
    let grid = *system.grid();
    if prev.costate.len() != grid.n_nodes() {
        return Err(Error::GridMismatch {
            expected: grid.n_nodes(),
            found: prev.costate.len(),
        });
    }
    let n = grid.n_steps();
    let dt = grid.dt();
    let alpha = system.alpha();
    let sign = params.sign.value();
    let dim = system.initial().len();
    let mut ws = Workspace::new(dim);
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut unsolved = 0;

    // Forward sweep.
    let mut xi = vec![0.0; n + 1];
    let mut states: Vec<CVector> = Vec::with_capacity(n + 1);
    let mut psi = system.initial().clone();
    states.push(psi.clone());
    let coef = sign * params.delta / alpha;
    for i in 0..n {
        let f = prev.field.xi_tilde[i];
        let chi_next = &prev.costate.states[i + 1];
        let solved = solve_update((1.0 - params.delta) * f, coef, f, |a| {
            system.interval_overlap(a, f, chi_next, &psi, &mut buf, &mut ws)
        });
        let a = solved.unwrap_or_else(|| {
            unsolved += 1;
            f
        });
        xi[i] = a;
        system
            .forward
            .expm_action(psi.as_mut_slice(), a, dt, &mut ws);
        states.push(psi.clone());
    }
    xi[n] = xi[n - 1];
    let record = system.record(0, &xi, &psi);

    // Backward sweep.
    let mut xi_tilde = vec![0.0; n + 1];
    let mut chi = system.project(&psi);
    let mut costates = vec![chi.clone(); n + 1];
    let coef = sign * params.eta / alpha;
    for i in (0..n).rev() {
        let b = xi[i];
        let psi_i = &states[i];
        let solved = solve_update((1.0 - params.eta) * b, coef, b, |f| {
            system.interval_overlap(f, b, &chi, psi_i, &mut buf, &mut ws)
        });
        let f = solved.unwrap_or_else(|| {
            unsolved += 1;
            b
        });
        xi_tilde[i] = f;
        system
            .backward
            .expm_action(chi.as_mut_slice(), f, dt, &mut ws);
        costates[i] = chi.clone();
    }
    xi_tilde[n] = xi_tilde[n - 1];

    Ok(KrotovIterate {
        field: ControlField { xi, xi_tilde },
        state: Trajectory { states, grid },
        costate: Trajectory {
            states: costates,
            grid,
        },
        record: IterationRecord {
            iteration: prev.record.iteration + 1,
            delta_cost: record.cost - prev.record.cost,
            ..record
        },
        unsolved_intervals: unsolved,
    })
}

fn run(system: &ControlSystem, config: &OptimizerConfig) -> Result<OptimizationResult> {
    config.validate()?;
    let seed = ControlField::random(system.grid(), config.initial_field_amplitude, config.seed);
    let mut current = cold_start(system, seed)?;
    let initial = current.record;
    let mut records = Vec::new();
    let mut snapshots = vec![IterationSnapshot::capture(&current, None, None)];

    for k in 1..=config.k_max {
        let params = config.step_params(k);
        let next = krotov_step(system, &current, params)?;
        let prev_cost = current.cost();
        let r = next.record;
        if r.delta_cost < -MONOTONICITY_TOL * prev_cost.abs().max(1.0) || !r.cost.is_finite() {
            return Err(Error::MonotonicityViolation {
                iteration: k,
                previous: prev_cost,
                current: r.cost,
            });
        }
        records.push(r);
        snapshots.push(IterationSnapshot::capture(
            &next,
            Some(params.delta),
            Some(params.eta),
        ));
        current = next;
        if r.delta_cost.abs() < config.delta_tol {
            break;
        }
    }

    Ok(OptimizationResult {
        initial,
        records,
        field: current.field,
        state: current.state,
        costate: current.costate,
        snapshots,
    })
}

/// Runs the open-system iteration until `|ΔJ| < delta_tol` or `k_max`.
///
/// Fails with [`Error::MonotonicityViolation`] if any iteration lowers the
/// cost by more than `10⁻⁹·max(1, |J|)`.
pub fn optimize(problem: &ControlProblem, config: &OptimizerConfig) -> Result<OptimizationResult> {
    run(&problem.control_system()?, config)
}

/// The same iteration on a closed system in Hilbert space.
pub fn closed_optimize(
    problem: &ClosedControlProblem,
    config: &OptimizerConfig,
) -> Result<OptimizationResult> {
    run(&problem.control_system()?, config)
}
