//! The `(δ, η)` family of monotonically convergent control iterations.
//!
//! Both the open (Liouville-space) and closed (Hilbert-space) problems reduce
//! to a [`ControlSystem`]: a linear equation `i ẋ = (A₀ + ξ M) x` with an
//! initial vector, a target vector `τ`, the objective
//! `J = |⟨τ|x(T)⟩|² − α ∫ ξ² dt`, and the iteration in [`krotov_step`].
//!
//! # Discretization
//!
//! Interval `n` of the grid evolves under the left-node sample `ξ_n`, and the
//! fluence is the matching left-point sum `Σ_{n<N} ξ_n² dt`. The field update
//! on interval `n` pairs the costate at node `n + 1` with the state at node
//! `n` through the exact divided difference of the step propagator,
//!
//! ```text
//! g_n(a, b) = Re⟨χ_{n+1}| [U_n(a) − U_n(b)] / (a − b) |ψ_n⟩ / dt ,
//! ```
//!
//! which tends to `Im⟨χ|M|ψ⟩` as `dt → 0`. With this pairing the discrete
//! cost difference between consecutive iterates is exactly
//! `|⟨τ|Δψ(T)⟩|² + α Σ [(2/δ − 1)(ξ^{k+1} − ξ̃^k)² + (2/η − 1)(ξ̃^k − ξ^k)²] dt`,
//! so monotonicity holds on the grid and not only in the continuum limit.
//! The implicit scalar equation for each interval is solved by secant
//! iteration. The last node carries no interval; its sample repeats node
//! `N − 1`.

mod decomposition;
mod krotov;
mod qsl;

pub use decomposition::{
    delta_j_decomposition, penalty_coefficient, DecompositionReport, IterationSnapshot,
};
pub use krotov::{
    closed_optimize, cold_start, evaluate_cost, krotov_step, optimize, KrotovIterate,
    OptimizationResult,
};
pub use qsl::{qsl_time, QslReport};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dynamics::{SplitGenerator, TimeGrid, Trajectory, Workspace};
use crate::liouville::{
    build_liouvillian, check_hermitian, vec, DensityMatrix, LiouvilleVector, Liouvillian,
};
use crate::{CMatrix, CVector, Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Tolerance on `|‖ψ‖ − 1|` for pure states.
pub const NORMALIZATION_TOL: f64 = 1e-10;

/// Relative tolerance of the monotonicity guard.
pub const MONOTONICITY_TOL: f64 = 1e-9;

/// Left-point quadrature `Σ_{n<N} f_n dt` matching the propagation convention.
pub fn left_sum(values: &[f64], dt: f64) -> f64 {
    values[..values.len() - 1].iter().sum::<f64>() * dt
}

/// Fluence `∫ ξ² dt` of node samples, left-point rule.
pub fn fluence(xi: &[f64], dt: f64) -> f64 {
    left_sum(&xi.iter().map(|x| x * x).collect::<Vec<_>>(), dt)
}

/// Forward field `ξ` and backward field `ξ̃`, both sampled at the grid nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlField {
    pub xi: Vec<f64>,
    pub xi_tilde: Vec<f64>,
}

impl ControlField {
    /// Both fields equal to `xi`.
    pub fn uniform(xi: Vec<f64>) -> Self {
        Self {
            xi_tilde: xi.clone(),
            xi,
        }
    }

    pub fn zeros(grid: &TimeGrid) -> Self {
        Self::uniform(vec![0.0; grid.n_nodes()])
    }

    pub fn constant(grid: &TimeGrid, value: f64) -> Self {
        Self::uniform(vec![value; grid.n_nodes()])
    }

    /// I.i.d. uniform samples in `[−amplitude, amplitude]`, the last node
    /// repeating its neighbour.
    pub fn random(grid: &TimeGrid, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = grid.n_steps();
        let mut xi: Vec<f64> = (0..n)
            .map(|_| amplitude * (2.0 * rng.random::<f64>() - 1.0))
            .collect();
        xi.push(xi[n - 1]);
        Self::uniform(xi)
    }

    pub fn fluence(&self, grid: &TimeGrid) -> f64 {
        fluence(&self.xi, grid.dt())
    }

    pub fn max_abs(&self) -> f64 {
        self.xi
            .iter()
            .chain(&self.xi_tilde)
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    fn check(&self, grid: &TimeGrid) -> Result<()> {
        grid.check_field(&self.xi)?;
        grid.check_field(&self.xi_tilde)?;
        if self.xi.iter().chain(&self.xi_tilde).any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "field",
                reason: "non-finite sample".into(),
            });
        }
        Ok(())
    }
}

/// Sign in front of the overlap term of the field update.
///
/// `Plus` is the ascent direction for the objective with the costate
/// convention used here (`χ(T) = Q ψ(T)`, `i χ̇ = A† χ`); `Minus` reverses
/// it and is rejected by the monotonicity guard of [`optimize`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UpdateSign {
    #[default]
    Plus,
    Minus,
}

impl UpdateSign {
    pub fn value(self) -> f64 {
        match self {
            UpdateSign::Plus => 1.0,
            UpdateSign::Minus => -1.0,
        }
    }

    pub fn from_value(v: f64) -> Result<Self> {
        if v == 1.0 {
            Ok(UpdateSign::Plus)
        } else if v == -1.0 {
            Ok(UpdateSign::Minus)
        } else {
            Err(Error::InvalidParameter {
                name: "field_update_sign",
                reason: format!("must be +1 or -1, got {v}"),
            })
        }
    }
}

/// Parameters of a single iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepParams {
    pub delta: f64,
    pub eta: f64,
    pub sign: UpdateSign,
}

fn check_unit_interval(name: &'static str, value: f64) -> Result<()> {
    if !(0.0..=2.0).contains(&value) {
        return Err(Error::ParameterOutOfRange {
            name,
            value,
            min: 0.0,
            max: 2.0,
        });
    }
    Ok(())
}

impl StepParams {
    pub fn validate(&self) -> Result<()> {
        check_unit_interval("delta", self.delta)?;
        check_unit_interval("eta", self.eta)
    }
}

/// Settings of the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub delta: f64,
    pub eta: f64,
    pub k_max: usize,
    /// Stop once `|J_k − J_{k−1}|` drops below this; zero runs all `k_max`
    /// iterations.
    pub delta_tol: f64,
    pub seed: u64,
    pub initial_field_amplitude: f64,
    pub field_update_sign: UpdateSign,
    /// Per-iteration `(δ_k, η_k)`; iterations past its end use `(delta, eta)`.
    pub schedule: Option<Vec<(f64, f64)>>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            delta: 1.0,
            eta: 1.0,
            k_max: 100,
            delta_tol: 1e-8,
            seed: 0,
            initial_field_amplitude: 0.01,
            field_update_sign: UpdateSign::Plus,
            schedule: None,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit_interval("delta", self.delta)?;
        check_unit_interval("eta", self.eta)?;
        if let Some(schedule) = &self.schedule {
            for &(d, e) in schedule {
                check_unit_interval("delta", d)?;
                check_unit_interval("eta", e)?;
            }
        }
        if self.k_max == 0 {
            return Err(Error::InvalidParameter {
                name: "k_max",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.delta_tol >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "delta_tol",
                reason: format!("must be non-negative, got {}", self.delta_tol),
            });
        }
        if !(self.initial_field_amplitude >= 0.0 && self.initial_field_amplitude.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "initial_field_amplitude",
                reason: format!(
                    "must be finite and non-negative, got {}",
                    self.initial_field_amplitude
                ),
            });
        }
        Ok(())
    }

    /// Parameters of iteration `k` (1-based).
    pub fn step_params(&self, k: usize) -> StepParams {
        let (delta, eta) = self
            .schedule
            .as_ref()
            .and_then(|s| s.get(k.wrapping_sub(1)).copied())
            .unwrap_or((self.delta, self.eta));
        StepParams {
            delta,
            eta,
            sign: self.field_update_sign,
        }
    }
}

/// Cost, fidelity and fluence of one iterate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 0 for the seed field.
    pub iteration: usize,
    pub cost: f64,
    /// `|⟨τ|x(T)⟩|²`.
    pub fidelity: f64,
    pub fluence: f64,
    /// `J_k − J_{k−1}`; 0 for the seed.
    pub delta_cost: f64,
}

/// A linear control problem `i ẋ = (A₀ + ξ M) x` ready for iteration.
#[derive(Debug, Clone)]
pub struct ControlSystem {
    forward: SplitGenerator,
    backward: SplitGenerator,
    control: CMatrix,
    initial: CVector,
    target: CVector,
    alpha: f64,
    grid: TimeGrid,
}

impl ControlSystem {
    /// `drift = A₀`, `control = M`; both act on vectors of the same length
    /// as `initial` and `target`.
    pub fn new(
        drift: &CMatrix,
        control: &CMatrix,
        initial: CVector,
        target: CVector,
        alpha: f64,
        grid: TimeGrid,
    ) -> Result<Self> {
        let n = initial.len();
        for m in [drift, control] {
            if m.shape() != (n, n) {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: m.nrows(),
                });
            }
        }
        if target.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: target.len(),
            });
        }
        check_alpha(alpha)?;
        let forward = SplitGenerator::new(&(drift * (-I)), &(control * (-I)));
        let backward = forward.adjoint();
        Ok(Self {
            forward,
            backward,
            control: control.clone(),
            initial,
            target,
            alpha,
            grid,
        })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn initial(&self) -> &CVector {
        &self.initial
    }

    pub fn target(&self) -> &CVector {
        &self.target
    }

    /// `|⟨τ|x⟩|²`.
    pub fn fidelity(&self, x: &CVector) -> f64 {
        self.target.dotc(x).norm_sqr()
    }

    /// `Q x = |τ⟩⟨τ|x⟩`.
    pub fn project(&self, x: &CVector) -> CVector {
        &self.target * self.target.dotc(x)
    }

    pub fn propagate(&self, xi: &[f64]) -> Result<Trajectory> {
        self.grid.check_field(xi)?;
        Ok(Trajectory {
            states: self.forward.propagate(xi, &self.initial, &self.grid),
            grid: self.grid,
        })
    }

    pub fn propagate_costate(&self, xi: &[f64], chi_final: &CVector) -> Result<Trajectory> {
        self.grid.check_field(xi)?;
        Ok(Trajectory {
            states: self.backward.propagate_back(xi, chi_final, &self.grid),
            grid: self.grid,
        })
    }

    /// Record for a field whose final state is `x_final`.
    pub(crate) fn record(
        &self,
        iteration: usize,
        xi: &[f64],
        x_final: &CVector,
    ) -> IterationRecord {
        let fidelity = self.fidelity(x_final);
        let fl = fluence(xi, self.grid.dt());
        IterationRecord {
            iteration,
            cost: fidelity - self.alpha * fl,
            fidelity,
            fluence: fl,
            delta_cost: 0.0,
        }
    }

    /// Discrete update overlap `g_n(a, b)` on interval `n`.
    fn interval_overlap(
        &self,
        a: f64,
        b: f64,
        chi_next: &CVector,
        psi: &CVector,
        buf: &mut [C64],
        ws: &mut Workspace,
    ) -> f64 {
        let dt = self.grid.dt();
        self.forward
            .divided_difference_action(a, b, psi.as_slice(), dt, buf, ws);
        let dot: C64 = chi_next
            .iter()
            .zip(buf.iter())
            .map(|(c, f)| c.conj() * f)
            .sum();
        dot.re / dt
    }

    /// Node-wise continuum overlap `Im⟨χ_n|M|ψ_n⟩`.
    pub fn node_overlap(&self, state: &Trajectory, costate: &Trajectory) -> Vec<f64> {
        state
            .states
            .iter()
            .zip(&costate.states)
            .map(|(psi, chi)| chi.dotc(&(&self.control * psi)).im)
            .collect()
    }

    /// Discrete gradient overlap `g_n(ξ_n, ξ_n)` on every interval, the
    /// quantity the converged field satisfies `α ξ_n = ±g_n` for.
    pub fn interval_gradient(
        &self,
        xi: &[f64],
        state: &Trajectory,
        costate: &Trajectory,
    ) -> Vec<f64> {
        let n = self.grid.n_steps();
        let mut ws = Workspace::new(self.forward.dim());
        let mut buf = vec![C64::new(0.0, 0.0); self.forward.dim()];
        (0..n)
            .map(|i| {
                self.interval_overlap(
                    xi[i],
                    xi[i],
                    &costate.states[i + 1],
                    &state.states[i],
                    &mut buf,
                    &mut ws,
                )
            })
            .collect()
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "alpha",
            reason: format!("must be positive and finite, got {alpha}"),
        });
    }
    Ok(())
}

/// Open-system problem: steer `ρ₀` towards `τ` under the GLKS equation.
#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub h0: CMatrix,
    pub mu_prime: CMatrix,
    /// Lindblad operators scaled by the square roots of their rates; empty
    /// for unitary dynamics.
    pub lindblad_ops: Vec<CMatrix>,
    pub rho0: DensityMatrix,
    pub target: DensityMatrix,
    pub alpha: f64,
    pub grid: TimeGrid,
}

impl ControlProblem {
    pub fn new(
        h0: CMatrix,
        mu_prime: CMatrix,
        lindblad_ops: Vec<CMatrix>,
        rho0: DensityMatrix,
        target: DensityMatrix,
        alpha: f64,
        grid: TimeGrid,
    ) -> Result<Self> {
        let problem = Self {
            h0,
            mu_prime,
            lindblad_ops,
            rho0,
            target,
            alpha,
            grid,
        };
        let d = problem.liouvillian()?.dim();
        for dim in [problem.rho0.dim(), problem.target.dim()] {
            if dim != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: dim,
                });
            }
        }
        check_alpha(alpha)?;
        Ok(problem)
    }

    pub fn dim(&self) -> usize {
        self.h0.nrows()
    }

    pub fn liouvillian(&self) -> Result<Liouvillian> {
        build_liouvillian(&self.h0, &self.mu_prime, &self.lindblad_ops)
    }

    pub fn control_system(&self) -> Result<ControlSystem> {
        let l = self.liouvillian()?;
        ControlSystem::new(
            &l.field_free(),
            &l.control_superop,
            vec(&self.rho0).into_data(),
            vec(&self.target).into_data(),
            self.alpha,
            self.grid,
        )
    }

    /// Same problem with a different time window.
    pub fn with_grid(&self, grid: TimeGrid) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }

    /// Unstacks node `n` of a state trajectory.
    pub fn density_at(&self, traj: &Trajectory, n: usize) -> CMatrix {
        LiouvilleVector::new(traj.states[n].clone())
            .expect("trajectory of this problem")
            .to_matrix()
    }
}

fn check_pure(name: &'static str, psi: &CVector) -> Result<()> {
    let norm = psi.norm();
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("state must be normalized, norm is {norm}"),
        });
    }
    Ok(())
}

/// Closed-system problem on pure states: `i ψ̇ = (H₀ + ξ μ) ψ`.
#[derive(Debug, Clone)]
pub struct ClosedControlProblem {
    pub h0: CMatrix,
    pub mu: CMatrix,
    pub psi0: CVector,
    pub target: CVector,
    pub alpha: f64,
    pub grid: TimeGrid,
}

impl ClosedControlProblem {
    pub fn new(
        h0: CMatrix,
        mu: CMatrix,
        psi0: CVector,
        target: CVector,
        alpha: f64,
        grid: TimeGrid,
    ) -> Result<Self> {
        let d = check_hermitian(&h0)?;
        if check_hermitian(&mu)? != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: mu.nrows(),
            });
        }
        for v in [&psi0, &target] {
            if v.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: v.len(),
                });
            }
        }
        check_pure("psi0", &psi0)?;
        check_pure("target", &target)?;
        check_alpha(alpha)?;
        Ok(Self {
            h0,
            mu,
            psi0,
            target,
            alpha,
            grid,
        })
    }

    pub fn control_system(&self) -> Result<ControlSystem> {
        ControlSystem::new(
            &self.h0,
            &self.mu,
            self.psi0.clone(),
            self.target.clone(),
            self.alpha,
            self.grid,
        )
    }

    /// `H(t_n) = H₀ + ξ_n μ` at every node.
    pub fn hamiltonian_samples(&self, xi: &[f64]) -> Vec<CMatrix> {
        xi.iter()
            .map(|&x| &self.h0 + &self.mu * C64::new(x, 0.0))
            .collect()
    }

    /// The equivalent open problem on `|ψ₀⟩⟨ψ₀|` and `|τ⟩⟨τ|` without
    /// dissipation.
    pub fn as_open(&self) -> Result<ControlProblem> {
        ControlProblem::new(
            self.h0.clone(),
            self.mu.clone(),
            Vec::new(),
            DensityMatrix::from_pure(&self.psi0)?,
            DensityMatrix::from_pure(&self.target)?,
            self.alpha,
            self.grid,
        )
    }
}
