//! Thermalization of a single qubit coupled to a Bose bath.
//!
//! The qubit has `H₀ = (ω/2) σ_z`, control `μ′ = σ_x` and the generalized
//! amplitude damping pair `√(γ l₊) σ₊`, `√(γ l₋) σ₋`. Basis convention:
//! `σ_z|0⟩ = +|0⟩`, so `ρ₀₀` is the excited population and `σ₊ = |0⟩⟨1|`.
//! Without control the Bloch vector relaxes to `(0, 0, −r_fp)` with
//! transverse rate `γ₁ = γ/(2 r_fp)` and longitudinal rate `γ₂ = 2γ₁`.

use nalgebra::DMatrix;

use crate::dynamics::TimeGrid;
use crate::liouville::{
    build_liouvillian, hermitian_eigenvalues, pauli, vec, DensityMatrix, Liouvillian,
};
use crate::optimizer::{
    optimize, ControlField, ControlProblem, IterationRecord, OptimizationResult, OptimizerConfig,
};
use crate::{CMatrix, Error, Result, C64};

/// Gibbs/target mismatch allowed by [`speedup_experiment`].
pub const GIBBS_TARGET_TOL: f64 = 1e-10;

/// Parameters and derived rates of the thermal qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalModel {
    pub omega: f64,
    pub beta: f64,
    pub gamma: f64,
    pub l_plus: f64,
    pub l_minus: f64,
    pub r_fp: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter {
            name,
            reason: format!("must be positive and finite, got {v}"),
        });
    }
    Ok(())
}

impl ThermalModel {
    pub fn new(omega: f64, beta: f64, gamma: f64) -> Result<Self> {
        positive("omega", omega)?;
        positive("beta", beta)?;
        positive("gamma", gamma)?;
        let x = omega * beta;
        let l_plus = 1.0 / x.exp_m1();
        // e^x/(e^x − 1) written so it stays finite for large x.
        let l_minus = 1.0 / -(-x).exp_m1();
        let r_fp = (x / 2.0).tanh();
        let gamma1 = gamma / (2.0 * r_fp);
        Ok(Self {
            omega,
            beta,
            gamma,
            l_plus,
            l_minus,
            r_fp,
            gamma1,
            gamma2: 2.0 * gamma1,
            gamma3: gamma,
        })
    }

    /// Inverse temperature whose Gibbs state has the given excited
    /// population `p ∈ (0, ½)`.
    pub fn beta_for_excited_population(omega: f64, p: f64) -> Result<f64> {
        positive("omega", omega)?;
        if !(p > 0.0 && p < 0.5) {
            return Err(Error::InvalidParameter {
                name: "excited population",
                reason: format!("must lie in (0, 0.5), got {p}"),
            });
        }
        Ok(((1.0 - p) / p).ln() / omega)
    }

    pub fn h0(&self) -> CMatrix {
        pauli::sigma_z() * C64::new(self.omega / 2.0, 0.0)
    }

    pub fn mu_prime(&self) -> CMatrix {
        pauli::sigma_x()
    }

    /// `[√(γ l₊) σ₊, √(γ l₋) σ₋]`.
    pub fn lindblad_ops(&self) -> Vec<CMatrix> {
        vec![
            pauli::sigma_plus() * C64::new((self.gamma * self.l_plus).sqrt(), 0.0),
            pauli::sigma_minus() * C64::new((self.gamma * self.l_minus).sqrt(), 0.0),
        ]
    }

    pub fn liouvillian(&self) -> Liouvillian {
        build_liouvillian(&self.h0(), &self.mu_prime(), &self.lindblad_ops())
            .expect("qubit operators are consistent")
    }

    pub fn gibbs_bloch(&self) -> BlochVector {
        BlochVector::new(0.0, 0.0, -self.r_fp)
    }

    pub fn gibbs_state(&self) -> DensityMatrix {
        DensityMatrix::new(density_from_bloch(&self.gibbs_bloch()))
            .expect("Gibbs state is a valid density matrix")
    }

    /// Open control problem for this model on `[0, T]`.
    pub fn control_problem(
        &self,
        rho0: DensityMatrix,
        target: DensityMatrix,
        alpha: f64,
        grid: TimeGrid,
    ) -> Result<ControlProblem> {
        ControlProblem::new(
            self.h0(),
            self.mu_prime(),
            self.lindblad_ops(),
            rho0,
            target,
            alpha,
            grid,
        )
    }
}

/// Qubit Bloch vector, `ρ = ½(I + r·σ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self([x, y, z])
    }

    pub fn x(&self) -> f64 {
        self.0[0]
    }

    pub fn y(&self) -> f64 {
        self.0[1]
    }

    pub fn z(&self) -> f64 {
        self.0[2]
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn distance(&self, other: &BlochVector) -> f64 {
        (0..3)
            .map(|i| (self.0[i] - other.0[i]).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

fn check_qubit(m: &CMatrix) -> Result<()> {
    if m.shape() != (2, 2) {
        return Err(Error::DimensionMismatch {
            expected: 2,
            found: m.nrows(),
        });
    }
    Ok(())
}

/// `r_i = tr(ρ σ_i)`.
pub fn bloch_from_density(rho: &CMatrix) -> Result<BlochVector> {
    check_qubit(rho)?;
    let tr = |s: CMatrix| (rho * s).trace().re;
    Ok(BlochVector::new(
        tr(pauli::sigma_x()),
        tr(pauli::sigma_y()),
        tr(pauli::sigma_z()),
    ))
}

/// `½(I + r·σ)`.
pub fn density_from_bloch(r: &BlochVector) -> CMatrix {
    let half = 0.5;
    DMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(half * (1.0 + r.z()), 0.0),
            C64::new(half * r.x(), -half * r.y()),
            C64::new(half * r.x(), half * r.y()),
            C64::new(half * (1.0 - r.z()), 0.0),
        ],
    )
}

/// Closed-form free evolution of the Bloch vector.
pub fn analytic_trajectory(r0: &BlochVector, model: &ThermalModel, t: f64) -> Result<BlochVector> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter {
            name: "t",
            reason: format!("must be non-negative, got {t}"),
        });
    }
    let (s, c) = (model.omega * t).sin_cos();
    let transverse = (-model.gamma1 * t).exp();
    let longitudinal = (-model.gamma2 * t).exp();
    Ok(BlochVector::new(
        transverse * (r0.x() * c - r0.y() * s),
        transverse * (r0.y() * c + r0.x() * s),
        -model.r_fp + longitudinal * (r0.z() + model.r_fp),
    ))
}

/// Trace distance `½‖ρ − σ‖₁`; Bloch formula for qubits, eigenvalues
/// otherwise.
pub fn trace_distance(rho: &CMatrix, sigma: &CMatrix) -> Result<f64> {
    if rho.shape() != sigma.shape() {
        return Err(Error::DimensionMismatch {
            expected: rho.nrows(),
            found: sigma.nrows(),
        });
    }
    if rho.shape() == (2, 2) {
        let r = bloch_from_density(rho)?;
        let s = bloch_from_density(sigma)?;
        return Ok(0.5 * r.distance(&s));
    }
    let diff = rho - sigma;
    Ok(0.5
        * hermitian_eigenvalues(&diff)
            .iter()
            .map(|l| l.abs())
            .sum::<f64>())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::ParameterOutOfRange {
            name: "epsilon",
            value: epsilon,
            min: 0.0,
            max: 1.0,
        });
    }
    Ok(())
}

/// First time the free dynamics brings `r0` within trace distance `epsilon`
/// of the Gibbs state, from the closed-form trajectory.
///
/// With `a = r_x² + r_y²`, `b = r_z + r_fp` and `u = e^{−2γ₁t}` the
/// condition `D₁ = ε` reads `b² u² + a u − 4ε² = 0`.
pub fn epsilon_free_time(r0: &BlochVector, model: &ThermalModel, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let d0 = 0.5 * r0.distance(&model.gibbs_bloch());
    if d0 <= epsilon {
        return Ok(0.0);
    }
    let a = r0.x() * r0.x() + r0.y() * r0.y();
    let b = r0.z() + model.r_fp;
    let e2 = epsilon * epsilon;
    let u = if b == 0.0 {
        4.0 * e2 / a
    } else {
        let b2 = b * b;
        // Same root as (−a + √(a² + 16ε²b²))/(2b²), without cancellation.
        8.0 * e2 / (a + (a * a + 16.0 * e2 * b2).sqrt())
    };
    if !(u > 0.0 && u < 1.0) {
        return Err(Error::Infeasible(format!(
            "free contraction cannot reach ε = {epsilon} from distance {d0} (u = {u})"
        )));
    }
    Ok(-u.ln() / (2.0 * model.gamma1))
}

/// Numerical first-passage oracle for [`epsilon_free_time`]: steps the
/// vectorized free dynamics with a dense step exponential and interpolates
/// linearly between the bracketing nodes.
pub fn first_passage_time(
    rho0: &DensityMatrix,
    model: &ThermalModel,
    epsilon: f64,
    dt: f64,
    t_max: f64,
) -> Result<f64> {
    check_epsilon(epsilon)?;
    positive("dt", dt)?;
    let tau = model.gibbs_state();
    let dist = |m: &CMatrix| trace_distance(m, tau.matrix());
    let mut prev = dist(rho0.matrix())?;
    if prev <= epsilon {
        return Ok(0.0);
    }
    let step = (model.liouvillian().generator(0.0) * C64::new(dt, 0.0)).exp();
    let mut v = vec(rho0).into_data();
    let mut n = 0usize;
    while (n as f64) * dt < t_max {
        v = &step * &v;
        n += 1;
        let d = dist(&CMatrix::from_column_slice(2, 2, v.as_slice()))?;
        if d <= epsilon {
            let frac = (prev - epsilon) / (prev - d);
            return Ok((n as f64 - 1.0 + frac) * dt);
        }
        prev = d;
    }
    Err(Error::Infeasible(format!(
        "ε-ball not reached within t = {t_max}"
    )))
}

/// Settings of the thermalization speedup run.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeedupSettings {
    pub epsilon: f64,
    /// Speedup factor `s ≥ 1`; the control window is `T_free / s`.
    pub speedup: f64,
    pub alpha: f64,
    pub n_steps: usize,
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub t_free: f64,
    pub t_final: f64,
    pub times: Vec<f64>,
    pub free_distance: Vec<f64>,
    pub controlled_distance: Vec<f64>,
    pub field: ControlField,
    pub initial: IterationRecord,
    pub records: Vec<IterationRecord>,
    pub free_final_distance: f64,
    pub final_distance: f64,
    /// Controlled state ends inside the ε-ball.
    pub reached: bool,
    pub optimization: OptimizationResult,
}

/// Node-wise trace distance of a state trajectory to `tau`.
pub fn distance_curve(
    problem: &ControlProblem,
    traj: &crate::dynamics::Trajectory,
    tau: &DensityMatrix,
) -> Result<Vec<f64>> {
    (0..traj.len())
        .map(|n| trace_distance(&problem.density_at(traj, n), tau.matrix()))
        .collect()
}

/// Tries to push `rho0` into the ε-ball of the Gibbs state `tau` in
/// `T_free / s`, and compares against free evolution over the same window.
pub fn speedup_experiment(
    model: &ThermalModel,
    rho0: &DensityMatrix,
    tau: &DensityMatrix,
    settings: &SpeedupSettings,
) -> Result<ExperimentReport> {
    check_qubit(rho0.matrix())?;
    check_qubit(tau.matrix())?;
    let gibbs = model.gibbs_state();
    let mismatch = (tau.matrix() - gibbs.matrix())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max);
    if mismatch > GIBBS_TARGET_TOL {
        return Err(Error::InvalidParameter {
            name: "target",
            reason: format!("differs from the model's Gibbs state by {mismatch:e}"),
        });
    }
    if !(settings.speedup >= 1.0 && settings.speedup.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "speedup",
            reason: format!("must be at least 1, got {}", settings.speedup),
        });
    }
    settings.optimizer.validate()?;

    let r0 = bloch_from_density(rho0.matrix())?;
    let t_free = epsilon_free_time(&r0, model, settings.epsilon)?;
    if t_free == 0.0 {
        return Err(Error::InvalidParameter {
            name: "rho0",
            reason: "initial state already lies inside the ε-ball".into(),
        });
    }
    let t_final = t_free / settings.speedup;
    let grid = TimeGrid::new(t_final, settings.n_steps)?;
    let problem = model.control_problem(rho0.clone(), tau.clone(), settings.alpha, grid)?;
    let system = problem.control_system()?;

    let free = system.propagate(&vec![0.0; grid.n_nodes()])?;
    let free_distance = distance_curve(&problem, &free, tau)?;

    let optimization = optimize(&problem, &settings.optimizer)?;
    let controlled_distance = distance_curve(&problem, &optimization.state, tau)?;

    let free_final_distance = *free_distance.last().expect("non-empty grid");
    let final_distance = *controlled_distance.last().expect("non-empty grid");
    Ok(ExperimentReport {
        t_free,
        t_final,
        times: grid.times(),
        free_distance,
        controlled_distance,
        field: optimization.field.clone(),
        initial: optimization.initial,
        records: optimization.records.clone(),
        free_final_distance,
        final_distance,
        reached: final_distance <= settings.epsilon,
        optimization,
    })
}
