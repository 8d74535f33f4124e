//! Acceptance suite: one PASS/FAIL line per criterion.

use std::fs;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use lindkrotov::dynamics::{propagate_density_direct, propagate_state, TimeGrid};
use lindkrotov::liouville::{pauli, vec, DensityMatrix, LiouvilleVector};
use lindkrotov::optimizer::{
    closed_optimize, delta_j_decomposition, optimize, qsl_time, ClosedControlProblem, ControlField,
    OptimizerConfig,
};
use lindkrotov::thermal::{
    analytic_trajectory, bloch_from_density, density_from_bloch, epsilon_free_time,
    first_passage_time, speedup_experiment, BlochVector, SpeedupSettings, ThermalModel,
};
use lindkrotov::{CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Thermalization time quoted for this model at eps = 0.1.
const QUOTED_T_FREE: f64 = 27.0573;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn reference_model() -> ThermalModel {
    let beta = ThermalModel::beta_for_excited_population(2.0, 0.4).unwrap();
    ThermalModel::new(2.0, beta, 0.1).unwrap()
}

fn reference_bloch() -> BlochVector {
    BlochVector::new(0.0, -0.38, 0.0)
}

fn reference_rho0() -> DensityMatrix {
    DensityMatrix::new(density_from_bloch(&reference_bloch())).unwrap()
}

fn random_matrix(rng: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

fn random_bloch(rng: &mut impl Rng) -> BlochVector {
    loop {
        let r = BlochVector::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        if r.norm() <= 1.0 {
            return r;
        }
    }
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

fn vectorization() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for i in 0..200 {
        let d = 2 + i % 2;
        let b = random_matrix(&mut rng, d);
        let rho = random_matrix(&mut rng, d);
        let c = random_matrix(&mut rng, d);
        let lhs = LiouvilleVector::from_matrix(&(&b * &rho * &c))
            .unwrap()
            .into_data();
        let vr = LiouvilleVector::from_matrix(&rho).unwrap().into_data();
        let rhs = c.transpose().kronecker(&b) * vr;
        worst = worst.max((lhs - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max));
    }
    outcome(
        worst <= 1e-12,
        format!("200 triples (d = 2, 3), max error {worst:.3e} (limit 1e-12)"),
    )
}

fn dynamics_equivalence() -> Outcome {
    let model = reference_model();
    let grid = TimeGrid::new(5.0, 4000).unwrap();
    let field = ControlField::random(&grid, 1.0, 2024).xi;
    let rho0 = reference_rho0();
    let traj = propagate_state(&model.liouvillian(), &field, &vec(&rho0), &grid).unwrap();
    let direct = propagate_density_direct(
        &model.h0(),
        &model.mu_prime(),
        &model.lindblad_ops(),
        &field,
        &rho0,
        &grid,
    )
    .unwrap();
    let worst = direct
        .iter()
        .enumerate()
        .map(|(n, rho)| max_abs(&(traj.density(n).unwrap() - rho)))
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-7,
        format!("GAD qubit, |xi| <= 1 random field, T = 5, N = 4000: max elementwise gap {worst:.3e} (limit 1e-7)"),
    )
}

fn analytic_bloch() -> Outcome {
    let model = reference_model();
    let t_free = epsilon_free_time(&reference_bloch(), &model, 0.1).unwrap();
    let grid = TimeGrid::new(2.0 * t_free, 4000).unwrap();
    let liou = model.liouvillian();
    let zero = vec![0.0; grid.n_nodes()];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let r0 = random_bloch(&mut rng);
        let rho0 = DensityMatrix::new(density_from_bloch(&r0)).unwrap();
        let traj = propagate_state(&liou, &zero, &vec(&rho0), &grid).unwrap();
        for n in 0..traj.len() {
            let numeric = bloch_from_density(&traj.density(n).unwrap()).unwrap();
            let exact = analytic_trajectory(&r0, &model, grid.time(n)).unwrap();
            worst = worst.max(numeric.distance(&exact));
        }
    }
    outcome(
        worst <= 1e-6,
        format!(
            "20 random states over [0, 2 T_free]: max Bloch deviation {worst:.3e} (limit 1e-6)"
        ),
    )
}

fn free_time() -> Outcome {
    let model = reference_model();
    let rho0 = reference_rho0();
    let mut worst: f64 = 0.0;
    let mut reference = (0.0, 0.0);
    for eps in [0.02, 0.05, 0.1, 0.2] {
        let closed = epsilon_free_time(&reference_bloch(), &model, eps).unwrap();
        let oracle = first_passage_time(&rho0, &model, eps, 1e-4, 1e3).unwrap();
        worst = worst.max((closed - oracle).abs() / closed);
        if eps == 0.1 {
            reference = (closed, oracle);
        }
    }
    let reproduced = (reference.0 - 2.7058).abs() < 1e-4 && (reference.1 - 2.7058).abs() < 1e-4;
    outcome(
        worst <= 1e-4 && reproduced,
        format!(
            "eps grid max relative gap {worst:.3e} (limit 1e-4); eps = 0.1: closed {:.6}, first passage {:.6}; \
             quoted {QUOTED_T_FREE} is {:.4}x the reproduced value and is not reproduced",
            reference.0,
            reference.1,
            QUOTED_T_FREE / reference.0
        ),
    )
}

/// Criteria 5 and 6 share the same runs.
fn monotone_and_identity() -> (Outcome, Outcome) {
    let model = reference_model();
    let t_free = epsilon_free_time(&reference_bloch(), &model, 0.1).unwrap();
    let grid = TimeGrid::new(t_free / 2.0, 2000).unwrap();
    let problem = model
        .control_problem(reference_rho0(), model.gibbs_state(), 1e-3, grid)
        .unwrap();
    let system = problem.control_system().unwrap();
    let values = [0.25, 0.5, 1.0, 1.5, 2.0];

    let mut runs = 0;
    let mut mono_fail = Vec::new();
    let mut worst_drop: f64 = 0.0;
    let mut identity_checked = 0;
    let mut identity_fail = 0;
    let mut worst_ratio: f64 = 0.0;
    let mut reference_checked = 0;
    for &delta in &values {
        for &eta in &values {
            for seed in 0..5 {
                runs += 1;
                let config = OptimizerConfig {
                    delta,
                    eta,
                    k_max: 100,
                    delta_tol: 0.0,
                    seed,
                    ..Default::default()
                };
                let result = match optimize(&problem, &config) {
                    Ok(r) => r,
                    Err(e) => {
                        mono_fail.push(format!("(δ={delta}, η={eta}, seed {seed}): {e}"));
                        continue;
                    }
                };
                let costs = result.costs();
                if result.records.len() != 100 {
                    mono_fail.push(format!(
                        "(δ={delta}, η={eta}, seed {seed}): {} iterations",
                        result.records.len()
                    ));
                }
                for w in costs.windows(2) {
                    let floor = -1e-9 * w[0].abs().max(1.0);
                    worst_drop = worst_drop.min(w[1] - w[0]);
                    if w[1] - w[0] < floor {
                        mono_fail.push(format!("(δ={delta}, η={eta}, seed {seed})"));
                        break;
                    }
                }
                for pair in result.snapshots.windows(2) {
                    let r = delta_j_decomposition(&system, &pair[0], &pair[1]).unwrap();
                    identity_checked += 1;
                    if delta == 1.5 && eta == 1.5 {
                        reference_checked += 1;
                    }
                    let tol = r.tolerance(grid.dt());
                    if tol > 0.0 {
                        worst_ratio = worst_ratio.max(r.difference.abs() / tol);
                    }
                    if !r.holds(grid.dt()) {
                        identity_fail += 1;
                    }
                }
            }
        }
    }
    let crit5 = outcome(
        mono_fail.is_empty(),
        format!(
            "{runs} runs x 100 iterations at N = 2000, most negative ΔJ {worst_drop:.3e} (floor -1e-9·max(1,|J|)){}",
            if mono_fail.is_empty() {
                String::new()
            } else {
                format!("; violations: {}", mono_fail.join(", "))
            }
        ),
    );
    let crit6 = outcome(
        identity_fail == 0 && reference_checked == 500,
        format!(
            "{identity_checked} iteration pairs ({reference_checked} at δ = η = 1.5), all terms >= 0 and |predicted - direct| <= 10·dt·scale²: \
             {identity_fail} failures, worst gap/tolerance {worst_ratio:.3e}"
        ),
    );
    (crit5, crit6)
}

fn fig3() -> Outcome {
    let model = reference_model();
    let t_free = epsilon_free_time(&reference_bloch(), &model, 0.1).unwrap();
    let oracle = first_passage_time(&reference_rho0(), &model, 0.1, 1e-4, 1e3).unwrap();
    let validated = (t_free - oracle).abs() / t_free <= 1e-4;
    let settings = SpeedupSettings {
        epsilon: 0.1,
        speedup: 2.0,
        alpha: 1e-3,
        n_steps: 2000,
        optimizer: OptimizerConfig {
            delta: 1.5,
            eta: 1.5,
            k_max: 100,
            delta_tol: 0.0,
            ..Default::default()
        },
    };
    let r = speedup_experiment(&model, &reference_rho0(), &model.gibbs_state(), &settings).unwrap();
    let costs = r.optimization.costs();
    let monotone = costs
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
    outcome(
        validated && r.final_distance <= 0.1 && r.free_final_distance > 0.1 && monotone,
        format!(
            "T = T_free/2 = {:.6}: D1 controlled {:.5} (<= 0.1), D1 free {:.5} (> 0.1), J {:.6} -> {:.6} non-decreasing: {monotone}",
            r.t_final,
            r.final_distance,
            r.free_final_distance,
            costs[0],
            costs[costs.len() - 1]
        ),
    )
}

fn closed_control() -> Outcome {
    use pauli::{ket, sigma_x, sigma_z};
    let grid = TimeGrid::new(4.0, 400).unwrap();
    let problem =
        ClosedControlProblem::new(sigma_z(), sigma_x(), ket(0), ket(1), 1e-3, grid).unwrap();
    let config = OptimizerConfig {
        delta: 1.0,
        eta: 1.0,
        k_max: 100,
        ..Default::default()
    };
    let result = closed_optimize(&problem, &config).unwrap();
    let costs = result.costs();
    let monotone = costs
        .windows(2)
        .all(|w| w[1] >= w[0] - 1e-9 * w[0].abs().max(1.0));
    let fidelity = result.final_record().fidelity;

    let reference = qsl_time(&ket(0), &ket(1), &vec![sigma_x(); grid.n_nodes()], &grid).unwrap();
    let reference_ok = (reference.t_qsl - std::f64::consts::FRAC_PI_2).abs() <= 1e-10;
    let qsl = qsl_time(
        &ket(0),
        &ket(1),
        &problem.hamiltonian_samples(&result.field.xi),
        &grid,
    )
    .unwrap();
    outcome(
        fidelity >= 0.99 && monotone && reference_ok && qsl.t_qsl <= grid.t_final(),
        format!(
            "fidelity {fidelity:.6} (>= 0.99), monotone {monotone}, reference t_QSL {:.12} (π/2 ± 1e-10), optimized t_QSL {:.4} <= T = 4",
            reference.t_qsl, qsl.t_qsl
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("fig3.json");
    fs::write(&config, r#"{ "preset": "speedup-demo" }"#).unwrap();
    let mut bodies = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_lindkrotov"))
            .arg("run")
            .arg(&config)
            .arg("--output-dir")
            .arg(&out)
            .arg("--seed")
            .arg("11")
            .output()
            .unwrap();
        if !status.status.success() {
            return outcome(false, format!("CLI run failed: {status:?}"));
        }
        bodies.push((
            fs::read(out.join("convergence.csv")).unwrap(),
            fs::read(out.join("trajectory.csv")).unwrap(),
        ));
    }
    let same = bodies[0] == bodies[1];
    outcome(
        same,
        format!(
            "two speedup-demo CLI runs with seed 11: convergence.csv ({} B) and trajectory.csv ({} B) byte-identical: {same}",
            bodies[0].0.len(),
            bodies[0].1.len()
        ),
    )
}

fn report(id: &str, name: &str, limit: Duration, elapsed: Duration, o: &Outcome) -> bool {
    let in_time = elapsed <= limit;
    let pass = o.pass && in_time;
    println!(
        "{} criterion {id} {name}: {} [{:.2} s, limit {} s]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        elapsed.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let v = f();
    (v, start.elapsed())
}

fn main() -> ExitCode {
    // `cargo test -- --list` and filters from the default harness.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let secs = Duration::from_secs;
    let mut all = true;

    let (o, t) = timed(vectorization);
    all &= report("1", "vectorization oracle", secs(1), t, &o);
    let (o, t) = timed(dynamics_equivalence);
    all &= report("2", "dynamics equivalence", secs(5), t, &o);
    let (o, t) = timed(analytic_bloch);
    all &= report("3", "closed-form Bloch trajectory", secs(10), t, &o);
    let (o, t) = timed(free_time);
    all &= report("4", "epsilon-free time", secs(10), t, &o);
    let ((o5, o6), t) = timed(monotone_and_identity);
    all &= report("5", "monotone convergence", secs(300), t, &o5);
    all &= report("6", "ΔJ decomposition", secs(300), t, &o6);
    let (o, t) = timed(fig3);
    all &= report("7", "thermalization speedup", secs(30), t, &o);
    let (o, t) = timed(closed_control);
    all &= report("8", "closed-system control", secs(10), t, &o);
    let (o, t) = timed(determinism);
    all &= report("9", "determinism", secs(60), t, &o);

    if all {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: some criteria fail");
        ExitCode::FAILURE
    }
}
