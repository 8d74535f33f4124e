mod common;

use common::*;
use lindkrotov::dynamics::{
    propagate_costate, propagate_density_direct, propagate_state, TimeGrid,
};
use lindkrotov::liouville::{build_liouvillian, liouville_inner, vec};
use lindkrotov::optimizer::ControlField;
use lindkrotov::CMatrix;

fn liouville_vs_direct(d: usize, seed: u64, t_final: f64, n: usize) -> f64 {
    let mut rng = rng(seed);
    let h0 = random_hermitian(&mut rng, d);
    let mu = random_hermitian(&mut rng, d);
    let ops = vec![random_matrix(&mut rng, d), random_matrix(&mut rng, d)];
    let ops: Vec<CMatrix> = ops
        .into_iter()
        .map(|l| l * lindkrotov::C64::new(0.4, 0.0))
        .collect();
    let rho0 = random_density(&mut rng, d);
    let grid = TimeGrid::new(t_final, n).unwrap();
    let field = ControlField::random(&grid, 1.0, seed).xi;

    let liou = build_liouvillian(&h0, &mu, &ops).unwrap();
    let traj = propagate_state(&liou, &field, &vec(&rho0), &grid).unwrap();
    let direct = propagate_density_direct(&h0, &mu, &ops, &field, &rho0, &grid).unwrap();
    (0..grid.n_nodes())
        .map(|k| max_abs_diff(&traj.density(k).unwrap(), &direct[k]))
        .fold(0.0, f64::max)
}

#[test]
fn random_open_systems_agree_with_direct_integration() {
    for (d, seed) in [(2, 1), (2, 2), (3, 3), (3, 4)] {
        let err = liouville_vs_direct(d, seed, 3.0, 3000);
        assert!(err <= 1e-7, "d = {d}, seed = {seed}: {err:e}");
    }
}

#[test]
fn direct_integrator_is_fourth_order() {
    // Both paths share the piecewise-constant field, so their gap is the
    // Runge-Kutta error alone.
    let coarse = liouville_vs_direct(2, 9, 2.0, 100);
    let fine = liouville_vs_direct(2, 9, 2.0, 200);
    let order = (coarse / fine).log2();
    assert!((3.5..4.6).contains(&order), "observed order {order}");
}

#[test]
fn gad_qubit_agrees_with_direct_integration() {
    let model = reference_model();
    let grid = TimeGrid::new(5.0, 4000).unwrap();
    let field = ControlField::random(&grid, 1.0, 42).xi;
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
    for (k, rho) in direct.iter().enumerate() {
        assert!(max_abs_diff(&traj.density(k).unwrap(), rho) <= 1e-7);
    }
}

#[test]
fn state_costate_pairing_is_conserved() {
    let mut rng = rng(21);
    let d = 3;
    let h0 = random_hermitian(&mut rng, d);
    let mu = random_hermitian(&mut rng, d);
    let ops = vec![random_matrix(&mut rng, d)];
    let liou = build_liouvillian(&h0, &mu, &ops).unwrap();
    let grid = TimeGrid::new(2.0, 500).unwrap();
    let field = ControlField::random(&grid, 0.8, 7).xi;
    let rho0 = random_density(&mut rng, d);
    let target = random_density(&mut rng, d);

    let psi = propagate_state(&liou, &field, &vec(&rho0), &grid).unwrap();
    let chi = propagate_costate(&liou, &field, &vec(&target), &grid).unwrap();
    let pair = |k: usize| {
        liouville_inner(
            &chi.liouville_state(k).unwrap(),
            &psi.liouville_state(k).unwrap(),
        )
        .unwrap()
    };
    let p0 = pair(0);
    for k in 1..grid.n_nodes() {
        assert!((pair(k) - p0).norm() < 1e-10);
    }
}

#[test]
fn trace_and_positivity_are_kept() {
    let model = reference_model();
    let grid = TimeGrid::new(10.0, 2000).unwrap();
    let field = ControlField::random(&grid, 2.0, 5).xi;
    let traj =
        propagate_state(&model.liouvillian(), &field, &vec(&reference_rho0()), &grid).unwrap();
    for k in 0..traj.len() {
        let v = traj.liouville_state(k).unwrap();
        assert!((v.trace().re - 1.0).abs() < 1e-12);
        assert!(v.trace().im.abs() < 1e-12);
        let rho = lindkrotov::liouville::DensityMatrix::new(v.to_matrix());
        assert!(rho.is_ok(), "node {k}");
    }
}
