//! Quantum speed limit for unitary driving between pure states.

use crate::dynamics::TimeGrid;
use crate::liouville::{check_hermitian, hermitian_eigenvalues};
use crate::{CMatrix, CVector, Error, Result};

use super::NORMALIZATION_TOL;

#[derive(Debug, Clone, PartialEq)]
pub struct QslReport {
    /// `arccos |⟨ψ₀|τ⟩|`.
    pub fubini_study_distance: f64,
    /// Time-averaged `⟨ψ₀|H|ψ₀⟩ − E_g`.
    pub avg_energy: f64,
    /// Time-averaged `⟨ψ₀|(H − E(t))²|ψ₀⟩^{1/2}`.
    pub avg_std_dev: f64,
    pub ground_energy_curve: Vec<f64>,
    /// `+∞` when the distance is positive but an energy scale vanishes.
    pub t_qsl: f64,
}

fn trapezoid(values: &[f64], dt: f64) -> f64 {
    let n = values.len();
    let inner: f64 = values[1..n - 1].iter().sum();
    (inner + 0.5 * (values[0] + values[n - 1])) * dt
}

/// `t_QSL = 𝓛·max(1/E, 1/ΔE)` from Hamiltonian samples at the grid nodes.
pub fn qsl_time(
    psi0: &CVector,
    tau: &CVector,
    hamiltonians: &[CMatrix],
    grid: &TimeGrid,
) -> Result<QslReport> {
    if hamiltonians.len() != grid.n_nodes() {
        return Err(Error::GridMismatch {
            expected: grid.n_nodes(),
            found: hamiltonians.len(),
        });
    }
    for (name, v) in [("psi0", psi0), ("tau", tau)] {
        if (v.norm() - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidParameter {
                name,
                reason: format!("state must be normalized, norm is {}", v.norm()),
            });
        }
    }
    if psi0.len() != tau.len() {
        return Err(Error::DimensionMismatch {
            expected: psi0.len(),
            found: tau.len(),
        });
    }

    let overlap = psi0.dotc(tau).norm().min(1.0);
    let distance = overlap.acos();

    let mut gap = Vec::with_capacity(hamiltonians.len());
    let mut spread = Vec::with_capacity(hamiltonians.len());
    let mut ground = Vec::with_capacity(hamiltonians.len());
    for h in hamiltonians {
        if check_hermitian(h)? != psi0.len() {
            return Err(Error::DimensionMismatch {
                expected: psi0.len(),
                found: h.nrows(),
            });
        }
        let h_psi = h * psi0;
        let mean = psi0.dotc(&h_psi).re;
        let second = h_psi.norm_squared();
        let eg = hermitian_eigenvalues(h)[0];
        ground.push(eg);
        gap.push(mean - eg);
        spread.push((second - mean * mean).max(0.0).sqrt());
    }
    let t = grid.t_final();
    let avg_energy = trapezoid(&gap, grid.dt()) / t;
    let avg_std_dev = trapezoid(&spread, grid.dt()) / t;

    let t_qsl = if distance == 0.0 {
        0.0
    } else if avg_energy > 0.0 && avg_std_dev > 0.0 {
        distance * (1.0 / avg_energy).max(1.0 / avg_std_dev)
    } else {
        f64::INFINITY
    };

    Ok(QslReport {
        fubini_study_distance: distance,
        avg_energy,
        avg_std_dev,
        ground_energy_curve: ground,
        t_qsl,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::pauli::*;
    use crate::C64;
    use std::f64::consts::FRAC_PI_2;

    fn constant(h: CMatrix, grid: &TimeGrid) -> Vec<CMatrix> {
        vec![h; grid.n_nodes()]
    }

    #[test]
    fn flip_under_sigma_x() {
        let grid = TimeGrid::new(3.0, 300).unwrap();
        let r = qsl_time(&ket(0), &ket(1), &constant(sigma_x(), &grid), &grid).unwrap();
        assert!((r.fubini_study_distance - FRAC_PI_2).abs() < 1e-12);
        assert!((r.avg_energy - 1.0).abs() < 1e-12);
        assert!((r.avg_std_dev - 1.0).abs() < 1e-12);
        assert!((r.t_qsl - FRAC_PI_2).abs() < 1e-10);

        let doubled = constant(sigma_x() * C64::new(2.0, 0.0), &grid);
        let r2 = qsl_time(&ket(0), &ket(1), &doubled, &grid).unwrap();
        assert!((r2.t_qsl - FRAC_PI_2 / 2.0).abs() < 1e-10);
    }

    #[test]
    fn same_state_has_zero_time() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let r = qsl_time(&ket(0), &ket(0), &constant(sigma_x(), &grid), &grid).unwrap();
        assert_eq!(r.fubini_study_distance, 0.0);
        assert_eq!(r.t_qsl, 0.0);
    }

    #[test]
    fn eigenstate_of_constant_hamiltonian_is_unreachable() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        // |1⟩ is the ground state of σ_z: no energy above ground, no spread.
        let r = qsl_time(&ket(1), &ket(0), &constant(sigma_z(), &grid), &grid).unwrap();
        assert_eq!(r.avg_energy, 0.0);
        assert_eq!(r.avg_std_dev, 0.0);
        assert_eq!(r.t_qsl, f64::INFINITY);
    }

    #[test]
    fn length_mismatch() {
        let grid = TimeGrid::new(1.0, 10).unwrap();
        assert!(qsl_time(&ket(0), &ket(1), &[sigma_x()], &grid).is_err());
    }
}
