#![allow(dead_code)]

use lindkrotov::liouville::DensityMatrix;
use lindkrotov::thermal::{density_from_bloch, BlochVector, ThermalModel};
use lindkrotov::{CMatrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(rng: &mut impl Rng, d: usize) -> CMatrix {
    let a = random_matrix(rng, d);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

pub fn random_density(rng: &mut impl Rng, d: usize) -> DensityMatrix {
    let a = random_matrix(rng, d);
    let p = &a * a.adjoint();
    let tr = p.trace();
    DensityMatrix::new(p / tr).unwrap()
}

/// Uniform point inside the Bloch ball.
pub fn random_bloch(rng: &mut impl Rng) -> BlochVector {
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

/// `ω = 2`, `γ = 0.1` and Gibbs excited population `0.4`.
pub fn reference_model() -> ThermalModel {
    let beta = ThermalModel::beta_for_excited_population(2.0, 0.4).unwrap();
    ThermalModel::new(2.0, beta, 0.1).unwrap()
}

pub fn reference_bloch() -> BlochVector {
    BlochVector::new(0.0, -0.38, 0.0)
}

pub fn reference_rho0() -> DensityMatrix {
    DensityMatrix::new(density_from_bloch(&reference_bloch())).unwrap()
}

pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
