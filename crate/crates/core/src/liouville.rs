//! Dense linear algebra in Liouville space.
//!
//! Density matrices are mapped to vectors by column stacking: entry `(i, j)`
//! of a `d × d` matrix lands at index `j·d + i`. With this ordering
//! `vec(BρC) = (Cᵀ ⊗ B) vec(ρ)`, which every superoperator builder below is
//! checked against.

use nalgebra::{DMatrix, DVector};

use crate::{CMatrix, CVector, Error, Result, C64};

/// Elementwise tolerance for Hermiticity checks.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Tolerance on `|tr ρ − 1|`.
pub const TRACE_TOL: f64 = 1e-12;
/// Smallest admissible eigenvalue of a density matrix.
pub const PSD_TOL: f64 = -1e-10;

const I: C64 = C64::new(0.0, 1.0);

/// Largest elementwise deviation `|m_ij − conj(m_ji)|`.
pub fn hermiticity_error(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

fn check_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub(crate) fn check_hermitian(m: &CMatrix) -> Result<usize> {
    let d = check_square(m)?;
    let err = hermiticity_error(m);
    if err > HERMITIAN_TOL {
        return Err(Error::NotHermitian(err));
    }
    Ok(d)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    // Symmetrize first so roundoff-level asymmetry does not leak in.
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// A `d × d` Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates and wraps a matrix.
    pub fn new(data: CMatrix) -> Result<Self> {
        check_hermitian(&data)?;
        let tr = data.trace();
        if (tr - C64::new(1.0, 0.0)).norm() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = hermitian_eigenvalues(&data)[0];
        if min < PSD_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { data })
    }

    /// Builds `|ψ⟩⟨ψ|` from a normalized pure state.
    pub fn from_pure(psi: &CVector) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            data: CMatrix::identity(dim, dim) * C64::new(1.0 / dim as f64, 0.0),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_matrix(self) -> CMatrix {
        self.data
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.data)[0]
    }

    /// Purity `tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.data * &self.data).trace().re
    }
}

/// A column-stacked `d²`-vector.
#[derive(Debug, Clone, PartialEq)]
pub struct LiouvilleVector {
    data: CVector,
    dim: usize,
}

impl LiouvilleVector {
    pub fn new(data: CVector) -> Result<Self> {
        let len = data.len();
        let dim = (len as f64).sqrt().round() as usize;
        if dim * dim != len || dim == 0 {
            return Err(Error::NotPerfectSquare(len));
        }
        Ok(Self { data, dim })
    }

    pub(crate) fn from_parts(data: CVector, dim: usize) -> Self {
        debug_assert_eq!(data.len(), dim * dim);
        Self { data, dim }
    }

    /// Stacks an arbitrary square matrix.
    pub fn from_matrix(m: &CMatrix) -> Result<Self> {
        let d = check_square(m)?;
        Ok(Self::from_parts(
            CVector::from_column_slice(m.as_slice()),
            d,
        ))
    }

    /// `vec(I_d)`; pairing with it gives the trace.
    pub fn identity(dim: usize) -> Self {
        Self::from_parts(
            CVector::from_column_slice(CMatrix::identity(dim, dim).as_slice()),
            dim,
        )
    }

    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &CVector {
        &self.data
    }

    pub fn into_data(self) -> CVector {
        self.data
    }

    /// Inverse of column stacking.
    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_column_slice(self.dim, self.dim, self.data.as_slice())
    }

    /// `tr` of the unstacked matrix.
    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.data[i * self.dim + i]).sum()
    }
}

/// Column-stacks a density matrix.
pub fn vec(rho: &DensityMatrix) -> LiouvilleVector {
    LiouvilleVector::from_parts(
        CVector::from_column_slice(rho.matrix().as_slice()),
        rho.dim(),
    )
}

/// Inverse of [`vec`] on arbitrary vectors.
pub fn unvec(v: &LiouvilleVector) -> CMatrix {
    v.to_matrix()
}

/// `⟨⟨a|b⟩⟩ = tr(a† b)`.
pub fn liouville_inner(a: &LiouvilleVector, b: &LiouvilleVector) -> Result<C64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            found: b.dim,
        });
    }
    Ok(a.data.dotc(&b.data))
}

/// `I ⊗ H − Hᵀ ⊗ I`, the superoperator of `ρ ↦ [H, ρ]`.
pub fn commutator_superop(h: &CMatrix) -> Result<CMatrix> {
    let d = check_hermitian(h)?;
    let id = CMatrix::identity(d, d);
    Ok(id.kronecker(h) - h.transpose().kronecker(&id))
}

/// `Σ_k L̄_k ⊗ L_k − ½(I ⊗ L_k†L_k + (L_k†L_k)ᵀ ⊗ I)`.
///
/// This is the superoperator of `ρ ↦ Σ_k L_k ρ L_k† − ½{L_k†L_k, ρ}`. The
/// operators are expected to carry their rates already (`√γ_k L_k`).
pub fn dissipator_superop(lindblad_ops: &[CMatrix], dim: usize) -> Result<CMatrix> {
    let id = CMatrix::identity(dim, dim);
    let mut acc = CMatrix::zeros(dim * dim, dim * dim);
    for l in lindblad_ops {
        let d = check_square(l)?;
        if d != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: d,
            });
        }
        let ldl = l.adjoint() * l;
        acc += l.conjugate().kronecker(l);
        acc -= (id.kronecker(&ldl) + ldl.transpose().kronecker(&id)) * C64::new(0.5, 0.0);
    }
    Ok(acc)
}

/// The Liouville-space generator `A(ξ) = drift + ξ·control + dissipator`.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    /// Commutator superoperator of `H₀`.
    pub drift_commutator: CMatrix,
    /// Commutator superoperator `M` of the control operator `μ′`.
    pub control_superop: CMatrix,
    /// `i` times the dissipator superoperator.
    pub dissipator: CMatrix,
    dim: usize,
}

impl Liouvillian {
    /// Hilbert-space dimension `d`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `A(ξ)`.
    pub fn assemble(&self, xi: f64) -> CMatrix {
        &self.drift_commutator + &self.dissipator + &self.control_superop * C64::new(xi, 0.0)
    }

    /// `A(0)`: drift commutator plus dissipator.
    pub fn field_free(&self) -> CMatrix {
        &self.drift_commutator + &self.dissipator
    }

    /// `G(ξ) = −i A(ξ)`, so that `d|ψ⟩⟩/dt = G|ψ⟩⟩`.
    pub fn generator(&self, xi: f64) -> CMatrix {
        self.assemble(xi) * (-I)
    }
}

/// Assembles the Liouvillian of `H₀ + ξ μ′` with the given Lindblad operators.
pub fn build_liouvillian(
    h0: &CMatrix,
    mu_prime: &CMatrix,
    lindblad_ops: &[CMatrix],
) -> Result<Liouvillian> {
    let d = check_hermitian(h0)?;
    let dm = check_hermitian(mu_prime)?;
    if dm != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: dm,
        });
    }
    Ok(Liouvillian {
        drift_commutator: commutator_superop(h0)?,
        control_superop: commutator_superop(mu_prime)?,
        dissipator: dissipator_superop(lindblad_ops, d)? * I,
        dim: d,
    })
}

/// Splits `A = X + iY` into Hermitian `X = (A + A†)/2` and `Y = (A − A†)/(2i)`.
pub fn hermitian_split(a: &CMatrix) -> (CMatrix, CMatrix) {
    let adj = a.adjoint();
    let x = (a + &adj) * C64::new(0.5, 0.0);
    let y = (a - &adj) * C64::new(0.0, -0.5);
    (x, y)
}

/// Single-qubit operators in the basis where `σ_z|0⟩ = +|0⟩`.
pub mod pauli {
    use super::*;

    fn m2(a: [[C64; 2]; 2]) -> CMatrix {
        DMatrix::from_fn(2, 2, |i, j| a[i][j])
    }

    const Z: C64 = C64::new(0.0, 0.0);
    const O: C64 = C64::new(1.0, 0.0);

    pub fn identity() -> CMatrix {
        CMatrix::identity(2, 2)
    }

    pub fn sigma_x() -> CMatrix {
        m2([[Z, O], [O, Z]])
    }

    pub fn sigma_y() -> CMatrix {
        m2([[Z, -I], [I, Z]])
    }

    pub fn sigma_z() -> CMatrix {
        m2([[O, Z], [Z, -O]])
    }

    /// Raising operator `|0⟩⟨1|`.
    pub fn sigma_plus() -> CMatrix {
        m2([[Z, O], [Z, Z]])
    }

    /// Lowering operator `|1⟩⟨0|`.
    pub fn sigma_minus() -> CMatrix {
        m2([[Z, Z], [O, Z]])
    }

    /// Computational basis ket `|k⟩` in dimension 2.
    pub fn ket(k: usize) -> CVector {
        let mut v = DVector::zeros(2);
        v[k] = O;
        v
    }
}
