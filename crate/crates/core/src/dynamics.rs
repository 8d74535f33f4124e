//! Time propagation: forward states, backward costates and a direct
//! density-matrix integrator used as an oracle.
//!
//! The control field is sampled at the `N + 1` grid nodes and held constant
//! on each interval at its left-node value, so interval `n` evolves under the
//! frozen generator `G(ξ_n) = −i A(ξ_n)`. Each step applies `exp(G dt)` to
//! the state through a truncated Taylor series with sub-stepping; the
//! exponential itself is never formed.

use crate::liouville::{check_hermitian, LiouvilleVector, Liouvillian};
use crate::{CMatrix, CVector, Error, Result, C64};

const I: C64 = C64::new(0.0, 1.0);

/// Largest scaled norm handled by one Taylor sub-step.
const TAYLOR_THETA: f64 = 0.5;
const TAYLOR_MAX_TERMS: usize = 40;

/// Uniform grid `t_n = n·dt`, `n = 0..=N`, over `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_final: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_final: f64, n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidGrid("need at least one step".into()));
        }
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "final time must be positive and finite, got {t_final}"
            )));
        }
        Ok(Self { t_final, n_steps })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn n_nodes(&self) -> usize {
        self.n_steps + 1
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        if n == self.n_steps {
            self.t_final
        } else {
            n as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|n| self.time(n)).collect()
    }

    pub(crate) fn check_field(&self, field: &[f64]) -> Result<()> {
        if field.len() != self.n_nodes() {
            return Err(Error::GridMismatch {
                expected: self.n_nodes(),
                found: field.len(),
            });
        }
        Ok(())
    }
}

/// States at every grid node, indexed forward in time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<CVector>,
    pub grid: TimeGrid,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn first(&self) -> &CVector {
        &self.states[0]
    }

    pub fn last(&self) -> &CVector {
        &self.states[self.states.len() - 1]
    }

    /// Node `n` as a Liouville vector; fails if the state length is not a
    /// perfect square.
    pub fn liouville_state(&self, n: usize) -> Result<LiouvilleVector> {
        LiouvilleVector::new(self.states[n].clone())
    }

    /// Node `n` unstacked into a `d × d` matrix.
    pub fn density(&self, n: usize) -> Result<CMatrix> {
        Ok(self.liouville_state(n)?.to_matrix())
    }
}

/// Scratch buffers for the Taylor actions.
#[derive(Debug, Default)]
pub(crate) struct Workspace {
    a: Vec<C64>,
    b: Vec<C64>,
    c: Vec<C64>,
    d: Vec<C64>,
    e: Vec<C64>,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        let z = C64::new(0.0, 0.0);
        Self {
            a: vec![z; n],
            b: vec![z; n],
            c: vec![z; n],
            d: vec![z; n],
            e: vec![z; n],
        }
    }
}

fn inf_norm(v: &[C64]) -> f64 {
    v.iter()
        .map(|z| z.re.abs().max(z.im.abs()))
        .fold(0.0, f64::max)
}

fn one_norm(m: &CMatrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `G(ξ) = G₀ + ξ G_M`, stored column-major with cached 1-norms.
#[derive(Debug, Clone)]
pub(crate) struct SplitGenerator {
    n: usize,
    g0: Vec<C64>,
    gm: Vec<C64>,
    norm0: f64,
    norm_m: f64,
}

impl SplitGenerator {
    pub(crate) fn new(g0: &CMatrix, gm: &CMatrix) -> Self {
        debug_assert_eq!(g0.shape(), gm.shape());
        Self {
            n: g0.nrows(),
            g0: g0.as_slice().to_vec(),
            gm: gm.as_slice().to_vec(),
            norm0: one_norm(g0),
            norm_m: one_norm(gm),
        }
    }

    /// Generator of the adjoint (costate) evolution, `G(ξ)†`.
    pub(crate) fn adjoint(&self) -> Self {
        let g0 = CMatrix::from_column_slice(self.n, self.n, &self.g0).adjoint();
        let gm = CMatrix::from_column_slice(self.n, self.n, &self.gm).adjoint();
        Self::new(&g0, &gm)
    }

    pub(crate) fn dim(&self) -> usize {
        self.n
    }

    fn norm_at(&self, xi: f64) -> f64 {
        self.norm0 + xi.abs() * self.norm_m
    }

    /// `out = scale·G(ξ)·v`.
    #[inline]
    fn apply(&self, out: &mut [C64], v: &[C64], xi: f64, scale: f64) {
        let n = self.n;
        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for (j, &vj) in v.iter().enumerate() {
            if vj.re == 0.0 && vj.im == 0.0 {
                continue;
            }
            let col0 = &self.g0[j * n..(j + 1) * n];
            let colm = &self.gm[j * n..(j + 1) * n];
            let a = vj * scale;
            let b = vj * (scale * xi);
            for i in 0..n {
                out[i] += col0[i] * a + colm[i] * b;
            }
        }
    }

    /// One block Taylor term:
    /// `nu = k·(G(x)·tu + G_M·tw)`, `nw = k·G(y)·tw`.
    #[inline]
    #[allow(clippy::too_many_arguments)]
    fn apply_block(
        &self,
        nu: &mut [C64],
        nw: &mut [C64],
        tu: &[C64],
        tw: &[C64],
        x: f64,
        y: f64,
        k: f64,
    ) {
        let n = self.n;
        let zero = C64::new(0.0, 0.0);
        nu.iter_mut().for_each(|z| *z = zero);
        nw.iter_mut().for_each(|z| *z = zero);
        for j in 0..n {
            let col0 = &self.g0[j * n..(j + 1) * n];
            let colm = &self.gm[j * n..(j + 1) * n];
            let (u, w) = (tu[j] * k, tw[j] * k);
            let (ux, wy) = (u * x, w * y);
            for i in 0..n {
                let (a, b) = (col0[i], colm[i]);
                nu[i] += a * u + b * (ux + w);
                nw[i] += a * w + b * wy;
            }
        }
    }

    fn substeps(theta: f64) -> usize {
        ((theta / TAYLOR_THETA).ceil() as usize).max(1)
    }

    /// In place `v ← exp(G(ξ)·dt) v`.
    pub(crate) fn expm_action(&self, v: &mut [C64], xi: f64, dt: f64, ws: &mut Workspace) {
        let s = Self::substeps(self.norm_at(xi) * dt);
        let h = dt / s as f64;
        let (mut term, mut next): (&mut [C64], &mut [C64]) =
            (&mut ws.a[..self.n], &mut ws.b[..self.n]);
        for _ in 0..s {
            term.copy_from_slice(v);
            for m in 1..=TAYLOR_MAX_TERMS {
                self.apply(next, term, xi, h / m as f64);
                std::mem::swap(&mut term, &mut next);
                for (vi, ti) in v.iter_mut().zip(term.iter()) {
                    *vi += *ti;
                }
                let tn = inf_norm(term);
                if tn == 0.0 || tn <= 1e-17 * inf_norm(v) {
                    break;
                }
            }
        }
    }

    /// Divided difference `[exp(G(x)dt) − exp(G(y)dt)]/(x − y)` applied to
    /// `v`, computed from the block exponential
    /// `exp([[G(x)dt, G_M dt], [0, G(y)dt]])` acting on `(0, v)`; the limit
    /// `x = y` is the field derivative of the step propagator.
    pub(crate) fn divided_difference_action(
        &self,
        x: f64,
        y: f64,
        v: &[C64],
        dt: f64,
        out: &mut [C64],
        ws: &mut Workspace,
    ) {
        let n = self.n;
        let theta = (self.norm_at(x).max(self.norm_at(y)) + self.norm_m) * dt;
        let s = Self::substeps(theta);
        let h = dt / s as f64;

        out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        let Workspace { a, b, c, d, e } = ws;
        let w = &mut e[..n];
        w.copy_from_slice(v);
        let (mut tu, mut tw, mut nu, mut nw): (&mut [C64], &mut [C64], &mut [C64], &mut [C64]) =
            (&mut a[..n], &mut b[..n], &mut c[..n], &mut d[..n]);
        for _ in 0..s {
            tu.copy_from_slice(out);
            tw.copy_from_slice(w);
            for m in 1..=TAYLOR_MAX_TERMS {
                self.apply_block(nu, nw, tu, tw, x, y, h / m as f64);
                std::mem::swap(&mut tu, &mut nu);
                std::mem::swap(&mut tw, &mut nw);
                for i in 0..n {
                    out[i] += tu[i];
                    w[i] += tw[i];
                }
                let tn = inf_norm(tu).max(inf_norm(tw));
                if tn == 0.0 || tn <= 1e-17 * inf_norm(out).max(inf_norm(w)) {
                    break;
                }
            }
        }
    }

    /// Forward propagation with left-node field samples.
    pub(crate) fn propagate(&self, field: &[f64], v0: &CVector, grid: &TimeGrid) -> Vec<CVector> {
        let dt = grid.dt();
        let mut ws = Workspace::new(self.n);
        let mut states = Vec::with_capacity(grid.n_nodes());
        let mut v = v0.clone();
        states.push(v.clone());
        for &xi in &field[..grid.n_steps()] {
            self.expm_action(v.as_mut_slice(), xi, dt, &mut ws);
            states.push(v.clone());
        }
        states
    }

    /// Backward propagation from `v_final` at `t = T`; interval `n` uses
    /// `field[n]`. `self` must already be the adjoint generator.
    pub(crate) fn propagate_back(
        &self,
        field: &[f64],
        v_final: &CVector,
        grid: &TimeGrid,
    ) -> Vec<CVector> {
        let dt = grid.dt();
        let mut ws = Workspace::new(self.n);
        let mut states = vec![v_final.clone(); grid.n_nodes()];
        let mut v = v_final.clone();
        for n in (0..grid.n_steps()).rev() {
            self.expm_action(v.as_mut_slice(), field[n], dt, &mut ws);
            states[n] = v.clone();
        }
        states
    }
}

fn liouvillian_generator(l: &Liouvillian) -> SplitGenerator {
    SplitGenerator::new(&(l.field_free() * (-I)), &(&l.control_superop * (-I)))
}

fn check_state(l: &Liouvillian, v: &LiouvilleVector) -> Result<()> {
    if v.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            found: v.dim(),
        });
    }
    Ok(())
}

/// Integrates `i d|ψ⟩⟩/dt = A(ξ(t))|ψ⟩⟩` forward from `psi0`.
pub fn propagate_state(
    liouvillian: &Liouvillian,
    field: &[f64],
    psi0: &LiouvilleVector,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    grid.check_field(field)?;
    check_state(liouvillian, psi0)?;
    let states = liouvillian_generator(liouvillian).propagate(field, psi0.data(), grid);
    Ok(Trajectory {
        states,
        grid: *grid,
    })
}

/// Integrates `i d|χ⟩⟩/dt = A†(ξ(t))|χ⟩⟩` backward from `chi_final` at `T`.
///
/// The step from node `n + 1` to `n` applies `exp(+i A†(ξ_n) dt)`, the
/// adjoint of the forward step, so `⟨⟨χ(t_n)|ψ(t_n)⟩⟩` is conserved when
/// both see the same field.
pub fn propagate_costate(
    liouvillian: &Liouvillian,
    field: &[f64],
    chi_final: &LiouvilleVector,
    grid: &TimeGrid,
) -> Result<Trajectory> {
    grid.check_field(field)?;
    check_state(liouvillian, chi_final)?;
    let states =
        liouvillian_generator(liouvillian)
            .adjoint()
            .propagate_back(field, chi_final.data(), grid);
    Ok(Trajectory {
        states,
        grid: *grid,
    })
}

/// Right-hand side of the matrix GLKS equation,
/// `−i[H, ρ] + Σ_k (L_k ρ L_k† − ½{L_k†L_k, ρ})`.
fn glks_rhs(h: &CMatrix, ops: &[(CMatrix, CMatrix, CMatrix)], rho: &CMatrix) -> CMatrix {
    let mut out = (h * rho - rho * h) * (-I);
    for (l, l_dag, ldl) in ops {
        out += l * rho * l_dag - (ldl * rho + rho * ldl) * C64::new(0.5, 0.0);
    }
    out
}

/// Classical fourth-order Runge–Kutta on the `d × d` density matrix, one
/// step per interval with the left-node field. Independent of the
/// vectorized pipeline; used to validate it.
pub fn propagate_density_direct(
    h0: &CMatrix,
    mu_prime: &CMatrix,
    lindblad_ops: &[CMatrix],
    field: &[f64],
    rho0: &crate::liouville::DensityMatrix,
    grid: &TimeGrid,
) -> Result<Vec<CMatrix>> {
    let d = check_hermitian(h0)?;
    if check_hermitian(mu_prime)? != d || rho0.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: if mu_prime.nrows() != d {
                mu_prime.nrows()
            } else {
                rho0.dim()
            },
        });
    }
    for l in lindblad_ops {
        if l.shape() != (d, d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: l.nrows(),
            });
        }
    }
    grid.check_field(field)?;

    let ops: Vec<_> = lindblad_ops
        .iter()
        .map(|l| (l.clone(), l.adjoint(), l.adjoint() * l))
        .collect();
    let dt = grid.dt();
    let half = C64::new(dt / 2.0, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);

    let mut out = Vec::with_capacity(grid.n_nodes());
    let mut rho = rho0.matrix().clone();
    out.push(rho.clone());
    for &xi in &field[..grid.n_steps()] {
        let h = h0 + mu_prime * C64::new(xi, 0.0);
        let k1 = glks_rhs(&h, &ops, &rho);
        let k2 = glks_rhs(&h, &ops, &(&rho + &k1 * half));
        let k3 = glks_rhs(&h, &ops, &(&rho + &k2 * half));
        let k4 = glks_rhs(&h, &ops, &(&rho + &k3 * full));
        rho += (k1 + k2 * two + k3 * two + k4) * sixth;
        out.push(rho.clone());
    }
    Ok(out)
}
