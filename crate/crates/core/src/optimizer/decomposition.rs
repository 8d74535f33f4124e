//! The positive-semidefinite split of `ΔJ` between consecutive iterates.

use super::{left_sum, ControlField, ControlSystem, KrotovIterate};
use crate::{CVector, Error, Result};

/// What the decomposition needs from one iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationSnapshot {
    pub iteration: usize,
    pub field: ControlField,
    pub final_state: CVector,
    pub cost: f64,
    /// `δ` that produced `field.xi`; `None` for the seed.
    pub delta: Option<f64>,
    /// `η` that produced `field.xi_tilde`; `None` for the seed.
    pub eta: Option<f64>,
}

impl IterationSnapshot {
    pub fn capture(it: &KrotovIterate, delta: Option<f64>, eta: Option<f64>) -> Self {
        Self {
            iteration: it.record.iteration,
            field: it.field.clone(),
            final_state: it.state.last().clone(),
            cost: it.record.cost,
            delta,
            eta,
        }
    }
}

/// `2/p − 1`; `None` at `p = 0`, where the update pins the corresponding
/// field difference to zero and the term is dropped.
pub fn penalty_coefficient(p: f64) -> Option<f64> {
    (p != 0.0).then(|| 2.0 / p - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionReport {
    pub iteration: usize,
    /// `⟨Δψ(T)|Q|Δψ(T)⟩`.
    pub projector_term: f64,
    /// `α (2/δ − 1) ∫ (ξ^{k+1} − ξ̃^k)² dt`.
    pub delta_term: f64,
    /// `α (2/η − 1) ∫ (ξ̃^k − ξ^k)² dt`.
    pub eta_term: f64,
    pub delta_coefficient: Option<f64>,
    pub eta_coefficient: Option<f64>,
    /// Sum of the three terms.
    pub predicted: f64,
    /// `J^{k+1} − J^k`.
    pub direct: f64,
    /// `predicted − direct`.
    pub difference: f64,
    /// Largest field magnitude among `ξ^k`, `ξ̃^k`, `ξ^{k+1}`.
    pub field_scale: f64,
    pub all_terms_nonnegative: bool,
}

impl DecompositionReport {
    /// `10·dt·(field scale)²`.
    pub fn tolerance(&self, dt: f64) -> f64 {
        10.0 * dt * self.field_scale * self.field_scale
    }

    pub fn holds(&self, dt: f64) -> bool {
        self.all_terms_nonnegative && self.difference.abs() <= self.tolerance(dt)
    }
}

/// Compares `J^{k+1} − J^k` with its decomposition into non-negative terms.
pub fn delta_j_decomposition(
    system: &ControlSystem,
    prev: &IterationSnapshot,
    next: &IterationSnapshot,
) -> Result<DecompositionReport> {
    if next.iteration != prev.iteration + 1 {
        return Err(Error::Inconsistent(format!(
            "snapshots {} and {} are not consecutive",
            prev.iteration, next.iteration
        )));
    }
    let delta = next
        .delta
        .ok_or_else(|| Error::Inconsistent("later snapshot carries no δ".into()))?;
    let grid = system.grid();
    grid.check_field(&prev.field.xi)?;
    grid.check_field(&next.field.xi)?;
    let dt = grid.dt();
    let alpha = system.alpha();

    let diff = &next.final_state - &prev.final_state;
    let projector_term = system.fidelity(&diff);

    let squared_gap = |a: &[f64], b: &[f64]| -> f64 {
        let sq: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).collect();
        left_sum(&sq, dt)
    };

    let delta_coefficient = penalty_coefficient(delta);
    let delta_term = delta_coefficient
        .map(|c| alpha * c * squared_gap(&next.field.xi, &prev.field.xi_tilde))
        .unwrap_or(0.0);

    // The seed has ξ̃ = ξ, so a missing η only arises where the gap is zero.
    let eta_coefficient = prev.eta.and_then(penalty_coefficient);
    let eta_term = eta_coefficient
        .map(|c| alpha * c * squared_gap(&prev.field.xi_tilde, &prev.field.xi))
        .unwrap_or(0.0);

    let predicted = projector_term + delta_term + eta_term;
    let direct = next.cost - prev.cost;
    let field_scale = prev
        .field
        .max_abs()
        .max(next.field.xi.iter().fold(0.0, |m, x| m.max(x.abs())));

    Ok(DecompositionReport {
        iteration: prev.iteration,
        projector_term,
        delta_term,
        eta_term,
        delta_coefficient,
        eta_coefficient,
        predicted,
        direct,
        difference: predicted - direct,
        field_scale,
        all_terms_nonnegative: projector_term >= 0.0 && delta_term >= 0.0 && eta_term >= 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients() {
        assert_eq!(penalty_coefficient(1.0), Some(1.0));
        assert_eq!(penalty_coefficient(2.0), Some(0.0));
        assert_eq!(penalty_coefficient(0.0), None);
        assert!((penalty_coefficient(1.5).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }
}
