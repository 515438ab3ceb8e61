//! Discrepancies between a Lagrangian trajectory and the Eulerian reference.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eulerian::EulerianState;
use crate::state::{BoundaryMasses, ParticleState};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinfErrors {
    /// Max over the interior cells at the final time.
    pub rho: f64,
    /// Max over the time grid.
    pub a: f64,
    pub b: f64,
}

/// Compare the final densities on the interior Lagrangian cells (the two
/// merged boundary cells are excluded) at their midpoints, and the boundary
/// mass histories at every recorded time.
pub fn linf_errors(
    lagrangian: &ParticleState,
    lagrangian_masses: &[BoundaryMasses],
    reference: &EulerianState,
    reference_masses: &[BoundaryMasses],
) -> Result<LinfErrors> {
    if lagrangian_masses.len() != reference_masses.len() {
        return Err(Error::Length(format!(
            "trace lengths {} and {}",
            lagrangian_masses.len(),
            reference_masses.len()
        )));
    }
    let n = lagrangian.n_cells();
    let cells = if n > 2 { 1..n - 1 } else { 0..n };
    let mids: Vec<f64> = cells
        .clone()
        .map(|i| 0.5 * (lagrangian.positions[i] + lagrangian.positions[i + 1]))
        .collect();
    let interp = reference.evaluate_at(&mids)?;
    let rho = cells
        .zip(&interp)
        .map(|(i, r)| (lagrangian.cell_densities[i] - r).abs())
        .fold(0.0, f64::max);
    let (a, b) = lagrangian_masses
        .iter()
        .zip(reference_masses)
        .fold((0.0f64, 0.0f64), |(ea, eb), (p, q)| {
            (ea.max((p.a - q.a).abs()), eb.max((p.b - q.b).abs()))
        });
    Ok(LinfErrors { rho, a, b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SolverConfig;
    use crate::state::build_initial_state;

    #[test]
    fn mismatched_traces_are_rejected() {
        let cfg = SolverConfig::new(0.01);
        let (s, _) = build_initial_state(&cfg).unwrap();
        let e = EulerianState::new(&cfg, 100).unwrap();
        let err = linf_errors(&s, &[BoundaryMasses::default(); 2], &e, &[BoundaryMasses::default()]);
        assert!(matches!(err, Err(Error::Length(_))));
    }

    #[test]
    fn matching_masses_give_zero_mass_errors() {
        let cfg = SolverConfig::new(0.01);
        let (s, _) = build_initial_state(&cfg).unwrap();
        let e = EulerianState::new(&cfg, 4000).unwrap();
        let trace = [BoundaryMasses { a: 0.1, b: 0.2 }; 3];
        let err = linf_errors(&s, &trace, &e, &trace).unwrap();
        assert_eq!((err.a, err.b), (0.0, 0.0));
        // Both sample the same smooth profile.
        assert!(err.rho < 1e-3);
    }
}
