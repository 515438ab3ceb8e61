//! Particle state of the Lagrangian solver and the boundary masses.

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::error::{Error, Result};

/// Ordered Lagrangian grid points with one density per cell.
///
/// `positions[0] == delta` and `positions[N] == 1 - delta` are pinned; cell
/// `i` spans `[positions[i], positions[i + 1]]`. `ref_widths` holds the
/// widths at the start of the current step and fixes the conserved cell
/// masses `cell_densities[i] * ref_widths[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParticleState {
    pub positions: Vec<f64>,
    pub cell_densities: Vec<f64>,
    pub ref_widths: Vec<f64>,
}

impl ParticleState {
    /// Build a state whose reference widths are the current widths.
    pub fn from_positions(positions: Vec<f64>, cell_densities: Vec<f64>) -> Result<Self> {
        if positions.len() < 2 || cell_densities.len() + 1 != positions.len() {
            return Err(Error::Length(format!(
                "{} positions and {} densities",
                positions.len(),
                cell_densities.len()
            )));
        }
        let ref_widths = positions.windows(2).map(|w| w[1] - w[0]).collect();
        let state = Self {
            positions,
            cell_densities,
            ref_widths,
        };
        state.check_ordering()?;
        Ok(state)
    }

    pub fn n_cells(&self) -> usize {
        self.cell_densities.len()
    }

    pub fn widths(&self) -> impl Iterator<Item = f64> + '_ {
        self.positions.windows(2).map(|w| w[1] - w[0])
    }

    /// Conserved masses `rho_{i+1/2} h_i` carried through a bulk step.
    pub fn cell_masses(&self) -> Vec<f64> {
        self.cell_densities
            .iter()
            .zip(&self.ref_widths)
            .map(|(r, h)| r * h)
            .collect()
    }

    /// Mass of the piecewise-constant reconstruction on the current positions.
    pub fn bulk_mass(&self) -> f64 {
        self.cell_densities
            .iter()
            .zip(self.widths())
            .map(|(r, w)| r * w)
            .sum()
    }

    pub fn delta(&self) -> f64 {
        self.positions[0]
    }

    pub fn check_ordering(&self) -> Result<()> {
        check_ordering(&self.positions)
    }

    /// Check every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let n = self.n_cells();
        if self.positions.len() != n + 1 || self.ref_widths.len() != n {
            return Err(Error::Length(format!(
                "{} positions, {} densities, {} reference widths",
                self.positions.len(),
                n,
                self.ref_widths.len()
            )));
        }
        self.check_ordering()?;
        if let Some(i) = self.cell_densities.iter().position(|r| !(*r >= 0.0)) {
            return Err(Error::NonFinite(if self.cell_densities[i].is_nan() {
                "cell density"
            } else {
                "negative cell density"
            }));
        }
        if self.ref_widths.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::NonFinite("reference width"));
        }
        Ok(())
    }
}

pub fn check_ordering(positions: &[f64]) -> Result<()> {
    for (i, w) in positions.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::Inadmissible { index: i + 1 });
        }
    }
    Ok(())
}

/// Probability absorbed near `x = 0` (`a`) and near `x = 1` (`b`).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMasses {
    pub a: f64,
    pub b: f64,
}

impl BoundaryMasses {
    pub fn total(&self) -> f64 {
        self.a + self.b
    }
}

/// Piecewise-constant density on arbitrary cells plus the boundary masses.
/// Both solvers expose their state through this view for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct DensityField<'a> {
    pub edges: &'a [f64],
    pub densities: &'a [f64],
    pub masses: BoundaryMasses,
    pub delta: f64,
}

impl<'a> DensityField<'a> {
    pub fn from_particles(state: &'a ParticleState, masses: BoundaryMasses) -> Self {
        Self {
            edges: &state.positions,
            densities: &state.cell_densities,
            masses,
            delta: state.delta(),
        }
    }

    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.edges
            .windows(2)
            .zip(self.densities)
            .map(|(w, &r)| (w[0], w[1], r))
    }
}

/// Equidistant particles with midpoint densities, `a = b = 0`.
pub fn build_initial_state(config: &SolverConfig) -> Result<(ParticleState, BoundaryMasses)> {
    config.validate()?;
    let n = config.n_particles;
    let delta = config.delta;
    let h = config.initial_spacing();
    let mut positions: Vec<f64> = (0..=n).map(|i| delta + i as f64 * h).collect();
    positions[n] = 1.0 - delta;
    let cell_densities = (0..n)
        .map(|i| config.initial_density.eval(delta + (i as f64 + 0.5) * h, delta))
        .collect::<Result<Vec<_>>>()?;
    let state = ParticleState::from_positions(positions, cell_densities)?;
    Ok((state, BoundaryMasses::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::InitialDensity;
    use proptest::prelude::*;

    #[test]
    fn two_cell_grid() {
        let mut cfg = SolverConfig::new(0.25);
        cfg.n_particles = 2;
        cfg.eta = 0.0;
        let (s, m) = build_initial_state(&cfg).unwrap();
        assert_eq!(s.positions, vec![0.25, 0.5, 0.75]);
        assert_eq!(s.ref_widths, vec![0.25, 0.25]);
        assert_eq!(m, BoundaryMasses::default());
    }

    #[test]
    fn fig1_spacing() {
        let cfg = SolverConfig::new(0.01);
        let (s, _) = build_initial_state(&cfg).unwrap();
        assert_eq!(s.n_cells(), 150);
        for w in s.widths() {
            assert!((w - 0.98 / 150.0).abs() < 1e-15);
        }
    }

    #[test]
    fn validate_flags_bad_states() {
        let s = ParticleState {
            positions: vec![0.1, 0.5, 0.4, 0.9],
            cell_densities: vec![1.0; 3],
            ref_widths: vec![0.4, 0.1, 0.5],
        };
        assert_eq!(s.validate(), Err(Error::Inadmissible { index: 2 }));
        let s = ParticleState::from_positions(vec![0.1, 0.5, 0.9], vec![1.0, -1.0]).unwrap();
        assert!(s.validate().is_err());
    }

    proptest! {
        #[test]
        fn initial_state_is_admissible(
            delta in 1e-4f64..0.45,
            n in 2usize..400,
            which in 0u8..2,
        ) {
            let mut cfg = SolverConfig::new(delta);
            cfg.n_particles = n;
            cfg.eta = 0.0;
            cfg.initial_density = if which == 0 { InitialDensity::Rho1 } else { InitialDensity::Rho2 };
            let (s, m) = build_initial_state(&cfg).unwrap();
            prop_assert!(s.validate().is_ok());
            prop_assert_eq!(s.positions[0], delta);
            prop_assert_eq!(s.positions[n], 1.0 - delta);
            prop_assert!(s.cell_densities.iter().all(|&r| r > 0.0));
            let total: f64 = s.ref_widths.iter().sum();
            prop_assert!((total - (1.0 - 2.0 * delta)).abs() < 1e-12);
            prop_assert_eq!(m.total(), 0.0);
        }
    }
}
