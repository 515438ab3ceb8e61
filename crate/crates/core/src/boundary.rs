//! Particle bookkeeping after a bulk step and the boundary (Step 2) update.
//!
//! After the bulk particles move, any particle that entered a buffer strip of
//! width `eta` next to an endpoint is removed and its cells are merged into
//! the boundary cell on that side. Interior densities are re-derived from the
//! conserved cell masses. Step 2 then moves `tau * alpha * rho` from each
//! boundary cell into the corresponding boundary mass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{check_ordering, BoundaryMasses, ParticleState};

/// Result of scanning the moved particles for buffer entries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    /// First particle strictly right of `delta + eta`.
    pub i_c: usize,
    /// Last particle strictly left of `1 - delta - eta`.
    pub i_f: usize,
    /// Mass of the cells `1..i_c` folded into the left boundary cell.
    pub removed_left_mass: f64,
    /// Mass of the cells `i_f+1..N` folded into the right boundary cell.
    pub removed_right_mass: f64,
    /// Cell count after compaction, `i_f - i_c + 2`.
    pub new_n_cells: usize,
}

impl MergeReport {
    /// Number of cells lying strictly between the two merged boundary cells.
    pub fn interior_cells(&self) -> usize {
        self.i_f - self.i_c
    }

    pub fn merges(&self, n_cells: usize) -> bool {
        self.i_c > 1 || self.i_f + 1 < n_cells
    }
}

/// Locate the buffer boundaries:
/// `i_c = min{i : x_i > delta + eta}`, `i_f = max{i : x_i < 1 - delta - eta}`.
///
/// Returns [`Error::Absorbed`] when no particle lies outside both buffers.
pub fn detect_buffer(positions: &[f64], delta: f64, eta: f64) -> Result<MergeReport> {
    check_ordering(positions)?;
    let n = positions.len() - 1;
    let left = delta + eta;
    let right = 1.0 - delta - eta;
    let i_c = positions.partition_point(|&x| x <= left);
    let inside = positions.partition_point(|&x| x < right);
    if inside == 0 || i_c + 1 > inside || i_c > n - 1 {
        return Err(Error::Absorbed);
    }
    let i_f = inside - 1;
    Ok(MergeReport {
        i_c,
        i_f,
        removed_left_mass: 0.0,
        removed_right_mass: 0.0,
        new_n_cells: i_f - i_c + 2,
    })
}

/// Remove buffered particles, merge their cells into the boundary cells and
/// update every remaining density from its conserved mass.
///
/// `state` is the step-start state (its densities and reference widths give
/// the cell masses); `new_positions` are the particles after the bulk step.
/// The returned state has reference widths equal to its current widths.
pub fn merge_and_update_densities(
    state: &ParticleState,
    new_positions: &[f64],
    report: &MergeReport,
) -> Result<(ParticleState, MergeReport)> {
    let n = state.n_cells();
    if new_positions.len() != n + 1 {
        return Err(Error::Length(format!(
            "{} moved particles for {} cells",
            new_positions.len(),
            n
        )));
    }
    let (i_c, i_f) = (report.i_c, report.i_f);
    if i_c == 0 || i_c > i_f || i_f >= n {
        return Err(Error::Config(format!("invalid merge indices i_c = {i_c}, i_f = {i_f}")));
    }
    let masses = state.cell_masses();

    let mut positions = Vec::with_capacity(i_f - i_c + 3);
    positions.push(new_positions[0]);
    positions.extend_from_slice(&new_positions[i_c..=i_f]);
    positions.push(new_positions[n]);

    let left_mass: f64 = masses[..i_c].iter().sum();
    let right_mass: f64 = masses[i_f..].iter().sum();
    let mut densities = Vec::with_capacity(positions.len() - 1);
    densities.push(left_mass / (new_positions[i_c] - new_positions[0]));
    densities.extend((i_c..i_f).map(|i| {
        state.cell_densities[i] / ((new_positions[i + 1] - new_positions[i]) / state.ref_widths[i])
    }));
    densities.push(right_mass / (new_positions[n] - new_positions[i_f]));

    let widths: Vec<f64> = positions.windows(2).map(|w| w[1] - w[0]).collect();
    if let Some(k) = widths.iter().position(|w| !(*w > 0.0)) {
        return Err(Error::Inadmissible { index: k + 1 });
    }
    let merged = ParticleState {
        positions,
        cell_densities: densities,
        ref_widths: widths,
    };
    let report = MergeReport {
        removed_left_mass: masses[1..i_c].iter().sum(),
        removed_right_mass: masses[i_f + 1..].iter().sum(),
        new_n_cells: merged.n_cells(),
        ..*report
    };
    Ok((merged, report))
}

/// Explicit Euler update of the boundary ODEs:
/// `a += tau alpha rho_l`, `b += tau alpha rho_r`.
pub fn update_boundary_masses(
    masses: BoundaryMasses,
    rho_l: f64,
    rho_r: f64,
    tau: f64,
    alpha: f64,
) -> BoundaryMasses {
    BoundaryMasses {
        a: masses.a + tau * alpha * rho_l,
        b: masses.b + tau * alpha * rho_r,
    }
}

/// Remove the mass handed to the boundary from the first and last cells:
/// `rho_{1/2} <- (1 - tau alpha / (x_1 - delta)) rho_{1/2}` and symmetrically
/// on the right.
pub fn correct_boundary_densities(state: &mut ParticleState, tau: f64, alpha: f64) -> Result<()> {
    let n = state.n_cells();
    if n < 2 {
        return Err(Error::Length("boundary correction needs at least two cells".into()));
    }
    let flux = tau * alpha;
    let left_width = state.positions[1] - state.positions[0];
    let right_width = state.positions[n] - state.positions[n - 1];
    for width in [left_width, right_width] {
        if flux >= width {
            return Err(Error::StepTooLarge { flux, width });
        }
    }
    state.cell_densities[0] *= 1.0 - flux / left_width;
    state.cell_densities[n - 1] *= 1.0 - flux / right_width;
    Ok(())
}

/// Full Step 2: boundary-mass update from the current boundary-cell densities
/// followed by the matching density correction. Nothing is modified when the
/// step is rejected.
pub fn boundary_step(
    state: &mut ParticleState,
    masses: BoundaryMasses,
    tau: f64,
    alpha: f64,
) -> Result<BoundaryMasses> {
    let n = state.n_cells();
    if n < 2 {
        return Err(Error::Length("boundary step needs at least two cells".into()));
    }
    let rho_l = state.cell_densities[0];
    let rho_r = state.cell_densities[n - 1];
    correct_boundary_densities(state, tau, alpha)?;
    Ok(update_boundary_masses(masses, rho_l, rho_r, tau, alpha))
}
