//! Conserved quantities and energies of a piecewise-constant density with
//! boundary masses.

use serde::{Deserialize, Serialize};

use crate::state::DensityField;

/// One row of the time-series output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    #[serde(rename = "mass")]
    pub total_mass: f64,
    #[serde(rename = "M1")]
    pub first_moment: f64,
    #[serde(rename = "E_bulk")]
    pub bulk_energy: f64,
    #[serde(rename = "E_whole")]
    pub whole_energy: f64,
    /// Current number of cells.
    #[serde(rename = "N")]
    pub n_particles: usize,
    pub a: f64,
    pub b: f64,
}

impl DiagnosticsRecord {
    pub fn from_field(t: f64, field: &DensityField<'_>) -> Self {
        Self {
            t,
            total_mass: total_mass(field),
            first_moment: first_moment(field),
            bulk_energy: bulk_energy(field),
            whole_energy: whole_domain_energy(field),
            n_particles: field.densities.len(),
            a: field.masses.a,
            b: field.masses.b,
        }
    }
}

/// `a + sum_i rho_i (x_{i+1} - x_i) + b`.
pub fn total_mass(field: &DensityField<'_>) -> f64 {
    let bulk: f64 = field.cells().map(|(l, r, rho)| rho * (r - l)).sum();
    field.masses.a + bulk + field.masses.b
}

/// `(delta/2) a + sum_i rho_i m_i (x_{i+1} - x_i) + (1 - delta/2) b`, with
/// `m_i` the cell midpoint.
pub fn first_moment(field: &DensityField<'_>) -> f64 {
    let d = field.delta;
    let bulk: f64 = field
        .cells()
        .map(|(l, r, rho)| rho * 0.5 * (l + r) * (r - l))
        .sum();
    0.5 * d * field.masses.a + bulk + (1.0 - 0.5 * d) * field.masses.b
}

/// `x log x` with `0 log 0 = 0`.
#[inline]
pub fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Antiderivative of `log(x(1-x))` on `[0, 1]`.
#[inline]
pub fn log_potential_antiderivative(x: f64) -> f64 {
    xlogx(x) - x - xlogx(1.0 - x) + (1.0 - x)
}

/// `int_0^delta log(x(1-x)) dx`, equal to the integral over `(1 - delta, 1)`.
pub fn boundary_potential_integral(delta: f64) -> f64 {
    xlogx(delta) - 2.0 * delta - xlogx(1.0 - delta)
}

/// Discrete bulk free energy with the trapezoidal potential,
/// `sum_i rho_i w_i [ (V(x_i) + V(x_{i+1}))/2 + log rho_i ]`.
///
/// Coincides with the Lagrangian energy when the reference widths equal the
/// current widths, i.e. at the start of every step.
pub fn bulk_energy(field: &DensityField<'_>) -> f64 {
    let pot = |x: f64| (x * (1.0 - x)).ln();
    field
        .cells()
        .map(|(l, r, rho)| {
            let w = r - l;
            rho * w * 0.5 * (pot(l) + pot(r)) + xlogx(rho) * w
        })
        .sum()
}

/// Energy of the whole system with boundary masses spread uniformly over
/// `[0, delta)` and `(1 - delta, 1]`:
///
/// `int_0^delta (a/delta) log((a/delta) x(1-x)) + int rho log(rho x(1-x)) + (b term)`.
///
/// Every integral of the potential is evaluated in closed form.
pub fn whole_domain_energy(field: &DensityField<'_>) -> f64 {
    let d = field.delta;
    let pot_int = boundary_potential_integral(d);
    let edge = |m: f64| {
        if m == 0.0 {
            0.0
        } else {
            m * (m / d).ln() + (m / d) * pot_int
        }
    };
    let bulk: f64 = field
        .cells()
        .map(|(l, r, rho)| {
            let w = r - l;
            let pot = log_potential_antiderivative(r) - log_potential_antiderivative(l);
            xlogx(rho) * w + rho * pot
        })
        .sum();
    edge(field.masses.a) + bulk + edge(field.masses.b)
}
