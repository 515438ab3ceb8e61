//! Step 1 of the splitting: implicit Lagrangian transport of the bulk
//! particles under the no-flux problem.
//!
//! Two time discretizations of the discrete force balance are provided:
//!
//! * variant B (default) treats the mobility `x(1-x)` implicitly after
//!   multiplying the force balance through by it. Its residual is driven to
//!   zero with a diagonally scaled Barzilai-Borwein iteration.
//! * variant A keeps the mobility explicit, which makes each step the
//!   minimizer of a strictly convex (for small `tau`) objective. It is solved
//!   with a damped Newton method on the tridiagonal Hessian.
//!
//! All routines take the step-start [`ParticleState`] as the reference
//! configuration: `X_i = positions[i]`, conserved masses
//! `m_i = rho_{i+1/2} h_i`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{check_ordering, ParticleState};
use crate::tridiag;

/// Maximum number of step halvings used to keep iterates strictly ordered.
pub const MAX_HALVINGS: usize = 60;

/// Step length used by the BB iteration when the curvature estimate is not positive.
const BB_FALLBACK_STEP: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum BulkScheme {
    /// Explicit mobility, energy-minimizing step.
    A,
    /// Implicit mobility, fixed-point (BB) step.
    #[default]
    B,
}

impl BulkScheme {
    pub fn step(&self, state: &ParticleState, tau: f64, tol: f64, max_iter: usize) -> Result<BulkSolution> {
        match self {
            BulkScheme::A => step_implicit_a(state, tau, tol, max_iter),
            BulkScheme::B => step_implicit_b(state, tau, tol, max_iter),
        }
    }
}

/// Converged positions of one bulk step.
#[derive(Debug, Clone, PartialEq)]
pub struct BulkSolution {
    pub positions: Vec<f64>,
    pub iterations: usize,
    /// Infinity norm of the residual (B) or objective gradient (A) at `positions`.
    pub residual: f64,
}

#[inline]
fn potential(x: f64) -> f64 {
    (x * (1.0 - x)).ln()
}

fn check_candidate(candidate: &[f64], state: &ParticleState) -> Result<()> {
    if candidate.len() != state.positions.len() {
        return Err(Error::Length(format!(
            "candidate has {} points, state has {}",
            candidate.len(),
            state.positions.len()
        )));
    }
    check_ordering(candidate)
}

/// `m_i log(m_i / w)` with the `0 log 0 = 0` convention.
#[inline]
fn entropy_term(mass: f64, width: f64) -> f64 {
    if mass == 0.0 {
        0.0
    } else {
        mass * (mass / width).ln()
    }
}

/// Discrete bulk free energy at the state's own positions.
pub fn discrete_free_energy(state: &ParticleState) -> Result<f64> {
    free_energy_at(&state.positions, state)
}

/// Discrete bulk free energy of the particle configuration `candidate`,
/// using the reference densities and widths of `state`:
///
/// `sum_i m_i [ (V(y_i) + V(y_{i+1}))/2 + log(m_i / (y_{i+1} - y_i)) ]`,
/// `V(x) = log(x(1-x))`.
pub fn free_energy_at(candidate: &[f64], state: &ParticleState) -> Result<f64> {
    check_candidate(candidate, state)?;
    let masses = state.cell_masses();
    let mut total = 0.0;
    let mut v_left = potential(candidate[0]);
    for (i, &m) in masses.iter().enumerate() {
        let v_right = potential(candidate[i + 1]);
        let width = candidate[i + 1] - candidate[i];
        total += m * 0.5 * (v_left + v_right) + entropy_term(m, width);
        v_left = v_right;
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("discrete free energy"));
    }
    Ok(total)
}

/// Discrete dissipation `1/2 sum_i 1/2 rho_i [v_i^2/(x_i(1-x_i)) + v_{i+1}^2/(x_{i+1}(1-x_{i+1}))] h_i`.
pub fn discrete_dissipation(state: &ParticleState, velocities: &[f64]) -> Result<f64> {
    let x = &state.positions;
    if velocities.len() != x.len() {
        return Err(Error::Length(format!(
            "{} velocities for {} particles",
            velocities.len(),
            x.len()
        )));
    }
    let n = state.n_cells();
    if velocities[0] != 0.0 || velocities[n] != 0.0 {
        return Err(Error::Config("endpoint velocities must vanish".into()));
    }
    let weight = |i: usize| velocities[i] * velocities[i] / (x[i] * (1.0 - x[i]));
    let sum: f64 = state
        .cell_masses()
        .iter()
        .enumerate()
        .map(|(i, m)| 0.5 * m * (weight(i) + weight(i + 1)))
        .sum();
    Ok(0.5 * sum)
}

/// Mass flux term `m / width`, vanishing for empty cells.
#[inline]
fn pressure(mass: f64, width: f64) -> f64 {
    if mass == 0.0 {
        0.0
    } else {
        mass / width
    }
}

/// Residual of the variant-B step at the interior particles `1..N-1`:
///
/// `mbar_i ((y_i - X_i)/tau + 1 - 2 y_i) - [m_{i-1}/(y_i - y_{i-1}) - m_i/(y_{i+1} - y_i)] y_i (1 - y_i)`
///
/// with `mbar_i = (m_{i-1} + m_i)/2`. The returned vector has length `N - 1`.
pub fn force_residual_b(candidate: &[f64], state: &ParticleState, tau: f64) -> Result<Vec<f64>> {
    check_candidate(candidate, state)?;
    let masses = state.cell_masses();
    Ok(residual_b_unchecked(candidate, &state.positions, &masses, tau))
}

fn residual_b_unchecked(y: &[f64], reference: &[f64], masses: &[f64], tau: f64) -> Vec<f64> {
    let n = masses.len();
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    let mut p_left = pressure(masses[0], y[1] - y[0]);
    for i in 1..n {
        let p_right = pressure(masses[i], y[i + 1] - y[i]);
        let mbar = 0.5 * (masses[i - 1] + masses[i]);
        let yi = y[i];
        let drift = mbar * ((yi - reference[i]) / tau + 1.0 - 2.0 * yi);
        out.push(drift - (p_left - p_right) * yi * (1.0 - yi));
        p_left = p_right;
    }
    out
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Apply `update` (interior entries only) to `y`, halving it until the result
/// is strictly ordered. Returns the number of halvings used.
fn safeguarded_update(y: &[f64], update: &mut [f64], out: &mut Vec<f64>) -> Result<usize> {
    for halvings in 0..=MAX_HALVINGS {
        out.clear();
        out.push(y[0]);
        out.extend(y[1..y.len() - 1].iter().zip(update.iter()).map(|(a, d)| a + d));
        out.push(y[y.len() - 1]);
        if check_ordering(out).is_ok() {
            return Ok(halvings);
        }
        update.iter_mut().for_each(|d| *d *= 0.5);
    }
    Err(Error::LineSearch {
        halvings: MAX_HALVINGS,
    })
}

/// Solve the variant-B step by a diagonally scaled Barzilai-Borwein
/// iteration, warm-started at the reference positions.
///
/// The iteration runs on `g = D r` with `D_i = tau / mbar_i`, which makes
/// the scaled Jacobian close to the identity; convergence is declared on the
/// unscaled residual `||r||_inf <= tol`. Should the iteration cap be reached,
/// the iterate is finished by safeguarded Newton steps on the exact
/// tridiagonal Jacobian of the residual.
pub fn step_implicit_b(state: &ParticleState, tau: f64, tol: f64, max_iter: usize) -> Result<BulkSolution> {
    state.check_ordering()?;
    let masses = state.cell_masses();
    let reference = &state.positions;
    let n = masses.len();
    let scale: Vec<f64> = (1..n)
        .map(|i| {
            let mbar = 0.5 * (masses[i - 1] + masses[i]);
            if mbar > 0.0 {
                tau / mbar
            } else {
                0.0
            }
        })
        .collect();
    let scaled = |r: &[f64]| -> Vec<f64> { r.iter().zip(&scale).map(|(a, s)| a * s).collect() };

    let mut y = reference.clone();
    let r = residual_b_unchecked(&y, reference, &masses, tau);
    let mut res = inf_norm(&r);
    if res <= tol || n < 2 {
        return Ok(BulkSolution {
            positions: y,
            iterations: 0,
            residual: res,
        });
    }
    let mut g = scaled(&r);
    let mut step_len = 1.0;
    let mut trial = Vec::with_capacity(y.len());
    for iter in 1..=max_iter {
        let mut update: Vec<f64> = g.iter().map(|gi| -step_len * gi).collect();
        safeguarded_update(&y, &mut update, &mut trial)?;
        let r_new = residual_b_unchecked(&trial, reference, &masses, tau);
        let res_new = inf_norm(&r_new);
        if !res_new.is_finite() {
            return Err(Error::NonFinite("variant-B residual"));
        }
        let g_new = scaled(&r_new);
        let (ss, sy) = update
            .iter()
            .zip(g_new.iter().zip(&g))
            .fold((0.0, 0.0), |(ss, sy), (s, (gn, go))| (ss + s * s, sy + s * (gn - go)));
        std::mem::swap(&mut y, &mut trial);
        g = g_new;
        res = res_new;
        if res <= tol {
            return Ok(BulkSolution {
                positions: y,
                iterations: iter,
                residual: res,
            });
        }
        step_len = if sy > 0.0 && ss > 0.0 { ss / sy } else { BB_FALLBACK_STEP };
    }
    newton_polish_b(y, reference, &masses, tau, tol, max_iter)
}

/// Jacobian of the variant-B residual with respect to the interior positions.
fn jacobian_b(y: &[f64], masses: &[f64], tau: f64) -> Tridiagonal {
    let n = masses.len();
    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n - 1];
    let mut upper = vec![0.0; n - 1];
    for i in 1..n {
        let (dl, dr) = (y[i] - y[i - 1], y[i + 1] - y[i]);
        let (kl, kr) = (masses[i - 1] / (dl * dl), masses[i] / (dr * dr));
        let q = y[i] * (1.0 - y[i]);
        let mbar = 0.5 * (masses[i - 1] + masses[i]);
        let dp = pressure(masses[i - 1], dl) - pressure(masses[i], dr);
        lower[i - 1] = -kl * q;
        upper[i - 1] = -kr * q;
        diag[i - 1] = mbar * (1.0 / tau - 2.0) + (kl + kr) * q - dp * (1.0 - 2.0 * y[i]);
    }
    Tridiagonal { lower, diag, upper }
}

const NEWTON_POLISH_ITERS: usize = 50;

fn newton_polish_b(
    mut y: Vec<f64>,
    reference: &[f64],
    masses: &[f64],
    tau: f64,
    tol: f64,
    bb_iterations: usize,
) -> Result<BulkSolution> {
    let mut r = residual_b_unchecked(&y, reference, masses, tau);
    let mut res = inf_norm(&r);
    let mut trial = Vec::with_capacity(y.len());
    for k in 1..=NEWTON_POLISH_ITERS {
        let rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut step = jacobian_b(&y, masses, tau).solve(&rhs)?;
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            safeguarded_update(&y, &mut step, &mut trial)?;
            let r_new = residual_b_unchecked(&trial, reference, masses, tau);
            let res_new = inf_norm(&r_new);
            if res_new < res || res_new <= tol {
                std::mem::swap(&mut y, &mut trial);
                r = r_new;
                res = res_new;
                accepted = true;
                break;
            }
            step.iter_mut().for_each(|d| *d *= 0.5);
        }
        if res <= tol {
            return Ok(BulkSolution {
                positions: y,
                iterations: bb_iterations + k,
                residual: res,
            });
        }
        if !accepted {
            break;
        }
    }
    Err(Error::NotConverged {
        iterations: bb_iterations + NEWTON_POLISH_ITERS,
        residual: res,
    })
}

/// Mobility-weighted movement coefficients `(m_{i-1} + m_i) / (2 X_i (1 - X_i))`.
fn movement_weights(state: &ParticleState, masses: &[f64]) -> Vec<f64> {
    let x = &state.positions;
    (1..masses.len())
        .map(|i| (masses[i - 1] + masses[i]) / (2.0 * x[i] * (1.0 - x[i])))
        .collect()
}

/// Objective of the variant-A step:
/// `J(y) = sum_i c_i (y_i - X_i)^2 / (2 tau) + F_h(y)`.
pub fn objective_j(candidate: &[f64], state: &ParticleState, tau: f64) -> Result<f64> {
    let energy = free_energy_at(candidate, state)?;
    let masses = state.cell_masses();
    let weights = movement_weights(state, &masses);
    let movement: f64 = weights
        .iter()
        .enumerate()
        .map(|(k, c)| {
            let d = candidate[k + 1] - state.positions[k + 1];
            c * d * d / (2.0 * tau)
        })
        .sum();
    Ok(movement + energy)
}

/// Gradient of [`objective_j`] with respect to the interior particles (length `N - 1`).
pub fn gradient_j(candidate: &[f64], state: &ParticleState, tau: f64) -> Result<Vec<f64>> {
    check_candidate(candidate, state)?;
    let masses = state.cell_masses();
    let weights = movement_weights(state, &masses);
    Ok(gradient_unchecked(candidate, state, &masses, &weights, tau))
}

fn gradient_unchecked(y: &[f64], state: &ParticleState, masses: &[f64], weights: &[f64], tau: f64) -> Vec<f64> {
    let n = masses.len();
    let mut p_left = pressure(masses[0], y[1] - y[0]);
    let mut out = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let p_right = pressure(masses[i], y[i + 1] - y[i]);
        let yi = y[i];
        let mbar = 0.5 * (masses[i - 1] + masses[i]);
        let dpot = (1.0 - 2.0 * yi) / (yi * (1.0 - yi));
        let movement = weights[i - 1] * (yi - state.positions[i]) / tau;
        out.push(movement + mbar * dpot - p_left + p_right);
        p_left = p_right;
    }
    out
}

/// Tridiagonal matrix over the interior particles.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    /// Row-wise diagonal dominance with nonnegative diagonal.
    pub fn is_diagonally_dominant(&self) -> bool {
        (0..self.diag.len()).all(|k| {
            let off = self.lower[k].abs() + self.upper[k].abs();
            self.diag[k] >= 0.0 && self.diag[k] >= off
        })
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        tridiag::solve(&self.lower, &self.diag, &self.upper, rhs)
    }
}

/// Hessian of [`objective_j`] with respect to the interior particles.
///
/// Diagonal: `(m_{i-1}+m_i)/(2 tau X_i(1-X_i)) - mbar_i (1 - 2 y_i(1-y_i))/(y_i(1-y_i))^2
/// + m_{i-1}/(y_i-y_{i-1})^2 + m_i/(y_{i+1}-y_i)^2`; off-diagonals
/// `-m/(gap)^2` between neighbouring interior particles.
pub fn hessian_j(candidate: &[f64], state: &ParticleState, tau: f64) -> Result<Tridiagonal> {
    check_candidate(candidate, state)?;
    let masses = state.cell_masses();
    let weights = movement_weights(state, &masses);
    Ok(hessian_unchecked(candidate, &masses, &weights, tau))
}

fn hessian_unchecked(y: &[f64], masses: &[f64], weights: &[f64], tau: f64) -> Tridiagonal {
    let n = masses.len();
    let k = n.saturating_sub(1);
    let mut lower = vec![0.0; k];
    let mut diag = vec![0.0; k];
    let mut upper = vec![0.0; k];
    // stiffness[j] = m_j / (y_{j+1} - y_j)^2
    let stiffness: Vec<f64> = (0..n)
        .map(|j| {
            let w = y[j + 1] - y[j];
            if masses[j] == 0.0 {
                0.0
            } else {
                masses[j] / (w * w)
            }
        })
        .collect();
    for i in 1..n {
        let yi = y[i];
        let q = yi * (1.0 - yi);
        let mbar = 0.5 * (masses[i - 1] + masses[i]);
        let curvature = -mbar * (1.0 - 2.0 * q) / (q * q);
        diag[i - 1] = weights[i - 1] / tau + curvature + stiffness[i - 1] + stiffness[i];
        if i > 1 {
            lower[i - 1] = -stiffness[i - 1];
        }
        if i < n - 1 {
            upper[i - 1] = -stiffness[i];
        }
    }
    Tridiagonal { lower, diag, upper }
}

/// Solve the variant-A step: minimize [`objective_j`] over the admissible set
/// with a damped Newton iteration warm-started at the reference positions.
pub fn step_implicit_a(state: &ParticleState, tau: f64, tol: f64, max_iter: usize) -> Result<BulkSolution> {
    state.check_ordering()?;
    let masses = state.cell_masses();
    let weights = movement_weights(state, &masses);
    let n = masses.len();
    let mut y = state.positions.clone();
    let objective = |y: &[f64]| -> Result<f64> {
        let energy = free_energy_at(y, state)?;
        let movement: f64 = weights
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let d = y[k + 1] - state.positions[k + 1];
                c * d * d / (2.0 * tau)
            })
            .sum();
        Ok(movement + energy)
    };
    let mut value = objective(&y)?;
    let mut trial = Vec::with_capacity(y.len());
    for iter in 0..=max_iter {
        let grad = gradient_unchecked(&y, state, &masses, &weights, tau);
        let gnorm = inf_norm(&grad);
        if gnorm <= tol || n < 2 {
            return Ok(BulkSolution {
                positions: y,
                iterations: iter,
                residual: gnorm,
            });
        }
        if iter == max_iter {
            return Err(Error::NotConverged {
                iterations: max_iter,
                residual: gnorm,
            });
        }
        let hess = hessian_unchecked(&y, &masses, &weights, tau);
        let rhs: Vec<f64> = grad.iter().map(|g| -g).collect();
        let mut dir = match hess.solve(&rhs) {
            Ok(d) if d.iter().zip(&grad).map(|(a, b)| a * b).sum::<f64>() < 0.0 => d,
            // Not a descent direction: fall back to diagonally scaled steepest descent.
            _ => grad
                .iter()
                .zip(&hess.diag)
                .map(|(g, d)| -g / d.abs().max(f64::MIN_POSITIVE))
                .collect(),
        };
        let mut accepted = false;
        for _ in 0..=MAX_HALVINGS {
            safeguarded_update(&y, &mut dir, &mut trial)?;
            let t_value = objective(&trial)?;
            let t_slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
            // Armijo condition, with slack at the level of round-off in J.
            if t_value <= value + 1e-4 * t_slope + 4.0 * f64::EPSILON * value.abs() {
                value = t_value;
                accepted = true;
                break;
            }
            dir.iter_mut().for_each(|d| *d *= 0.5);
        }
        if !accepted {
            return Err(Error::LineSearch {
                halvings: MAX_HALVINGS,
            });
        }
        std::mem::swap(&mut y, &mut trial);
    }
    unreachable!("loop returns on its final iteration")
}

/// Sufficient step bound for convexity of the variant-A objective,
/// `8 (delta (1 - delta))^2 / (1 - 2 delta (1 - delta))`.
pub fn convexity_tau_bound(delta: f64) -> f64 {
    let p = delta * (1.0 - delta);
    8.0 * p * p / (1.0 - 2.0 * p)
}
