//! Fixed-grid finite-volume reference solver.
//!
//! The density lives on `M` uniform cells of `(delta, 1 - delta)`. The flux of
//! `g = x(1-x) rho` between neighbouring cells is `-(g_{j+1} - g_j) / h`; the
//! outer faces carry the Robin flux `alpha * rho_b`, with `rho_b` the value of
//! the adjacent cell. Every step is applied in flux form and the boundary
//! masses receive exactly the outgoing boundary fluxes, so the total mass
//! telescopes.

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::{Error, Result};
use crate::spline::CubicSpline;
use crate::state::{BoundaryMasses, DensityField};
use crate::tridiag::Factored;

/// Default reference resolution.
pub const DEFAULT_CELLS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    /// Forward Euler; subject to [`EulerianState::stable_step`].
    Explicit,
    /// Backward Euler; unconditionally stable and positivity preserving.
    Implicit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EulerianState {
    pub delta: f64,
    pub alpha: f64,
    pub centers: Vec<f64>,
    pub rho: Vec<f64>,
    pub masses: BoundaryMasses,
    /// Cell edges, kept for the [`DensityField`] view.
    edges: Vec<f64>,
    /// `x(1-x)` at the centres.
    coeff: Vec<f64>,
}

impl EulerianState {
    /// Sample `initial_density` at the centres of `m` uniform cells.
    pub fn new(config: &SolverConfig, m: usize) -> Result<Self> {
        config.validate()?;
        if m < 4 {
            return Err(Error::Config("the reference grid needs at least four cells".into()));
        }
        let delta = config.delta;
        let h = (1.0 - 2.0 * delta) / m as f64;
        let mut edges: Vec<f64> = (0..=m).map(|j| delta + j as f64 * h).collect();
        edges[m] = 1.0 - delta;
        let centers: Vec<f64> = (0..m).map(|j| delta + (j as f64 + 0.5) * h).collect();
        let rho = centers
            .iter()
            .map(|&x| config.initial_density.eval(x, delta))
            .collect::<Result<Vec<_>>>()?;
        let coeff = centers.iter().map(|&x| x * (1.0 - x)).collect();
        Ok(Self {
            delta,
            alpha: config.alpha,
            centers,
            rho,
            masses: BoundaryMasses::default(),
            edges,
            coeff,
        })
    }

    pub fn m_cells(&self) -> usize {
        self.rho.len()
    }

    pub fn spacing(&self) -> f64 {
        (1.0 - 2.0 * self.delta) / self.m_cells() as f64
    }

    pub fn field(&self) -> DensityField<'_> {
        DensityField {
            edges: &self.edges,
            densities: &self.rho,
            masses: self.masses,
            delta: self.delta,
        }
    }

    pub fn record(&self, t: f64) -> DiagnosticsRecord {
        DiagnosticsRecord::from_field(t, &self.field())
    }

    /// Largest forward Euler step that keeps every diagonal entry of the
    /// update nonnegative.
    pub fn stable_step(&self) -> f64 {
        let h = self.spacing();
        let m = self.m_cells();
        let interior = self.coeff[1..m - 1]
            .iter()
            .fold(0.0f64, |acc, &c| acc.max(2.0 * c / (h * h)));
        let edge = (self.coeff[0].max(self.coeff[m - 1])) / (h * h) + self.alpha / h;
        1.0 / interior.max(edge)
    }

    /// Face fluxes `F_{-1/2}, ..., F_{M-1/2}` (positive to the right) for
    /// the density `rho`.
    fn fluxes(&self, rho: &[f64], out: &mut [f64]) {
        let m = self.m_cells();
        let h = self.spacing();
        out[0] = -self.alpha * rho[0];
        for j in 0..m - 1 {
            out[j + 1] = -(self.coeff[j + 1] * rho[j + 1] - self.coeff[j] * rho[j]) / h;
        }
        out[m] = self.alpha * rho[m - 1];
    }

    /// Conservative update with the given face fluxes.
    fn apply_fluxes(&mut self, tau: f64, flux: &[f64]) {
        let h = self.spacing();
        for (j, r) in self.rho.iter_mut().enumerate() {
            *r -= tau / h * (flux[j + 1] - flux[j]);
        }
        let m = self.m_cells();
        self.masses.a += tau * (-flux[0]);
        self.masses.b += tau * flux[m];
    }

    /// One forward Euler step.
    pub fn step_explicit(&mut self, tau: f64) -> Result<()> {
        let limit = self.stable_step();
        if tau > limit {
            return Err(Error::Cfl { tau, limit });
        }
        let mut flux = vec![0.0; self.m_cells() + 1];
        self.fluxes(&self.rho, &mut flux);
        self.apply_fluxes(tau, &flux);
        Ok(())
    }

    /// Factor `I - tau L` for repeated backward Euler steps of size `tau`.
    pub fn implicit_operator(&self, tau: f64) -> Result<ImplicitOperator> {
        if !(tau > 0.0) {
            return Err(Error::Config(format!("time step must be positive, got {tau}")));
        }
        let m = self.m_cells();
        let h = self.spacing();
        let r = tau / (h * h);
        let c = &self.coeff;
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        for j in 0..m {
            let mut d = 1.0;
            if j > 0 {
                lower[j] = -r * c[j - 1];
                d += r * c[j];
            } else {
                d += tau * self.alpha / h;
            }
            if j + 1 < m {
                upper[j] = -r * c[j + 1];
                d += r * c[j];
            } else {
                d += tau * self.alpha / h;
            }
            diag[j] = d;
        }
        Ok(ImplicitOperator {
            tau,
            lu: Factored::new(&lower, &diag, &upper)?,
            flux: vec![0.0; m + 1],
        })
    }

    /// One backward Euler step. The new density is obtained from the linear
    /// solve and then re-applied in flux form so that the mass balance is
    /// exact.
    pub fn step_implicit(&mut self, op: &mut ImplicitOperator) -> Result<()> {
        if op.lu.len() != self.m_cells() {
            return Err(Error::Length("implicit operator built for another grid".into()));
        }
        let mut next = self.rho.clone();
        op.lu.solve_in_place(&mut next);
        let mut flux = std::mem::take(&mut op.flux);
        self.fluxes(&next, &mut flux);
        self.apply_fluxes(op.tau, &flux);
        op.flux = flux;
        if self.rho.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("reference density"));
        }
        Ok(())
    }

    /// Cubic-spline interpolation of the cell values, clamped at zero.
    /// Points must lie in `[delta, 1 - delta]`.
    pub fn evaluate_at(&self, points: &[f64]) -> Result<Vec<f64>> {
        let spline = CubicSpline::not_a_knot(self.centers.clone(), self.rho.clone())?;
        let (lo, hi) = (self.delta, 1.0 - self.delta);
        points
            .iter()
            .map(|&x| {
                if !(x >= lo && x <= hi) {
                    return Err(Error::Domain { x, lo, hi });
                }
                Ok(spline.eval(x).max(0.0))
            })
            .collect()
    }
}

/// Backward Euler system for a fixed step, factored once.
#[derive(Debug, Clone)]
pub struct ImplicitOperator {
    tau: f64,
    lu: Factored,
    flux: Vec<f64>,
}

impl ImplicitOperator {
    pub fn tau(&self) -> f64 {
        self.tau
    }
}

/// Reference trajectory sampled on the time grid of a Lagrangian run.
#[derive(Debug, Clone)]
pub struct EulerianRun {
    pub state: EulerianState,
    /// Boundary masses at `t = k tau`, `k = 0..=n_steps`.
    pub masses: Vec<BoundaryMasses>,
    pub substeps: usize,
}

/// Options of [`run_reference`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceOptions {
    pub cells: usize,
    pub integrator: Integrator,
    /// Substeps per outer step; `None` picks 10 for the implicit integrator
    /// and the smallest stable count for the explicit one.
    pub substeps: Option<usize>,
}

impl Default for ReferenceOptions {
    fn default() -> Self {
        Self {
            cells: DEFAULT_CELLS,
            integrator: Integrator::Implicit,
            substeps: None,
        }
    }
}

/// Integrate to `config.t_final`, recording the boundary masses every `config.tau`.
pub fn run_reference(config: &SolverConfig, options: ReferenceOptions) -> Result<EulerianRun> {
    run_reference_with(config, options, |_, _| {})
}

/// As [`run_reference`], calling `observe(k, state)` after outer step `k`
/// (and once with `k = 0` before the first step).
pub fn run_reference_with<F>(config: &SolverConfig, options: ReferenceOptions, mut observe: F) -> Result<EulerianRun>
where
    F: FnMut(usize, &EulerianState),
{
    let mut state = EulerianState::new(config, options.cells)?;
    let n_steps = config.n_steps();
    let substeps = match (options.substeps, options.integrator) {
        (Some(0), _) => return Err(Error::Config("substeps must be positive".into())),
        (Some(k), _) => k,
        (None, Integrator::Implicit) => 10,
        (None, Integrator::Explicit) => (config.tau / state.stable_step()).ceil().max(1.0) as usize,
    };
    let dt = config.tau / substeps as f64;
    let mut masses = Vec::with_capacity(n_steps + 1);
    masses.push(state.masses);
    observe(0, &state);
    let mut op = match options.integrator {
        Integrator::Implicit => Some(state.implicit_operator(dt)?),
        Integrator::Explicit => None,
    };
    for k in 1..=n_steps {
        for _ in 0..substeps {
            match op.as_mut() {
                Some(op) => state.step_implicit(op)?,
                None => state.step_explicit(dt)?,
            }
        }
        masses.push(state.masses);
        observe(k, &state);
    }
    Ok(EulerianRun {
        state,
        masses,
        substeps,
    })
}
