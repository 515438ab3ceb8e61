//! Batch experiments: grid-refinement table against the reference solver and
//! the three-way fixation comparison.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::compare::{linf_errors, LinfErrors};
use crate::config::{default_eta, SolverConfig};
use crate::density::InitialDensity;
use crate::error::Result;
use crate::eulerian::{run_reference, ReferenceOptions};
use crate::lagrangian::BulkScheme;
use crate::par::{map_indexed, map_slice, ExecMode};
use crate::quadrature::adaptive_simpson;
use crate::solver::LagrangianSolver;
use crate::state::BoundaryMasses;
use crate::wright_fisher::{estimate_fixation, FixationEstimate, WfConfig, WfStart};

/// Run a Lagrangian trajectory to `t_final`, returning the solver and the
/// boundary masses after every step (initial state first).
pub fn lagrangian_trajectory(
    config: &SolverConfig,
    scheme: BulkScheme,
) -> Result<(LagrangianSolver, Vec<BoundaryMasses>)> {
    let mut solver = LagrangianSolver::new(config.clone(), scheme)?;
    let mut trace = Vec::with_capacity(config.n_steps() + 1);
    trace.push(solver.masses());
    solver.run_with(|s, _| trace.push(s.masses()))?;
    Ok((solver, trace))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table1Options {
    pub delta: f64,
    pub tau: f64,
    pub t_final: f64,
    pub particles: Vec<usize>,
    pub densities: Vec<InitialDensity>,
    /// Buffer width in units of the initial spacing.
    pub eta_cells: f64,
    pub scheme: BulkScheme,
    pub reference: ReferenceOptions,
    pub mode: ExecMode,
}

impl Default for Table1Options {
    fn default() -> Self {
        Self {
            delta: 0.01,
            tau: 1e-4,
            t_final: 1.0,
            particles: vec![150, 300, 600, 1200],
            densities: vec![InitialDensity::Rho1, InitialDensity::Rho2],
            eta_cells: 2.0,
            scheme: BulkScheme::B,
            reference: ReferenceOptions::default(),
            mode: ExecMode::Parallel,
        }
    }
}

impl Table1Options {
    fn config(&self, density: &InitialDensity, n: usize) -> SolverConfig {
        let mut cfg = SolverConfig::new(self.delta);
        cfg.tau = self.tau;
        cfg.t_final = self.t_final;
        cfg.n_particles = n;
        cfg.eta = self.eta_cells * default_eta(self.delta, n) / 2.0;
        cfg.initial_density = density.clone();
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Row {
    pub n_particles: usize,
    pub h: f64,
    /// One entry per initial density, in option order.
    pub errors: Vec<LinfErrors>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1 {
    pub densities: Vec<String>,
    pub rows: Vec<Table1Row>,
}

impl Table1 {
    /// Error column `k` (`rho, a, b` per density, in that order).
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| {
                let e = r.errors[k / 3];
                [e.rho, e.a, e.b][k % 3]
            })
            .collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["N".to_string(), "h".to_string()];
        for d in &self.densities {
            for q in ["rho", "a", "b"] {
                header.push(format!("{d}_{q}"));
            }
        }
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.n_particles.to_string(), format!("{:e}", r.h)];
            for e in &r.errors {
                rec.extend([e.rho, e.a, e.b].iter().map(|v| format!("{v:.4e}")));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Compare Lagrangian runs at every cell count against the reference solver.
/// The reference solutions and the Lagrangian runs are fanned out over
/// threads in `options.mode`.
pub fn table1(options: &Table1Options) -> Result<Table1> {
    let references = map_slice(&options.densities, options.mode, |d| {
        let cfg = options.config(d, options.particles[0]);
        run_reference(&cfg, options.reference)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let nd = options.densities.len();
    let jobs = options.particles.len() * nd;
    let errors = map_indexed(jobs, options.mode, |j| {
        let (row, col) = (j / nd, j % nd);
        let cfg = options.config(&options.densities[col], options.particles[row]);
        let (solver, trace) = lagrangian_trajectory(&cfg, options.scheme)?;
        let reference = &references[col];
        linf_errors(solver.state(), &trace, &reference.state, &reference.masses)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let rows = options
        .particles
        .iter()
        .enumerate()
        .map(|(i, &n)| Table1Row {
            n_particles: n,
            h: (1.0 - 2.0 * options.delta) / n as f64,
            errors: errors[i * nd..(i + 1) * nd].to_vec(),
        })
        .collect();
    Ok(Table1 {
        densities: options.densities.iter().map(|d| d.name().to_string()).collect(),
        rows,
    })
}

/// `(int (1 - x) rho_0, int x rho_0)` over `(delta, 1 - delta)`.
pub fn fixation_integrals(density: &InitialDensity, delta: f64) -> Result<(f64, f64)> {
    density.validate()?;
    let (lo, hi) = (delta, 1.0 - delta);
    // The density is finite on the closed domain; evaluation errors cannot occur.
    let f = |x: f64| density.eval(x, delta).unwrap_or(f64::NAN);
    let b = adaptive_simpson(|x| x * f(x), lo, hi, 1e-13);
    let a = adaptive_simpson(|x| (1.0 - x) * f(x), lo, hi, 1e-13);
    Ok((a, b))
}

/// Boundary masses once the bulk has (almost) emptied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorption {
    pub a: f64,
    pub b: f64,
    /// Time at which `a + b` reached the target, or the time cap.
    pub t: f64,
    pub reached: bool,
}

/// Step until `a + b >= target` or `t_max`.
pub fn run_to_absorption(config: &SolverConfig, scheme: BulkScheme, target: f64, t_max: f64) -> Result<Absorption> {
    let mut solver = LagrangianSolver::new(config.clone(), scheme)?;
    let max_steps = (t_max / config.tau).ceil() as usize;
    while solver.masses().total() < target && solver.steps_taken() < max_steps {
        solver.step()?;
    }
    let m = solver.masses();
    Ok(Absorption {
        a: m.a,
        b: m.b,
        t: solver.time(),
        reached: m.total() >= target,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareWfOptions {
    pub config: SolverConfig,
    pub scheme: BulkScheme,
    pub absorption_target: f64,
    pub t_max: f64,
    pub two_n: u32,
    pub n_replicates: usize,
    pub n_generations: u32,
    pub seed: u64,
    pub mode: ExecMode,
}

impl CompareWfOptions {
    pub fn new(config: SolverConfig) -> Self {
        Self {
            config,
            scheme: BulkScheme::B,
            absorption_target: 1.0 - 1e-6,
            t_max: 20.0,
            two_n: 200,
            n_replicates: 10_000,
            n_generations: 4000,
            seed: 0,
            mode: ExecMode::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationComparison {
    pub density: String,
    pub delta: f64,
    /// Quadrature values of the limits.
    pub integral_a: f64,
    pub integral_b: f64,
    pub pde: Absorption,
    pub wf: FixationEstimate,
}

impl FixationComparison {
    /// Monte-Carlo standard error of the WF fixation frequency.
    pub fn wf_std_error(&self) -> f64 {
        self.wf.std_error(self.wf.p_fix_1())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "a_inf", "b_inf", "std_error", "t"])?;
        let f = |v: f64| format!("{v:.10e}");
        w.write_record(["quadrature".into(), f(self.integral_a), f(self.integral_b), String::new(), String::new()])?;
        w.write_record(["pde".into(), f(self.pde.a), f(self.pde.b), String::new(), f(self.pde.t)])?;
        w.write_record([
            "wright-fisher".into(),
            f(self.wf.p_fix_0()),
            f(self.wf.p_fix_1()),
            f(self.wf_std_error()),
            self.wf.count_sum.len().saturating_sub(1).to_string(),
        ])?;
        w.flush()?;
        Ok(())
    }
}

/// Fixation limits from quadrature, from the PDE run to absorption, and from
/// the Wright-Fisher chain started from `p ~ rho_0`.
pub fn compare_wf(options: &CompareWfOptions) -> Result<FixationComparison> {
    let cfg = &options.config;
    cfg.validate()?;
    let (integral_a, integral_b) = fixation_integrals(&cfg.initial_density, cfg.delta)?;
    let pde = run_to_absorption(cfg, options.scheme, options.absorption_target, options.t_max)?;
    let wf = estimate_fixation(
        &WfConfig {
            two_n: options.two_n,
            n_generations: options.n_generations,
            n_replicates: options.n_replicates,
            start: WfStart::Density {
                density: cfg.initial_density.clone(),
                delta: cfg.delta,
            },
            seed: options.seed,
        },
        options.mode,
    )?;
    Ok(FixationComparison {
        density: cfg.initial_density.name().to_string(),
        delta: cfg.delta,
        integral_a,
        integral_b,
        pde,
        wf,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eulerian::Integrator;

    #[test]
    fn integrals_sum_to_one() {
        for d in [InitialDensity::Rho1, InitialDensity::Rho2] {
            let (a, b) = fixation_integrals(&d, 0.01).unwrap();
            assert!((a + b - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn small_table_has_expected_shape() {
        let opts = Table1Options {
            t_final: 0.01,
            particles: vec![20, 40],
            reference: ReferenceOptions {
                cells: 400,
                integrator: Integrator::Implicit,
                substeps: Some(2),
            },
            ..Default::default()
        };
        let t = table1(&opts).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[0].errors.len(), 2);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("N,h,rho1_rho,rho1_a,rho1_b,rho2_rho,rho2_a,rho2_b\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
