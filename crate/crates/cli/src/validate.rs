//! Quick invariant suite on the resolved configuration.

use anyhow::Result;
use kimura_core::eulerian::{run_reference_with, Integrator, ReferenceOptions};
use kimura_core::par::ExecMode;
use kimura_core::solver::LagrangianSolver;
use kimura_core::wright_fisher::{estimate_fixation, exact_fixation_probabilities, WfConfig, WfStart};
use kimura_core::{BulkScheme, SolverConfig};

struct Check {
    name: &'static str,
    pass: bool,
    detail: String,
}

/// Short runs (at most 2000 steps) of each solver. Prints one line per check
/// and returns whether all passed.
pub fn run(config: &SolverConfig, mode: ExecMode, seed: u64) -> Result<bool> {
    let mut short = config.clone();
    short.t_final = short.t_final.min(2000.0 * short.tau);
    let mut checks = Vec::new();

    let mut solver = LagrangianSolver::new(short.clone(), BulkScheme::B)?;
    let records = solver.run()?;
    let m0 = records[0].total_mass;
    let mass_drift = records.iter().map(|r| (r.total_mass - m0).abs()).fold(0.0, f64::max);
    checks.push(Check {
        name: "mass conservation",
        pass: mass_drift <= 1e-12,
        detail: format!("max |M - M0| = {mass_drift:.2e}"),
    });
    let monotone = records.windows(2).all(|w| w[1].a >= w[0].a && w[1].b >= w[0].b);
    checks.push(Check {
        name: "boundary masses nondecreasing",
        pass: monotone,
        detail: format!("{} steps", records.len() - 1),
    });
    let m1 = records[0].first_moment;
    let m1_drift = records.iter().map(|r| (r.first_moment - m1).abs()).fold(0.0, f64::max);
    checks.push(Check {
        name: "first moment",
        pass: m1_drift <= 1e-2,
        detail: format!("max |M1 - M1(0)| = {m1_drift:.2e}"),
    });
    checks.push(Check {
        name: "final state admissible",
        pass: solver.state().validate().is_ok(),
        detail: format!("{} cells", solver.state().n_cells()),
    });

    let mut a_short = short.clone();
    a_short.t_final = a_short.t_final.min(200.0 * a_short.tau);
    let mut energy_ok = true;
    let mut worst = f64::NEG_INFINITY;
    let mut a_solver = LagrangianSolver::new(a_short, BulkScheme::A)?;
    a_solver.run_with(|_, info| {
        if info.iterations > 0 {
            worst = worst.max(info.energy_after - info.energy_before);
            energy_ok &= info.energy_after <= info.energy_before + 1e-12;
        }
    })?;
    checks.push(Check {
        name: "variant A energy decrease",
        pass: energy_ok,
        detail: format!("max increase {worst:.2e}"),
    });

    let mut e_mass = Vec::new();
    run_reference_with(
        &short,
        ReferenceOptions {
            cells: 2000,
            integrator: Integrator::Implicit,
            substeps: Some(1),
        },
        |_, s| {
            let bulk: f64 = s.rho.iter().sum::<f64>() * s.spacing();
            e_mass.push(bulk + s.masses.total());
        },
    )?;
    let e_drift = e_mass.iter().map(|m| (m - e_mass[0]).abs()).fold(0.0, f64::max);
    checks.push(Check {
        name: "reference mass conservation",
        pass: e_drift <= 1e-12,
        detail: format!("max |M - M0| = {e_drift:.2e}"),
    });

    let exact = exact_fixation_probabilities(8, 1e-15, 100_000)?;
    let mut wf_ok = true;
    let mut worst_z: f64 = 0.0;
    for (k, &p) in exact.iter().enumerate() {
        let est = estimate_fixation(
            &WfConfig {
                two_n: 8,
                n_generations: 200,
                n_replicates: 20_000,
                start: WfStart::Count(k as u32),
                seed,
            },
            mode,
        )?;
        let se = (p * (1.0 - p) / est.n_replicates as f64).sqrt();
        let diff = (est.p_fix_1() - p).abs();
        let z = if se > 0.0 { diff / se } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        worst_z = worst_z.max(z);
        wf_ok &= z <= 3.0;
    }
    checks.push(Check {
        name: "Wright-Fisher fixation (2N = 8)",
        pass: wf_ok,
        detail: format!("max |p - p_exact| / se = {worst_z:.2}"),
    });

    let mut all = true;
    for c in &checks {
        println!("{} {:<32} {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
        all &= c.pass;
    }
    Ok(all)
}
