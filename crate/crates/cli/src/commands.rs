use std::fs;
use std::io::Write;
use std::process::ExitCode;

use anyhow::{Context, Result};
use kimura_core::eulerian::{run_reference_with, Integrator, ReferenceOptions};
use kimura_core::experiments::{compare_wf, table1, CompareWfOptions, Table1Options};
use kimura_core::io::{self, run_stem, stamped_path, RunManifest, Scheme};
use kimura_core::solver::LagrangianSolver;
use kimura_core::wright_fisher::{estimate_fixation, write_fixation_csv, WfConfig, WfStart};
use kimura_core::{BulkScheme, SolverConfig};
use serde_json::json;

use crate::{Cli, Command, IntegratorArg, ReferenceArgs, RunArgs, SchemeArg, Table1Args, WfArgs};

pub fn dispatch(cli: &Cli) -> Result<ExitCode> {
    let config = cli.common.resolve()?;
    match &cli.command {
        Command::Run(args) => run(cli, &config, args),
        Command::Table1(args) => run_table1(cli, &config, args),
        Command::CompareWf(args) => run_compare_wf(cli, &config, args),
        Command::Validate => {
            let ok = crate::validate::run(&config, cli.common.mode(), cli.common.seed)?;
            Ok(ExitCode::from(if ok { 0 } else { 2 }))
        }
    }
}

fn reference_options(args: &ReferenceArgs) -> ReferenceOptions {
    ReferenceOptions {
        cells: args.reference_cells,
        integrator: match args.integrator {
            IntegratorArg::Implicit => Integrator::Implicit,
            IntegratorArg::Explicit => Integrator::Explicit,
        },
        substeps: args.substeps,
    }
}

fn out_dir(cli: &Cli) -> Result<&std::path::Path> {
    let dir = cli.common.out.as_path();
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(dir)
}

fn run(cli: &Cli, config: &SolverConfig, args: &RunArgs) -> Result<ExitCode> {
    let scheme = match args.scheme {
        SchemeArg::LagrangianA => Scheme::LagrangianA,
        SchemeArg::LagrangianB => Scheme::LagrangianB,
        SchemeArg::Eulerian => Scheme::Eulerian,
        SchemeArg::WrightFisher => Scheme::WrightFisher,
    };
    let dir = out_dir(cli)?;
    let stem = run_stem(scheme, config);
    let mut manifest = RunManifest::new(scheme, config.clone(), cli.common.seed);

    match scheme {
        Scheme::LagrangianA | Scheme::LagrangianB => {
            let bulk = if scheme == Scheme::LagrangianA { BulkScheme::A } else { BulkScheme::B };
            let mut solver = LagrangianSolver::new(config.clone(), bulk)?;
            let records = solver.run()?;
            let diag = stamped_path(dir, &stem, "diagnostics.csv");
            io::write_diagnostics(io::create(&diag)?, &records)?;
            let dens = stamped_path(dir, &stem, "density.csv");
            io::write_density(io::create(&dens)?, &solver.field())?;
            manifest.outputs = vec![file_name(&diag), file_name(&dens)];
            let last = records.last().expect("records hold the initial state");
            println!(
                "t = {} a = {:.6} b = {:.6} a+b = {:.6} cells = {} mass = {:.15}",
                last.t,
                last.a,
                last.b,
                last.a + last.b,
                last.n_particles,
                last.total_mass
            );
        }
        Scheme::Eulerian => {
            let options = reference_options(&args.reference);
            let mut records = Vec::with_capacity(config.n_steps() + 1);
            let result = run_reference_with(config, options, |k, s| {
                records.push(s.record(k as f64 * config.tau));
            })?;
            let diag = stamped_path(dir, &stem, "diagnostics.csv");
            io::write_diagnostics(io::create(&diag)?, &records)?;
            let dens = stamped_path(dir, &stem, "density.csv");
            io::write_density(io::create(&dens)?, &result.state.field())?;
            manifest.outputs = vec![file_name(&diag), file_name(&dens)];
            manifest.extra.insert(
                "reference".into(),
                json!({
                    "cells": options.cells,
                    "integrator": options.integrator,
                    "substeps": result.substeps,
                }),
            );
            let m = result.state.masses;
            println!("t = {} a = {:.6} b = {:.6} a+b = {:.6}", config.t_final, m.a, m.b, m.total());
        }
        Scheme::WrightFisher => {
            let wf = WfConfig {
                two_n: args.wf.two_n,
                n_generations: args.wf.generations,
                n_replicates: args.wf.replicates,
                start: WfStart::Density {
                    density: config.initial_density.clone(),
                    delta: config.delta,
                },
                seed: cli.common.seed,
            };
            let est = estimate_fixation(&wf, cli.common.mode())?;
            let stem = format!(
                "wright-fisher_{}_2N{}_R{}_G{}_seed{}",
                config.initial_density.name(),
                wf.two_n,
                wf.n_replicates,
                wf.n_generations,
                wf.seed
            );
            let fix = stamped_path(dir, &stem, "fixation.csv");
            write_fixation_csv(io::create(&fix)?, &[(config.initial_density.name().into(), &est, None)])?;
            let trace = stamped_path(dir, &stem, "mean_frequency.csv");
            write_trace(io::create(&trace)?, &est.mean_frequency_trace(), wf.two_n)?;
            manifest.outputs = vec![file_name(&fix), file_name(&trace)];
            manifest.extra.insert("wright_fisher".into(), serde_json::to_value(&wf)?);
            println!(
                "p_fix_0 = {:.6} p_fix_1 = {:.6} (se {:.2e}) unresolved = {}",
                est.p_fix_0(),
                est.p_fix_1(),
                est.std_error(est.p_fix_1()),
                est.unresolved()
            );
            manifest.write(&stamped_path(dir, &stem, "manifest.json"))?;
            return Ok(ExitCode::SUCCESS);
        }
    }
    manifest.write(&stamped_path(dir, &stem, "manifest.json"))?;
    Ok(ExitCode::SUCCESS)
}

/// Generation `g` corresponds to rescaled time `g / (2 * 2N)`.
fn write_trace<W: Write>(out: W, trace: &[(f64, f64)], two_n: u32) -> Result<()> {
    let mut w = out;
    writeln!(w, "generation,t,mean,std_error")?;
    for (g, (m, se)) in trace.iter().enumerate() {
        writeln!(w, "{g},{},{m},{se}", g as f64 / (2.0 * two_n as f64))?;
    }
    w.flush()?;
    Ok(())
}

fn file_name(p: &std::path::Path) -> String {
    p.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn run_table1(cli: &Cli, config: &SolverConfig, args: &Table1Args) -> Result<ExitCode> {
    let options = Table1Options {
        delta: config.delta,
        tau: config.tau,
        t_final: if cli.common.t_final.is_some() { config.t_final } else { 1.0 },
        particles: args.cells.clone(),
        eta_cells: args.eta_cells,
        reference: reference_options(&args.reference),
        mode: cli.common.mode(),
        ..Default::default()
    };
    let table = table1(&options)?;
    let mut stdout = std::io::stdout().lock();
    writeln!(
        stdout,
        "{:>6} {:>11} | {:>11} {:>11} {:>11} | {:>11} {:>11} {:>11}",
        "N", "h", "rho1 rho", "rho1 a", "rho1 b", "rho2 rho", "rho2 a", "rho2 b"
    )?;
    for row in &table.rows {
        write!(stdout, "{:>6} {:>11.4e}", row.n_particles, row.h)?;
        for e in &row.errors {
            write!(stdout, " | {:>11.4e} {:>11.4e} {:>11.4e}", e.rho, e.a, e.b)?;
        }
        writeln!(stdout)?;
    }
    let dir = out_dir(cli)?;
    let path = dir.join(format!(
        "table1_d{}_tau{}_T{}_eta{}h.csv",
        options.delta, options.tau, options.t_final, options.eta_cells
    ));
    table.write_csv(io::create(&path)?)?;
    writeln!(stdout, "wrote {}", path.display())?;
    Ok(ExitCode::SUCCESS)
}

fn run_compare_wf(cli: &Cli, config: &SolverConfig, args: &WfArgs) -> Result<ExitCode> {
    let mut options = CompareWfOptions::new(config.clone());
    options.absorption_target = 1.0 - args.absorption_tol;
    options.t_max = args.t_max;
    options.two_n = args.wf.two_n;
    options.n_replicates = args.wf.replicates;
    options.n_generations = args.wf.generations;
    options.seed = cli.common.seed;
    options.mode = cli.common.mode();
    let cmp = compare_wf(&options)?;
    let se = cmp.wf_std_error();
    println!("{:<14} {:>12} {:>12}", "method", "a_inf", "b_inf");
    println!("{:<14} {:>12.6} {:>12.6}", "quadrature", cmp.integral_a, cmp.integral_b);
    println!(
        "{:<14} {:>12.6} {:>12.6}   t = {:.4}{}",
        "pde",
        cmp.pde.a,
        cmp.pde.b,
        cmp.pde.t,
        if cmp.pde.reached { "" } else { " (not absorbed)" }
    );
    println!(
        "{:<14} {:>12.6} {:>12.6}   se = {:.2e}, unresolved = {}",
        "wright-fisher",
        cmp.wf.p_fix_0(),
        cmp.wf.p_fix_1(),
        se,
        cmp.wf.unresolved()
    );
    let dir = out_dir(cli)?;
    let path = dir.join(format!(
        "compare-wf_{}_d{}_2N{}_R{}_seed{}.csv",
        cmp.density, cmp.delta, options.two_n, options.n_replicates, options.seed
    ));
    cmp.write_csv(io::create(&path)?)?;
    println!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}
