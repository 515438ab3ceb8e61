//! `kimura`: run the truncated Kimura solvers, reproduce the grid-refinement
//! table, compare fixation limits and run the invariant suite.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use kimura_core::{ConfigLayer, ExecMode, InitialDensity};

mod commands;
mod validate;

#[derive(Debug, Parser)]
#[command(name = "kimura", version, about = "Truncated Kimura equation solvers")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one solver and write diagnostics, final density and a manifest.
    Run(RunArgs),
    /// Grid-refinement error table against the fixed-grid reference.
    Table1(Table1Args),
    /// Fixation limits from quadrature, the PDE and the Wright-Fisher chain.
    CompareWf(WfArgs),
    /// Run the invariant suite on the resolved configuration.
    Validate,
}

#[derive(Debug, Args)]
pub struct Common {
    /// TOML file with solver settings; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
    /// Initial number of cells.
    #[arg(long, global = true)]
    particles: Option<usize>,
    #[arg(long = "t-final", global = true)]
    t_final: Option<f64>,
    /// rho1, rho2 or gaussian:MU,SIGMA.
    #[arg(long, global = true, value_parser = parse_density)]
    initial: Option<InitialDensity>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Disable multi-threading.
    #[arg(long, global = true)]
    sequential: bool,
}

impl Common {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            delta: self.delta,
            alpha: self.alpha,
            tau: self.tau,
            eta: self.eta,
            n_particles: self.particles,
            t_final: self.t_final,
            initial_density: self.initial.clone(),
            ..Default::default()
        }
    }

    fn resolve(&self) -> kimura_core::Result<kimura_core::SolverConfig> {
        let file = match &self.config {
            Some(p) => ConfigLayer::from_file(p)?,
            None => ConfigLayer::default(),
        };
        file.merged(self.layer()).resolve()
    }

    fn mode(&self) -> ExecMode {
        if self.sequential {
            ExecMode::Sequential
        } else {
            ExecMode::Parallel
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    #[value(name = "lagrangian-A")]
    LagrangianA,
    #[value(name = "lagrangian-B")]
    LagrangianB,
    Eulerian,
    WrightFisher,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum IntegratorArg {
    Implicit,
    Explicit,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "lagrangian-B")]
    scheme: SchemeArg,
    #[command(flatten)]
    reference: ReferenceArgs,
    #[command(flatten)]
    wf: WfSizeArgs,
}

#[derive(Debug, Args)]
struct ReferenceArgs {
    /// Cells of the fixed-grid reference solver.
    #[arg(long, default_value_t = 10_000)]
    reference_cells: usize,
    #[arg(long, value_enum, default_value = "implicit")]
    integrator: IntegratorArg,
    /// Reference substeps per time step (default: 10 implicit, stable count explicit).
    #[arg(long)]
    substeps: Option<usize>,
}

#[derive(Debug, Args)]
struct WfSizeArgs {
    /// Number of gene copies 2N.
    #[arg(long, default_value_t = 200)]
    two_n: u32,
    #[arg(long, default_value_t = 10_000)]
    replicates: usize,
    #[arg(long, default_value_t = 4000)]
    generations: u32,
}

#[derive(Debug, Args)]
struct Table1Args {
    /// Cell counts to compare.
    #[arg(long, value_delimiter = ',', default_value = "150,300,600,1200")]
    cells: Vec<usize>,
    /// Buffer width in units of the initial spacing.
    #[arg(long, default_value_t = 2.0)]
    eta_cells: f64,
    #[command(flatten)]
    reference: ReferenceArgs,
}

#[derive(Debug, Args)]
struct WfArgs {
    #[command(flatten)]
    wf: WfSizeArgs,
    /// Stop the PDE once a + b reaches 1 - this.
    #[arg(long, default_value_t = 1e-6)]
    absorption_tol: f64,
    /// Time cap of the PDE run.
    #[arg(long, default_value_t = 20.0)]
    t_max: f64,
}

fn parse_density(s: &str) -> Result<InitialDensity, String> {
    match s {
        "rho1" => Ok(InitialDensity::Rho1),
        "rho2" => Ok(InitialDensity::Rho2),
        _ => {
            let rest = s
                .strip_prefix("gaussian:")
                .ok_or_else(|| format!("unknown density `{s}`; expected rho1, rho2 or gaussian:MU,SIGMA"))?;
            let (mu, sigma) = rest
                .split_once(',')
                .ok_or_else(|| "gaussian density needs MU,SIGMA".to_string())?;
            let mu = mu.trim().parse::<f64>().map_err(|e| e.to_string())?;
            let sigma = sigma.trim().parse::<f64>().map_err(|e| e.to_string())?;
            Ok(InitialDensity::Gaussian { mu, sigma })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            let config_error = e
                .downcast_ref::<kimura_core::Error>()
                .map(|k| matches!(k, kimura_core::Error::Config(_)))
                .unwrap_or(false);
            ExitCode::from(if config_error { 1 } else { 2 })
        }
    }
}
