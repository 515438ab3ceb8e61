//! Output files: diagnostics time series, final densities and run manifests.
//!
//! Floating-point values are written in shortest round-trip form, so equal
//! runs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::SolverConfig;
use crate::diagnostics::DiagnosticsRecord;
use crate::error::Result;
use crate::state::DensityField;

/// Which solver produced a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    #[serde(rename = "lagrangian-A")]
    LagrangianA,
    #[serde(rename = "lagrangian-B")]
    LagrangianB,
    #[serde(rename = "eulerian")]
    Eulerian,
    #[serde(rename = "wright-fisher")]
    WrightFisher,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::LagrangianA => "lagrangian-A",
            Scheme::LagrangianB => "lagrangian-B",
            Scheme::Eulerian => "eulerian",
            Scheme::WrightFisher => "wright-fisher",
        }
    }
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub scheme: Scheme,
    pub config: SolverConfig,
    pub seed: u64,
    /// Scheme-specific settings (reference grid, population size, ...).
    #[serde(default, skip_serializing_if = "serde_json::Map::is_empty")]
    pub extra: serde_json::Map<String, serde_json::Value>,
    pub outputs: Vec<String>,
    pub version: String,
    pub git_describe: String,
}

impl RunManifest {
    pub fn new(scheme: Scheme, config: SolverConfig, seed: u64) -> Self {
        Self {
            scheme,
            config,
            seed,
            extra: serde_json::Map::new(),
            outputs: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            git_describe: git_describe(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// `git describe --always --dirty` of the working directory, or `"unknown"`.
pub fn git_describe() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .unwrap_or_else(|| "unknown".to_string())
}

/// File stem encoding the parameters of a run, e.g.
/// `lagrangian-B_rho1_d0.01_N150_tau0.0001_T1.5`.
pub fn run_stem(scheme: Scheme, config: &SolverConfig) -> String {
    format!(
        "{}_{}_d{}_N{}_tau{}_T{}",
        scheme.name(),
        config.initial_density.name(),
        config.delta,
        config.n_particles,
        config.tau,
        config.t_final
    )
}

pub fn stamped_path(dir: &Path, stem: &str, suffix: &str) -> PathBuf {
    dir.join(format!("{stem}_{suffix}"))
}

/// Header `t,mass,M1,E_bulk,E_whole,N,a,b`.
pub fn write_diagnostics<W: Write>(out: W, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(["t", "mass", "M1", "E_bulk", "E_whole", "N", "a", "b"])?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_diagnostics(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for row in r.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Cell midpoints and densities, header `x,rho`.
pub fn write_density<W: Write>(out: W, field: &DensityField<'_>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "rho"])?;
    for (l, r, rho) in field.cells() {
        w.serialize((0.5 * (l + r), rho))?;
    }
    w.flush()?;
    Ok(())
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}
