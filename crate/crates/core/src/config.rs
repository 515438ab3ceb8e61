//! Solver configuration and its layered resolution (defaults < file < overrides).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::InitialDensity;
use crate::error::{Error, Result};

pub const DEFAULT_TAU: f64 = 1e-4;
pub const DEFAULT_FP_TOL: f64 = 1e-12;
pub const DEFAULT_FP_MAX_ITER: usize = 500;

/// Fully resolved and validated solver parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Truncation parameter; the bulk domain is `(delta, 1 - delta)`.
    pub delta: f64,
    /// Boundary reaction rate.
    pub alpha: f64,
    pub tau: f64,
    /// Buffer width next to each endpoint.
    pub eta: f64,
    /// Initial number of cells.
    pub n_particles: usize,
    pub t_final: f64,
    pub initial_density: InitialDensity,
    pub fp_tol: f64,
    pub fp_max_iter: usize,
}

/// The reaction rate that conserves the first moment.
pub fn conserving_alpha(delta: f64) -> f64 {
    2.0 * (1.0 - delta)
}

impl SolverConfig {
    /// Defaults for a given truncation parameter: `alpha = 2(1 - delta)`,
    /// `tau = 1e-4`, 150 cells, `eta` equal to twice the initial spacing.
    pub fn new(delta: f64) -> Self {
        let n_particles = 150;
        Self {
            delta,
            alpha: conserving_alpha(delta),
            tau: DEFAULT_TAU,
            eta: default_eta(delta, n_particles),
            n_particles,
            t_final: 1.5,
            initial_density: InitialDensity::Rho1,
            fp_tol: DEFAULT_FP_TOL,
            fp_max_iter: DEFAULT_FP_MAX_ITER,
        }
    }

    /// Initial grid spacing `(1 - 2 delta) / N0`.
    pub fn initial_spacing(&self) -> f64 {
        (1.0 - 2.0 * self.delta) / self.n_particles as f64
    }

    pub fn n_steps(&self) -> usize {
        // Round to the nearest step count so T = 1.5 with tau = 1e-4 gives 15000.
        let r = self.t_final / self.tau;
        (r + 1e-9 * r.max(1.0)).floor() as usize
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.delta;
        if !(d > 0.0 && d < 0.5) {
            return Err(Error::Config(format!("delta must lie in (0, 1/2), got {d}")));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::Config(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.eta >= 0.0 && self.eta < 0.5 * (1.0 - 2.0 * d)) {
            return Err(Error::Config(format!(
                "eta must lie in [0, (1 - 2 delta)/2), got {}",
                self.eta
            )));
        }
        if self.n_particles < 2 {
            return Err(Error::Config("at least two initial cells are required".into()));
        }
        if !(self.t_final >= 0.0) || !self.t_final.is_finite() {
            return Err(Error::Config(format!("t_final must be nonnegative, got {}", self.t_final)));
        }
        if !(self.fp_tol > 0.0) {
            return Err(Error::Config("fp_tol must be positive".into()));
        }
        if self.fp_max_iter == 0 {
            return Err(Error::Config("fp_max_iter must be positive".into()));
        }
        self.initial_density.validate()
    }
}

pub fn default_eta(delta: f64, n_particles: usize) -> f64 {
    2.0 * (1.0 - 2.0 * delta) / n_particles.max(1) as f64
}

/// Partial configuration: every field optional. Used both for the config file
/// and for command-line overrides.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigLayer {
    pub delta: Option<f64>,
    pub alpha: Option<f64>,
    pub tau: Option<f64>,
    pub eta: Option<f64>,
    pub n_particles: Option<usize>,
    pub t_final: Option<f64>,
    pub initial_density: Option<InitialDensity>,
    pub fp_tol: Option<f64>,
    pub fp_max_iter: Option<usize>,
}

impl ConfigLayer {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Fields set in `other` win.
    pub fn merged(self, other: ConfigLayer) -> ConfigLayer {
        ConfigLayer {
            delta: other.delta.or(self.delta),
            alpha: other.alpha.or(self.alpha),
            tau: other.tau.or(self.tau),
            eta: other.eta.or(self.eta),
            n_particles: other.n_particles.or(self.n_particles),
            t_final: other.t_final.or(self.t_final),
            initial_density: other.initial_density.or(self.initial_density),
            fp_tol: other.fp_tol.or(self.fp_tol),
            fp_max_iter: other.fp_max_iter.or(self.fp_max_iter),
        }
    }

    /// Fill unset fields with defaults. `alpha` and `eta` defaults depend on
    /// the resolved `delta` and cell count.
    pub fn resolve(self) -> Result<SolverConfig> {
        let delta = self.delta.unwrap_or(0.01);
        let base = SolverConfig::new(delta);
        let n_particles = self.n_particles.unwrap_or(base.n_particles);
        let cfg = SolverConfig {
            delta,
            alpha: self.alpha.unwrap_or(base.alpha),
            tau: self.tau.unwrap_or(base.tau),
            eta: self.eta.unwrap_or_else(|| default_eta(delta, n_particles)),
            n_particles,
            t_final: self.t_final.unwrap_or(base.t_final),
            initial_density: self.initial_density.unwrap_or(base.initial_density),
            fp_tol: self.fp_tol.unwrap_or(base.fp_tol),
            fp_max_iter: self.fp_max_iter.unwrap_or(base.fp_max_iter),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = ConfigLayer::default().resolve().unwrap();
        assert_eq!(cfg.delta, 0.01);
        assert!((cfg.alpha - 1.98).abs() < 1e-15);
        assert!((cfg.eta - 2.0 * 0.98 / 150.0).abs() < 1e-15);
        assert_eq!(cfg.n_steps(), 15_000);
    }

    #[test]
    fn invalid_delta_is_rejected() {
        let layer = ConfigLayer {
            delta: Some(0.6),
            ..Default::default()
        };
        assert!(matches!(layer.resolve(), Err(Error::Config(_))));
    }

    #[test]
    fn eta_bound_enforced() {
        let layer = ConfigLayer {
            delta: Some(0.25),
            eta: Some(0.25),
            ..Default::default()
        };
        assert!(layer.resolve().is_err());
    }

    #[test]
    fn precedence_flags_over_file_over_defaults() {
        let file = ConfigLayer::from_toml_str(
            "delta = 0.02\ntau = 5e-4\ninitial_density = \"rho2\"\n",
        )
        .unwrap();
        let flags = ConfigLayer {
            tau: Some(1e-3),
            ..Default::default()
        };
        let cfg = file.merged(flags).resolve().unwrap();
        assert_eq!(cfg.delta, 0.02);
        assert_eq!(cfg.tau, 1e-3);
        assert_eq!(cfg.initial_density, InitialDensity::Rho2);
        assert!((cfg.alpha - 1.96).abs() < 1e-15);
    }

    #[test]
    fn file_accepts_tables_and_rejects_unknown_keys() {
        let layer = ConfigLayer::from_toml_str(
            "[initial_density.gaussian]\nmu = 0.3\nsigma = 0.02\n",
        )
        .unwrap();
        assert_eq!(
            layer.initial_density,
            Some(InitialDensity::Gaussian { mu: 0.3, sigma: 0.02 })
        );
        assert!(ConfigLayer::from_toml_str("detla = 0.1").is_err());
    }
}
