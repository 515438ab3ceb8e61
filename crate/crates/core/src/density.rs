//! Initial probability densities on the truncated domain `(delta, 1 - delta)`.
//!
//! Two profiles are used throughout the experiments: a smooth sine-perturbed
//! linear profile ([`rho1`]) and a bimodal truncated-Gaussian mixture on a
//! uniform background ([`rho2`]). Both integrate to one on the truncated
//! domain.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check_domain(x: f64, delta: f64) -> Result<()> {
    // Allow a few ulps of slack so grid points computed as delta + i*h are accepted.
    let slack = 4.0 * f64::EPSILON;
    if !x.is_finite() || x < delta - slack || x > 1.0 - delta + slack {
        return Err(Error::Domain {
            x,
            lo: delta,
            hi: 1.0 - delta,
        });
    }
    Ok(())
}

/// `(2 + 6x + (pi/2) sin(2 pi (x - delta)/(1 - 2 delta))) / (5 (1 - 2 delta))`.
pub fn rho1(x: f64, delta: f64) -> Result<f64> {
    check_domain(x, delta)?;
    let width = 1.0 - 2.0 * delta;
    let wave = 0.5 * PI * (2.0 * PI * (x - delta) / width).sin();
    Ok((2.0 + 6.0 * x + wave) / (5.0 * width))
}

/// Gaussian restricted to `(delta, 1 - delta)` and renormalized to unit mass there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncatedGaussian {
    pub mu: f64,
    pub sigma: f64,
}

impl TruncatedGaussian {
    pub fn new(mu: f64, sigma: f64) -> Self {
        Self { mu, sigma }
    }

    /// Mass of the untruncated Gaussian on `(delta, 1 - delta)`.
    pub fn mass(&self, delta: f64) -> f64 {
        let z = |x: f64| (x - self.mu) / (self.sigma * SQRT_2);
        0.5 * (libm::erf(z(1.0 - delta)) - libm::erf(z(delta)))
    }

    pub fn pdf(&self, x: f64, delta: f64) -> f64 {
        let u = (x - self.mu) / self.sigma;
        let raw = (-0.5 * u * u).exp() / (self.sigma * (2.0 * PI).sqrt());
        raw / self.mass(delta)
    }
}

/// Two truncated Gaussians over a uniform background,
/// `c1 Phi1 + c2 Phi2 + (1 - c1 - c2)/(1 - 2 delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMixture {
    pub c1: f64,
    pub c2: f64,
    pub first: TruncatedGaussian,
    pub second: TruncatedGaussian,
}

impl Default for GaussianMixture {
    fn default() -> Self {
        Self {
            c1: 0.6,
            c2: 0.2,
            first: TruncatedGaussian::new(0.2, 0.1),
            second: TruncatedGaussian::new(0.7, 0.1),
        }
    }
}

impl GaussianMixture {
    pub fn eval(&self, x: f64, delta: f64) -> Result<f64> {
        check_domain(x, delta)?;
        let background = (1.0 - self.c1 - self.c2) / (1.0 - 2.0 * delta);
        Ok(self.c1 * self.first.pdf(x, delta) + self.c2 * self.second.pdf(x, delta) + background)
    }
}

pub fn rho2(x: f64, delta: f64) -> Result<f64> {
    GaussianMixture::default().eval(x, delta)
}

/// Initial density selector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InitialDensity {
    Rho1,
    Rho2,
    /// A single truncated Gaussian; a narrow one approximates a point mass.
    Gaussian { mu: f64, sigma: f64 },
    /// Piecewise-linear interpolation of `(x, value)` samples, renormalized to unit mass.
    Custom { samples: Vec<(f64, f64)> },
}

impl InitialDensity {
    pub fn name(&self) -> &'static str {
        match self {
            InitialDensity::Rho1 => "rho1",
            InitialDensity::Rho2 => "rho2",
            InitialDensity::Gaussian { .. } => "gaussian",
            InitialDensity::Custom { .. } => "custom",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            InitialDensity::Gaussian { sigma, .. } if !(*sigma > 0.0) => {
                Err(Error::Config("gaussian sigma must be positive".into()))
            }
            InitialDensity::Custom { samples } => {
                if samples.len() < 2 {
                    return Err(Error::Config("custom density needs at least two samples".into()));
                }
                if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(Error::Config("custom density abscissae must increase".into()));
                }
                if samples.iter().any(|s| !(s.1 >= 0.0) || !s.0.is_finite()) {
                    return Err(Error::Config("custom density values must be finite and nonnegative".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Evaluate the density at `x` in `[delta, 1 - delta]`.
    pub fn eval(&self, x: f64, delta: f64) -> Result<f64> {
        match self {
            InitialDensity::Rho1 => rho1(x, delta),
            InitialDensity::Rho2 => rho2(x, delta),
            InitialDensity::Gaussian { mu, sigma } => {
                check_domain(x, delta)?;
                Ok(TruncatedGaussian::new(*mu, *sigma).pdf(x, delta))
            }
            InitialDensity::Custom { samples } => {
                check_domain(x, delta)?;
                Ok(custom_raw(samples, x) / custom_mass(samples, delta))
            }
        }
    }
}

fn custom_raw(samples: &[(f64, f64)], x: f64) -> f64 {
    let first = samples[0];
    let last = samples[samples.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let k = samples.partition_point(|s| s.0 <= x);
    let (x0, y0) = samples[k - 1];
    let (x1, y1) = samples[k];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Exact integral of the clamped piecewise-linear interpolant over `(delta, 1 - delta)`.
fn custom_mass(samples: &[(f64, f64)], delta: f64) -> f64 {
    let lo = delta;
    let hi = 1.0 - delta;
    let mut knots: Vec<f64> = vec![lo, hi];
    knots.extend(samples.iter().map(|s| s.0).filter(|&x| x > lo && x < hi));
    knots.sort_by(f64::total_cmp);
    knots
        .windows(2)
        .map(|w| 0.5 * (custom_raw(samples, w[0]) + custom_raw(samples, w[1])) * (w[1] - w[0]))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho1_endpoints() {
        let d = 0.01;
        let left = rho1(d, d).unwrap();
        assert!((left - 2.06 / (5.0 * 0.98)).abs() < 1e-15);
        let right = rho1(1.0 - d, d).unwrap();
        let expect = (2.0 + 6.0 * (1.0 - d)) / (5.0 * (1.0 - 2.0 * d));
        assert!((right - expect).abs() < 1e-13);
    }

    #[test]
    fn out_of_domain_is_rejected() {
        assert!(matches!(rho1(0.005, 0.01), Err(Error::Domain { .. })));
        assert!(rho2(0.999, 0.01).is_err());
        assert!(InitialDensity::Gaussian { mu: 0.5, sigma: 0.1 }.eval(-0.1, 0.01).is_err());
    }

    #[test]
    fn degenerate_mixture_is_uniform() {
        let mix = GaussianMixture {
            c1: 0.0,
            c2: 0.0,
            ..GaussianMixture::default()
        };
        for &x in &[0.01, 0.3, 0.5, 0.99] {
            assert!((mix.eval(x, 0.01).unwrap() - 1.0 / 0.98).abs() < 1e-14);
        }
    }

    #[test]
    fn rho2_mode_exceeds_trough() {
        assert!(rho2(0.2, 0.01).unwrap() > rho2(0.45, 0.01).unwrap());
    }

    #[test]
    fn custom_table_is_normalized() {
        let d = 0.1;
        let dens = InitialDensity::Custom {
            samples: vec![(0.0, 1.0), (0.5, 3.0), (1.0, 1.0)],
        };
        let n = 20_000;
        let h = (1.0 - 2.0 * d) / n as f64;
        let total: f64 = (0..n)
            .map(|i| dens.eval(d + (i as f64 + 0.5) * h, d).unwrap() * h)
            .sum();
        assert!((total - 1.0).abs() < 1e-8);
    }

    #[test]
    fn custom_table_validation() {
        let bad = InitialDensity::Custom {
            samples: vec![(0.5, 1.0), (0.2, 1.0)],
        };
        assert!(bad.validate().is_err());
        let neg = InitialDensity::Custom {
            samples: vec![(0.0, -1.0), (1.0, 1.0)],
        };
        assert!(neg.validate().is_err());
    }
}
