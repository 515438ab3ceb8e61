//! Independent term-by-term oracles for the discrete energy, dissipation,
//! variant-B residual and variant-A objective, on random admissible states.
//!
//! Each check returns the worst discrepancy found, or a description of the
//! first sample that exceeds the tolerance.

#![allow(dead_code)]

use kimura_core::lagrangian::{
    discrete_dissipation, discrete_free_energy, force_residual_b, free_energy_at, gradient_j, objective_j,
};
use kimura_core::ParticleState;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SAMPLES: usize = 1000;
/// Tolerance relative to the summed magnitude of the terms (at least 1).
pub const TOL: f64 = 1e-14;
/// Relative tolerance of the finite-difference gradient check.
pub const FD_TOL: f64 = 1e-6;

pub struct Sample {
    pub delta: f64,
    pub x: Vec<f64>,
    pub rho: Vec<f64>,
    pub y: Vec<f64>,
    pub tau: f64,
}

impl Sample {
    pub fn state(&self) -> ParticleState {
        ParticleState::from_positions(self.x.clone(), self.rho.clone()).unwrap()
    }

    fn masses(&self) -> Vec<f64> {
        self.rho.iter().enumerate().map(|(i, r)| r * (self.x[i + 1] - self.x[i])).collect()
    }
}

pub fn sorted_points(rng: &mut ChaCha8Rng, n: usize, delta: f64) -> Vec<f64> {
    loop {
        let mut inner: Vec<f64> = (0..n - 1).map(|_| rng.random_range(delta..1.0 - delta)).collect();
        inner.sort_by(f64::total_cmp);
        let mut x = Vec::with_capacity(n + 1);
        x.push(delta);
        x.extend(inner);
        x.push(1.0 - delta);
        if x.windows(2).all(|w| w[1] > w[0]) {
            return x;
        }
    }
}

fn sample(rng: &mut ChaCha8Rng) -> Sample {
    let delta = 10f64.powf(rng.random_range(-3.0..-0.5));
    let n = rng.random_range(2..=64);
    let x = sorted_points(rng, n, delta);
    let y = sorted_points(rng, n, delta);
    // Occasional empty cells exercise the 0 log 0 convention.
    let rho = (0..n)
        .map(|_| if rng.random_bool(0.05) { 0.0 } else { rng.random_range(0.0..3.0) })
        .collect();
    let tau = 10f64.powf(rng.random_range(-6.0..-2.0));
    Sample { delta, x, rho, y, tau }
}

pub fn samples() -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240917);
    (0..SAMPLES).map(|_| sample(&mut rng)).collect()
}

/// Sum of terms and of their magnitudes.
fn sum_with_scale(terms: impl IntoIterator<Item = f64>) -> (f64, f64) {
    terms.into_iter().fold((0.0, 0.0), |(s, a), t| (s + t, a + t.abs()))
}

/// Running worst `|got - want| / (scale max 1)`.
struct Worst(f64);

impl Worst {
    fn check(&mut self, got: f64, want: f64, scale: f64, what: impl FnOnce() -> String) -> Result<(), String> {
        let rel = (got - want).abs() / scale.max(1.0);
        self.0 = self.0.max(rel);
        if rel <= TOL {
            Ok(())
        } else {
            Err(format!("{}: got {got:e}, oracle {want:e}, scaled diff {rel:e}", what()))
        }
    }
}

fn oracle_energy(y: &[f64], m: &[f64]) -> (f64, f64) {
    sum_with_scale(m.iter().enumerate().flat_map(|(i, &mi)| {
        let v0 = (y[i] * (1.0 - y[i])).ln();
        let v1 = (y[i + 1] * (1.0 - y[i + 1])).ln();
        let entropy = if mi > 0.0 { mi * (mi / (y[i + 1] - y[i])).ln() } else { 0.0 };
        [0.5 * mi * v0, 0.5 * mi * v1, entropy]
    }))
}

pub fn check_free_energy(samples: &[Sample]) -> Result<f64, String> {
    let mut worst = Worst(0.0);
    for (k, s) in samples.iter().enumerate() {
        let state = s.state();
        let m = s.masses();
        let (want, scale) = oracle_energy(&s.x, &m);
        let got = discrete_free_energy(&state).map_err(|e| e.to_string())?;
        worst.check(got, want, scale, || format!("F_h sample {k}"))?;
        let (want, scale) = oracle_energy(&s.y, &m);
        let got = free_energy_at(&s.y, &state).map_err(|e| e.to_string())?;
        worst.check(got, want, scale, || format!("F_h(y) sample {k}"))?;
    }
    Ok(worst.0)
}

pub fn check_dissipation(samples: &[Sample]) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = Worst(0.0);
    for (k, s) in samples.iter().enumerate() {
        let state = s.state();
        let n = s.rho.len();
        let mut v: Vec<f64> = (0..=n).map(|_| rng.random_range(-5.0..5.0)).collect();
        v[0] = 0.0;
        v[n] = 0.0;
        let m = s.masses();
        let (want, scale) = sum_with_scale((0..n).flat_map(|i| {
            let left = v[i] * v[i] / (s.x[i] * (1.0 - s.x[i]));
            let right = v[i + 1] * v[i + 1] / (s.x[i + 1] * (1.0 - s.x[i + 1]));
            [0.25 * m[i] * left, 0.25 * m[i] * right]
        }));
        let got = discrete_dissipation(&state, &v).map_err(|e| e.to_string())?;
        worst.check(got, want, scale, || format!("dissipation sample {k}"))?;
    }
    Ok(worst.0)
}

pub fn check_residual_b(samples: &[Sample]) -> Result<f64, String> {
    let mut worst = Worst(0.0);
    for (k, s) in samples.iter().enumerate() {
        let m = s.masses();
        let n = m.len();
        let got = force_residual_b(&s.y, &s.state(), s.tau).map_err(|e| e.to_string())?;
        if got.len() != n - 1 {
            return Err(format!("sample {k}: residual has {} entries, expected {}", got.len(), n - 1));
        }
        for i in 1..n {
            let y = s.y[i];
            let mbar = 0.5 * (m[i - 1] + m[i]);
            let q = y * (1.0 - y);
            let (want, scale) = sum_with_scale([
                mbar * y / s.tau,
                -mbar * s.x[i] / s.tau,
                mbar * (1.0 - 2.0 * y),
                -m[i - 1] / (y - s.y[i - 1]) * q,
                m[i] / (s.y[i + 1] - y) * q,
            ]);
            worst.check(got[i - 1], want, scale, || format!("r_{i} sample {k}"))?;
        }
    }
    Ok(worst.0)
}

pub fn check_objective(samples: &[Sample]) -> Result<f64, String> {
    let mut worst = Worst(0.0);
    for (k, s) in samples.iter().enumerate() {
        let m = s.masses();
        let n = m.len();
        let (mv, mv_scale) = sum_with_scale((1..n).map(|i| {
            let c = (m[i - 1] + m[i]) / (2.0 * s.x[i] * (1.0 - s.x[i]));
            c * (s.y[i] - s.x[i]).powi(2) / (2.0 * s.tau)
        }));
        let (e, e_scale) = oracle_energy(&s.y, &m);
        let got = objective_j(&s.y, &s.state(), s.tau).map_err(|e| e.to_string())?;
        worst.check(got, e + mv, e_scale + mv_scale, || format!("J sample {k}"))?;
    }
    Ok(worst.0)
}

/// Central differences with a step of `1e-4` times the smaller neighbouring
/// gap, compared relative to the gradient's infinity norm.
pub fn check_gradient(samples: &[Sample]) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for (k, s) in samples.iter().enumerate() {
        let state = s.state();
        let grad = gradient_j(&s.y, &state, s.tau).map_err(|e| e.to_string())?;
        let gmax = grad.iter().fold(0.0_f64, |a, g| a.max(g.abs()));
        let mut y = s.y.clone();
        for i in 1..s.rho.len() {
            let gap = (s.y[i] - s.y[i - 1]).min(s.y[i + 1] - s.y[i]);
            let h = 1e-4 * gap;
            let y0 = y[i];
            y[i] = y0 + h;
            let jp = objective_j(&y, &state, s.tau).map_err(|e| e.to_string())?;
            y[i] = y0 - h;
            let jm = objective_j(&y, &state, s.tau).map_err(|e| e.to_string())?;
            y[i] = y0;
            let fd = (jp - jm) / (2.0 * h);
            let rel = (fd - grad[i - 1]).abs() / gmax;
            worst = worst.max(rel);
            if rel > FD_TOL {
                return Err(format!(
                    "dJ/dy_{i} sample {k} (delta {}): analytic {:e}, fd {fd:e}",
                    s.delta,
                    grad[i - 1]
                ));
            }
        }
    }
    Ok(worst)
}
