//! Monte-Carlo Wright-Fisher chain: `2N` gene copies, each generation drawn
//! as `Binomial(2N, k / 2N)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::density::InitialDensity;
use crate::error::{Error, Result};
use crate::par::{map_indexed, ExecMode};

/// Largest `2N` sampled by inverse transform.
pub const INVERSE_TRANSFORM_MAX: u32 = 64;

/// Replicates simulated per work unit.
const CHUNK: usize = 256;

/// Initial gene count of each replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WfStart {
    /// Every replicate starts from `k` copies.
    Count(u32),
    /// `p ~ rho_0` on `(delta, 1 - delta)`, then `k ~ Binomial(2N, p)`.
    Density { density: InitialDensity, delta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WfConfig {
    /// Number of gene copies `2N`.
    pub two_n: u32,
    pub n_generations: u32,
    pub n_replicates: usize,
    pub start: WfStart,
    pub seed: u64,
}

impl WfConfig {
    pub fn validate(&self) -> Result<()> {
        if self.two_n < 2 {
            return Err(Error::Config(format!("2N must be at least 2, got {}", self.two_n)));
        }
        if self.n_replicates == 0 {
            return Err(Error::Config("at least one replicate is required".into()));
        }
        match &self.start {
            WfStart::Count(k) if *k > self.two_n => Err(Error::Config(format!(
                "initial count {k} exceeds 2N = {}",
                self.two_n
            ))),
            WfStart::Density { density, delta } => {
                if !(*delta > 0.0 && *delta < 0.5) {
                    return Err(Error::Config(format!("delta must lie in (0, 1/2), got {delta}")));
                }
                density.validate()
            }
            _ => Ok(()),
        }
    }
}

/// One generation: `Binomial(2N, k / 2N)`.
pub fn wf_step<R: Rng + ?Sized>(k: u32, two_n: u32, rng: &mut R) -> u32 {
    if k == 0 || k >= two_n {
        return k.min(two_n);
    }
    let p = k as f64 / two_n as f64;
    binomial(two_n, p, rng)
}

fn binomial<R: Rng + ?Sized>(n: u32, p: f64, rng: &mut R) -> u32 {
    if p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n <= INVERSE_TRANSFORM_MAX {
        let u: f64 = rng.random();
        let odds = p / (1.0 - p);
        let mut pmf = (1.0 - p).powi(n as i32);
        let mut cdf = pmf;
        let mut j = 0;
        while u > cdf && j < n {
            pmf *= odds * (n - j) as f64 / (j + 1) as f64;
            j += 1;
            cdf += pmf;
        }
        j
    } else {
        Binomial::new(n as u64, p)
            .expect("probability lies in (0, 1)")
            .sample(rng) as u32
    }
}

/// Rejection sampler for a density on `(delta, 1 - delta)`.
#[derive(Debug, Clone)]
pub struct DensitySampler {
    density: InitialDensity,
    delta: f64,
    bound: f64,
}

impl DensitySampler {
    pub fn new(density: InitialDensity, delta: f64) -> Result<Self> {
        density.validate()?;
        let grid = 20_000;
        let mut bound = 0.0_f64;
        for j in 0..=grid {
            let x = delta + (1.0 - 2.0 * delta) * j as f64 / grid as f64;
            bound = bound.max(density.eval(x, delta)?);
        }
        if !(bound > 0.0) || !bound.is_finite() {
            return Err(Error::Config("density must be positive somewhere".into()));
        }
        Ok(Self {
            density,
            delta,
            bound: 1.1 * bound,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (lo, width) = (self.delta, 1.0 - 2.0 * self.delta);
        loop {
            let x = lo + width * rng.random::<f64>();
            let y = self.bound * rng.random::<f64>();
            // `x` lies inside the domain, so evaluation cannot fail.
            if y < self.density.eval(x, self.delta).unwrap_or(0.0) {
                return x;
            }
        }
    }
}

/// Independent, reproducible stream for one replicate.
pub fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Aggregate over all replicates. Sums are integers, so the result does not
/// depend on how replicates were distributed over threads.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixationEstimate {
    pub two_n: u32,
    pub n_replicates: usize,
    /// Replicates absorbed at 0 and at `2N`.
    pub lost: u64,
    pub fixed: u64,
    /// `sum_r k_r(t)` and `sum_r k_r(t)^2` for `t = 0..=n_generations`.
    pub count_sum: Vec<u64>,
    pub count_sq_sum: Vec<u128>,
}

impl FixationEstimate {
    pub fn p_fix_0(&self) -> f64 {
        self.lost as f64 / self.n_replicates as f64
    }

    pub fn p_fix_1(&self) -> f64 {
        self.fixed as f64 / self.n_replicates as f64
    }

    /// Replicates not absorbed by the final generation.
    pub fn unresolved(&self) -> u64 {
        self.n_replicates as u64 - self.lost - self.fixed
    }

    /// Binomial standard error of an absorption frequency `p`.
    pub fn std_error(&self, p: f64) -> f64 {
        (p * (1.0 - p) / self.n_replicates as f64).sqrt()
    }

    /// Mean allele frequency per generation with its standard error.
    pub fn mean_frequency_trace(&self) -> Vec<(f64, f64)> {
        let r = self.n_replicates as f64;
        let scale = self.two_n as f64;
        self.count_sum
            .iter()
            .zip(&self.count_sq_sum)
            .map(|(&s, &sq)| {
                let mean = s as f64 / r;
                let var = (sq as f64 / r - mean * mean).max(0.0);
                let se = if self.n_replicates > 1 {
                    (var / (r - 1.0)).sqrt()
                } else {
                    0.0
                };
                (mean / scale, se / scale)
            })
            .collect()
    }
}

/// Run every replicate for `n_generations` (absorbed replicates stay put).
pub fn estimate_fixation(config: &WfConfig, mode: ExecMode) -> Result<FixationEstimate> {
    config.validate()?;
    let sampler = match &config.start {
        WfStart::Density { density, delta } => Some(DensitySampler::new(density.clone(), *delta)?),
        WfStart::Count(_) => None,
    };
    let gens = config.n_generations as usize;
    let n_chunks = config.n_replicates.div_ceil(CHUNK);
    let partial = map_indexed(n_chunks, mode, |c| {
        let mut acc = FixationEstimate {
            two_n: config.two_n,
            n_replicates: 0,
            lost: 0,
            fixed: 0,
            count_sum: vec![0; gens + 1],
            count_sq_sum: vec![0; gens + 1],
        };
        let end = ((c + 1) * CHUNK).min(config.n_replicates);
        for r in c * CHUNK..end {
            let mut rng = replicate_rng(config.seed, r as u64);
            let mut k = match (&config.start, &sampler) {
                (WfStart::Count(k), _) => *k,
                (_, Some(s)) => {
                    let p = s.sample(&mut rng);
                    binomial(config.two_n, p, &mut rng)
                }
                _ => unreachable!("density start always has a sampler"),
            };
            for t in 0..=gens {
                if t > 0 {
                    k = wf_step(k, config.two_n, &mut rng);
                }
                acc.count_sum[t] += k as u64;
                acc.count_sq_sum[t] += (k as u128) * (k as u128);
            }
            if k == 0 {
                acc.lost += 1;
            } else if k == config.two_n {
                acc.fixed += 1;
            }
            acc.n_replicates += 1;
        }
        acc
    });
    let mut total = FixationEstimate {
        two_n: config.two_n,
        n_replicates: 0,
        lost: 0,
        fixed: 0,
        count_sum: vec![0; gens + 1],
        count_sq_sum: vec![0; gens + 1],
    };
    for p in partial {
        total.n_replicates += p.n_replicates;
        total.lost += p.lost;
        total.fixed += p.fixed;
        for t in 0..=gens {
            total.count_sum[t] += p.count_sum[t];
            total.count_sq_sum[t] += p.count_sq_sum[t];
        }
    }
    Ok(total)
}

/// Dense transition matrix `P[i][j] = C(2N, j) p^j (1-p)^(2N-j)`, `p = i / 2N`.
pub fn transition_matrix(two_n: u32) -> Vec<Vec<f64>> {
    let n = two_n as usize;
    (0..=n)
        .map(|i| {
            let p = i as f64 / n as f64;
            (0..=n)
                .map(|j| {
                    let lc = ln_choose(n, j);
                    let v = lc + xlny(j as f64, p) + xlny((n - j) as f64, 1.0 - p);
                    v.exp()
                })
                .collect()
        })
        .collect()
}

fn xlny(x: f64, y: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * y.ln()
    }
}

fn ln_choose(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).map(|i| ((n - i) as f64 / (i + 1) as f64).ln()).sum()
}

/// Probability of absorption at `2N` from every start, by iterating
/// `v <- P v` from the indicator of state `2N` until the update falls below `tol`.
pub fn exact_fixation_probabilities(two_n: u32, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    if two_n < 2 {
        return Err(Error::Config("2N must be at least 2".into()));
    }
    let p = transition_matrix(two_n);
    let n = two_n as usize;
    let mut v = vec![0.0; n + 1];
    v[n] = 1.0;
    for it in 1..=max_iter {
        let next: Vec<f64> = p
            .iter()
            .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        let change = next
            .iter()
            .zip(&v)
            .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        v = next;
        if change <= tol {
            return Ok(v);
        }
        if it == max_iter {
            return Err(Error::NotConverged {
                iterations: it,
                residual: change,
            });
        }
    }
    Ok(v)
}

/// CSV of fixation estimates with 95% normal confidence intervals.
pub fn write_fixation_csv<W: Write>(
    out: W,
    rows: &[(String, &FixationEstimate, Option<f64>)],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "label", "two_n", "replicates", "p_fix_0", "p_fix_1", "std_error", "ci_low", "ci_high",
        "unresolved", "reference",
    ])?;
    for (label, est, reference) in rows {
        let p = est.p_fix_1();
        let se = est.std_error(p);
        w.write_record([
            label.clone(),
            est.two_n.to_string(),
            est.n_replicates.to_string(),
            format!("{:.10e}", est.p_fix_0()),
            format!("{:.10e}", p),
            format!("{:.10e}", se),
            format!("{:.10e}", p - 1.96 * se),
            format!("{:.10e}", p + 1.96 * se),
            est.unresolved().to_string(),
            reference.map(|r| format!("{r:.10e}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn absorbing_states() {
        let mut rng = replicate_rng(1, 0);
        for _ in 0..100 {
            assert_eq!(wf_step(0, 8, &mut rng), 0);
            assert_eq!(wf_step(8, 8, &mut rng), 8);
            assert_eq!(wf_step(0, 500, &mut rng), 0);
            assert_eq!(wf_step(500, 500, &mut rng), 500);
        }
    }

    #[test]
    fn inverse_transform_mean() {
        let mut rng = replicate_rng(7, 3);
        let n = 200_000;
        let (two_n, k) = (40u32, 13u32);
        let samples: Vec<f64> = (0..n).map(|_| wf_step(k, two_n, &mut rng) as f64).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let p = k as f64 / two_n as f64;
        let se = (two_n as f64 * p * (1.0 - p) / n as f64).sqrt();
        assert!((mean - k as f64).abs() < 4.0 * se);
    }

    #[test]
    fn transition_rows_sum_to_one() {
        for row in transition_matrix(8) {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exact_absorption_is_linear() {
        let v = exact_fixation_probabilities(8, 1e-15, 10_000).unwrap();
        for (k, p) in v.iter().enumerate() {
            assert!((p - k as f64 / 8.0).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_runs_agree_across_modes() {
        let cfg = WfConfig {
            two_n: 100,
            n_generations: 50,
            n_replicates: 1000,
            start: WfStart::Count(30),
            seed: 42,
        };
        let a = estimate_fixation(&cfg, ExecMode::Sequential).unwrap();
        let b = estimate_fixation(&cfg, ExecMode::Parallel).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn deterministic_loss() {
        let cfg = WfConfig {
            two_n: 10,
            n_generations: 5,
            n_replicates: 10,
            start: WfStart::Count(0),
            seed: 0,
        };
        let e = estimate_fixation(&cfg, ExecMode::Sequential).unwrap();
        assert_eq!(e.p_fix_0(), 1.0);
        assert!(e.mean_frequency_trace().iter().all(|&(m, _)| m == 0.0));
    }
}
