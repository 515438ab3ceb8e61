use kimura_core::experiments::fixation_integrals;
use kimura_core::wright_fisher::{estimate_fixation, replicate_rng, wf_step, WfConfig, WfStart};
use kimura_core::{ExecMode, InitialDensity};

#[test]
fn binomial_mean_from_the_midpoint() {
    for two_n in [8u32, 200] {
        let k = two_n / 2;
        let mut rng = replicate_rng(11, two_n as u64);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = wf_step(k, two_n, &mut rng) as f64;
            s += x;
            s2 += x * x;
        }
        let mean = s / n as f64;
        let var = s2 / n as f64 - mean * mean;
        let se = (var / n as f64).sqrt();
        assert!((mean - k as f64).abs() <= 3.0 * se, "2N = {two_n}: mean {mean}, se {se}");
        let p = 0.5;
        let want_var = two_n as f64 * p * (1.0 - p);
        assert!((var - want_var).abs() < 0.02 * want_var, "variance {var} vs {want_var}");
    }
}

#[test]
fn sampled_initial_density_fixes_at_the_first_moment() {
    let delta = 0.01;
    let (_, b) = fixation_integrals(&InitialDensity::Rho1, delta).unwrap();
    assert!((b - 0.547040).abs() < 5e-7, "quadrature {b}");
    let est = estimate_fixation(
        &WfConfig {
            two_n: 200,
            n_generations: 4000,
            n_replicates: 10_000,
            start: WfStart::Density {
                density: InitialDensity::Rho1,
                delta,
            },
            seed: 5,
        },
        ExecMode::Parallel,
    )
    .unwrap();
    assert_eq!(est.unresolved(), 0);
    let p = est.p_fix_1();
    let se = est.std_error(p);
    assert!((p - b).abs() <= 3.0 * se, "p_fix_1 {p} vs {b} (se {se})");
}

#[test]
fn narrow_start_fixes_at_its_location() {
    let delta = 0.01;
    let density = InitialDensity::Gaussian { mu: 0.3, sigma: 0.01 };
    let (_, b) = fixation_integrals(&density, delta).unwrap();
    assert!((b - 0.3).abs() < 1e-6);
    let est = estimate_fixation(
        &WfConfig {
            two_n: 100,
            n_generations: 3000,
            n_replicates: 20_000,
            start: WfStart::Density { density, delta },
            seed: 9,
        },
        ExecMode::Parallel,
    )
    .unwrap();
    let p = est.p_fix_1();
    assert!((p - b).abs() <= 3.0 * est.std_error(p), "{p}");
}
