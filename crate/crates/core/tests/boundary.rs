use kimura_core::boundary::{detect_buffer, merge_and_update_densities};
use kimura_core::error::Error;
use kimura_core::solver::LagrangianSolver;
use kimura_core::{BulkScheme, InitialDensity, ParticleState, SolverConfig};
use proptest::prelude::*;

fn admissible(delta: f64, mut inner: Vec<f64>) -> Option<Vec<f64>> {
    inner.iter_mut().for_each(|u| *u = delta + *u * (1.0 - 2.0 * delta));
    inner.sort_by(f64::total_cmp);
    let mut x = vec![delta];
    x.extend(inner);
    x.push(1.0 - delta);
    x.windows(2).all(|w| w[1] > w[0]).then_some(x)
}

fn scan(x: &[f64], delta: f64, eta: f64) -> Option<(usize, usize)> {
    let mut i_c = None;
    let mut i_f = None;
    for (i, &xi) in x.iter().enumerate() {
        if i_c.is_none() && xi > delta + eta {
            i_c = Some(i);
        }
        if xi < 1.0 - delta - eta {
            i_f = Some(i);
        }
    }
    match (i_c, i_f) {
        (Some(c), Some(f)) if c <= f && c < x.len() - 1 => Some((c, f)),
        _ => None,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn buffer_indices_match_linear_scan(
        delta in 1e-3f64..0.2,
        eta_frac in 0.0f64..0.6,
        inner in prop::collection::vec(0.0f64..1.0, 1..64),
    ) {
        let Some(x) = admissible(delta, inner) else { return Ok(()) };
        let eta = eta_frac * (0.5 - delta);
        match (detect_buffer(&x, delta, eta), scan(&x, delta, eta)) {
            (Ok(r), Some((c, f))) => {
                prop_assert_eq!((r.i_c, r.i_f), (c, f));
                prop_assert_eq!(r.new_n_cells, f - c + 2);
            }
            (Err(Error::Absorbed), None) => {}
            (got, want) => prop_assert!(false, "detect_buffer {:?}, scan {:?}", got, want),
        }
    }

    #[test]
    fn merging_conserves_bulk_mass(
        delta in 1e-3f64..0.1,
        eta_frac in 0.0f64..0.4,
        start in prop::collection::vec(0.0f64..1.0, 3..64),
        moved in prop::collection::vec(0.0f64..1.0, 3..64),
        rho in prop::collection::vec(0.0f64..4.0, 64),
    ) {
        let n = start.len().min(moved.len());
        let (Some(x), Some(y)) = (
            admissible(delta, start[..n].to_vec()),
            admissible(delta, moved[..n].to_vec()),
        ) else { return Ok(()) };
        let state = ParticleState::from_positions(x, rho[..n + 1].to_vec()).unwrap();
        let eta = eta_frac * (0.5 - delta);
        let Ok(report) = detect_buffer(&y, delta, eta) else { return Ok(()) };
        let (merged, report) = merge_and_update_densities(&state, &y, &report).unwrap();
        let before: f64 = state.cell_masses().iter().sum();
        let after = merged.bulk_mass();
        prop_assert!((before - after).abs() <= 1e-14 * before.max(1.0), "{} vs {}", before, after);
        prop_assert_eq!(merged.n_cells(), report.new_n_cells);
        prop_assert!(merged.validate().is_ok());
        let left: f64 = state.cell_masses()[..report.i_c].iter().sum();
        let got_left = merged.cell_densities[0] * (merged.positions[1] - merged.positions[0]);
        prop_assert!((got_left - left).abs() <= 1e-14 * left.max(1.0));
    }
}

#[test]
fn total_mass_constant_over_ten_thousand_steps() {
    let mut cfg = SolverConfig::new(0.01);
    cfg.initial_density = InitialDensity::Rho2;
    cfg.t_final = 1.0;
    let mut solver = LagrangianSolver::new(cfg, BulkScheme::B).unwrap();
    let records = solver.run().unwrap();
    assert_eq!(records.len(), 10_001);
    let m0 = records[0].total_mass;
    for r in &records {
        assert!((r.total_mass - m0).abs() <= 1e-12, "t = {}: {}", r.t, r.total_mass - m0);
    }
    // Boundary masses only grow.
    assert!(records.windows(2).all(|w| w[1].a >= w[0].a && w[1].b >= w[0].b));
}

#[test]
fn long_run_empties_the_bulk() {
    let mut cfg = SolverConfig::new(0.01);
    cfg.t_final = 6.0;
    let mut solver = LagrangianSolver::new(cfg, BulkScheme::B).unwrap();
    let records = solver.run().unwrap();
    let last = records.last().unwrap();
    assert!(last.a + last.b > 1.0 - 1e-6, "a + b = {}", last.a + last.b);
}
