mod common;

use common::*;
use kimura_core::lagrangian::discrete_dissipation;
use kimura_core::ParticleState;

#[test]
fn free_energy_matches_oracle() {
    check_free_energy(&samples()).unwrap();
}

#[test]
fn dissipation_matches_oracle() {
    check_dissipation(&samples()).unwrap();
}

#[test]
fn dissipation_rejects_moving_endpoints() {
    let state = ParticleState::from_positions(vec![0.1, 0.5, 0.9], vec![1.0, 1.0]).unwrap();
    assert!(discrete_dissipation(&state, &[0.1, 0.0, 0.0]).is_err());
    assert!(discrete_dissipation(&state, &[0.0, 1.0]).is_err());
}

#[test]
fn residual_b_matches_oracle() {
    check_residual_b(&samples()).unwrap();
}

#[test]
fn objective_matches_oracle() {
    check_objective(&samples()).unwrap();
}

#[test]
fn gradient_matches_central_differences() {
    check_gradient(&samples()).unwrap();
}

#[test]
fn sampled_states_cover_the_size_range() {
    let s = samples();
    assert_eq!(s.len(), SAMPLES);
    let sizes: Vec<usize> = s.iter().map(|s| s.rho.len()).collect();
    assert_eq!(sizes.iter().min(), Some(&2));
    assert_eq!(sizes.iter().max(), Some(&64));
}
