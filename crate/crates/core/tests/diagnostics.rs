use approx::assert_relative_eq;

use stifflab::diagnostics::{
    consistency_residual, dissipation, energy, energy_envelope_constant, excess_norm,
    gronwall_energy_check, mass_bound_check, DiagnosticsError,
};
use stifflab::model::{FluidState, Grid1D, ModelParams};
use stifflab::solver::{run, SolverConfig};

fn bump(n: usize) -> FluidState {
    let grid = Grid1D::new(1.0, n).unwrap();
    let rho = grid
        .centers()
        .iter()
        .map(|x| 0.9 * (-((x - 0.5) / 0.1).powi(2)).exp())
        .collect();
    FluidState::new(grid, rho, vec![0.0; n + 1], 0.0).unwrap()
}

#[test]
fn linear_velocity_dissipation() {
    let grid = Grid1D::new(1.0, 50).unwrap();
    // u = x does not vanish at x = 1, so the state is built directly.
    let state = FluidState {
        grid,
        rho: vec![1.0; 50],
        u: (0..=50).map(|f| grid.face(f)).collect(),
        t: 0.0,
    };
    let params = ModelParams {
        mu: 1.0,
        xi: 0.5,
        ..Default::default()
    };
    assert_relative_eq!(dissipation(&state, &params), 1.5, max_relative = 1e-12);
}

#[test]
fn energy_of_saturated_rest_state() {
    let grid = Grid1D::new(3.0, 30).unwrap();
    let state = FluidState::uniform(grid, 1.0).unwrap();
    let params = ModelParams {
        gamma: 2.0,
        ..Default::default()
    };
    assert_relative_eq!(energy(&state, &params).unwrap(), 3.0, max_relative = 1e-13);
    let iso = ModelParams {
        gamma: 1.0,
        ..Default::default()
    };
    assert!(matches!(
        energy(&state, &iso),
        Err(DiagnosticsError::GammaTooSmall(_))
    ));
}

#[test]
fn consistency_is_empty_below_saturation() {
    let r = consistency_residual(&bump(100), &ModelParams::default(), 0.05).unwrap();
    assert!(r.empty);
    assert_eq!(r.cells, 0);
}

#[test]
fn vacuum_trajectory_meets_both_envelopes() {
    let grid = Grid1D::new(1.0, 16).unwrap();
    let params = ModelParams {
        gamma: 4.0,
        ..Default::default()
    };
    let cfg = SolverConfig {
        t_end: 0.2,
        output_every: 0.05,
        ..Default::default()
    };
    let traj = run(FluidState::uniform(grid, 0.0).unwrap(), &params, &cfg).unwrap();
    assert!(mass_bound_check(&traj, &params).pass);
    assert!(gronwall_energy_check(&traj, &params).unwrap().pass);
}

#[test]
fn logistic_mass_stays_under_exponential() {
    let grid = Grid1D::new(1.0, 16).unwrap();
    let params = ModelParams {
        gamma: 3.0,
        g0: 1.0,
        pm: 1.0,
        ..Default::default()
    };
    let cfg = SolverConfig {
        t_end: 3.0,
        output_every: 0.1,
        ..Default::default()
    };
    let traj = run(FluidState::uniform(grid, 0.5).unwrap(), &params, &cfg).unwrap();
    let m = mass_bound_check(&traj, &params);
    assert!(m.pass && m.worst_margin > 0.0, "{m:?}");
    let e = gronwall_energy_check(&traj, &params).unwrap();
    assert!(e.pass && e.worst_margin > 0.0, "{e:?}");
}

#[test]
fn bump_run_meets_envelopes_with_positive_margin() {
    let params = ModelParams {
        gamma: 20.0,
        mu: 5.0,
        g0: 3.0,
        pm: 1.75,
        ..Default::default()
    };
    let cfg = SolverConfig {
        t_end: 0.2,
        output_every: 0.02,
        ..Default::default()
    };
    let traj = run(bump(100), &params, &cfg).unwrap();
    let m = mass_bound_check(&traj, &params);
    let e = gronwall_energy_check(&traj, &params).unwrap();
    assert!(m.pass && m.worst_margin > 0.0, "{m:?}");
    assert!(e.pass && e.worst_margin > 0.0, "{e:?}");
    assert_eq!(traj.step_stats.floor_activations, 0);
}

#[test]
fn envelope_constant_scales_with_mass() {
    let p = ModelParams {
        gamma: 2.0,
        g0: 1.0,
        pm: 1.0,
        ..Default::default()
    };
    let c1 = energy_envelope_constant(&p, 1.0, 0.0);
    assert_relative_eq!(c1, 2.0, max_relative = 1e-15);
    assert_relative_eq!(
        energy_envelope_constant(&p, 3.0, 0.0),
        3.0 * c1,
        max_relative = 1e-15
    );
}

#[test]
fn excess_norm_shrinks_with_overshoot() {
    let grid = Grid1D::new(1.0, 10).unwrap();
    let a = FluidState::uniform(grid, 1.2).unwrap();
    let b = FluidState::uniform(grid, 1.1).unwrap();
    assert_relative_eq!(excess_norm(&a, 2.0).unwrap(), 0.2, max_relative = 1e-12);
    assert_relative_eq!(excess_norm(&b, 2.0).unwrap(), 0.1, max_relative = 1e-12);
}
