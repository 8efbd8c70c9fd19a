//! Spatially uniform data at rest: the flow stays at rest and the density
//! follows the logistic law for `y = rho^gamma` exactly.
//!
//! ```text
//! cargo run --release --example logistic_growth
//! ```

use stifflab::model::{homeostatic_density, pressure, FluidState, Grid1D, ModelParams};
use stifflab::solver::{run, SolverConfig};

fn closed_form(rho0: f64, gamma: f64, g0: f64, pm: f64, t: f64) -> f64 {
    let y0 = rho0.powf(gamma);
    let a = (-gamma * g0 * pm * t).exp();
    (pm * y0 / (pm * a + y0 * (1.0 - a))).powf(1.0 / gamma)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = Grid1D::new(1.0, 32)?;
    for gamma in [1.0, 5.0, 40.0] {
        let params = ModelParams {
            gamma,
            g0: 1.0,
            pm: 1.0,
            ..Default::default()
        };
        let config = SolverConfig {
            t_end: 5.0,
            output_every: 0.5,
            dt_max: 0.05,
            ..Default::default()
        };
        let traj = run(FluidState::uniform(grid, 0.5)?, &params, &config)?;

        let worst = traj
            .snapshots
            .iter()
            .map(|s| {
                let exact = closed_form(0.5, gamma, 1.0, 1.0, s.t);
                ((s.rho[0] - exact) / exact).abs()
            })
            .fold(0.0, f64::max);
        let last = traj.final_state().unwrap();
        println!(
            "gamma = {gamma:>4}: rho(5) = {:.12}  p(5) = {:.6}  worst relative error = {worst:.2e}  (rest state: {})",
            last.rho[0],
            pressure(last.rho[0], gamma)?,
            last.u.iter().all(|v| *v == 0.0)
        );
        println!(
            "             homeostatic density = {:.12}",
            homeostatic_density(&params)
        );
    }
    Ok(())
}
