//! Closed-form Hele-Shaw pressure on an interval, and a descriptive comparison
//! with the pressure of a stiff (gamma = 160) bump run on its saturated block.

use stifflab::io::{build_initial, parse_config};
use stifflab::limit::{compare_to_darcy, hele_shaw_profile};
use stifflab::model::ModelParams;
use stifflab::solver::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let unit = ModelParams {
        g0: 1.0,
        pm: 1.0,
        nu0: 1.0,
        ..Default::default()
    };
    let prof = hele_shaw_profile(0.0, 2.0, &unit, 10_000)?;
    println!(
        "center pressure {:.12} vs 1 - 1/cosh(1) = {:.12}",
        prof.center_value,
        1.0 - 1.0 / 1f64.cosh()
    );
    println!("discrete ODE residual {:.3e}", prof.ode_residual());
    println!(
        "same residual from the rounded samples {:.3e}",
        prof.sampled_ode_residual()
    );

    let config = parse_config(include_str!("../configs/bump.json"))?.with_overrides(
        Some(160.0),
        None,
        None,
    )?;
    let traj = run(
        build_initial(&config)?,
        &config.params,
        &config.solver_config(),
    )?;
    let cmp = compare_to_darcy(traj.final_state().unwrap(), &config.params, 0.05)?;
    match cmp.interval {
        Some((a, b)) => println!(
            "saturated block [{a:.4}, {b:.4}] ({} cells): RMS deviation from Hele-Shaw = {:.4} P_M",
            cmp.cells, cmp.rms
        ),
        None => println!("no saturated block"),
    }
    Ok(())
}
