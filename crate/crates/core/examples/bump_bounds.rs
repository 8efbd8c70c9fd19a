//! Gaussian bump at gamma = 40: check the mass and energy envelopes along the run.

use stifflab::diagnostics::{gronwall_energy_check, mass_bound_check, pressure_l2};
use stifflab::io::{build_initial, parse_config};
use stifflab::solver::run;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_config(include_str!("../configs/bump.json"))?;
    let initial = build_initial(&config)?;
    let traj = run(initial, &config.params, &config.solver_config())?;

    let mass = mass_bound_check(&traj, &config.params);
    let energy = gronwall_energy_check(&traj, &config.params)?;
    for check in [&mass, &energy] {
        println!(
            "{:<16} pass = {:<5} worst margin = {:.4e} at t = {}",
            check.name, check.pass, check.worst_margin, check.t_worst
        );
    }

    let stats = &traj.step_stats;
    println!(
        "steps = {}, floor activations = {}, largest relative mass change in transport = {:.2e}",
        stats.steps(),
        stats.floor_activations,
        stats.max_transport_mass_drift
    );
    println!("||p||_L2(space-time) = {:.6}", pressure_l2(&traj));
    println!("\n  t      mass        E            int J");
    for r in traj.records.iter().step_by(10) {
        println!(
            "{:5.2}  {:.6e}  {:.6e}  {:.6e}",
            r.t,
            r.mass,
            r.energy.unwrap_or(f64::NAN),
            r.dissipation_cum
        );
    }
    Ok(())
}
