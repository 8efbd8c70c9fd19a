//! Vanishing artificial diffusion at gamma = 10.

use stifflab::io::{build_initial, parse_config};
use stifflab::limit::{run_sweep, SweepAxis, SweepPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_config(include_str!("../configs/bump.json"))?.with_overrides(
        Some(10.0),
        None,
        None,
    )?;
    let mut plan = SweepPlan::new(
        config.params,
        config.solver_config(),
        build_initial(&config)?,
        SweepAxis::Eps,
        vec![1e-2, 1e-3, 1e-4],
    )?;
    plan.kernel = None;
    let report = run_sweep(&plan);
    for row in &report.rows {
        let m = row.metrics.as_ref().expect("member run failed");
        println!(
            "eps = {:.0e}: eps*||rho_x||^2 = {:.4e}, eps*gamma*int rho^(gamma-2) rho_x^2 = {:.4e}",
            row.value, m.eps_grad_cum, m.eps_pressure_grad_cum
        );
    }
    let t = report.trends(0.05);
    if let Some(slope) = t.eps_grad_slope {
        println!("log-log slope of the first term: {slope:.3}");
    }
    Ok(())
}
