//! Stiff-pressure limit: the bump run repeated for gamma = 5, 10, 20, 40, 80.
//!
//! The excess `(rho - 1)_+` should roughly halve with each doubling of gamma,
//! successive density histories should get closer, and the space-time norm
//! of the pressure should stay bounded.

use stifflab::io::{build_initial, parse_config};
use stifflab::limit::{run_sweep, SweepAxis, SweepPlan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_config(include_str!("../configs/bump.json"))?;
    let mut plan = SweepPlan::new(
        config.params,
        config.solver_config(),
        build_initial(&config)?,
        SweepAxis::Gamma,
        vec![5.0, 10.0, 20.0, 40.0, 80.0],
    )?;
    plan.kernel = None;
    let report = run_sweep(&plan);

    println!("gamma   excess      ||p||       |compl|     consistency  cauchy");
    for row in &report.rows {
        let m = row.metrics.as_ref().expect("member run failed");
        println!(
            "{:5}  {:.4e}  {:.4e}  {:.4e}  {:.4e}   {}",
            row.value,
            m.excess_l2,
            m.pressure_l2,
            m.complementarity_cum.abs(),
            m.consistency_rms,
            row.cauchy_to_previous
                .map_or("-".into(), |c| format!("{c:.4e}"))
        );
    }
    let trends = report.trends(0.05);
    println!("\n{trends:#?}");
    Ok(())
}
