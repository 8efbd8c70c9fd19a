//! Transported weights damped by the maximal function of `|u_x|`, evolved
//! along the gamma = 40 bump run for three damping strengths.

use stifflab::compactness::run_with_weights;
use stifflab::io::{build_initial, parse_config};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_config(include_str!("../configs/bump.json"))?;
    let lambdas = [0.5, 1.0, 2.0];
    let out = run_with_weights(
        build_initial(&config)?,
        &config.params,
        &config.solver_config(),
        &lambdas,
    )?;
    for (k, lambda) in lambdas.iter().enumerate() {
        let m = out.mass[k];
        println!(
            "lambda = {lambda}: w in [{:.6}, {:.6}], int rho|ln w| = {:.6e}, C = {:.6e}{}",
            out.min_w[k],
            out.max_w[k],
            m.value,
            m.value / lambda,
            if m.saturated { " (log cap hit)" } else { "" }
        );
    }
    Ok(())
}
