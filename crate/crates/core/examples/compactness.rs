//! Kernel-based compactness diagnostic on the gamma family of bump runs, with
//! a grid-scale checkerboard family as the negative control.

use stifflab::compactness::{
    criterion_sweep, kernel_l1_norm, normalized_kernel_mass, CompactnessReport, KernelSpec,
};
use stifflab::io::{build_initial, parse_config};
use stifflab::model::FluidState;
use stifflab::solver::run;

fn show(label: &str, r: &CompactnessReport) {
    println!("{label}");
    for (h, v) in r.h.iter().zip(&r.sup_value) {
        println!("  h = {h:<7} sup = {v:.6e}");
    }
    println!(
        "  decay ratio = {:.3} (required {}), pass = {}",
        r.decay_ratio, r.required_ratio, r.pass
    );
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = KernelSpec::default();
    for &h in &spec.h_list {
        println!(
            "||K_h||_L1 at h = {h}: {:.6}",
            kernel_l1_norm(h, spec.quad_nodes)
        );
    }
    println!(
        "normalized kernel mass at h0 = {}: {:.6}\n",
        spec.h0(),
        normalized_kernel_mass(spec.h0())?
    );

    let config = parse_config(include_str!("../configs/bump.json"))?;
    let initial = build_initial(&config)?;
    let family = [5.0, 10.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|&gamma| {
            let mut p = config.params;
            p.gamma = gamma;
            run(initial.clone(), &p, &config.solver_config()).map(|t| t.snapshots)
        })
        .collect::<Result<Vec<_>, _>>()?;
    show("bump family", &criterion_sweep(&family, &spec, 3.0)?);

    let grid = initial.grid;
    let checker: Vec<Vec<FluidState>> = (0..3)
        .map(|k| {
            let amp = 0.2 + 0.1 * k as f64;
            let rho = (0..grid.n_cells())
                .map(|i| 0.5 + if i % 2 == 0 { amp } else { -amp })
                .collect();
            vec![FluidState::new(grid, rho, vec![0.0; grid.n_faces()], 0.0).unwrap()]
        })
        .collect();
    show(
        "checkerboard family",
        &criterion_sweep(&checker, &spec, 3.0)?,
    );
    Ok(())
}
