//! Drive a run from JSON text and write the standard output files.
//!
//! Pass an output directory as the first argument, otherwise a temporary one
//! is used and removed on exit.

use std::path::PathBuf;

use stifflab::io::{build_initial, emit_outputs, parse_config};
use stifflab::solver::run;

const CONFIG: &str = r#"{
  "grid": { "n_cells": 200 },
  "params": { "gamma": 20, "mu": 5, "g0": 3, "pm": 1.75 },
  "init": { "preset": "plateau", "r_in": 0.8, "w": 0.15 },
  "time": { "t_end": 0.2 }
}"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = parse_config(CONFIG)?;
    println!("{}", config.to_json());
    let traj = run(
        build_initial(&config)?,
        &config.params,
        &config.solver_config(),
    )?;

    let tmp;
    let out: PathBuf = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            tmp = std::env::temp_dir().join("stifflab-config-run");
            tmp.clone()
        }
    };
    let manifest = emit_outputs(&traj, &config, &out, true)?;
    println!("run {} -> {}", manifest.run_id, manifest.exit_status);
    for f in &manifest.files {
        println!("  {:<18} {}", f.path, f.role);
    }
    Ok(())
}
