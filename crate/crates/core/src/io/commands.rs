//! Subcommand bodies shared by the binary and the tests.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::config::{build_initial, parse_config, ConfigError, RunConfig};
use super::output::{emit_outputs, emit_sweep, OutputDir, OutputError};
use super::verify::{emit_verify, verify_battery};
use crate::compactness::KernelSpec;
use crate::limit::{assemble_report, hele_shaw_profile, run_members, SweepAxis, SweepPlan};
use crate::model::ModelParams;

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Success = 0,
    Usage = 1,
    Numerical = 2,
    Verification = 3,
}

#[derive(Debug, Error)]
pub enum CommandError {
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Usage(String),
}

impl CommandError {
    /// Every error surfaced before or after the numerics is a usage problem.
    pub fn exit(&self) -> Exit {
        Exit::Usage
    }
}

/// Slack used by the sweep trend suite.
pub const TREND_SLACK: f64 = 0.05;
/// Largest allowed max/min ratio of the pressure norm across a gamma sweep.
pub const PRESSURE_RATIO_LIMIT: f64 = 3.0;
/// Smallest acceptable log-log slope of the first ε accumulator.
pub const EPS_SLOPE_MIN: f64 = 0.4;
pub const DEFAULT_GAMMAS: [f64; 5] = [5.0, 10.0, 20.0, 40.0, 80.0];

#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub gamma: Option<f64>,
    pub eps: Option<f64>,
    pub t_end: Option<f64>,
}

pub fn load_config(path: &Path, ov: Overrides) -> Result<RunConfig, CommandError> {
    let text = fs::read_to_string(path).map_err(|source| CommandError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(parse_config(&text)?.with_overrides(ov.gamma, ov.eps, ov.t_end)?)
}

pub fn cmd_run(config: &RunConfig, out: &Path, plots: bool) -> Result<Exit, CommandError> {
    let initial = build_initial(config)?;
    let traj = match crate::solver::run(initial, &config.params, &config.solver_config()) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("numerical failure: {e}");
            return Ok(Exit::Numerical);
        }
    };
    let manifest = emit_outputs(&traj, config, out, plots)?;
    let last = traj.records.last().expect("at least the initial record");
    println!(
        "t = {}  steps = {}  mass = {:.6e}  excess = {:.6e}  consistency = {:.4e}",
        last.t,
        traj.step_stats.steps(),
        last.mass,
        last.excess_l2,
        last.consistency_rms
    );
    println!(
        "wrote {} files to {}",
        manifest.files.len() + 1,
        out.display()
    );
    Ok(if manifest.exit_status == "pass" {
        Exit::Success
    } else {
        Exit::Verification
    })
}

fn plan_for(
    config: &RunConfig,
    axis: SweepAxis,
    values: Vec<f64>,
) -> Result<SweepPlan, CommandError> {
    let initial = build_initial(config)?;
    SweepPlan::new(config.params, config.solver_config(), initial, axis, values)
        .map_err(|e| CommandError::Usage(e.to_string()))
}

pub fn cmd_sweep(
    config: &RunConfig,
    axis: SweepAxis,
    values: Vec<f64>,
    out: &Path,
) -> Result<Exit, CommandError> {
    let mut plan = plan_for(config, axis, values)?;
    if axis == SweepAxis::Eps {
        plan.kernel = None;
    }
    let members = run_members(&plan);
    let report = assemble_report(&plan, &members);
    emit_sweep(&report, &members, config, out, TREND_SLACK)?;
    print!("{}", report.csv());
    if !report.all_succeeded() {
        return Ok(Exit::Numerical);
    }
    let tr = report.trends(TREND_SLACK);
    let ok = match axis {
        SweepAxis::Gamma => {
            tr.excess_decreasing
                && tr.complementarity_decreasing
                && tr.consistency_decreasing
                && tr.cauchy_decreasing
                && tr.pressure_ratio <= PRESSURE_RATIO_LIMIT
        }
        SweepAxis::Eps => {
            tr.eps_grad_decreasing
                && tr.eps_pressure_grad_decreasing
                && tr.eps_grad_slope.is_some_and(|s| s >= EPS_SLOPE_MIN)
        }
    };
    println!("trends: {}", if ok { "pass" } else { "FAIL" });
    Ok(if ok {
        Exit::Success
    } else {
        Exit::Verification
    })
}

pub fn cmd_verify(config: &RunConfig, seed: u64, out: &Path) -> Result<Exit, CommandError> {
    let (report, runs) = verify_battery(config, seed)?;
    emit_verify(&report, &runs, config, out)?;
    for m in &report.members {
        println!(
            "member {} scale {:.6}: {}",
            m.index,
            m.amplitude_scale,
            match (&m.error, m.pass) {
                (Some(e), _) => format!("error: {e}"),
                (None, true) => "pass".to_string(),
                (None, false) => "FAIL".to_string(),
            }
        );
    }
    Ok(if report.numerical_failure() {
        Exit::Numerical
    } else if report.pass {
        Exit::Success
    } else {
        Exit::Verification
    })
}

pub fn cmd_compactness(config: &RunConfig, out: &Path) -> Result<Exit, CommandError> {
    let values = match &config.sweep {
        Some(s) if s.axis == SweepAxis::Gamma => s.values.clone(),
        _ => DEFAULT_GAMMAS.to_vec(),
    };
    let mut plan = plan_for(config, SweepAxis::Gamma, values)?;
    plan.kernel = Some(KernelSpec::default());
    let members = run_members(&plan);
    let report = assemble_report(&plan, &members);
    let mut dir = OutputDir::create(out)?;
    let status = match (&report.compactness, &report.compactness_error) {
        (Some(c), _) => {
            dir.write("compactness.csv", "compactness", &c.csv())?;
            dir.write_json("compactness.json", "compactness", c)?;
            print!("{}", c.csv());
            println!(
                "decay ratio {:.4} (required {}), slope {:.4}: {}",
                c.decay_ratio,
                c.required_ratio,
                c.slope,
                if c.pass { "pass" } else { "FAIL" }
            );
            if c.pass {
                Exit::Success
            } else {
                Exit::Verification
            }
        }
        (None, err) => {
            eprintln!(
                "compactness table unavailable: {}",
                err.clone().unwrap_or_default()
            );
            Exit::Numerical
        }
    };
    let label = match status {
        Exit::Success => "pass",
        Exit::Verification => "verification_failed",
        _ => "numerical_failure",
    };
    dir.finish(Some(config), label)?;
    Ok(status)
}

pub fn cmd_heleshaw(
    params: &ModelParams,
    interval: (f64, f64),
    samples: usize,
    out: Option<&Path>,
) -> Result<Exit, CommandError> {
    let prof = hele_shaw_profile(interval.0, interval.1, params, samples)
        .map_err(|e| CommandError::Usage(e.to_string()))?;
    let residual = prof.ode_residual();
    println!("k = {}  center p = {:.12}", prof.k, prof.center_value);
    println!(
        "max ODE residual = {residual:.3e} (limit {:.3e})",
        1e-8 * params.pm
    );
    if let Some(dir) = out {
        let mut d = OutputDir::create(dir)?;
        let mut csv = String::from("x,p\n");
        for (x, p) in prof.x.iter().zip(&prof.p) {
            csv.push_str(&format!("{x},{p}\n"));
        }
        d.write("heleshaw.csv", "profile", &csv)?;
        d.finish(None, "pass")?;
    }
    Ok(if residual <= 1e-8 * params.pm {
        Exit::Success
    } else {
        Exit::Verification
    })
}
