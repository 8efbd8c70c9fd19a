//! Seeded invariant battery over presets with randomized amplitudes.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::config::{build_preset, ConfigError, RunConfig};
use super::output::{diagnostics_csv, OutputDir, OutputError, OutputManifest, Verdict};
use crate::diagnostics::{BoundCheckResult, DiagnosticsRecord};
use crate::solver::{run, SolverError, Trajectory};

pub const VERIFY_MEMBERS: usize = 4;
/// Amplitude multipliers are drawn uniformly from this range.
pub const AMPLITUDE_RANGE: (f64, f64) = (0.5, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemberVerdict {
    pub index: usize,
    pub amplitude_scale: f64,
    pub error: Option<String>,
    pub verdict: Option<Verdict>,
    pub structural: Vec<BoundCheckResult>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub preset: String,
    pub members: Vec<MemberVerdict>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn numerical_failure(&self) -> bool {
        self.members.iter().any(|m| m.error.is_some())
    }
}

/// Amplitude multipliers for a seed; the same seed always yields the same list.
pub fn draw_amplitudes(seed: u64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| rng.gen_range(AMPLITUDE_RANGE.0..AMPLITUDE_RANGE.1))
        .collect()
}

/// Mass drift allowed per transport substep: ten ulps per cell.
pub fn transport_drift_tolerance(n_cells: usize) -> f64 {
    10.0 * f64::EPSILON * n_cells as f64
}

fn structural_checks(traj: &Trajectory, n_cells: usize) -> Vec<BoundCheckResult> {
    let tol = transport_drift_tolerance(n_cells);
    let drift = traj.step_stats.max_transport_mass_drift;
    let floors = traj.step_stats.floor_activations as f64;
    vec![
        BoundCheckResult {
            name: "transport_mass_drift".to_string(),
            worst_margin: tol - drift,
            t_worst: 0.0,
            tolerance: 0.0,
            pass: drift <= tol,
        },
        BoundCheckResult {
            name: "floor_activations".to_string(),
            worst_margin: -floors,
            t_worst: 0.0,
            tolerance: 0.0,
            pass: floors == 0.0,
        },
    ]
}

/// Run every member and collect verdicts; order does not depend on scheduling.
pub fn verify_battery(
    config: &RunConfig,
    seed: u64,
) -> Result<(VerifyReport, Vec<Result<Trajectory, SolverError>>), ConfigError> {
    config.validate()?;
    let grid = config.grid();
    let scales = draw_amplitudes(seed, VERIFY_MEMBERS);
    let initials = scales
        .iter()
        .map(|&s| build_preset(&config.init.scaled(s), grid))
        .collect::<Result<Vec<_>, _>>()?;
    let solver = config.solver_config();
    let runs: Vec<Result<Trajectory, SolverError>> = initials
        .into_par_iter()
        .map(|st| run(st, &config.params, &solver))
        .collect();
    let members = runs
        .iter()
        .zip(&scales)
        .enumerate()
        .map(|(index, (r, &amplitude_scale))| match r {
            Ok(traj) => {
                let verdict = Verdict::of(traj, &config.params);
                let structural = structural_checks(traj, grid.n_cells());
                let pass = verdict.pass && structural.iter().all(|c| c.pass);
                MemberVerdict {
                    index,
                    amplitude_scale,
                    error: None,
                    verdict: Some(verdict),
                    structural,
                    pass,
                }
            }
            Err(e) => MemberVerdict {
                index,
                amplitude_scale,
                error: Some(e.to_string()),
                verdict: None,
                structural: Vec::new(),
                pass: false,
            },
        })
        .collect::<Vec<_>>();
    let pass = members.iter().all(|m| m.pass);
    Ok((
        VerifyReport {
            seed,
            preset: config.init.name().to_string(),
            members,
            pass,
        },
        runs,
    ))
}

/// `diagnostics.csv` of the battery: a `member` column followed by the run columns.
pub fn battery_csv(runs: &[Result<Trajectory, SolverError>]) -> String {
    let mut out = format!("member,{}\n", DiagnosticsRecord::CSV_HEADER);
    for (i, r) in runs.iter().enumerate() {
        if let Ok(traj) = r {
            for line in diagnostics_csv(&traj.records).lines().skip(1) {
                out.push_str(&format!("{i},{line}\n"));
            }
        }
    }
    out
}

pub fn emit_verify(
    report: &VerifyReport,
    runs: &[Result<Trajectory, SolverError>],
    config: &RunConfig,
    out_dir: &Path,
) -> Result<OutputManifest, OutputError> {
    let mut dir = OutputDir::create(out_dir)?;
    dir.write("diagnostics.csv", "diagnostics", &battery_csv(runs))?;
    dir.write_json("verdict.json", "verdict", report)?;
    let status = if report.numerical_failure() {
        "numerical_failure"
    } else if report.pass {
        "pass"
    } else {
        "verification_failed"
    };
    dir.finish(Some(config), status)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn amplitudes_are_reproducible_and_in_range() {
        let a = draw_amplitudes(7, 4);
        assert_eq!(a, draw_amplitudes(7, 4));
        assert_ne!(a, draw_amplitudes(8, 4));
        assert!(a.iter().all(|v| (0.5..1.0).contains(v)));
    }

    #[test]
    fn small_battery_passes() {
        let cfg = super::super::config::parse_config(
            r#"{"grid": {"n_cells": 50}, "params": {"gamma": 5, "mu": 1}, "time": {"t_end": 0.05}}"#,
        )
        .unwrap();
        let (report, runs) = verify_battery(&cfg, 3).unwrap();
        assert_eq!(report.members.len(), VERIFY_MEMBERS);
        assert!(report.pass, "{report:?}");
        assert_eq!(battery_csv(&runs).lines().count(), 1 + VERIFY_MEMBERS * 6);
    }
}
