//! Writing runs and sweeps to disk.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::config::RunConfig;
use crate::diagnostics::{
    gronwall_energy_check, mass_bound_check, BoundCheckResult, DiagnosticsRecord,
};
use crate::limit::{SweepReport, SweepTrends};
use crate::model::{pressure, InitialWarning, ModelParams};
use crate::solver::{SolverError, Trajectory};

/// Bumped whenever a CSV column is added, removed, renamed or reordered.
pub const SCHEMA_VERSION: u32 = 1;

pub const SNAPSHOT_HEADER: &str = "t,x,rho,u,p";

#[derive(Debug, Error)]
pub enum OutputError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ManifestEntry {
    /// Relative to the output directory.
    pub path: String,
    pub role: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputManifest {
    pub schema_version: u32,
    pub run_id: String,
    pub config: Option<RunConfig>,
    pub files: Vec<ManifestEntry>,
    pub exit_status: String,
}

/// Pass/fail summary of a single run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub checks: Vec<BoundCheckResult>,
    pub floor_activations: usize,
    pub max_transport_mass_drift: f64,
    pub warnings: Vec<InitialWarning>,
    pub pass: bool,
}

impl Verdict {
    pub fn of(traj: &Trajectory, params: &ModelParams) -> Self {
        let mut checks = vec![mass_bound_check(traj, params)];
        if let Ok(e) = gronwall_energy_check(traj, params) {
            checks.push(e);
        }
        checks.push(monotone_dissipation(traj));
        let pass = checks.iter().all(|c| c.pass);
        Self {
            checks,
            floor_activations: traj.step_stats.floor_activations,
            max_transport_mass_drift: traj.step_stats.max_transport_mass_drift,
            warnings: traj.warnings.clone(),
            pass,
        }
    }
}

/// `E >= 0` and cumulative dissipation nondecreasing over the outputs.
fn monotone_dissipation(traj: &Trajectory) -> BoundCheckResult {
    let mut worst = f64::INFINITY;
    let mut t_worst = 0.0;
    for w in traj.records.windows(2) {
        let margin = w[1].dissipation_cum - w[0].dissipation_cum;
        if margin < worst {
            worst = margin;
            t_worst = w[1].t;
        }
    }
    for r in &traj.records {
        let e = r.energy.unwrap_or(0.0);
        if e < worst {
            worst = e;
            t_worst = r.t;
        }
    }
    if !worst.is_finite() {
        worst = 0.0;
    }
    BoundCheckResult {
        name: "energy_sign_and_dissipation_monotone".to_string(),
        worst_margin: worst,
        t_worst,
        tolerance: 0.0,
        pass: worst >= 0.0,
    }
}

pub fn diagnostics_csv(records: &[DiagnosticsRecord]) -> String {
    let mut out = String::from(DiagnosticsRecord::CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

pub fn snapshots_csv(traj: &Trajectory, gamma: f64) -> String {
    let mut out = String::from(SNAPSHOT_HEADER);
    out.push('\n');
    for s in &traj.snapshots {
        for i in 0..s.grid.n_cells() {
            let p = pressure(s.rho[i], gamma).unwrap_or(f64::NAN);
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                s.t,
                s.grid.center(i),
                s.rho[i],
                s.cell_velocity(i),
                p
            );
        }
    }
    out
}

/// Stable identifier derived from the configuration text (64-bit FNV-1a).
pub fn run_id(config: &RunConfig) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in serde_json::to_vec(config).expect("config serializes") {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    format!("{h:016x}")
}

/// Accumulates files written into one directory.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self, OutputError> {
        fs::create_dir_all(root).map_err(|source| OutputError::Io {
            path: root.to_path_buf(),
            source,
        })?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, role: &str, contents: &str) -> Result<(), OutputError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|source| OutputError::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
        fs::write(&path, contents).map_err(|source| OutputError::Io { path, source })?;
        self.files.push(ManifestEntry {
            path: rel.to_string(),
            role: role.to_string(),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(
        &mut self,
        rel: &str,
        role: &str,
        value: &T,
    ) -> Result<(), OutputError> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(rel, role, &text)
    }

    /// Write `manifest.json` and return the manifest.
    pub fn finish(
        mut self,
        config: Option<&RunConfig>,
        exit_status: &str,
    ) -> Result<OutputManifest, OutputError> {
        let manifest = OutputManifest {
            schema_version: SCHEMA_VERSION,
            run_id: config.map(run_id).unwrap_or_default(),
            config: config.cloned(),
            files: std::mem::take(&mut self.files),
            exit_status: exit_status.to_string(),
        };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        let path = self.root.join("manifest.json");
        fs::write(&path, text).map_err(|source| OutputError::Io { path, source })?;
        Ok(manifest)
    }
}

/// Write diagnostics, snapshots, verdict and optional plots of one run.
pub fn emit_outputs(
    traj: &Trajectory,
    config: &RunConfig,
    out_dir: &Path,
    plots: bool,
) -> Result<OutputManifest, OutputError> {
    let mut dir = OutputDir::create(out_dir)?;
    let verdict = write_run_files(&mut dir, "", traj, &config.params, plots)?;
    dir.finish(
        Some(config),
        if verdict.pass {
            "pass"
        } else {
            "verification_failed"
        },
    )
}

/// Files of one run under `prefix` inside `dir`; returns its verdict.
pub fn write_run_files(
    dir: &mut OutputDir,
    prefix: &str,
    traj: &Trajectory,
    params: &ModelParams,
    plots: bool,
) -> Result<Verdict, OutputError> {
    dir.write(
        &format!("{prefix}diagnostics.csv"),
        "diagnostics",
        &diagnostics_csv(&traj.records),
    )?;
    dir.write(
        &format!("{prefix}snapshots.csv"),
        "snapshots",
        &snapshots_csv(traj, params.gamma),
    )?;
    let verdict = Verdict::of(traj, params);
    dir.write_json(&format!("{prefix}verdict.json"), "verdict", &verdict)?;
    if plots {
        let t: Vec<f64> = traj.records.iter().map(|r| r.t).collect();
        let series: [(&str, Vec<f64>); 3] = [
            (
                "energy",
                traj.records
                    .iter()
                    .map(|r| r.energy.unwrap_or(f64::NAN))
                    .collect(),
            ),
            ("mass", traj.records.iter().map(|r| r.mass).collect()),
            ("excess", traj.records.iter().map(|r| r.excess_l2).collect()),
        ];
        for (name, y) in series {
            dir.write(
                &format!("{prefix}{name}.svg"),
                "plot",
                &line_chart_svg(name, &t, &y),
            )?;
        }
    }
    Ok(verdict)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary<'a> {
    pub report: &'a SweepReport,
    pub trends: SweepTrends,
}

/// Report tables plus one subdirectory per successful member.
pub fn emit_sweep(
    report: &SweepReport,
    members: &[Result<Trajectory, SolverError>],
    config: &RunConfig,
    out_dir: &Path,
    slack: f64,
) -> Result<OutputManifest, OutputError> {
    let mut dir = OutputDir::create(out_dir)?;
    dir.write("sweep.csv", "sweep_report", &report.csv())?;
    if let Some(c) = &report.compactness {
        dir.write("compactness.csv", "compactness", &c.csv())?;
    }
    let summary = SweepSummary {
        report,
        trends: report.trends(slack),
    };
    dir.write_json("sweep.json", "sweep_report", &summary)?;
    for (row, member) in report.rows.iter().zip(members) {
        if let Ok(traj) = member {
            let mut params = config.params;
            match report.axis {
                crate::limit::SweepAxis::Gamma => params.gamma = row.value,
                crate::limit::SweepAxis::Eps => params.eps = row.value,
            }
            let prefix = format!("{}_{}/", report.axis.name(), row.value);
            dir.write(
                &format!("{prefix}diagnostics.csv"),
                "diagnostics",
                &diagnostics_csv(&traj.records),
            )?;
            dir.write_json(
                &format!("{prefix}verdict.json"),
                "verdict",
                &Verdict::of(traj, &params),
            )?;
        }
    }
    let status = if report.all_succeeded() {
        "pass"
    } else {
        "numerical_failure"
    };
    dir.finish(Some(config), status)
}

/// Minimal standalone SVG line chart; non-finite points are skipped.
pub fn line_chart_svg(title: &str, x: &[f64], y: &[f64]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 400.0;
    const M: f64 = 50.0;
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| a.is_finite() && b.is_finite())
        .map(|(a, b)| (*a, *b))
        .collect();
    let range = |v: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = v.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), a| {
            (l.min(a), h.max(a))
        });
        if !lo.is_finite() {
            (0.0, 1.0)
        } else if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, hi + 0.5)
        }
    };
    let (x0, x1) = range(&mut pts.iter().map(|p| p.0));
    let (y0, y1) = range(&mut pts.iter().map(|p| p.1));
    let sx = |v: f64| M + (v - x0) / (x1 - x0) * (W - 2.0 * M);
    let sy = |v: f64| H - M - (v - y0) / (y1 - y0) * (H - 2.0 * M);
    let mut path = String::new();
    for (i, (a, b)) in pts.iter().enumerate() {
        let _ = write!(
            path,
            "{}{:.2},{:.2}",
            if i == 0 { "" } else { " " },
            sx(*a),
            sy(*b)
        );
    }
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="25" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>"#,
        W / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<path d="M{M},{M} V{} H{}" fill="none" stroke="black"/>"#,
        H - M,
        W - M
    );
    for (v, xpos, ypos, anchor) in [
        (y1, M - 5.0, M + 4.0, "end"),
        (y0, M - 5.0, H - M, "end"),
        (x0, M, H - M + 18.0, "middle"),
        (x1, W - M, H - M + 18.0, "middle"),
    ] {
        let _ = writeln!(
            svg,
            r#"<text x="{xpos}" y="{ypos}" text-anchor="{anchor}" font-family="sans-serif" font-size="11">{v:.4e}</text>"#
        );
    }
    let _ = writeln!(
        svg,
        r#"<polyline points="{path}" fill="none" stroke="steelblue" stroke-width="1.5"/>"#
    );
    svg.push_str("</svg>\n");
    svg
}
