//! Sweeps toward the stiff-pressure and vanishing-diffusion limits, and the
//! one-dimensional Hele-Shaw reference profile.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compactness::{criterion_sweep, log_log_slope, CompactnessReport, KernelSpec};
use crate::diagnostics::consistency_residual;
use crate::model::{pressure, FluidState, ModelParams};
use crate::solver::{run, SolverConfig, SolverError, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitError {
    #[error("sweep needs at least one value")]
    EmptySweep,
    #[error("{axis} values must be strictly {order}")]
    Order {
        axis: &'static str,
        order: &'static str,
    },
    #[error("invalid sweep value {value}: {reason}")]
    BadValue { value: f64, reason: String },
    #[error("degenerate interval [{a}, {b}]")]
    Interval { a: f64, b: f64 },
    #[error("need at least 3 samples, got {0}")]
    TooFewSamples(usize),
    #[error("parameter {0} must be positive")]
    NonPositive(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    Gamma,
    Eps,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Gamma => "gamma",
            SweepAxis::Eps => "eps",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SweepPlan {
    pub params: ModelParams,
    pub solver: SolverConfig,
    pub initial: FluidState,
    pub axis: SweepAxis,
    /// Ascending for `gamma`, descending for `eps`.
    pub values: Vec<f64>,
    pub saturation_delta: f64,
    /// `None` skips the compactness table.
    pub kernel: Option<KernelSpec>,
    pub required_decay: f64,
}

impl SweepPlan {
    pub fn new(
        params: ModelParams,
        solver: SolverConfig,
        initial: FluidState,
        axis: SweepAxis,
        values: Vec<f64>,
    ) -> Result<Self, LimitError> {
        let plan = Self {
            params,
            solver,
            initial,
            axis,
            values,
            saturation_delta: crate::diagnostics::DEFAULT_SATURATION_DELTA,
            kernel: Some(KernelSpec::default()),
            required_decay: 3.0,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn validate(&self) -> Result<(), LimitError> {
        if self.values.is_empty() {
            return Err(LimitError::EmptySweep);
        }
        let ordered = match self.axis {
            SweepAxis::Gamma => self.values.windows(2).all(|w| w[0] < w[1]),
            SweepAxis::Eps => self.values.windows(2).all(|w| w[0] > w[1]),
        };
        if !ordered {
            let order = match self.axis {
                SweepAxis::Gamma => "ascending",
                SweepAxis::Eps => "descending",
            };
            return Err(LimitError::Order {
                axis: self.axis.name(),
                order,
            });
        }
        for &v in &self.values {
            self.member_params(v)
                .validate()
                .map_err(|e| LimitError::BadValue {
                    value: v,
                    reason: e.to_string(),
                })?;
        }
        Ok(())
    }

    pub fn member_params(&self, value: f64) -> ModelParams {
        let mut p = self.params;
        match self.axis {
            SweepAxis::Gamma => p.gamma = value,
            SweepAxis::Eps => p.eps = value,
        }
        p
    }
}

/// Final-time and cumulative metrics of one successful member run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepMetrics {
    pub excess_l2: f64,
    pub pressure_l2: f64,
    pub complementarity_cum: f64,
    pub consistency_rms: f64,
    pub saturated_cells: usize,
    pub eps_grad_cum: f64,
    pub eps_pressure_grad_cum: f64,
    pub steps: usize,
    pub floor_activations: usize,
    pub max_transport_mass_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub value: f64,
    pub metrics: Option<SweepMetrics>,
    pub error: Option<String>,
    /// `L^2((0,T) x Omega)` density distance to the previous row.
    pub cauchy_to_previous: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub axis: SweepAxis,
    pub rows: Vec<SweepRow>,
    pub compactness: Option<CompactnessReport>,
    pub compactness_error: Option<String>,
}

/// Monotonicity summary of a report, with multiplicative slack.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepTrends {
    pub slack: f64,
    pub excess_decreasing: bool,
    pub complementarity_decreasing: bool,
    pub consistency_decreasing: bool,
    pub cauchy_decreasing: bool,
    pub pressure_ratio: f64,
    pub eps_grad_decreasing: bool,
    pub eps_pressure_grad_decreasing: bool,
    /// Log-log slope of the first ε accumulator against ε, when defined.
    pub eps_grad_slope: Option<f64>,
}

/// `v[i+1] <= (1 + slack) v[i]` for all consecutive pairs.
pub fn tolerant_decreasing(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|w| w[1] <= (1.0 + slack) * w[0])
}

impl SweepReport {
    pub fn all_succeeded(&self) -> bool {
        self.rows.iter().all(|r| r.metrics.is_some())
    }

    fn column(&self, f: impl Fn(&SweepMetrics) -> f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter_map(|r| r.metrics.as_ref().map(&f))
            .collect()
    }

    pub fn trends(&self, slack: f64) -> SweepTrends {
        let pl2 = self.column(|m| m.pressure_l2);
        let max = pl2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = pl2.iter().cloned().fold(f64::INFINITY, f64::min);
        let cauchy: Vec<f64> = self
            .rows
            .iter()
            .filter_map(|r| r.cauchy_to_previous)
            .collect();
        let values: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.metrics.is_some())
            .map(|r| r.value)
            .collect();
        let eps_grad = self.column(|m| m.eps_grad_cum);
        SweepTrends {
            slack,
            excess_decreasing: tolerant_decreasing(&self.column(|m| m.excess_l2), slack),
            complementarity_decreasing: tolerant_decreasing(
                &self.column(|m| m.complementarity_cum.abs()),
                slack,
            ),
            consistency_decreasing: tolerant_decreasing(&self.column(|m| m.consistency_rms), slack),
            cauchy_decreasing: tolerant_decreasing(&cauchy, slack),
            pressure_ratio: if min > 0.0 { max / min } else { f64::INFINITY },
            eps_grad_decreasing: tolerant_decreasing(&eps_grad, slack),
            eps_pressure_grad_decreasing: tolerant_decreasing(
                &self.column(|m| m.eps_pressure_grad_cum),
                slack,
            ),
            eps_grad_slope: Some(log_log_slope(&values, &eps_grad)).filter(|s| s.is_finite()),
        }
    }

    pub fn csv(&self) -> String {
        let mut out = format!(
            "{},status,excess_l2,pressure_l2,complementarity_cum,consistency_rms,saturated_cells,eps_grad_cum,eps_pressure_grad_cum,cauchy_to_previous\n",
            self.axis.name()
        );
        for r in &self.rows {
            let cauchy = r
                .cauchy_to_previous
                .map(|c| c.to_string())
                .unwrap_or_default();
            match &r.metrics {
                Some(m) => out.push_str(&format!(
                    "{},ok,{},{},{},{},{},{},{},{}\n",
                    r.value,
                    m.excess_l2,
                    m.pressure_l2,
                    m.complementarity_cum,
                    m.consistency_rms,
                    m.saturated_cells,
                    m.eps_grad_cum,
                    m.eps_pressure_grad_cum,
                    cauchy
                )),
                None => out.push_str(&format!("{},failed,,,,,,,,\n", r.value)),
            }
        }
        out
    }
}

/// Run every member concurrently; results come back in plan order.
pub fn run_members(plan: &SweepPlan) -> Vec<Result<Trajectory, SolverError>> {
    plan.values
        .par_iter()
        .map(|&v| run(plan.initial.clone(), &plan.member_params(v), &plan.solver))
        .collect()
}

/// `L^2((0,T) x Omega)` distance between two density histories on shared samples.
pub fn history_distance(a: &Trajectory, b: &Trajectory) -> Option<f64> {
    if a.snapshots.len() != b.snapshots.len() || a.snapshots.is_empty() {
        return None;
    }
    let sq: Vec<f64> = a
        .snapshots
        .iter()
        .zip(&b.snapshots)
        .map(|(x, y)| {
            let dx = x.grid.dx();
            x.rho
                .iter()
                .zip(&y.rho)
                .map(|(r, s)| (r - s) * (r - s))
                .sum::<f64>()
                * dx
        })
        .collect();
    if sq.len() == 1 {
        return Some(sq[0].sqrt());
    }
    let integral: f64 = a
        .snapshots
        .windows(2)
        .zip(sq.windows(2))
        .map(|(s, v)| 0.5 * (s[1].t - s[0].t) * (v[0] + v[1]))
        .sum();
    Some(integral.sqrt())
}

fn metrics_of(traj: &Trajectory, params: &ModelParams, delta: f64) -> Option<SweepMetrics> {
    let last = traj.records.last()?;
    let final_state = traj.final_state()?;
    let cons = consistency_residual(final_state, params, delta).ok()?;
    Some(SweepMetrics {
        excess_l2: last.excess_l2,
        pressure_l2: crate::diagnostics::pressure_l2(traj),
        complementarity_cum: last.complementarity_cum,
        consistency_rms: cons.rms,
        saturated_cells: cons.cells,
        eps_grad_cum: last.eps_grad_cum,
        eps_pressure_grad_cum: last.eps_pressure_grad_cum,
        steps: traj.step_stats.steps(),
        floor_activations: traj.step_stats.floor_activations,
        max_transport_mass_drift: traj.step_stats.max_transport_mass_drift,
    })
}

/// Build the report from member results, in plan order.
pub fn assemble_report(
    plan: &SweepPlan,
    members: &[Result<Trajectory, SolverError>],
) -> SweepReport {
    let mut rows = Vec::with_capacity(members.len());
    for (i, (&value, member)) in plan.values.iter().zip(members).enumerate() {
        let params = plan.member_params(value);
        let (metrics, error) = match member {
            Ok(t) => match metrics_of(t, &params, plan.saturation_delta) {
                Some(m) => (Some(m), None),
                None => (None, Some("empty trajectory".to_string())),
            },
            Err(e) => (None, Some(e.to_string())),
        };
        let cauchy_to_previous = match (i.checked_sub(1).map(|j| &members[j]), member) {
            (Some(Ok(prev)), Ok(cur)) => history_distance(prev, cur),
            _ => None,
        };
        rows.push(SweepRow {
            value,
            metrics,
            error,
            cauchy_to_previous,
        });
    }

    let (compactness, compactness_error) = match &plan.kernel {
        None => (None, None),
        Some(spec) => {
            let family: Vec<Vec<FluidState>> = members
                .iter()
                .filter_map(|m| m.as_ref().ok())
                .map(|t| t.snapshots.clone())
                .collect();
            match criterion_sweep(&family, spec, plan.required_decay) {
                Ok(r) => (Some(r), None),
                Err(e) => (None, Some(e.to_string())),
            }
        }
    };

    SweepReport {
        axis: plan.axis,
        rows,
        compactness,
        compactness_error,
    }
}

pub fn run_sweep(plan: &SweepPlan) -> SweepReport {
    let members = run_members(plan);
    assemble_report(plan, &members)
}

/// Closed-form pressure of the stationary Hele-Shaw problem on an interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeleShawProfile {
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub pm: f64,
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub center_value: f64,
}

/// `cosh(y) / cosh(big)` without overflow.
fn cosh_ratio(y: f64, big: f64) -> f64 {
    let y = y.abs();
    (y - big).exp() * (1.0 + (-2.0 * y).exp()) / (1.0 + (-2.0 * big).exp())
}

/// `P_M (1 - cosh(k (x - x_c)) / cosh(k l / 2))`.
pub fn hele_shaw_pressure(x: f64, a: f64, b: f64, k: f64, pm: f64) -> f64 {
    let xc = 0.5 * (a + b);
    let half = 0.5 * k * (b - a);
    if (x - xc).abs() >= 0.5 * (b - a) {
        return 0.0;
    }
    pm * (1.0 - cosh_ratio(k * (x - xc), half))
}

pub fn hele_shaw_profile(
    a: f64,
    b: f64,
    params: &ModelParams,
    n_samples: usize,
) -> Result<HeleShawProfile, LimitError> {
    if !(b > a) || !a.is_finite() || !b.is_finite() {
        return Err(LimitError::Interval { a, b });
    }
    if n_samples < 3 {
        return Err(LimitError::TooFewSamples(n_samples));
    }
    for (name, v) in [("nu0", params.nu0), ("g0", params.g0), ("pm", params.pm)] {
        if !(v > 0.0) {
            return Err(LimitError::NonPositive(name));
        }
    }
    let k = (params.nu0 * params.g0).sqrt();
    let dx = (b - a) / (n_samples - 1) as f64;
    let x: Vec<f64> = (0..n_samples)
        .map(|i| {
            if i + 1 == n_samples {
                b
            } else {
                a + i as f64 * dx
            }
        })
        .collect();
    let p = x
        .iter()
        .map(|&xi| hele_shaw_pressure(xi, a, b, k, params.pm))
        .collect();
    let center_value = params.pm * (1.0 - cosh_ratio(0.0, 0.5 * k * (b - a)));
    Ok(HeleShawProfile {
        a,
        b,
        k,
        pm: params.pm,
        x,
        p,
        center_value,
    })
}

impl HeleShawProfile {
    /// Max over interior nodes of `|-D2 p - k^2 (P_M - p)|`, with `D2` the
    /// three-point centered difference applied to the closed form.
    ///
    /// The difference of the three cosh values is expanded as
    /// `cosh(y) * 4 sinh^2(k dx / 2)` so the result is not swamped by the
    /// rounding of the individual samples.
    pub fn ode_residual(&self) -> f64 {
        let n = self.x.len();
        let dx = (self.b - self.a) / (n - 1) as f64;
        let half = 0.5 * self.k * (self.b - self.a);
        let xc = 0.5 * (self.a + self.b);
        let s = (0.5 * self.k * dx).sinh();
        let stencil = 4.0 * s * s / (dx * dx);
        (1..n - 1)
            .map(|i| {
                let q = cosh_ratio(self.k * (self.x[i] - xc), half);
                let minus_d2p = -self.pm * q * stencil;
                (-minus_d2p - self.k * self.k * self.pm * q).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Same residual computed from the stored samples by plain differencing.
    pub fn sampled_ode_residual(&self) -> f64 {
        let n = self.x.len();
        let dx = (self.b - self.a) / (n - 1) as f64;
        let k2 = self.k * self.k;
        (1..n - 1)
            .map(|i| {
                let d2 = (self.p[i + 1] - 2.0 * self.p[i] + self.p[i - 1]) / (dx * dx);
                (-d2 - k2 * (self.pm - self.p[i])).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Descriptive comparison of the pressure on the saturated block with the
/// Hele-Shaw profile fitted to that block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DarcyComparison {
    /// Face coordinates bounding the largest contiguous saturated block.
    pub interval: Option<(f64, f64)>,
    pub cells: usize,
    /// RMS of `p - p_HS` over the block, divided by `P_M`.
    pub rms: f64,
    pub empty: bool,
}

pub fn compare_to_darcy(
    state: &FluidState,
    params: &ModelParams,
    delta: f64,
) -> Result<DarcyComparison, LimitError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(LimitError::BadValue {
            value: delta,
            reason: "saturation delta must lie in (0, 1)".to_string(),
        });
    }
    let threshold = 1.0 - delta;
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=state.rho.len() {
        let inside = i < state.rho.len() && state.rho[i] >= threshold;
        match (inside, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    let Some((s, e)) = best else {
        return Ok(DarcyComparison {
            interval: None,
            cells: 0,
            rms: 0.0,
            empty: true,
        });
    };
    let (a, b) = (state.grid.face(s), state.grid.face(e));
    let x: Vec<f64> = (s..e).map(|i| state.grid.center(i)).collect();
    let p = state.rho[s..e]
        .iter()
        .map(|&r| pressure(r, params.gamma))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|err| LimitError::BadValue {
            value: f64::NAN,
            reason: err.to_string(),
        })?;
    Ok(DarcyComparison {
        interval: Some((a, b)),
        cells: e - s,
        rms: profile_deviation(&x, &p, a, b, params),
        empty: false,
    })
}

/// RMS of `p(x) - p_HS(x)` over the samples, divided by `P_M`.
pub fn profile_deviation(x: &[f64], p: &[f64], a: f64, b: f64, params: &ModelParams) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let k = (params.nu0 * params.g0).sqrt();
    let sum: f64 = x
        .iter()
        .zip(p)
        .map(|(&xi, &pi)| {
            let d = pi - hele_shaw_pressure(xi, a, b, k, params.pm);
            d * d
        })
        .sum();
    (sum / x.len() as f64).sqrt() / params.pm
}
