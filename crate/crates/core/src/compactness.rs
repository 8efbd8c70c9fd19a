//! Kernel-based compactness diagnostics.
//!
//! The kernel family is `K_h(x) = zeta(|x|) / sqrt(x^2 + h^2)` in one dimension,
//! with a smooth cutoff `zeta` equal to 1 on `[0, 1]` and 0 beyond 2. The
//! normalized oscillation functional
//!
//! ```text
//! (1 / ||K_h||_L1) sum_ij dx^2 K_h(x_i - x_j) (rho_i - rho_j)^2 W_ij
//! ```
//!
//! decays as `h -> 0` uniformly over a family exactly when the family is
//! compact. Weights `w` are transported by the flow and damped by the maximal
//! function of `|d_x u|`.

use serde::Serialize;
use thiserror::Error;

use crate::model::{FluidState, Grid1D, ModelParams};
use crate::solver::{run_observed, SolverConfig, SolverError, Trajectory};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompactnessError {
    #[error("kernel scale must lie in (0, 1], got {0}")]
    BadScale(f64),
    #[error("family members do not share a grid and time samples")]
    ShapeMismatch,
    #[error("need at least {0} family members")]
    TooFewMembers(usize),
    #[error("maximal operator needs a nonnegative field, found {0}")]
    NegativeInput(f64),
    #[error("field length {got} does not match grid with {expected} cells")]
    Length { expected: usize, got: usize },
}

/// Smooth radial cutoff: 1 on `[0, 1]`, 0 on `[2, inf)`, monotone in between.
pub fn cutoff(r: f64) -> f64 {
    if r <= 1.0 {
        return 1.0;
    }
    if r >= 2.0 {
        return 0.0;
    }
    let bump = |t: f64| if t > 0.0 { (-1.0 / t).exp() } else { 0.0 };
    let a = bump(2.0 - r);
    a / (a + bump(r - 1.0))
}

pub fn kernel_value(x: f64, h: f64) -> f64 {
    let r = x.abs();
    if r >= 2.0 {
        return 0.0;
    }
    cutoff(r) / (x * x + h * h).sqrt()
}

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals.max(2) + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Kernel scales and quadrature resolution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelSpec {
    /// Strictly decreasing scales in `(0, 1]`.
    pub h_list: Vec<f64>,
    /// Simpson intervals on the cutoff shell `[1, 2]`.
    pub quad_nodes: usize,
}

impl Default for KernelSpec {
    fn default() -> Self {
        Self {
            h_list: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
            quad_nodes: 2000,
        }
    }
}

impl KernelSpec {
    pub fn new(h_list: Vec<f64>, quad_nodes: usize) -> Result<Self, CompactnessError> {
        for &h in &h_list {
            if !(h > 0.0 && h <= 1.0) {
                return Err(CompactnessError::BadScale(h));
            }
        }
        if h_list.windows(2).any(|w| w[1] >= w[0]) {
            return Err(CompactnessError::BadScale(f64::NAN));
        }
        Ok(Self { h_list, quad_nodes })
    }

    pub fn h0(&self) -> f64 {
        self.h_list.last().copied().unwrap_or(1.0)
    }
}

/// `||K_h||_{L^1(R)}`: closed form on `[-1, 1]`, Simpson on the cutoff shell.
pub fn kernel_l1_norm(h: f64, quad_nodes: usize) -> f64 {
    let inner = 2.0 * (1.0 / h).asinh();
    let shell = 2.0 * simpson(|x| kernel_value(x, h), 1.0, 2.0, quad_nodes);
    inner + shell
}

/// `||K_{h0}||_{L^1}` for the averaged kernel `int_{h0}^1 Kbar_h dh/h`, i.e. `|ln h0|`.
pub fn normalized_kernel_mass(h0: f64) -> Result<f64, CompactnessError> {
    if !(h0 > 0.0 && h0 <= 1.0) {
        return Err(CompactnessError::BadScale(h0));
    }
    Ok(-h0.ln())
}

/// Oscillation functional at scale `h`; `weights = Some(w)` gives the
/// `W_ij = (w_i + w_j) / 2` form, `None` the unweighted one.
pub fn oscillation_functional(
    rho: &[f64],
    grid: &Grid1D,
    h: f64,
    weights: Option<&[f64]>,
    quad_nodes: usize,
) -> Result<f64, CompactnessError> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(CompactnessError::BadScale(h));
    }
    let n = grid.n_cells();
    if rho.len() != n {
        return Err(CompactnessError::Length {
            expected: n,
            got: rho.len(),
        });
    }
    if let Some(w) = weights {
        if w.len() != n {
            return Err(CompactnessError::Length {
                expected: n,
                got: w.len(),
            });
        }
    }
    let dx = grid.dx();
    let norm = kernel_l1_norm(h, quad_nodes);
    // K depends only on the offset; the (i, j) and (j, i) terms coincide
    let mut total = 0.0;
    for k in 1..n {
        let kv = kernel_value(k as f64 * dx, h);
        if kv == 0.0 {
            break;
        }
        let mut s = 0.0;
        for i in 0..n - k {
            let d = rho[i] - rho[i + k];
            let wij = weights.map_or(1.0, |w| 0.5 * (w[i] + w[i + k]));
            s += d * d * wij;
        }
        total += kv * s;
    }
    Ok(2.0 * dx * dx * total / norm)
}

/// Sup-over-family table of the time-averaged functional for each scale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompactnessReport {
    pub h: Vec<f64>,
    pub sup_value: Vec<f64>,
    /// Least-squares slope of `ln sup` against `ln h`.
    pub slope: f64,
    /// `sup(h_max) / sup(h_min)`.
    pub decay_ratio: f64,
    pub required_ratio: f64,
    pub pass: bool,
}

impl CompactnessReport {
    pub fn csv(&self) -> String {
        let mut out = String::from("h,sup_value\n");
        for (h, v) in self.h.iter().zip(&self.sup_value) {
            out.push_str(&format!("{h},{v}\n"));
        }
        out
    }
}

/// Time average (trapezoid over the samples) of the functional along one member.
fn member_value(member: &[FluidState], h: f64, quad_nodes: usize) -> Result<f64, CompactnessError> {
    let vals = member
        .iter()
        .map(|s| oscillation_functional(&s.rho, &s.grid, h, None, quad_nodes))
        .collect::<Result<Vec<_>, _>>()?;
    if vals.len() == 1 {
        return Ok(vals[0]);
    }
    let span = member.last().unwrap().t - member[0].t;
    if span <= 0.0 {
        return Ok(vals.iter().sum::<f64>() / vals.len() as f64);
    }
    let integral: f64 = member
        .windows(2)
        .zip(vals.windows(2))
        .map(|(s, v)| 0.5 * (s[1].t - s[0].t) * (v[0] + v[1]))
        .sum();
    Ok(integral / span)
}

/// Evaluate the criterion over a family of density histories sharing grid and times.
pub fn criterion_sweep(
    family: &[Vec<FluidState>],
    spec: &KernelSpec,
    required_ratio: f64,
) -> Result<CompactnessReport, CompactnessError> {
    if family.len() < 2 {
        return Err(CompactnessError::TooFewMembers(2));
    }
    let reference = &family[0];
    for m in family {
        if m.len() != reference.len()
            || m.is_empty()
            || m.iter()
                .zip(reference)
                .any(|(a, b)| a.grid != b.grid || a.t != b.t)
        {
            return Err(CompactnessError::ShapeMismatch);
        }
    }
    let mut sup_value = Vec::with_capacity(spec.h_list.len());
    for &h in &spec.h_list {
        let mut sup = 0.0_f64;
        for m in family {
            sup = sup.max(member_value(m, h, spec.quad_nodes)?);
        }
        sup_value.push(sup);
    }
    let slope = log_log_slope(&spec.h_list, &sup_value);
    let decay_ratio = match (sup_value.first(), sup_value.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        (Some(&a), Some(_)) if a > 0.0 => f64::INFINITY,
        _ => 1.0,
    };
    Ok(CompactnessReport {
        h: spec.h_list.clone(),
        sup_value,
        slope,
        decay_ratio,
        required_ratio,
        pass: decay_ratio >= required_ratio,
    })
}

/// Least-squares slope of `ln y` against `ln x`, skipping nonpositive entries.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Discrete maximal function: for each cell, the largest mean of `f` over the
/// windows `[x_i - r, x_i + r]` clipped to the domain, `r = dx, 2dx, ..., L/2`,
/// and never below `f_i`.
pub fn maximal_operator(f: &[f64]) -> Result<Vec<f64>, CompactnessError> {
    if let Some(v) = f.iter().find(|v| !(**v >= 0.0)) {
        return Err(CompactnessError::NegativeInput(*v));
    }
    let n = f.len();
    let mut prefix = vec![0.0; n + 1];
    for i in 0..n {
        prefix[i + 1] = prefix[i] + f[i];
    }
    let r_max = n / 2;
    Ok((0..n)
        .map(|i| {
            let mut best = f[i];
            for k in 1..=r_max {
                let lo = i.saturating_sub(k);
                let hi = (i + k).min(n - 1);
                let mean = (prefix[hi + 1] - prefix[lo]) / (hi + 1 - lo) as f64;
                best = best.max(mean);
            }
            best
        })
        .collect())
}

/// Transported weight with its damping field.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightField {
    pub w: Vec<f64>,
    pub lambda: f64,
    /// Last damping field `M|d_x u|`, one value per cell.
    pub b: Vec<f64>,
}

impl WeightField {
    /// `w = 1` everywhere.
    pub fn unit(n_cells: usize, lambda: f64) -> Self {
        Self {
            w: vec![1.0; n_cells],
            lambda,
            b: vec![0.0; n_cells],
        }
    }
}

/// One step of `w_t + u w_x = -lambda (M|u_x|) w + eps w_xx`.
///
/// Upwind advection and explicit diffusion are subcycled so that each
/// sub-update is a convex combination; the decay `w / (1 + lambda B dt)` is
/// implicit. The result stays in `[0, 1]` without clamping.
pub fn evolve_weight(
    weight: &WeightField,
    state: &FluidState,
    eps: f64,
    dt: f64,
) -> Result<WeightField, CompactnessError> {
    let n = state.grid.n_cells();
    if weight.w.len() != n {
        return Err(CompactnessError::Length {
            expected: n,
            got: weight.w.len(),
        });
    }
    let dx = state.grid.dx();
    let grad: Vec<f64> = (0..n).map(|i| state.velocity_gradient(i).abs()).collect();
    let b = maximal_operator(&grad)?;
    let ubar: Vec<f64> = (0..n).map(|i| state.cell_velocity(i)).collect();

    let d_full = eps * dt / (dx * dx);
    let worst = ubar
        .iter()
        .map(|v| v.abs() * dt / dx + 2.0 * d_full)
        .fold(0.0, f64::max);
    let sub = (worst.ceil() as usize).max(1);
    let h = dt / sub as f64;
    let d = d_full / sub as f64;

    let mut w = weight.w.clone();
    let mut next = vec![0.0; n];
    for _ in 0..sub {
        for i in 0..n {
            let left = if i > 0 { w[i - 1] } else { w[i] };
            let right = if i + 1 < n { w[i + 1] } else { w[i] };
            let a = ubar[i] * h / dx;
            let adv = if a >= 0.0 {
                a * (w[i] - left)
            } else {
                a * (right - w[i])
            };
            next[i] = w[i] - adv + d * (left - 2.0 * w[i] + right);
        }
        std::mem::swap(&mut w, &mut next);
    }
    for (wi, bi) in w.iter_mut().zip(&b) {
        *wi /= 1.0 + weight.lambda * bi * dt;
    }
    Ok(WeightField {
        w,
        lambda: weight.lambda,
        b,
    })
}

/// Cap on `|ln w|` where the weight has vanished.
pub const LOG_WEIGHT_CAP: f64 = 700.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightMass {
    pub value: f64,
    /// Some cell hit the `|ln w|` cap.
    pub saturated: bool,
}

/// `sum dx rho_i |ln w_i|`.
pub fn weight_mass_check(rho: &[f64], w: &[f64], dx: f64) -> WeightMass {
    let mut saturated = false;
    let mut s = 0.0;
    for (&r, &wi) in rho.iter().zip(w) {
        let mut l = if wi > 0.0 { -wi.ln() } else { f64::INFINITY };
        if l > LOG_WEIGHT_CAP {
            l = LOG_WEIGHT_CAP;
            saturated = true;
        }
        s += r * l;
    }
    WeightMass {
        value: dx * s,
        saturated,
    }
}

/// Weights evolved alongside one solver run, one field per `lambda`.
#[derive(Debug, Clone)]
pub struct WeightRun {
    pub trajectory: Trajectory,
    pub weights: Vec<WeightField>,
    /// Extremes of each weight over every step of the run.
    pub min_w: Vec<f64>,
    pub max_w: Vec<f64>,
    /// `int rho |ln w|` at the final time.
    pub mass: Vec<WeightMass>,
}

pub fn run_with_weights(
    initial: FluidState,
    params: &ModelParams,
    config: &SolverConfig,
    lambdas: &[f64],
) -> Result<WeightRun, SolverError> {
    let n = initial.grid.n_cells();
    let mut weights: Vec<WeightField> = lambdas.iter().map(|&l| WeightField::unit(n, l)).collect();
    let mut min_w = vec![1.0_f64; lambdas.len()];
    let mut max_w = vec![1.0_f64; lambdas.len()];
    let mut failure = None;
    let trajectory = run_observed(initial, params, config, |before, _, dt| {
        for (k, wf) in weights.iter_mut().enumerate() {
            match evolve_weight(wf, before, params.eps, dt) {
                Ok(next) => {
                    for &v in &next.w {
                        min_w[k] = min_w[k].min(v);
                        max_w[k] = max_w[k].max(v);
                    }
                    *wf = next;
                }
                Err(e) => failure = Some(e),
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(SolverError::Config(e.to_string()));
    }
    let last = trajectory
        .final_state()
        .expect("trajectory holds the initial state");
    let mass = weights
        .iter()
        .map(|wf| weight_mass_check(&last.rho, &wf.w, last.grid.dx()))
        .collect();
    Ok(WeightRun {
        trajectory,
        weights,
        min_w,
        max_w,
        mass,
    })
}
