//! Discrete versions of the a-priori quantities: energy, dissipation, norms,
//! Gronwall envelopes, complementarity and consistency residuals.
//!
//! Time integrals are accumulated with the trapezoid rule. The solver feeds
//! [`RunningIntegrals`] after every step, so the cumulative columns of a
//! [`DiagnosticsRecord`] are step-cadence integrals sampled at output times.

use serde::Serialize;
use thiserror::Error;

use crate::model::{growth_rate, log_domain_power, pressure, FluidState, ModelParams};
use crate::solver::Trajectory;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiagnosticsError {
    #[error("energy requires gamma > 1, got {0}")]
    GammaTooSmall(f64),
    #[error("norm exponent must be >= 1, got {0}")]
    BadExponent(f64),
    #[error("saturation threshold must lie in (0, 1), got {0}")]
    BadDelta(f64),
}

/// Default threshold: cells with `rho >= 1 - delta` count as saturated.
pub const DEFAULT_SATURATION_DELTA: f64 = 0.05;
/// Relative slack of the energy envelope.
pub const ENERGY_TOL: f64 = 1e-6;
/// Relative slack of the mass envelope.
pub const MASS_TOL: f64 = 1e-8;

fn p_of(rho: f64, gamma: f64) -> f64 {
    // densities in a validated state are nonnegative
    pressure(rho, gamma).unwrap_or(0.0)
}

/// `E = sum dx (rho ubar^2 / 2 + rho^gamma / (gamma - 1))`.
pub fn energy(state: &FluidState, params: &ModelParams) -> Result<f64, DiagnosticsError> {
    if params.gamma <= 1.0 {
        return Err(DiagnosticsError::GammaTooSmall(params.gamma));
    }
    let dx = state.grid.dx();
    let inv = 1.0 / (params.gamma - 1.0);
    let e = state
        .rho
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let ub = state.cell_velocity(i);
            0.5 * r * ub * ub + p_of(r, params.gamma) * inv
        })
        .sum::<f64>();
    Ok(dx * e)
}

/// `J = (mu + xi) sum dx (du/dx)^2`.
pub fn dissipation(state: &FluidState, params: &ModelParams) -> f64 {
    let dx = state.grid.dx();
    let s: f64 = (0..state.grid.n_cells())
        .map(|i| state.velocity_gradient(i).powi(2))
        .sum();
    params.viscosity() * s * dx
}

pub fn lq_norm(state: &FluidState, q: f64) -> Result<f64, DiagnosticsError> {
    if !(q >= 1.0) {
        return Err(DiagnosticsError::BadExponent(q));
    }
    let s: f64 = state.rho.iter().map(|r| r.powf(q)).sum();
    Ok((state.grid.dx() * s).powf(1.0 / q))
}

/// `||(rho - 1)_+||_{L^q}` in space.
pub fn excess_norm(state: &FluidState, q: f64) -> Result<f64, DiagnosticsError> {
    if !(q >= 1.0) {
        return Err(DiagnosticsError::BadExponent(q));
    }
    let s: f64 = state.rho.iter().map(|r| (r - 1.0).max(0.0).powf(q)).sum();
    Ok((state.grid.dx() * s).powf(1.0 / q))
}

/// Spatial integral of `p (1 - rho)` at one instant.
pub fn complementarity_integrand(state: &FluidState, params: &ModelParams) -> f64 {
    let s: f64 = state
        .rho
        .iter()
        .map(|&r| p_of(r, params.gamma) * (1.0 - r))
        .sum();
    state.grid.dx() * s
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyResidual {
    pub rms: f64,
    pub cells: usize,
    /// No cell reached the saturation threshold.
    pub empty: bool,
}

/// RMS of `du/dx - G(p)` over cells with `rho >= 1 - delta`.
pub fn consistency_residual(
    state: &FluidState,
    params: &ModelParams,
    delta: f64,
) -> Result<ConsistencyResidual, DiagnosticsError> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(DiagnosticsError::BadDelta(delta));
    }
    let (mut sum, mut cells) = (0.0, 0usize);
    for (i, &r) in state.rho.iter().enumerate() {
        if r >= 1.0 - delta {
            let res = state.velocity_gradient(i) - growth_rate(p_of(r, params.gamma), params);
            sum += res * res;
            cells += 1;
        }
    }
    Ok(if cells == 0 {
        ConsistencyResidual {
            rms: 0.0,
            cells: 0,
            empty: true,
        }
    } else {
        ConsistencyResidual {
            rms: (sum / cells as f64).sqrt(),
            cells,
            empty: false,
        }
    })
}

/// Density gradient per cell: centred inside, one-sided at the walls.
pub fn density_gradient(state: &FluidState) -> Vec<f64> {
    let n = state.grid.n_cells();
    let dx = state.grid.dx();
    let r = &state.rho;
    (0..n)
        .map(|i| match i {
            0 => (r[1] - r[0]) / dx,
            _ if i == n - 1 => (r[n - 1] - r[n - 2]) / dx,
            _ => (r[i + 1] - r[i - 1]) / (2.0 * dx),
        })
        .collect()
}

/// Spatial integrands of the artificial-viscosity terms:
/// `eps ||d_x rho||^2` and `eps gamma int rho^(gamma-2) (d_x rho)^2`.
pub fn eps_integrands(state: &FluidState, params: &ModelParams) -> (f64, f64) {
    if params.eps == 0.0 {
        return (0.0, 0.0);
    }
    let dx = state.grid.dx();
    let g = density_gradient(state);
    let mut a = 0.0;
    let mut b = 0.0;
    for (&r, gi) in state.rho.iter().zip(&g) {
        let g2 = gi * gi;
        a += g2;
        if g2 > 0.0 {
            let w = log_domain_power(r, params.gamma - 2.0)
                .map(|(v, _)| v)
                .unwrap_or(0.0);
            b += w * g2;
        }
    }
    (params.eps * dx * a, params.eps * params.gamma * dx * b)
}

/// Instantaneous integrands of every cumulative diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Integrands {
    pub dissipation: f64,
    pub pressure_sq: f64,
    pub complementarity: f64,
    pub eps_grad: f64,
    pub eps_pressure_grad: f64,
}

impl Integrands {
    pub fn of(state: &FluidState, params: &ModelParams) -> Self {
        let dx = state.grid.dx();
        let psq: f64 = state
            .rho
            .iter()
            .map(|&r| p_of(r, params.gamma).powi(2))
            .sum();
        let (eps_grad, eps_pressure_grad) = eps_integrands(state, params);
        Self {
            dissipation: dissipation(state, params),
            pressure_sq: dx * psq,
            complementarity: complementarity_integrand(state, params),
            eps_grad,
            eps_pressure_grad,
        }
    }
}

/// Trapezoid accumulators for the time integrals.
#[derive(Debug, Clone, Default)]
pub struct RunningIntegrals {
    pub dissipation: f64,
    pub pressure_sq: f64,
    pub complementarity: f64,
    pub eps_grad: f64,
    pub eps_pressure_grad: f64,
    last: Option<Integrands>,
}

impl RunningIntegrals {
    pub fn start(state: &FluidState, params: &ModelParams) -> Self {
        Self {
            last: Some(Integrands::of(state, params)),
            ..Default::default()
        }
    }

    /// Advance by one step of length `dt` ending in `state`.
    pub fn advance(&mut self, state: &FluidState, params: &ModelParams, dt: f64) {
        let next = Integrands::of(state, params);
        let prev = self.last.unwrap_or(next);
        let h = 0.5 * dt;
        self.dissipation += h * (prev.dissipation + next.dissipation);
        self.pressure_sq += h * (prev.pressure_sq + next.pressure_sq);
        self.complementarity += h * (prev.complementarity + next.complementarity);
        self.eps_grad += h * (prev.eps_grad + next.eps_grad);
        self.eps_pressure_grad += h * (prev.eps_pressure_grad + next.eps_pressure_grad);
        self.last = Some(next);
    }
}

/// One row of `diagnostics.csv`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `None` when `gamma = 1`, where the potential energy is undefined.
    pub energy: Option<f64>,
    pub dissipation_cum: f64,
    pub mass: f64,
    pub l1: f64,
    pub l2: f64,
    pub l4: f64,
    /// Running `int int p^2`.
    pub pressure_l2_sq_cum: f64,
    pub excess_l2: f64,
    pub complementarity_cum: f64,
    pub consistency_rms: f64,
    pub saturated_cells: usize,
    pub eps_grad_cum: f64,
    pub eps_pressure_grad_cum: f64,
}

impl DiagnosticsRecord {
    pub fn capture(
        state: &FluidState,
        params: &ModelParams,
        integrals: &RunningIntegrals,
        delta: f64,
    ) -> Self {
        let cons = consistency_residual(state, params, delta).unwrap_or(ConsistencyResidual {
            rms: 0.0,
            cells: 0,
            empty: true,
        });
        Self {
            t: state.t,
            energy: energy(state, params).ok(),
            dissipation_cum: integrals.dissipation,
            mass: state.mass(),
            l1: lq_norm(state, 1.0).unwrap_or(f64::NAN),
            l2: lq_norm(state, 2.0).unwrap_or(f64::NAN),
            l4: lq_norm(state, 4.0).unwrap_or(f64::NAN),
            pressure_l2_sq_cum: integrals.pressure_sq,
            excess_l2: excess_norm(state, 2.0).unwrap_or(f64::NAN),
            complementarity_cum: integrals.complementarity,
            consistency_rms: cons.rms,
            saturated_cells: cons.cells,
            eps_grad_cum: integrals.eps_grad,
            eps_pressure_grad_cum: integrals.eps_pressure_grad,
        }
    }

    pub const CSV_HEADER: &'static str = "t,energy,dissipation_cum,mass,l1,l2,l4,pressure_l2_sq_cum,excess_l2,complementarity_cum,consistency_rms,saturated_cells,eps_grad_cum,eps_pressure_grad_cum";

    pub fn csv_row(&self) -> String {
        let e = self.energy.map(|e| e.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.t,
            e,
            self.dissipation_cum,
            self.mass,
            self.l1,
            self.l2,
            self.l4,
            self.pressure_l2_sq_cum,
            self.excess_l2,
            self.complementarity_cum,
            self.consistency_rms,
            self.saturated_cells,
            self.eps_grad_cum,
            self.eps_pressure_grad_cum
        )
    }
}

/// Outcome of checking one a-priori bound along a trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheckResult {
    pub name: String,
    /// Minimum over outputs of `bound - observed`.
    pub worst_margin: f64,
    pub t_worst: f64,
    /// Relative slack applied to the bound.
    pub tolerance: f64,
    pub pass: bool,
}

impl BoundCheckResult {
    /// `samples` are `(t, bound, observed)`; a sample passes when
    /// `observed <= bound (1 + tol)`.
    fn from_samples(name: &str, tol: f64, samples: impl Iterator<Item = (f64, f64, f64)>) -> Self {
        let mut worst = f64::INFINITY;
        let mut t_worst = 0.0;
        let mut pass = true;
        for (t, bound, obs) in samples {
            let margin = bound - obs;
            if margin < worst {
                worst = margin;
                t_worst = t;
            }
            if !(obs <= bound * (1.0 + tol)) {
                pass = false;
            }
        }
        if !worst.is_finite() {
            worst = 0.0;
        }
        Self {
            name: name.to_string(),
            worst_margin: worst,
            t_worst,
            tolerance: tol,
            pass,
        }
    }
}

/// Constant of the energy envelope assembled from the growth-term estimate:
/// `C = gamma/(gamma-1) G0 P_M^(2-1/gamma) exp(G0 P_M T) mass(0)`.
pub fn energy_envelope_constant(params: &ModelParams, mass0: f64, t_final: f64) -> f64 {
    let g = params.gamma;
    g / (g - 1.0)
        * params.g0
        * params.pm.powf(2.0 - 1.0 / g)
        * (params.max_growth() * t_final).exp()
        * mass0
}

/// `E(t) + int_0^t J <= (E(0) + C t) exp(G0 P_M t)` at every output after the first.
pub fn gronwall_energy_check(
    traj: &Trajectory,
    params: &ModelParams,
) -> Result<BoundCheckResult, DiagnosticsError> {
    if params.gamma <= 1.0 {
        return Err(DiagnosticsError::GammaTooSmall(params.gamma));
    }
    let (Some(first), Some(last)) = (traj.records.first(), traj.records.last()) else {
        return Ok(BoundCheckResult::from_samples(
            "energy_envelope",
            ENERGY_TOL,
            std::iter::empty(),
        ));
    };
    let e0 = first.energy.unwrap_or(0.0);
    let t0 = first.t;
    let c = energy_envelope_constant(params, first.mass, last.t - t0);
    let rate = params.max_growth();
    Ok(BoundCheckResult::from_samples(
        "energy_envelope",
        ENERGY_TOL,
        traj.records.iter().skip(1).map(|r| {
            let s = r.t - t0;
            let bound = (e0 + c * s) * (rate * s).exp();
            (r.t, bound, r.energy.unwrap_or(0.0) + r.dissipation_cum)
        }),
    ))
}

/// `mass(t) <= exp(G0 P_M t) mass(0)` at every output after the first.
pub fn mass_bound_check(traj: &Trajectory, params: &ModelParams) -> BoundCheckResult {
    let Some(first) = traj.records.first() else {
        return BoundCheckResult::from_samples("mass_envelope", MASS_TOL, std::iter::empty());
    };
    let (m0, t0) = (first.mass, first.t);
    let rate = params.max_growth();
    BoundCheckResult::from_samples(
        "mass_envelope",
        MASS_TOL,
        traj.records
            .iter()
            .skip(1)
            .map(|r| (r.t, (rate * (r.t - t0)).exp() * m0, r.mass)),
    )
}

/// Cumulative `int int p (1 - rho)` at the end of the run (signed).
pub fn complementarity_residual(traj: &Trajectory) -> f64 {
    traj.records.last().map_or(0.0, |r| r.complementarity_cum)
}

/// `||p||_{L^2((0,T) x Omega)}`.
pub fn pressure_l2(traj: &Trajectory) -> f64 {
    traj.records
        .last()
        .map_or(0.0, |r| r.pressure_l2_sq_cum.max(0.0).sqrt())
}

/// `(eps ||d_x rho||^2_{L^2(t,x)}, eps gamma int int rho^(gamma-2) (d_x rho)^2)`.
pub fn eps_terms(traj: &Trajectory) -> (f64, f64) {
    traj.records
        .last()
        .map_or((0.0, 0.0), |r| (r.eps_grad_cum, r.eps_pressure_grad_cum))
}
