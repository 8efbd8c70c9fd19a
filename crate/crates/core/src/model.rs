//! Constitutive laws, parameters, grid and state shared by the rest of the crate.
//!
//! Every power of the density (`rho^gamma`, `rho^(gamma-1)`, ...) is evaluated
//! in the log domain so that exponents of several hundred neither overflow nor
//! underflow prematurely.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("negative density {0}")]
    NegativeDensity(f64),
    #[error("invalid parameter: {0}")]
    InvalidParam(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid state: {0}")]
    InvalidState(String),
}

/// Physical and asymptotic constants of the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Adiabatic exponent of the pressure law `p = rho^gamma`.
    pub gamma: f64,
    /// Shear viscosity.
    pub mu: f64,
    /// Bulk-type viscosity, only `mu + xi > 0` is required.
    pub xi: f64,
    /// Growth rate `G0`.
    pub g0: f64,
    /// Homeostatic pressure `P_M`.
    pub pm: f64,
    /// Artificial viscosity on the continuity equation.
    pub eps: f64,
    /// Darcy friction, only used by the Hele-Shaw reference.
    pub nu0: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            gamma: 40.0,
            mu: 0.1,
            xi: 0.0,
            g0: 1.0,
            pm: 1.0,
            eps: 0.0,
            nu0: 1.0,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("gamma", self.gamma),
            ("mu", self.mu),
            ("xi", self.xi),
            ("g0", self.g0),
            ("pm", self.pm),
            ("eps", self.eps),
            ("nu0", self.nu0),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(ModelError::InvalidParam(format!("{name} must be finite")));
            }
        }
        let checks = [
            (self.gamma >= 1.0, "gamma >= 1"),
            (self.mu > 0.0, "mu > 0"),
            (self.mu + self.xi > 0.0, "mu + xi > 0"),
            (self.g0 > 0.0, "g0 > 0"),
            (self.pm > 0.0, "pm > 0"),
            (self.eps >= 0.0, "eps >= 0"),
            (self.nu0 > 0.0, "nu0 > 0"),
        ];
        for (ok, what) in checks {
            if !ok {
                return Err(ModelError::InvalidParam(what.to_string()));
            }
        }
        Ok(())
    }

    /// Total viscosity entering the 1D momentum equation.
    pub fn viscosity(&self) -> f64 {
        self.mu + self.xi
    }

    /// `G(0) = G0 * P_M`, the growth ceiling and Gronwall rate.
    pub fn max_growth(&self) -> f64 {
        self.g0 * self.pm
    }
}

/// Uniform 1D grid on `[0, length]`: densities live at cell centres, velocities on faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    length: f64,
    n_cells: usize,
}

impl Grid1D {
    pub fn new(length: f64, n_cells: usize) -> Result<Self, ModelError> {
        if !(length.is_finite() && length > 0.0) {
            return Err(ModelError::InvalidGrid("length > 0".into()));
        }
        if n_cells < 3 {
            return Err(ModelError::InvalidGrid("n_cells >= 3".into()));
        }
        Ok(Self { length, n_cells })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn n_faces(&self) -> usize {
        self.n_cells + 1
    }

    pub fn dx(&self) -> f64 {
        self.length / self.n_cells as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx()
    }

    pub fn face(&self, i: usize) -> f64 {
        i as f64 * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }
}

/// Density per cell and velocity per face at one instant.
///
/// The momentum `m = rho u` is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub grid: Grid1D,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
    pub t: f64,
}

impl FluidState {
    pub fn new(grid: Grid1D, rho: Vec<f64>, u: Vec<f64>, t: f64) -> Result<Self, ModelError> {
        let s = Self { grid, rho, u, t };
        s.validate()?;
        Ok(s)
    }

    /// Density `rho0` everywhere, fluid at rest.
    pub fn uniform(grid: Grid1D, rho0: f64) -> Result<Self, ModelError> {
        Self::new(
            grid,
            vec![rho0; grid.n_cells()],
            vec![0.0; grid.n_faces()],
            0.0,
        )
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        if self.rho.len() != self.grid.n_cells() {
            return Err(ModelError::InvalidState(format!(
                "expected {} densities, got {}",
                self.grid.n_cells(),
                self.rho.len()
            )));
        }
        if self.u.len() != self.grid.n_faces() {
            return Err(ModelError::InvalidState(format!(
                "expected {} face velocities, got {}",
                self.grid.n_faces(),
                self.u.len()
            )));
        }
        if let Some(r) = self.rho.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return Err(ModelError::InvalidState(format!(
                "density {r} not finite and >= 0"
            )));
        }
        if self.u.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::InvalidState("non-finite velocity".into()));
        }
        if self.u[0] != 0.0 || self.u[self.grid.n_cells()] != 0.0 {
            return Err(ModelError::InvalidState(
                "wall velocities must vanish".into(),
            ));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        self.grid.dx() * self.rho.iter().sum::<f64>()
    }

    /// Face velocity averaged onto cell `i`.
    pub fn cell_velocity(&self, i: usize) -> f64 {
        0.5 * (self.u[i] + self.u[i + 1])
    }

    /// `du/dx` on cell `i`.
    pub fn velocity_gradient(&self, i: usize) -> f64 {
        (self.u[i + 1] - self.u[i]) / self.grid.dx()
    }

    /// Mirror image about the domain midpoint; face velocities change sign.
    pub fn reflected(&self) -> Self {
        let rho = self.rho.iter().rev().copied().collect();
        let u = self.u.iter().rev().map(|v| -v).collect();
        Self {
            grid: self.grid,
            rho,
            u,
            t: self.t,
        }
    }
}

/// `rho^exponent` for `rho >= 0` in the log domain, with an overflow flag.
///
/// `0^exponent` is `0` for positive exponents and `1` for a zero exponent.
pub fn log_domain_power(rho: f64, exponent: f64) -> Result<(f64, bool), ModelError> {
    if rho < 0.0 || rho.is_nan() {
        return Err(ModelError::NegativeDensity(rho));
    }
    if rho == 0.0 {
        return Ok((if exponent == 0.0 { 1.0 } else { 0.0 }, false));
    }
    let v = (exponent * rho.ln()).exp();
    if v.is_finite() {
        Ok((v, false))
    } else {
        Ok((f64::MAX, true))
    }
}

/// Barotropic pressure `rho^gamma` together with the overflow flag.
pub fn pressure_flagged(rho: f64, gamma: f64) -> Result<(f64, bool), ModelError> {
    log_domain_power(rho, gamma)
}

/// Barotropic pressure `p = rho^gamma`, clamped to `f64::MAX` on overflow.
pub fn pressure(rho: f64, gamma: f64) -> Result<f64, ModelError> {
    pressure_flagged(rho, gamma).map(|(p, _)| p)
}

/// Growth law `G(p) = G0 (P_M - p)`; negative above the homeostatic pressure.
pub fn growth_rate(p: f64, params: &ModelParams) -> f64 {
    params.g0 * (params.pm - p)
}

/// `sqrt(gamma rho^(gamma-1))`, zero at vacuum.
pub fn sound_speed(rho: f64, gamma: f64) -> Result<f64, ModelError> {
    if rho < 0.0 || rho.is_nan() {
        return Err(ModelError::NegativeDensity(rho));
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let c = (0.5 * (gamma.ln() + (gamma - 1.0) * rho.ln())).exp();
    Ok(if c.is_finite() { c } else { f64::MAX })
}

/// Spatially uniform equilibrium density `P_M^(1/gamma)`.
pub fn homeostatic_density(params: &ModelParams) -> f64 {
    (params.pm.ln() / params.gamma).exp()
}

/// Advisory problems with initial data; none of them stops a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum InitialWarning {
    /// Density is not negligible in the outer 5% band next to a wall.
    WallProximity { max_rho: f64 },
    /// Density exceeds 1 somewhere, outside the regime where estimates are uniform in gamma.
    AboveUnity { max_rho: f64 },
}

/// Density threshold for the outer wall band.
pub const WALL_BAND_RHO: f64 = 1e-8;

pub fn check_initial(state: &FluidState) -> Vec<InitialWarning> {
    let n = state.grid.n_cells();
    let band = ((0.05 * n as f64).ceil() as usize).max(1);
    let edge_max = state.rho[..band]
        .iter()
        .chain(&state.rho[n - band..])
        .fold(0.0_f64, |a, &b| a.max(b));
    let mut out = Vec::new();
    if edge_max >= WALL_BAND_RHO {
        out.push(InitialWarning::WallProximity { max_rho: edge_max });
    }
    let max_rho = state.rho.iter().fold(0.0_f64, |a, &b| a.max(b));
    if max_rho > 1.0 {
        out.push(InitialWarning::AboveUnity { max_rho });
    }
    out
}
