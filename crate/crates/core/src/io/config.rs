//! JSON run configuration and initial-data presets.
//!
//! Every section except `grid`, `params` and `time` may be omitted, and every
//! field inside a section has a default. Unknown keys are rejected.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::limit::SweepAxis;
use crate::model::{FluidState, Grid1D, ModelParams};
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("malformed config: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("{key}: {constraint}")]
    Invalid { key: String, constraint: String },
}

fn invalid(key: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        constraint: constraint.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub length: f64,
    pub n_cells: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            length: 1.0,
            n_cells: 400,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub t_end: f64,
    pub cfl: f64,
    pub output_every: f64,
    pub dt_max: f64,
    pub dt_min: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            t_end: s.t_end,
            cfl: s.cfl,
            output_every: s.output_every,
            dt_max: s.dt_max,
            dt_min: s.dt_min,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    pub rho_floor: f64,
    pub strict: bool,
}

impl Default for SolverSection {
    fn default() -> Self {
        let s = SolverConfig::default();
        Self {
            rho_floor: s.rho_floor,
            strict: s.strict,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
}

fn half() -> f64 {
    0.5
}
fn bump_amplitude() -> f64 {
    0.9
}
fn plateau_inside() -> f64 {
    0.9
}

/// Initial data. Positions left unset are derived from the domain length:
/// centres default to `L/2`, widths to `L/10`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitConfig {
    /// `rho = r0`, fluid at rest.
    Uniform {
        #[serde(default = "half")]
        r0: f64,
    },
    /// `rho = min(1, a exp(-(x - c)^2 / s^2))`, fluid at rest.
    Bump {
        #[serde(default = "bump_amplitude")]
        a: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        s: Option<f64>,
    },
    /// `r_in` on `[c - w, c + w]`, `r_out` elsewhere, linear ramps three cells wide.
    Plateau {
        #[serde(default = "plateau_inside")]
        r_in: f64,
        #[serde(default)]
        r_out: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        c: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        w: Option<f64>,
    },
    /// Two constant states separated at `x0`; wall velocities stay zero.
    Riemann {
        rho_l: f64,
        #[serde(default)]
        u_l: f64,
        rho_r: f64,
        #[serde(default)]
        u_r: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        x0: Option<f64>,
    },
}

impl Default for InitConfig {
    fn default() -> Self {
        InitConfig::Bump {
            a: bump_amplitude(),
            c: None,
            s: None,
        }
    }
}

/// Upper limit on preset densities and amplitudes.
pub const MAX_PRESET_DENSITY: f64 = 10.0;

impl InitConfig {
    pub fn name(&self) -> &'static str {
        match self {
            InitConfig::Uniform { .. } => "uniform",
            InitConfig::Bump { .. } => "bump",
            InitConfig::Plateau { .. } => "plateau",
            InitConfig::Riemann { .. } => "riemann",
        }
    }

    /// Multiply every density level of the preset by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out {
            InitConfig::Uniform { r0 } => *r0 *= factor,
            InitConfig::Bump { a, .. } => *a *= factor,
            InitConfig::Plateau { r_in, r_out, .. } => {
                *r_in *= factor;
                *r_out *= factor;
            }
            InitConfig::Riemann { rho_l, rho_r, .. } => {
                *rho_l *= factor;
                *rho_r *= factor;
            }
        }
        out
    }

    fn validate(&self, length: f64) -> Result<(), ConfigError> {
        let density = |key: &str, v: f64| {
            if (0.0..=MAX_PRESET_DENSITY).contains(&v) {
                Ok(())
            } else {
                Err(invalid(
                    key,
                    format!("0 <= {} <= {MAX_PRESET_DENSITY}", &key[5..]),
                ))
            }
        };
        let inside = |key: &str, v: Option<f64>| match v {
            Some(v) if !(0.0..=length).contains(&v) => {
                Err(invalid(key, format!("0 <= {} <= length", &key[5..])))
            }
            _ => Ok(()),
        };
        let positive = |key: &str, v: Option<f64>| match v {
            Some(v) if !(v > 0.0 && v.is_finite()) => {
                Err(invalid(key, format!("{} > 0", &key[5..])))
            }
            _ => Ok(()),
        };
        match *self {
            InitConfig::Uniform { r0 } => density("init.r0", r0),
            InitConfig::Bump { a, c, s } => {
                density("init.a", a)?;
                inside("init.c", c)?;
                positive("init.s", s)
            }
            InitConfig::Plateau { r_in, r_out, c, w } => {
                density("init.r_in", r_in)?;
                density("init.r_out", r_out)?;
                inside("init.c", c)?;
                positive("init.w", w)
            }
            InitConfig::Riemann {
                rho_l,
                u_l,
                rho_r,
                u_r,
                x0,
            } => {
                density("init.rho_l", rho_l)?;
                density("init.rho_r", rho_r)?;
                if !u_l.is_finite() {
                    return Err(invalid("init.u_l", "u_l finite"));
                }
                if !u_r.is_finite() {
                    return Err(invalid("init.u_r", "u_r finite"));
                }
                inside("init.x0", x0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub params: ModelParams,
    #[serde(default)]
    pub init: InitConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub seed: u64,
}

/// Parse and validate a JSON configuration.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let cfg: RunConfig = serde_json::from_str(text)?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let g = &self.grid;
        if !(g.length > 0.0 && g.length.is_finite()) {
            return Err(invalid("grid.length", "length > 0"));
        }
        if g.n_cells < 3 {
            return Err(invalid("grid.n_cells", "n_cells >= 3"));
        }
        if let Err(crate::model::ModelError::InvalidParam(what)) = self.params.validate() {
            let field = what.split_whitespace().next().unwrap_or("params");
            return Err(invalid(&format!("params.{field}"), what));
        }
        let t = &self.time;
        let checks = [
            (
                t.t_end >= 0.0 && t.t_end.is_finite(),
                "time.t_end",
                "t_end >= 0",
            ),
            (t.cfl > 0.0 && t.cfl <= 1.0, "time.cfl", "0 < cfl <= 1"),
            (
                t.output_every > 0.0 && t.output_every.is_finite(),
                "time.output_every",
                "output_every > 0",
            ),
            (
                t.dt_max > 0.0 && t.dt_max.is_finite(),
                "time.dt_max",
                "dt_max > 0",
            ),
            (
                t.dt_min > 0.0 && t.dt_min < t.dt_max,
                "time.dt_min",
                "0 < dt_min < dt_max",
            ),
            (
                self.solver.rho_floor > 0.0 && self.solver.rho_floor.is_finite(),
                "solver.rho_floor",
                "rho_floor > 0",
            ),
        ];
        for (ok, key, what) in checks {
            if !ok {
                return Err(invalid(key, what));
            }
        }
        self.init.validate(g.length)?;
        if let Some(sw) = &self.sweep {
            if sw.values.is_empty() {
                return Err(invalid("sweep.values", "at least one value"));
            }
            let (ok, what) = match sw.axis {
                SweepAxis::Gamma => (
                    sw.values.windows(2).all(|w| w[0] < w[1])
                        && sw.values.iter().all(|v| *v >= 1.0),
                    "gamma values ascending and >= 1",
                ),
                SweepAxis::Eps => (
                    sw.values.windows(2).all(|w| w[0] > w[1])
                        && sw.values.iter().all(|v| *v >= 0.0),
                    "eps values descending and >= 0",
                ),
            };
            if !ok {
                return Err(invalid("sweep.values", what));
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> Grid1D {
        Grid1D::new(self.grid.length, self.grid.n_cells).expect("validated grid")
    }

    pub fn solver_config(&self) -> SolverConfig {
        SolverConfig {
            cfl: self.time.cfl,
            dt_max: self.time.dt_max,
            dt_min: self.time.dt_min,
            rho_floor: self.solver.rho_floor,
            t_end: self.time.t_end,
            output_every: self.time.output_every,
            strict: self.solver.strict,
        }
    }

    /// Apply command-line overrides and re-validate.
    pub fn with_overrides(
        mut self,
        gamma: Option<f64>,
        eps: Option<f64>,
        t_end: Option<f64>,
    ) -> Result<Self, ConfigError> {
        if let Some(g) = gamma {
            self.params.gamma = g;
        }
        if let Some(e) = eps {
            self.params.eps = e;
        }
        if let Some(t) = t_end {
            self.time.t_end = t;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Initial state described by the configuration.
pub fn build_initial(config: &RunConfig) -> Result<FluidState, ConfigError> {
    config.validate()?;
    build_preset(&config.init, config.grid())
}

pub fn build_preset(init: &InitConfig, grid: Grid1D) -> Result<FluidState, ConfigError> {
    init.validate(grid.length())?;
    let l = grid.length();
    let n = grid.n_cells();
    let x = grid.centers();
    let mut u = vec![0.0; grid.n_faces()];
    let rho: Vec<f64> = match *init {
        InitConfig::Uniform { r0 } => vec![r0; n],
        InitConfig::Bump { a, c, s } => {
            let c = c.unwrap_or(0.5 * l);
            let s = s.unwrap_or(0.1 * l);
            x.iter()
                .map(|xi| (a * (-(xi - c) * (xi - c) / (s * s)).exp()).clamp(0.0, 1.0))
                .collect()
        }
        InitConfig::Plateau { r_in, r_out, c, w } => {
            let c = c.unwrap_or(0.5 * l);
            let w = w.unwrap_or(0.1 * l);
            let ramp = 3.0 * grid.dx();
            x.iter()
                .map(|xi| {
                    let theta = ((w - (xi - c).abs()) / ramp + 0.5).clamp(0.0, 1.0);
                    r_out + (r_in - r_out) * theta
                })
                .collect()
        }
        InitConfig::Riemann {
            rho_l,
            u_l,
            rho_r,
            u_r,
            x0,
        } => {
            let x0 = x0.unwrap_or(0.5 * l);
            for (f, uf) in u.iter_mut().enumerate().take(n).skip(1) {
                *uf = if grid.face(f) < x0 { u_l } else { u_r };
            }
            x.iter()
                .map(|&xi| if xi < x0 { rho_l } else { rho_r })
                .collect()
        }
    };
    FluidState::new(grid, rho, u, 0.0).map_err(|e| invalid("init", e.to_string()))
}
