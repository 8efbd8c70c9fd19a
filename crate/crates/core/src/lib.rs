//! Numerical laboratory for the compressible Navier-Stokes system with a
//! pressure-dependent growth term `G(p) = G0 (P_M - p)` and pressure `p = rho^gamma`.
//!
//! * [`model`]: constitutive laws, grid and state.
//! * [`solver`]: Strang-split staggered-grid integrator for the system with
//!   optional artificial viscosity `eps`.
//! * [`diagnostics`]: energies, norms and the a-priori bound checks.
//! * [`compactness`]: kernel oscillation functionals, maximal operator and
//!   transported weights.
//! * [`limit`]: gamma / eps sweeps and the Hele-Shaw reference profile.
//! * [`io`]: JSON configuration, initial-data presets, CSV/JSON/SVG output and
//!   the verification battery behind the `stifflab` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod compactness;
pub mod diagnostics;
pub mod io;
pub mod limit;
pub mod model;
pub mod solver;

pub use model::{FluidState, Grid1D, ModelError, ModelParams};
pub use solver::{run, SolverConfig, SolverError, Trajectory};
