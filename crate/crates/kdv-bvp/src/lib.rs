//! Solver library for the Korteweg-de Vries equation
//!     u_t + u_x + u u_x + u_xxx = 0
//! on a bounded interval (0, L) under the four principal classes of
//! nonhomogeneous boundary operators, with:
//!
//! - an explicit boundary-integral evaluation of the linear evolution forced
//!   by boundary data (oscillatory quadrature over the ray s = i rho^3),
//! - a whole-line Airy propagator with Duhamel forcing for initial data,
//! - a Picard/contraction nonlinear solver built from the two,
//! - an independent Crank-Nicolson finite-difference oracle,
//! - discrete fractional Sobolev norms and Kato-smoothing diagnostics.
//!
//! Entry points: [`linear::solve_linear`], [`nonlinear::solve_kdv`],
//! [`oracle::solve_fd`], and the scenario runner in [`scenario`]. The
//! `examples/` directory walks through each capability.

pub mod boundary;
pub mod dd;
pub mod error;
pub mod grid;
pub mod line;
pub mod linear;
pub mod nonlinear;
pub mod norms;
pub mod oracle;
pub mod profiles;
pub mod quadrature;
pub mod scaled;
pub mod scenario;
pub mod spectral;
pub mod stencil;
pub mod threads;
pub mod transform;
pub mod wbdr;

pub use boundary::{BoundaryClass, BoundaryData, ClassId, TraceSet};
pub use error::{KdvError, Result};
pub use grid::{Field, Grid};
pub use linear::{solve_homogeneous_bc, solve_linear, SolveReport, SolverOptions};
pub use nonlinear::{gamma_map, select_local_time, solve_kdv, solve_linearized, PicardReport};
pub use norms::{kato_report, sobolev_norm_space, sobolev_norm_time, NormReport};
pub use oracle::{mms_convergence, solve_fd, OracleMode};
pub use spectral::{char_roots, delta, delta_cofactor, kernel_ratio, verify_nonvanishing, SpectralTriple};
