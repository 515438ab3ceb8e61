//! Structure-preserving solvers for the truncated Kimura equation of random
//! genetic drift with Robin boundary conditions and absorbing boundary masses.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod boundary;
pub mod compare;
pub mod config;
pub mod density;
pub mod diagnostics;
pub mod error;
pub mod eulerian;
pub mod experiments;
pub mod io;
pub mod lagrangian;
pub mod par;
pub mod quadrature;
pub mod solver;
pub mod spline;
pub mod state;
pub mod tridiag;
pub mod wright_fisher;

pub use config::{ConfigLayer, SolverConfig};
pub use density::InitialDensity;
pub use error::{Error, Result};
pub use lagrangian::BulkScheme;
pub use par::ExecMode;
pub use state::{build_initial_state, BoundaryMasses, DensityField, ParticleState};
