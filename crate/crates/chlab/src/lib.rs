//! A finite-volume laboratory for a three-field tumour-invasion model:
//! cell density `u` moves by nonlinear diffusion, chemotaxis up gradients of a
//! diffusible enzyme `v`, and haptotaxis up gradients of a static tissue `w`,
//!
//! ```text
//!   u_t = div(D(u) grad u) - chi div(u grad v) - xi div(u grad w) + mu u (1 - u - w)
//!   v_t = lap v - v + u
//!   w_t = -v w
//! ```
//!
//! on a box with zero-flux boundaries, `D(u) = C_D u^(m-1)`.
//!
//! Besides the integrator, the crate evaluates the closed-form constants that
//! decide global boundedness for this system (the critical diffusion exponent
//! `m_crit` and its ingredients) and monitors the known a-priori bounds as
//! runtime invariants: nonnegativity, the tissue ceiling `0 <= w <= max w0`,
//! the discrete mass identity, the logistic L1 bound, the exact exponential
//! representation of `w`, and the weak-form residuals of all three equations.

// validation uses `!(x > 0.0)` so NaN fails every range check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod diagnostics;
pub mod grid;
pub mod harness;
pub mod output;
pub mod physics;
pub mod solver;
pub mod threshold;
pub mod verify;

#[cfg(test)]
pub(crate) mod testutil;

pub use config::{ConfigError, ResolvedConfig};
pub use diagnostics::{DiagnosticsConfig, DiagnosticsRecord, WeakResidualReport};
pub use grid::{CellField, FaceField, Grid};
pub use physics::{DiffusivityLaw, DiffusivitySpec, Sensitivities};
pub use solver::{RunResult, RunStatus, SolverConfig, State};
pub use threshold::{ThresholdInputs, ThresholdReport};
