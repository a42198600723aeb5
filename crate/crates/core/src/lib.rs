//! Fixed-time convergent gradient flows and the tools to check their guarantees.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure numerical code:
//!
//! - [`flows`]: vector fields of the normalized flows (GenFlow, GenFlow(M),
//!   FxTS-GF, saddle-point dynamics) and the plain gradient flow.
//! - [`integrators`]: Euler / RK4 / momentum steppers producing a [`Trajectory`].
//! - [`problems`]: objectives with exact gradients and known ground truth.
//! - [`numerics`]: finite differences, a Jacobi eigensolver, `|H|` and the
//!   saddle-adapted distance.
//! - [`analysis`]: settling-time and saddle-evasion bounds, Lyapunov functions
//!   and the empirical measurements they are compared against.
//!
//! File formats, configuration and the command-line front end live in the
//! `genflow-harness` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod error;
pub mod flows;
pub mod integrators;
pub(crate) mod math;
pub mod numerics;
pub mod problems;

pub use error::{Error, Result};
pub use flows::{Flow, FlowParams};
pub use integrators::{IntegratorConfig, Sample, Scheme, Termination, Trajectory};
pub use numerics::{Matrix, SpectralData};
pub use problems::{MinimaxProblem, Problem};
