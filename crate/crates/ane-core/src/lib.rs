//! Adaptive two-layer ReLU least-squares approximation.
//!
//! Given a target function `f` on an axis-aligned box, this crate grows a
//! two-layer ReLU model and a midpoint-quadrature mesh until the discrete
//! relative error `‖f - v‖_T / ‖f‖_T` drops below a prescribed tolerance.
//! The pieces:
//!
//! - [`network`] — the model `v(x) = c0 + Σ c_i · relu(ω_i·x - b_i)` with
//!   unit-sphere input weights, plus analytic parameter gradients;
//! - [`quadrature`] — axis-aligned cell meshes, composite midpoint quadrature,
//!   and the weighted discrete `l2` norm;
//! - [`linsolve`] — the Gram system for the output weights at fixed hinges;
//! - [`partition`] — the physical partition induced by the hinge hyperplanes
//!   (grouped by activation sign patterns) and per-element error indicators;
//! - [`enhance`] — marking strategies and initialization of new neurons;
//! - [`optimize`] — full-batch Adam on the discrete least-squares loss;
//! - [`driver`] — the adaptive loops tying everything together;
//! - [`targets`] — built-in benchmark functions and a target registry.
//!
//! The crate is `no_std` + `alloc`; all file formats and the CLI live in the
//! companion `ane-cli` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod driver;
pub mod enhance;
mod error;
pub mod linsolve;
pub(crate) mod math;
pub mod network;
pub mod optimize;
pub mod partition;
pub mod quadrature;
pub mod targets;

pub use error::{Error, Result};
pub use network::{relu, ModelGradient, Neuron, ReluModel};
pub use quadrature::{Cell, Domain, QuadMesh};
pub use targets::{TargetFn, TargetRegistry, TargetSpec};
