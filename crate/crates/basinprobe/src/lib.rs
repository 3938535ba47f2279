//! Loss-landscape geometry toolkit.
//!
//! Trains small dense networks, deliberately constructs minima with bad
//! generalization through an attack objective, and quantifies the geometry
//! of the surrounding basin: exact and matrix-free Hessian spectra, the
//! log-volume metric V(k), randomized Frobenius-norm estimation, and
//! closed-form two-layer complexity bounds.

pub mod config;
pub mod convex;
pub mod data;
pub mod error;
pub mod harness;
pub mod hessian;
pub mod idx;
pub mod linalg;
pub mod net;
pub mod solution_io;
pub mod train;
pub mod twolayer;

pub use error::{Error, Result};
pub use linalg::Mat;
pub use net::{Activation, GradientBundle, LossKind, Network};
