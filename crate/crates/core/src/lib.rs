//! Numerical toolkit for the rest-frame instant form of relativistic
//! particle dynamics.
//!
//! * [`minkowski`]: 4-vectors, signature-parameterized flat metric, boosts,
//!   Wigner rotations.
//! * [`foliation`]: embeddings `z^μ(τ, σ)`, induced geometry, extrinsic
//!   curvature and admissibility checks.
//! * [`radar`]: Einstein synchronization and chart inversion.
//! * [`collective`]: Poincaré generators and the Møller, Fokker-Pryce and
//!   Newton-Wigner centers.
//! * [`restframe`]: Wigner 3-space variables, relative dynamics and
//!   world-line reconstruction.
//! * [`relquant`]: spectrum of the two-body relative mass operator.

pub mod error;
pub mod collective;
pub mod foliation;
pub mod minkowski;
pub mod radar;
pub mod relquant;
pub mod restframe;

pub use error::{Error, Result};
