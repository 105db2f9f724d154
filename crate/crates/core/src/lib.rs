//! Synthetic-aperture secure beamforming.
//!
//! A single-antenna aerial vehicle transmits the same sub-symbol block from a
//! sequence of flight nodes; the nodes form a virtual transmit array towards a
//! multi-antenna ground base station. The crate covers the line-of-sight channel
//! model, node deployment (Fekete / Gauss-Lobatto placement), secure transmit
//! precoding as a semidefinite program with eavesdropper leakage constraints,
//! LCMV and robust receive beamforming, link simulation and an experiment harness.

pub mod channel;
pub mod deployment;
pub mod error;
pub mod geometry;
pub mod harness;
pub mod linalg;
pub mod precoding;
pub mod receiving;
pub mod sdp;
pub mod simulation;
pub mod units;

pub use error::{ConstraintFamily, Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
