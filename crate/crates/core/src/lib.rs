//! Feedback-driven nuclear spin precession with electric-quadrupole interaction.
//!
//! The crate builds the rotating-frame generator of the nuclear-spin master
//! equation, finds its steady state and the self-consistent precession-frequency
//! deviation, integrates the nonlinear feedback dynamics, and analyses the
//! resulting transverse signal in the frequency domain.

pub mod dynamics;
pub mod error;
pub mod liouvillian;
pub mod ode;
pub mod spectral;
pub mod spin;
pub mod steady;

pub use error::{Error, Result};
