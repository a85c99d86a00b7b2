//! Quantum Brownian motion in the Markovian high-temperature regime.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] holds the physical constants, the five-parameter Gaussian
//!   density matrix, potentials and phase-space cells.
//! * [`gaussian`] integrates the Gaussian-parameter ODEs in both pictures.
//! * [`grid`] is a brute-force split-step solver for the full master
//!   equation in mean/difference coordinates, used as an oracle.
//! * [`projector`] builds smeared phase-space quasiprojectors and measures
//!   how far they are from true projectors.
//! * [`histories`] evaluates the decoherence functional for phase-space
//!   histories.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod gaussian;
pub mod grid;
pub mod histories;
pub mod model;
pub mod projector;

pub use error::{QbmError, Result};
pub use model::{GaussianState, MomentSet, PhaseSpaceCell, PhysicalParams, PotentialModel};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
