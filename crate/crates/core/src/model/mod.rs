//! Domain types and closed-form identities.

mod cell;
mod params;
mod potential;
mod state;

pub use cell::{CellShape, PhaseSpaceCell};
pub use params::PhysicalParams;
pub use potential::{eval_potential, PotentialModel, MAX_POLYNOMIAL_DEGREE};
pub use state::{
    eval_density, moments_from_params, params_from_moments, purity_and_area, GaussianState, MomentSet, POSITIVITY_SLACK,
};
