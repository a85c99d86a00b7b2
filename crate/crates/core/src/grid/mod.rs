//! Brute-force master-equation solver on a mean/difference lattice.
//!
//! An operator kernel `<x|K|y>` is stored as `K(u, s)` with `u = (x+y)/2`
//! and `s = x - y`. Each term of the master equation becomes exactly
//! solvable in these coordinates: the potential is a pointwise phase, the
//! kinetic term is a phase in the 2-D Fourier domain, and dissipation plus
//! diffusion is a rescaling of `s` times a Gaussian in `s`.

mod fft;
mod matrix;
mod observables;
mod operator;
mod propagator;
mod resample;
mod spec;
mod weyl;

pub use fft::Fft2;
pub use matrix::{
    from_matrices, from_matrix, hermitian_eigenvalues, to_matrix, to_matrix_pair, trace_norm, LatticeMatrix,
};
pub use observables::{observables, Observables};
pub use operator::{hs_distance_to_gaussian, init_from_gaussian, sample_gaussian, GridOperator};
pub use propagator::{step_l, step_m, PropagationDirection, Propagator, PropagatorConfig, Scheme, SupportReport};
pub use resample::{Resampler, ScaleRemap};
pub use spec::GridSpec;
pub use weyl::{weyl_quantize, weyl_symbol, SymbolTable};
