//! Invariant non-local currents of local inversion and translation symmetry
//! for one-dimensional stationary wave scattering.
//!
//! The wave equation `A'' + U(x) A = 0` is solved exactly on piecewise-constant
//! profiles ([`solver`]). For a transform `F(x) = σx + ρ` the currents
//! `Q` and `Q̃` ([`invariants`]) are constant wherever `U(x) = U(F(x))`
//! ([`potential::symmetry_set`]) and map the field onto the image domain.
//! [`detector`] finds the symmetry domains of a profile and builds complete
//! local symmetry decompositions; [`cli`] drives everything from a config file.

pub mod cli;
pub mod detector;
pub mod error;
pub mod invariants;
pub mod potential;
pub mod solver;

pub use error::{Error, Result};
pub use potential::{Domain, Interval, PotentialProfile, Slab, SymmetryTransform};
pub use solver::{solve_scattering, FieldSample, Incidence, ScatteringState, Solution};
