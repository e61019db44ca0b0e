//! States, regions, s-sets, propagation and dense oracle instances.

pub mod dense;
pub mod fft;
pub mod grid;
pub mod propagate;
pub mod region;
pub mod universe;

pub use dense::{family_instance, oracle_random_instance, DenseInstance, Family};
pub use grid::{make_gaussian_packet, Grid, GridState};
pub use propagate::{evolve, evolve_adjoint, project, Hamiltonian, StepControl};
pub use region::{CSet, CellMask, Region, VelocityRegion};
pub use universe::{born_weight, cset_apply, GridUniverse, Universe};
