//! Typicality calculus for trajectory-based quantum mechanics.
//!
//! The crate works on two kinds of universes: a single particle on a uniform
//! periodic 1D grid (propagated with a spectral split-step scheme), and small
//! dense Hilbert spaces with explicit unitaries, used as a brute-force oracle.
//! Both implement [`quantum::Universe`], so every typicality functional runs
//! unchanged on either.
//!
//! Module map:
//!
//! - [`quantum`]: grids, states, regions, s-sets, propagation, dense instances
//! - [`typicality`]: probabilistic and quantum typicality functions
//! - [`overlap`]: overlapping measure, splitting regions, packet profiles
//! - [`asymptotics`]: asymptotic-velocity projectors and their convergence
//! - [`branching`]: subtree-supports, subtrees, irreducibility, branches
//! - [`pathspace`]: path ensembles, Bohmian and classical flows, cylinder-set
//!   distributions and explanation diagnostics
//! - [`consistency`]: randomized inequality and implication suites
//! - [`scenario`]: config-driven scenario runner and report emission

pub mod asymptotics;
pub mod branching;
pub mod consistency;
pub mod error;
pub mod overlap;
pub mod pathspace;
pub mod quantum;
pub mod scenario;
pub mod typicality;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Denominators below this are refused as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-14;

/// Default typicality threshold: a value is "in the typicality regime" when it
/// does not exceed this.
pub const DEFAULT_EPS: f64 = 0.01;
