//! Path spaces: weighted ensembles of sampled trajectories, cylinder-set
//! weights, the classical and Bohmian flows, the Everett–Bell and projected
//! chain distributions, and the explanation diagnostics run on ensembles.

use serde::{Deserialize, Serialize};

use crate::quantum::{Grid, Region};
use crate::{Error, Result};

pub mod bohmian;
pub mod classical;
pub mod diagnostics;
pub mod fdd;

pub use bohmian::{bohmian_ensemble, bohmian_velocity, equivariance_check, BohmConfig, VelocityField};
pub use classical::{classical_ensemble, liouville_check, ClassicalEnsemble, ClassicalHamiltonian, PhaseBox};
pub use diagnostics::{ensemble_diagnostics, Diagnostic, DiagnosticQuery, OccupationReport};
pub use fdd::{additivity_gap, everett_bell_fdd, mu_q_fdd};

/// Tolerance on the total ensemble weight.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

/// A set of positions, as a union of half-open intervals or as the cells of
/// a grid region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    Everywhere,
    Intervals { intervals: Vec<(f64, f64)> },
    Cells { grid: Grid, region: Region },
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Self {
        Domain::Intervals { intervals: vec![(a, b)] }
    }

    pub fn cells(grid: &Grid, region: &Region) -> Self {
        Domain::Cells { grid: grid.clone(), region: region.clone() }
    }

    pub fn contains(&self, x: f64) -> bool {
        match self {
            Domain::Everywhere => true,
            Domain::Intervals { intervals } => intervals.iter().any(|&(a, b)| x >= a && x < b),
            Domain::Cells { grid, region } => region.mask().contains(grid.cell_of(x)),
        }
    }
}

/// Sampled paths `λ(t)` on a shared time grid, with weights summing to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    times: Vec<f64>,
    /// `positions[path][time index]`.
    positions: Vec<Vec<f64>>,
    weights: Vec<f64>,
}

impl PathEnsemble {
    pub fn new(times: Vec<f64>, positions: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        if times.is_empty() || times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::contract("ensemble times must be nonempty and increasing"));
        }
        if positions.len() != weights.len() || positions.is_empty() {
            return Err(Error::contract("one weight per path, at least one path"));
        }
        if positions.iter().any(|p| p.len() != times.len()) {
            return Err(Error::contract("every path must be sampled at every time"));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::contract("path weights must be finite and >= 0"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::contract(format!("path weights sum to {total}, not 1")));
        }
        Ok(PathEnsemble { times, positions, weights })
    }

    /// Equal weights `1/N`.
    pub fn uniform(times: Vec<f64>, positions: Vec<Vec<f64>>) -> Result<Self> {
        let n = positions.len();
        let w = 1.0 / n.max(1) as f64;
        PathEnsemble::new(times, positions, vec![w; n])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn path(&self, i: usize) -> &[f64] {
        &self.positions[i]
    }

    pub fn paths(&self) -> &[Vec<f64>] {
        &self.positions
    }

    pub fn position(&self, path: usize, time_index: usize) -> f64 {
        self.positions[path][time_index]
    }

    /// `1/Σwᵢ²`, the sample size entering binomial error bars.
    pub fn effective_size(&self) -> f64 {
        1.0 / self.weights.iter().map(|w| w * w).sum::<f64>()
    }

    /// Index of the sample at time `t` (exact match up to `1e-12`).
    pub fn time_index(&self, t: f64) -> Option<usize> {
        self.times.iter().position(|&s| (s - t).abs() <= 1e-12)
    }

    /// `μ(S) = Σ` weights of paths in `(t, Δ)`.
    pub fn fraction_in(&self, time_index: usize, domain: &Domain) -> f64 {
        self.weight_where(|p| domain.contains(p[time_index]))
    }

    /// `μ(S₁∩…∩S_n)`.
    pub fn cylinder_weight(&self, query: &CylinderQuery) -> Result<f64> {
        query.validate(self.times.len())?;
        Ok(self.weight_where(|p| query.contains(p)))
    }

    pub(crate) fn weight_where(&self, mut pred: impl FnMut(&[f64]) -> bool) -> f64 {
        self.positions
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| pred(p))
            .map(|(_, w)| w)
            .sum()
    }

    /// Weighted standard deviation of positions at a sample.
    pub fn position_std(&self, time_index: usize) -> f64 {
        let mean: f64 = self.positions.iter().zip(&self.weights).map(|(p, w)| w * p[time_index]).sum();
        let var: f64 = self
            .positions
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| w * (p[time_index] - mean).powi(2))
            .sum();
        var.sqrt()
    }
}

/// `(t₁,Δ₁)∩…∩(t_n,Δ_n)` with times given as ensemble indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CylinderQuery {
    pub slots: Vec<(usize, Domain)>,
}

impl CylinderQuery {
    pub fn new(slots: Vec<(usize, Domain)>) -> Self {
        CylinderQuery { slots }
    }

    pub fn validate(&self, n_times: usize) -> Result<()> {
        let mut seen = vec![false; n_times];
        for (i, _) in &self.slots {
            if *i >= n_times {
                return Err(Error::contract(format!("time index {i} out of range")));
            }
            if std::mem::replace(&mut seen[*i], true) {
                return Err(Error::contract(format!("time index {i} repeated in a cylinder query")));
            }
        }
        Ok(())
    }

    pub fn contains(&self, path: &[f64]) -> bool {
        self.slots.iter().all(|(i, d)| d.contains(path[*i]))
    }
}
