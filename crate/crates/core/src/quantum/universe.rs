//! The `Universe` abstraction: an initial state plus a unitary propagator,
//! and the Heisenberg-picture action of s-sets on the initial state.

use super::grid::{self, GridState};
use super::propagate::{propagate_in_place, Hamiltonian, StepControl};
use super::region::{CSet, Region, VelocityRegion};
use super::fft;
use crate::{Error, Result, C64};

/// A normalized initial state `Ψ₀` together with its dynamics.
///
/// Vectors are plain amplitude slices; inner products carry the factor
/// [`Universe::cell_weight`] (`dx` on a grid, `1` for dense instances).
pub trait Universe: Sync {
    fn dim(&self) -> usize;

    fn cell_weight(&self) -> f64;

    fn initial(&self) -> &[C64];

    /// `U(to) U†(from) v`.
    fn transport(&self, v: &[C64], from: f64, to: f64) -> Result<Vec<C64>>;

    /// `F⁺(Δ_v) v`.
    fn asymptotic_projection(&self, v: &[C64], region: &VelocityRegion) -> Result<Vec<C64>>;

    fn norm_sq(&self, v: &[C64]) -> f64 {
        grid::norm_sq(self.cell_weight(), v)
    }

    fn inner(&self, a: &[C64], b: &[C64]) -> C64 {
        grid::inner(self.cell_weight(), a, b)
    }

    fn distance_sq(&self, a: &[C64], b: &[C64]) -> f64 {
        grid::distance_sq(self.cell_weight(), a, b)
    }

    /// `Ψ(t) = U(t) Ψ₀`.
    fn state_at(&self, t: f64) -> Result<Vec<C64>> {
        self.transport(self.initial(), 0.0, t)
    }

    /// Applies the Heisenberg-picture operator of `c` to `v`:
    /// `U†(t) E(Δ) U(t) v`, or `F⁺(Δ_v) v` for asymptotic sets.
    fn apply_cset(&self, c: &CSet, v: &[C64]) -> Result<Vec<C64>> {
        match c {
            CSet::Spatial { time, region } => {
                check_len(region.len(), self.dim())?;
                let mut w = self.transport(v, 0.0, *time)?;
                region.apply(&mut w);
                self.transport(&w, *time, 0.0)
            }
            CSet::Asymptotic { region } => {
                check_len(region.len(), self.dim())?;
                self.asymptotic_projection(v, region)
            }
        }
    }

    /// `SΨ₀`.
    fn heisenberg(&self, c: &CSet) -> Result<Vec<C64>> {
        self.apply_cset(c, self.initial())
    }

    /// `‖SΨ₀‖²`, computed in the Schrödinger picture for spatial sets.
    fn born_weight(&self, c: &CSet) -> Result<f64> {
        match c {
            CSet::Spatial { time, region } => {
                check_len(region.len(), self.dim())?;
                let mut w = self.state_at(*time)?;
                region.apply(&mut w);
                Ok(self.norm_sq(&w))
            }
            CSet::Asymptotic { .. } => Ok(self.norm_sq(&self.heisenberg(c)?)),
        }
    }
}

fn check_len(region: usize, dim: usize) -> Result<()> {
    if region == dim {
        Ok(())
    } else {
        Err(Error::Geometry(format!(
            "region has {region} cells, universe has {dim}"
        )))
    }
}

/// A particle on a grid: `Ψ₀` and a Hamiltonian.
#[derive(Debug, Clone)]
pub struct GridUniverse {
    psi0: GridState,
    h: Hamiltonian,
    steps: StepControl,
}

impl GridUniverse {
    pub fn new(psi0: GridState, h: Hamiltonian) -> Result<Self> {
        GridUniverse::with_steps(psi0, h, StepControl::default())
    }

    pub fn with_steps(psi0: GridState, h: Hamiltonian, steps: StepControl) -> Result<Self> {
        h.validate(psi0.grid())?;
        if !(steps.max_step > 0.0 && steps.max_step.is_finite()) {
            return Err(Error::Config(format!("max_step must be positive, got {}", steps.max_step)));
        }
        Ok(GridUniverse { psi0, h, steps })
    }

    pub fn psi0(&self) -> &GridState {
        &self.psi0
    }

    pub fn grid(&self) -> &grid::Grid {
        self.psi0.grid()
    }

    pub fn hamiltonian(&self) -> &Hamiltonian {
        &self.h
    }

    pub fn steps(&self) -> StepControl {
        self.steps
    }

    pub fn mass(&self) -> f64 {
        self.h.mass()
    }

    /// Wraps a vector of this universe into a [`GridState`].
    pub fn wrap(&self, amps: Vec<C64>) -> GridState {
        GridState::new(*self.grid(), amps).expect("vector produced by this universe")
    }

    /// Same dynamics, different initial state.
    pub fn with_initial(&self, psi0: GridState) -> Result<Self> {
        GridUniverse::with_steps(psi0, self.h.clone(), self.steps)
    }
}

impl Universe for GridUniverse {
    fn dim(&self) -> usize {
        self.psi0.grid().n()
    }

    fn cell_weight(&self) -> f64 {
        self.psi0.grid().dx()
    }

    fn initial(&self) -> &[C64] {
        self.psi0.amps()
    }

    /// Free propagators compose exactly and are applied in one shot. With a
    /// potential the numerical propagator only composes up to splitting
    /// error, so transport always passes through `t = 0`, keeping every route
    /// between two times the same operator.
    fn transport(&self, v: &[C64], from: f64, to: f64) -> Result<Vec<C64>> {
        let mut out = v.to_vec();
        if from == to {
            return Ok(out);
        }
        let grid = self.psi0.grid();
        if self.h.is_free() {
            propagate_in_place(&mut out, grid, &self.h, to - from, self.steps)?;
        } else {
            propagate_in_place(&mut out, grid, &self.h, -from, self.steps)?;
            propagate_in_place(&mut out, grid, &self.h, to, self.steps)?;
        }
        Ok(out)
    }

    fn asymptotic_projection(&self, v: &[C64], region: &VelocityRegion) -> Result<Vec<C64>> {
        if !self.h.is_free() {
            return Err(Error::Unsupported(
                "asymptotic velocity projectors are exact only for free dynamics".into(),
            ));
        }
        let mut out = v.to_vec();
        fft::forward(&mut out);
        region.apply(&mut out);
        fft::inverse(&mut out);
        Ok(out)
    }
}

/// `SΨ₀` as a grid state.
pub fn cset_apply(c: &CSet, psi0: &GridState, h: &Hamiltonian) -> Result<GridState> {
    let u = GridUniverse::new(psi0.clone(), h.clone())?;
    Ok(u.wrap(u.heisenberg(c)?))
}

/// Born weight `‖E(Δ)Ψ(t)‖²` (or `‖F⁺(Δ_v)Ψ₀‖²`).
pub fn born_weight(c: &CSet, psi0: &GridState, h: &Hamiltonian) -> Result<f64> {
    GridUniverse::new(psi0.clone(), h.clone())?.born_weight(c)
}

/// `E(Δ)` applied to a vector of any universe.
pub fn masked(v: &[C64], region: &Region) -> Vec<C64> {
    let mut out = v.to_vec();
    region.apply(&mut out);
    out
}
