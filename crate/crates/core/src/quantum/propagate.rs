//! Hamiltonians and spectral split-step propagation (ħ = 1).
//!
//! Free evolution is applied exactly in momentum space. With a potential the
//! propagator is a fourth-order triple-jump composition of symmetric Strang
//! steps; every step is time-symmetric, so `U(-t)` inverts `U(t)` up to
//! round-off.

use serde::{Deserialize, Serialize};

use super::fft;
use super::grid::{Grid, GridState};
use super::region::Region;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Hamiltonian {
    Free { mass: f64 },
    /// `V(x) = m ω² x² / 2`.
    Harmonic { mass: f64, omega: f64 },
    /// One potential value per grid cell.
    Tabulated { mass: f64, potential: Vec<f64> },
}

impl Hamiltonian {
    pub fn free() -> Self {
        Hamiltonian::Free { mass: 1.0 }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Hamiltonian::Free { mass }
            | Hamiltonian::Harmonic { mass, .. }
            | Hamiltonian::Tabulated { mass, .. } => *mass,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, Hamiltonian::Free { .. })
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let m = self.mass();
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::Config(format!("mass must be positive, got {m}")));
        }
        match self {
            Hamiltonian::Harmonic { omega, .. } if !(omega.is_finite() && *omega > 0.0) => {
                Err(Error::Config(format!("omega must be positive, got {omega}")))
            }
            Hamiltonian::Tabulated { potential, .. } if potential.len() != grid.n() => {
                Err(Error::Config(format!(
                    "potential table has {} entries for {} cells",
                    potential.len(),
                    grid.n()
                )))
            }
            Hamiltonian::Tabulated { potential, .. } if potential.iter().any(|v| !v.is_finite()) => {
                Err(Error::Config("potential table has non-finite entries".into()))
            }
            _ => Ok(()),
        }
    }

    /// Potential sampled on the grid, or `None` for a free particle.
    pub fn potential(&self, grid: &Grid) -> Option<Vec<f64>> {
        match self {
            Hamiltonian::Free { .. } => None,
            Hamiltonian::Harmonic { mass, omega } => Some(
                grid.xs()
                    .map(|x| 0.5 * mass * omega * omega * x * x)
                    .collect(),
            ),
            Hamiltonian::Tabulated { potential, .. } => Some(potential.clone()),
        }
    }
}

/// Largest split-step time step used with a potential.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepControl {
    pub max_step: f64,
}

impl Default for StepControl {
    fn default() -> Self {
        StepControl { max_step: 0.005 }
    }
}

const CBRT2: f64 = 1.259_921_049_894_873_2;
const W1: f64 = 1.0 / (2.0 - CBRT2);
const W0: f64 = 1.0 - 2.0 * W1;

/// Propagates amplitudes in place by `U(t)`; negative `t` applies `U†(|t|)`.
pub fn propagate_in_place(
    amps: &mut [C64],
    grid: &Grid,
    h: &Hamiltonian,
    t: f64,
    steps: StepControl,
) -> Result<()> {
    if t == 0.0 {
        return Ok(());
    }
    if !t.is_finite() {
        return Err(Error::contract(format!("propagation time must be finite, got {t}")));
    }
    let mass = h.mass();
    let kinetic = |tau: f64| -> Vec<C64> {
        (0..grid.n())
            .map(|j| {
                let k = grid.momentum(j);
                C64::from_polar(1.0, -k * k * tau / (2.0 * mass))
            })
            .collect()
    };
    match h.potential(grid) {
        None => {
            let phase = kinetic(t);
            fft::forward(amps);
            amps.iter_mut().zip(&phase).for_each(|(a, p)| *a *= p);
            fft::inverse(amps);
        }
        Some(v) => {
            // The slack keeps times that are whole multiples of max_step on
            // exactly max_step-sized steps, so such propagators compose.
            let n_steps = (t.abs() / steps.max_step - 1e-9).ceil().max(1.0) as usize;
            let dt = t / n_steps as f64;
            let pot = |tau: f64| -> Vec<C64> {
                v.iter().map(|&vx| C64::from_polar(1.0, -vx * tau)).collect()
            };
            let v_edge = pot(W1 * dt / 2.0);
            let v_inner = pot((W1 + W0) * dt / 2.0);
            let k_outer = kinetic(W1 * dt);
            let k_mid = kinetic(W0 * dt);
            let mul = |amps: &mut [C64], f: &[C64]| amps.iter_mut().zip(f).for_each(|(a, p)| *a *= p);
            let kick = |amps: &mut [C64], f: &[C64]| {
                fft::forward(amps);
                mul(amps, f);
                fft::inverse(amps);
            };
            for _ in 0..n_steps {
                mul(amps, &v_edge);
                kick(amps, &k_outer);
                mul(amps, &v_inner);
                kick(amps, &k_mid);
                mul(amps, &v_inner);
                kick(amps, &k_outer);
                mul(amps, &v_edge);
            }
        }
    }
    if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
        return Err(Error::Numeric(format!("non-finite amplitudes after propagating by {t}")));
    }
    Ok(())
}

/// `U(t) ψ` for `t ≥ 0`.
pub fn evolve(state: &GridState, h: &Hamiltonian, t: f64) -> Result<GridState> {
    evolve_with(state, h, t, StepControl::default())
}

pub fn evolve_with(
    state: &GridState,
    h: &Hamiltonian,
    t: f64,
    steps: StepControl,
) -> Result<GridState> {
    if t < 0.0 {
        return Err(Error::contract(format!(
            "evolve needs t >= 0 (got {t}); use evolve_adjoint for U†"
        )));
    }
    signed_evolve(state, h, t, steps)
}

/// `U†(t) ψ` for `t ≥ 0`.
pub fn evolve_adjoint(state: &GridState, h: &Hamiltonian, t: f64) -> Result<GridState> {
    if t < 0.0 {
        return Err(Error::contract(format!("evolve_adjoint needs t >= 0, got {t}")));
    }
    signed_evolve(state, h, -t, StepControl::default())
}

pub(crate) fn signed_evolve(
    state: &GridState,
    h: &Hamiltonian,
    t: f64,
    steps: StepControl,
) -> Result<GridState> {
    h.validate(state.grid())?;
    let mut out = state.clone();
    let grid = *state.grid();
    propagate_in_place(out.amps_mut(), &grid, h, t, steps)?;
    Ok(out)
}

/// `E(Δ) ψ`: amplitudes zeroed outside the region.
pub fn project(state: &GridState, region: &Region) -> GridState {
    assert_eq!(region.len(), state.grid().n(), "region/grid mismatch");
    let mut out = state.clone();
    region.apply(out.amps_mut());
    out
}
