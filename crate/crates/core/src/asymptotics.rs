//! Asymptotic-velocity projectors for free dynamics.
//!
//! `F^t(Δ_v) = U†(t) E(tΔ_v) U(t)` selects positions whose mean velocity
//! `x/t` lies in `Δ_v`; its strong limit `F⁺(Δ_v)` is the momentum-space
//! projector on `p/m ∈ Δ_v`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::guard;
use crate::overlap::overlap_vectors;
use crate::quantum::fft;
use crate::quantum::universe::masked;
use crate::quantum::{CSet, CellMask, Grid, GridState, GridUniverse, Region, Universe, VelocityRegion};
use crate::{Error, Result, C64};

/// Distance threshold used for `T_conv` unless a caller picks another.
pub const DEFAULT_CONVERGENCE_THRESHOLD: f64 = 0.05;

/// `tΔ_v` as a position region: cells whose center `x` has `x/t ∈ Δ_v`
/// (snapped to momentum cells). At `t = 0` every point has `x/t` undefined
/// except through the limit `tΔ_v → {0}`, so the region is everything when
/// the zero-velocity cell is selected and nothing otherwise.
pub fn scaled_region(grid: &Grid, mass: f64, dv: &VelocityRegion, t: f64) -> Region {
    if t == 0.0 {
        return if dv.mask().contains(0) { Region::full(grid) } else { Region::empty(grid) };
    }
    Region::from_predicate(grid, |x| dv.contains_velocity(grid, mass, x / t))
}

fn require_free(u: &GridUniverse) -> Result<()> {
    if u.hamiltonian().is_free() {
        Ok(())
    } else {
        Err(Error::Unsupported(
            "t = ∞ velocity projectors are only available for free dynamics".into(),
        ))
    }
}

/// `F^t(Δ_v) v` for finite `t ≥ 0` (any Hamiltonian), or `F⁺(Δ_v) v` when
/// `t` is `None` (free dynamics only).
pub fn f_projector_vec(
    u: &GridUniverse,
    dv: &VelocityRegion,
    t: Option<f64>,
    v: &[C64],
) -> Result<Vec<C64>> {
    match t {
        None => {
            require_free(u)?;
            u.asymptotic_projection(v, dv)
        }
        Some(t) if t >= 0.0 && t.is_finite() => {
            let region = scaled_region(u.grid(), u.mass(), dv, t);
            let mut w = u.transport(v, 0.0, t)?;
            region.apply(&mut w);
            u.transport(&w, t, 0.0)
        }
        Some(t) => Err(Error::contract(format!("projector time must be >= 0, got {t}"))),
    }
}

pub fn f_projector(
    dv: &VelocityRegion,
    t: Option<f64>,
    psi: &GridState,
    h: &crate::quantum::Hamiltonian,
) -> Result<GridState> {
    let u = GridUniverse::new(psi.clone(), h.clone())?;
    Ok(u.wrap(f_projector_vec(&u, dv, t, psi.amps())?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceProfile {
    pub times: Vec<f64>,
    /// `‖F^t(Δ_v)Ψ₀ − F⁺(Δ_v)Ψ₀‖` per sample.
    pub distances: Vec<f64>,
    pub threshold: f64,
    /// First sampled time with distance `≤ threshold`.
    pub t_conv: Option<f64>,
    /// The last sample is still above the threshold.
    pub not_converged: bool,
}

impl ConvergenceProfile {
    pub fn final_distance(&self) -> f64 {
        self.distances.last().copied().unwrap_or(0.0)
    }
}

/// Samples `‖F^t(Δ_v)Ψ₀ − F⁺(Δ_v)Ψ₀‖` over `times`.
pub fn convergence_profile(
    u: &GridUniverse,
    dv: &VelocityRegion,
    times: &[f64],
    threshold: f64,
) -> Result<ConvergenceProfile> {
    require_free(u)?;
    let limit = u.asymptotic_projection(u.initial(), dv)?;
    let distances = times
        .par_iter()
        .map(|&t| {
            let ft = f_projector_vec(u, dv, Some(t), u.initial())?;
            Ok(u.distance_sq(&ft, &limit).sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    let t_conv = times
        .iter()
        .zip(&distances)
        .find(|(_, &d)| d <= threshold)
        .map(|(&t, _)| t);
    let not_converged = distances.last().is_some_and(|&d| d > threshold);
    Ok(ConvergenceProfile {
        times: times.to_vec(),
        distances,
        threshold,
        t_conv,
        not_converged,
    })
}

/// `Δ̃_v = {p : |Ψ̂₀(p)|² < 2 Re[Ψ̂₀(p)* (CΨ₀)^(p)]}`, the velocity region
/// minimizing `‖CΨ₀ − F⁺(Δ_v)Ψ₀‖`.
pub fn optimal_velocity_region(u: &GridUniverse, c: &CSet) -> Result<VelocityRegion> {
    require_free(u)?;
    let mut psi = u.initial().to_vec();
    let mut phi = u.heisenberg(c)?;
    fft::forward(&mut psi);
    fft::forward(&mut phi);
    Ok(VelocityRegion::new(CellMask::from_fn(psi.len(), |j| {
        psi[j].norm_sqr() < 2.0 * (psi[j].conj() * phi[j]).re
    })))
}

/// `‖CΨ₀ − F⁺(Δ_v)Ψ₀‖²`.
pub fn velocity_distance_sq(u: &GridUniverse, c: &CSet, dv: &VelocityRegion) -> Result<f64> {
    let h = u.heisenberg(c)?;
    let f = u.asymptotic_projection(u.initial(), dv)?;
    Ok(u.distance_sq(&h, &f))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticOverlap {
    /// `‖CΨ₀ − F⁺(Δ̃_v)Ψ₀‖² / min{‖CΨ₀‖², ‖C̄Ψ₀‖²}`.
    pub value: f64,
    /// The same limit as a momentum-space overlap of the two packets.
    pub momentum_overlap: f64,
    pub region: VelocityRegion,
    pub weight: f64,
}

/// `lim_{t→∞} w[U(t)CΨ₀, U(t)C̄Ψ₀]` in closed form.
pub fn asymptotic_overlap(u: &GridUniverse, c: &CSet) -> Result<AsymptoticOverlap> {
    require_free(u)?;
    let h = u.heisenberg(c)?;
    let rest: Vec<C64> = u.initial().iter().zip(&h).map(|(p, a)| p - a).collect();
    let weight = u.norm_sq(&h);
    let den = guard("packet weight", weight.min(u.norm_sq(&rest)))?;
    let region = optimal_velocity_region(u, c)?;
    let projected = u.asymptotic_projection(u.initial(), &region)?;
    let value = u.distance_sq(&h, &projected) / den;
    // Plancherel: momentum amplitudes carry weight dx/n.
    let (mut a, mut b) = (h.clone(), rest);
    fft::forward(&mut a);
    fft::forward(&mut b);
    let momentum_overlap = overlap_vectors(u.cell_weight() / u.dim() as f64, &a, &b)?;
    Ok(AsymptoticOverlap { value, momentum_overlap, region, weight })
}

/// `w[U(t)CΨ₀, U(t)C̄Ψ₀]` at a finite time.
pub fn finite_time_overlap(u: &GridUniverse, c: &CSet, t: f64) -> Result<f64> {
    let a = u.transport(&u.heisenberg(c)?, 0.0, t)?;
    let psi = u.state_at(t)?;
    let b: Vec<C64> = psi.iter().zip(&a).map(|(p, x)| p - x).collect();
    overlap_vectors(u.cell_weight(), &a, &b)
}

/// `‖F^t(Δ_v)ψ‖² + ‖F^t(Δ̄_v)ψ‖²`, which must equal `‖ψ‖²`.
pub fn complement_weight_sum(
    u: &GridUniverse,
    dv: &VelocityRegion,
    t: Option<f64>,
    v: &[C64],
) -> Result<f64> {
    let a = f_projector_vec(u, dv, t, v)?;
    let b = f_projector_vec(u, &dv.complement(), t, v)?;
    Ok(u.norm_sq(&a) + u.norm_sq(&b))
}

/// Velocity projector applied in the Schrödinger picture at time `t` for the
/// free case, used to check commutation with free evolution.
pub fn project_then_evolve(u: &GridUniverse, dv: &VelocityRegion, t: f64) -> Result<Vec<C64>> {
    let p = u.asymptotic_projection(u.initial(), dv)?;
    u.transport(&p, 0.0, t)
}

pub fn evolve_then_project(u: &GridUniverse, dv: &VelocityRegion, t: f64) -> Result<Vec<C64>> {
    let p = u.state_at(t)?;
    u.asymptotic_projection(&p, dv)
}

/// Asymptotic s-set weight `‖F⁺(Δ_v)Ψ₀‖²` together with its spatial
/// counterpart at time `t`.
pub fn velocity_weights(u: &GridUniverse, dv: &VelocityRegion, t: f64) -> Result<(f64, f64)> {
    let inf = u.norm_sq(&u.asymptotic_projection(u.initial(), dv)?);
    let region = scaled_region(u.grid(), u.mass(), dv, t);
    let fin = u.norm_sq(&masked(&u.state_at(t)?, &region));
    Ok((inf, fin))
}
