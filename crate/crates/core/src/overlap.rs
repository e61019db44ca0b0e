//! The overlapping measure `w`, splitting regions, supports, and the overlap
//! profile of a packet `U(t)S₁Ψ₀` against its complement `U(t)S̄₁Ψ₀`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{agree, guard};
use crate::quantum::grid::{distance_sq, norm_sq};
use crate::quantum::universe::masked;
use crate::quantum::{CSet, CellMask, GridState, Region, Universe};
use crate::{Error, Result, C64};

/// Slack on the weight precondition `‖S₁Ψ₀‖² ≤ 1/2`.
pub const HALF_WEIGHT_SLACK: f64 = 1e-12;

/// Slack used when checking the profile inequalities.
pub const PROFILE_SLACK: f64 = 1e-9;

/// `Δ̃ = {x : |φ₁(x)| > |φ₂(x)|}`.
pub fn splitting_mask(a: &[C64], b: &[C64]) -> CellMask {
    CellMask::from_fn(a.len(), |i| a[i].norm_sqr() > b[i].norm_sqr())
}

pub fn splitting_region(phi1: &GridState, phi2: &GridState) -> Region {
    Region::new(splitting_mask(phi1.amps(), phi2.amps()), phi1.grid().dx())
}

/// `(‖E(Δ̄)φ₁‖² + ‖E(Δ)φ₂‖²) / min{‖φ₁‖², ‖φ₂‖²}` for a given `Δ`.
pub fn infimum_objective(weight: f64, a: &[C64], b: &[C64], mask: &CellMask) -> Result<f64> {
    let den = guard("min packet norm", norm_sq(weight, a).min(norm_sq(weight, b)))?;
    let num: f64 = (0..a.len())
        .map(|i| if mask.contains(i) { b[i].norm_sqr() } else { a[i].norm_sqr() })
        .sum::<f64>()
        * weight;
    Ok(num / den)
}

/// `w(φ₁, φ₂) = ∫min{|φ₁|², |φ₂|²} / min{‖φ₁‖², ‖φ₂‖²}` on raw vectors,
/// cross-checked against the infimum form at the splitting region.
pub fn overlap_vectors(weight: f64, a: &[C64], b: &[C64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Geometry("overlap of vectors of different lengths".into()));
    }
    let den = guard("min packet norm", norm_sq(weight, a).min(norm_sq(weight, b)))?;
    let num: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| x.norm_sqr().min(y.norm_sqr()))
        .sum::<f64>()
        * weight;
    let w = num / den;
    let inf = infimum_objective(weight, a, b, &splitting_mask(a, b))?;
    agree("overlap forms", w, inf, 1e-10)?;
    Ok(w)
}

pub fn overlapping_measure(phi1: &GridState, phi2: &GridState) -> Result<f64> {
    if phi1.grid() != phi2.grid() {
        return Err(Error::Geometry("overlap of states on different grids".into()));
    }
    overlap_vectors(phi1.grid().dx(), phi1.amps(), phi2.amps())
}

/// Relative leak `‖φ − E(Δ)φ‖² / ‖φ‖²`.
pub fn support_leak(region: &Region, phi: &GridState) -> Result<f64> {
    let den = guard("state norm", phi.norm_sq())?;
    Ok(phi.norm_sq_outside(region) / den)
}

/// Whether `Δ` is a support of `φ` at tolerance `eps`.
pub fn is_support(region: &Region, phi: &GridState, eps: f64) -> Result<bool> {
    Ok(support_leak(region, phi)? <= eps)
}

impl GridState {
    /// `‖E(Δ̄)ψ‖²`.
    pub fn norm_sq_outside(&self, region: &Region) -> f64 {
        self.amps()
            .iter()
            .zip(region.mask().flags())
            .filter(|(_, &inside)| !inside)
            .map(|(a, _)| a.norm_sqr())
            .sum::<f64>()
            * self.grid().dx()
    }
}

/// One time sample of an overlap profile. `Δ̃₂` is the splitting region of
/// `a = U(t)S₁Ψ₀` against `b = Ψ(t) − a`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapSample {
    pub time: f64,
    /// `w[U(t)S₁Ψ₀, U(t)S̄₁Ψ₀]`.
    pub w: f64,
    /// `m_Ψ(S₁, (t, Δ̃₂))`, an upper bound on `inf m_Ψ`; must not exceed `w`.
    pub m_at_split: f64,
    /// `m³_Ψ(S₁, (t, Δ̃₂))`; must not fall below `w` (`inf m³ ≥ w`).
    pub m3_at_split: f64,
    /// `‖U(t)S₁Ψ₀ − E(Δ̃₂)U(t)S₁Ψ₀‖² / ‖S₁Ψ₀‖²`; must not exceed `m3_at_split`.
    pub leak: f64,
    /// `‖S₁Ψ₀ − (t,Δ̃₂)Ψ₀‖² / ‖S₁Ψ₀‖²`, which equals `w`.
    pub distance_form: f64,
    /// `m_at_split ≤ eps`: `Δ̃₂` is then certified as a support at
    /// tolerance `m3_at_split`.
    pub support_premise: bool,
    pub inequalities_hold: bool,
    #[serde(skip)]
    pub split_region: Option<Region>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapProfile {
    pub weight: f64,
    pub eps: f64,
    pub samples: Vec<OverlapSample>,
}

impl OverlapProfile {
    pub fn times(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.time).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.w).collect()
    }

    pub fn max_w(&self) -> f64 {
        self.samples.iter().map(|s| s.w).fold(0.0, f64::max)
    }

    pub fn all_inequalities_hold(&self) -> bool {
        self.samples.iter().all(|s| s.inequalities_hold)
    }
}

/// `‖S₁Ψ₀‖²` after checking the weight precondition.
pub(crate) fn half_weight<U: Universe + ?Sized>(u: &U, h1: &[C64]) -> Result<f64> {
    let weight = u.norm_sq(h1);
    if weight > 0.5 + HALF_WEIGHT_SLACK {
        return Err(Error::contract(format!(
            "s-set weight {weight} exceeds 1/2; use the complement"
        )));
    }
    guard("|S1 Psi0|^2", weight)
}

/// Overlap sample at time `t` for the Heisenberg vector `h1 = S₁Ψ₀` of
/// weight `weight`.
pub(crate) fn overlap_sample<U: Universe + ?Sized>(
    u: &U,
    h1: &[C64],
    weight: f64,
    t: f64,
    eps: f64,
    keep_region: bool,
) -> Result<OverlapSample> {
    let a = u.transport(h1, 0.0, t)?;
    let psi = u.state_at(t)?;
    let b: Vec<C64> = psi.iter().zip(&a).map(|(p, x)| p - x).collect();
    let cw = u.cell_weight();
    let w = overlap_vectors(cw, &a, &b)?;
    let split = splitting_mask(&a, &b);
    let region = Region::new(split, cw);
    let projected = masked(&psi, &region);
    let d = distance_sq(cw, &a, &projected);
    let split_weight = u.norm_sq(&projected);
    let m = d / weight.max(split_weight);
    let m3 = if split_weight > 0.0 { d / weight.min(split_weight) } else { f64::INFINITY };
    let leak = u.norm_sq(&masked(&a, &region.complement())) / weight;
    let distance_form = d / weight;
    let inequalities_hold = m <= w + PROFILE_SLACK
        && w <= m3 + PROFILE_SLACK
        && leak <= m3 + PROFILE_SLACK
        && (distance_form - w).abs() <= PROFILE_SLACK;
    Ok(OverlapSample {
        time: t,
        w,
        m_at_split: m,
        m3_at_split: m3,
        leak,
        distance_form,
        support_premise: m <= eps,
        inequalities_hold,
        split_region: keep_region.then_some(region),
    })
}

/// `w[U(t)S₁Ψ₀, U(t)S̄₁Ψ₀]` over a time schedule, with the sandwich and
/// support-implication checks recorded per sample.
pub fn packet_overlap_profile<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    times: &[f64],
    eps: f64,
) -> Result<OverlapProfile> {
    let h1 = u.heisenberg(s1)?;
    let weight = half_weight(u, &h1)?;
    let samples = times
        .par_iter()
        .map(|&t| overlap_sample(u, &h1, weight, t, eps, false))
        .collect::<Result<Vec<_>>>()?;
    Ok(OverlapProfile { weight, eps, samples })
}
