//! Finite-dimensional distributions on cylinder sets built from the wave
//! function: the Everett–Bell product measure and the projected chain `μ_Q`.

use crate::quantum::{CSet, Region, Universe};
use crate::{Error, Result};

fn spatial_slots(slots: &[CSet]) -> Result<Vec<(f64, &Region)>> {
    slots
        .iter()
        .map(|c| match c {
            CSet::Spatial { time, region } => Ok((*time, region)),
            CSet::Asymptotic { .. } => Err(Error::contract("cylinder slots must be finite-time s-sets")),
        })
        .collect()
}

/// `μ_E(S₁∩…∩S_n) = ∏ ‖E(Δᵢ)Ψ(tᵢ)‖²`; the times must be distinct.
pub fn everett_bell_fdd<U: Universe + ?Sized>(u: &U, slots: &[CSet]) -> Result<f64> {
    let s = spatial_slots(slots)?;
    for (i, a) in s.iter().enumerate() {
        if s[..i].iter().any(|b| b.0 == a.0) {
            return Err(Error::contract(format!("repeated time {} in an Everett-Bell query", a.0)));
        }
    }
    slots.iter().try_fold(1.0, |acc, c| Ok(acc * u.born_weight(c)?))
}

/// `μ_Q = ‖E(Δ_n)U(t_n)U†(t_{n-1})…E(Δ₁)U(t₁)Ψ₀‖²` for nondecreasing times.
pub fn mu_q_fdd<U: Universe + ?Sized>(u: &U, slots: &[CSet]) -> Result<f64> {
    let s = spatial_slots(slots)?;
    if s.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::contract("projected-chain slots must be ordered in time"));
    }
    let mut v = u.initial().to_vec();
    let mut now = 0.0;
    for (t, region) in s {
        v = u.transport(&v, now, t)?;
        region.apply(&mut v);
        now = t;
    }
    Ok(u.norm_sq(&v))
}

/// `μ_Q(query) − μ_Q(query with Δᵢ∩P) − μ_Q(query with Δᵢ∖P)`.
pub fn additivity_gap<U: Universe + ?Sized>(u: &U, slots: &[CSet], i: usize, part: &Region) -> Result<f64> {
    let (t, region) = match slots.get(i) {
        Some(CSet::Spatial { time, region }) => (*time, region),
        _ => return Err(Error::contract(format!("slot {i} is not a finite-time s-set of the query"))),
    };
    let with = |r: Region| -> Result<f64> {
        let mut q = slots.to_vec();
        q[i] = CSet::at(t, r)?;
        mu_q_fdd(u, &q)
    };
    let whole = mu_q_fdd(u, slots)?;
    Ok(whole - with(region.intersection(part))? - with(region.difference(part))?)
}
