//! Subtree-supports, subtrees, asymptotic and irreducible supports, and
//! branches over a sampled time schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::asymptotic_overlap;
use crate::consistency::Ine4;
use crate::overlap::{half_weight, overlap_sample, HALF_WEIGHT_SLACK};
use crate::quantum::{CSet, CellMask, Grid, GridUniverse, Region, Universe};
use crate::typicality::quantum::{quantum_relative_general, MutualValues};
use crate::{Error, Result, C64};

/// One region per sampled time: `k(t)` or `h(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeRegionMap {
    times: Vec<f64>,
    regions: Vec<Region>,
}

impl TimeRegionMap {
    pub fn new(times: Vec<f64>, regions: Vec<Region>) -> Result<Self> {
        if times.len() != regions.len() || times.is_empty() {
            return Err(Error::contract("a time-region map needs one region per time"));
        }
        if times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::contract("map times must be strictly increasing"));
        }
        if regions.iter().any(|r| r.len() != regions[0].len()) {
            return Err(Error::Geometry("map regions live on different grids".into()));
        }
        Ok(TimeRegionMap { times, regions })
    }

    /// The same region at every time.
    pub fn constant(times: Vec<f64>, region: Region) -> Result<Self> {
        let regions = vec![region; times.len()];
        TimeRegionMap::new(times, regions)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn cset(&self, i: usize) -> CSet {
        CSet::Spatial { time: self.times[i], region: self.regions[i].clone() }
    }
}

/// A failing sample or pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub t1: f64,
    pub t2: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchReport {
    pub eps: f64,
    /// Sampled time schedule the verdict refers to.
    pub schedule: Vec<f64>,
    /// One entry per sample (scans) or per ordered pair (subtrees, branches).
    pub values: Vec<Witness>,
    pub max_value: f64,
    pub pass: bool,
    pub witnesses: Vec<Witness>,
    /// Pairs whose relative value carries the small-denominator warning.
    pub warnings: usize,
}

impl BranchReport {
    fn from_values(eps: f64, schedule: Vec<f64>, values: Vec<Witness>, warnings: usize) -> Self {
        let max_value = values.iter().map(|w| w.value).fold(0.0, f64::max);
        let witnesses: Vec<Witness> = values.iter().copied().filter(|w| !(w.value <= eps)).collect();
        BranchReport {
            eps,
            schedule,
            pass: witnesses.is_empty(),
            values,
            max_value,
            witnesses,
            warnings,
        }
    }
}

fn start_time(s1: &CSet) -> Result<f64> {
    s1.time()
        .ok_or_else(|| Error::contract("subtree-supports are finite-time s-sets"))
}

/// `‖S₁Ψ₀‖² ≤ 1/2` and `w[U(t)S₁Ψ₀, U(t)S̄₁Ψ₀] ≤ ε` at every sampled
/// `t ≥ t₁`. Earlier samples are dropped from the schedule.
pub fn subtree_support_scan<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    times: &[f64],
    eps: f64,
) -> Result<BranchReport> {
    let t1 = start_time(s1)?;
    let h1 = u.heisenberg(s1)?;
    let weight = half_weight(u, &h1)?;
    let schedule: Vec<f64> = times.iter().copied().filter(|&t| t >= t1).collect();
    let values = schedule
        .par_iter()
        .map(|&t| {
            let s = overlap_sample(u, &h1, weight, t, eps, false)?;
            Ok(Witness { t1, t2: t, value: s.w })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchReport::from_values(eps, schedule, values, 0))
}

/// Builds `k(t)` as the splitting region of `U(t)S₁Ψ₀` against
/// `U(t)S̄₁Ψ₀` and checks `m_Ψ[K(t₁), K(t₂)] ≤ ε` over all sampled pairs.
///
/// Fails with a contract error when `S₁` does not pass the support scan.
pub fn build_subtree<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    times: &[f64],
    eps: f64,
) -> Result<(TimeRegionMap, BranchReport)> {
    let scan = subtree_support_scan(u, s1, times, eps)?;
    if !scan.pass {
        return Err(Error::contract(format!(
            "s-set is not a subtree-support at eps = {eps} (max overlap {:.3e})",
            scan.max_value
        )));
    }
    let h1 = u.heisenberg(s1)?;
    let weight = half_weight(u, &h1)?;
    let regions = scan
        .schedule
        .par_iter()
        .map(|&t| {
            let s = overlap_sample(u, &h1, weight, t, eps, true)?;
            Ok(s.split_region.expect("region requested"))
        })
        .collect::<Result<Vec<_>>>()?;
    let map = TimeRegionMap::new(scan.schedule.clone(), regions)?;
    let report = subtree_pairs(u, &map, eps)?;
    Ok((map, report))
}

/// All-pairs `m_Ψ[K(tᵢ), K(tⱼ)]`, `i ≤ j`.
pub fn subtree_pairs<U: Universe + ?Sized>(
    u: &U,
    map: &TimeRegionMap,
    eps: f64,
) -> Result<BranchReport> {
    let vectors = heisenberg_all(u, map)?;
    let pairs = ordered_pairs(map.len());
    let values = pairs
        .par_iter()
        .map(|&(i, j)| {
            let m = MutualValues::from_vectors(u, &vectors[i], &vectors[j]).m1()?;
            Ok(Witness { t1: map.times[i], t2: map.times[j], value: m })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BranchReport::from_values(eps, map.times.clone(), values, 0))
}

fn heisenberg_all<U: Universe + ?Sized>(u: &U, map: &TimeRegionMap) -> Result<Vec<Vec<C64>>> {
    (0..map.len())
        .into_par_iter()
        .map(|i| u.heisenberg(&map.cset(i)))
        .collect()
}

fn ordered_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect()
}

/// Every `K(t)` of a subtree is itself a subtree-support over the later
/// part of the schedule.
pub fn subtree_members_are_supports<U: Universe + ?Sized>(
    u: &U,
    map: &TimeRegionMap,
    eps: f64,
) -> Result<bool> {
    for i in 0..map.len() {
        if !subtree_support_scan(u, &map.cset(i), &map.times[i..], eps)?.pass {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticCheck {
    pub eps: f64,
    /// `‖S₁Ψ₀ − F⁺(Δ̃_v)Ψ₀‖² / ‖S₁Ψ₀‖²`.
    pub value: f64,
    pub weight: f64,
    pub pass: bool,
}

/// `lim_{t→∞} w[U(t)S₁Ψ₀, U(t)S̄₁Ψ₀] ≤ ε`, in closed form (free dynamics).
pub fn asymptotic_support_check(u: &GridUniverse, s1: &CSet, eps: f64) -> Result<AsymptoticCheck> {
    let h1 = u.heisenberg(s1)?;
    let weight = half_weight(u, &h1)?;
    let limit = asymptotic_overlap(u, s1)?;
    Ok(AsymptoticCheck {
        eps,
        value: limit.value,
        weight,
        pass: limit.value <= eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub label: String,
    pub lebesgue: f64,
    /// Asymptotic overlap of the candidate, `None` for a zero-weight candidate.
    pub asymptotic_value: Option<f64>,
    pub is_asymptotic_support: bool,
    /// `m_Ψ(S, S′)`.
    pub mutual: f64,
    /// `μ_L(Δ△Δ′) / max{μ_L(Δ), μ_L(Δ′)}`.
    pub lebesgue_ratio: f64,
    /// An asymptotic support that is not close to `S`.
    pub counterexample: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IrreducibleReport {
    pub eps: f64,
    pub family: String,
    pub candidates: Vec<CandidateResult>,
    pub irreducible: bool,
}

/// Tests `S` against candidate sub-regions `Δ′ ⊆ Δ` (at the time of `S`).
pub fn irreducible_check(
    u: &GridUniverse,
    s: &CSet,
    candidates: &[(String, Region)],
    family: &str,
    eps: f64,
) -> Result<IrreducibleReport> {
    let (t, region) = match s {
        CSet::Spatial { time, region } => (*time, region),
        CSet::Asymptotic { .. } => return Err(Error::contract("irreducibility needs a finite-time s-set")),
    };
    if !asymptotic_support_check(u, s, eps)?.pass {
        return Err(Error::contract(format!(
            "s-set is not an asymptotic subtree-support at eps = {eps}"
        )));
    }
    let hs = u.heisenberg(s)?;
    let results = candidates
        .par_iter()
        .map(|(label, sub)| {
            if !sub.is_subset(region) {
                return Err(Error::contract(format!("candidate {label} is not contained in the s-set")));
            }
            let c = CSet::Spatial { time: t, region: sub.clone() };
            let hc = u.heisenberg(&c)?;
            let asym = match asymptotic_overlap(u, &c) {
                Ok(a) => Some(a.value),
                Err(Error::Degenerate { .. }) => None,
                Err(e) => return Err(e),
            };
            let is_support = asym.is_some_and(|v| v <= eps);
            let mutual = MutualValues::from_vectors(u, &hs, &hc).m1()?;
            let lebesgue_ratio = region.symmetric_difference(sub).lebesgue()
                / region.lebesgue().max(sub.lebesgue());
            Ok(CandidateResult {
                label: label.clone(),
                lebesgue: sub.lebesgue(),
                asymptotic_value: asym,
                is_asymptotic_support: is_support,
                mutual,
                lebesgue_ratio,
                counterexample: is_support && (mutual > eps || lebesgue_ratio > eps),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IrreducibleReport {
        eps,
        family: family.to_string(),
        irreducible: results.iter().all(|c| !c.counterexample),
        candidates: results,
    })
}

/// Default candidate family: the region's cell span shrunk from the left,
/// from the right, and symmetrically by each fraction, plus its two halves.
/// Candidates are intersected with the region, so they are always contained
/// in it.
pub fn interval_shrinkage_candidates(
    grid: &Grid,
    region: &Region,
    fractions: &[f64],
) -> Vec<(String, Region)> {
    let idx: Vec<usize> = region.mask().indices().collect();
    let (Some(&lo), Some(&hi)) = (idx.first(), idx.last()) else {
        return Vec::new();
    };
    let span = hi + 1 - lo;
    let cut = |a: usize, b: usize| {
        Region::new(CellMask::from_fn(grid.n(), |i| i >= a && i < b), grid.dx()).intersection(region)
    };
    let mut out = Vec::new();
    for &f in fractions {
        let k = ((f * span as f64).round() as usize).clamp(1, span - 1);
        let half = (k / 2).max(1);
        out.push((format!("left-{f}"), cut(lo + k, hi + 1)));
        out.push((format!("right-{f}"), cut(lo, hi + 1 - k)));
        out.push((format!("both-{f}"), cut(lo + half, hi + 1 - half)));
    }
    let mid = lo + span / 2;
    out.push(("lower-half".into(), cut(lo, mid)));
    out.push(("upper-half".into(), cut(mid, hi + 1)));
    out.retain(|(_, r)| r.mask().count() > 0);
    out
}

/// `‖H(t)Ψ₀‖² ≤ 1/2` at every sample and `r_Ψ[H(t₁)|H(t₂)] ≤ ε` for all
/// sampled `t₁ ≤ t₂`.
pub fn branch_verify<U: Universe + ?Sized>(
    u: &U,
    map: &TimeRegionMap,
    eps: f64,
) -> Result<BranchReport> {
    for i in 0..map.len() {
        let w = u.born_weight(&map.cset(i))?;
        if w > 0.5 + HALF_WEIGHT_SLACK {
            return Err(Error::contract(format!(
                "branch member at t = {} has weight {w} > 1/2",
                map.times[i]
            )));
        }
    }
    let pairs = ordered_pairs(map.len());
    let results = pairs
        .par_iter()
        .map(|&(i, j)| {
            let r = quantum_relative_general(u, &map.cset(i), &map.cset(j))?;
            Ok((Witness { t1: map.times[i], t2: map.times[j], value: r.value.value }, r.small_denominator))
        })
        .collect::<Result<Vec<_>>>()?;
    let warnings = results.iter().filter(|(_, w)| *w).count();
    let values = results.into_iter().map(|(v, _)| v).collect();
    Ok(BranchReport::from_values(eps, map.times.clone(), values, warnings))
}

/// One time sample of the disjoint-subtree check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisjointSample {
    pub time: f64,
    /// `w(S₂, S₂′) = ‖(S₂∩S₂′)Ψ₀‖² / min{‖S₂Ψ₀‖², ‖S₂′Ψ₀‖²}`.
    pub w: f64,
    /// `a√m(S₁,S₂) + b√m(S₁′,S₂′) + c·w(S₁,S₁′)`.
    pub bound: f64,
    /// `max{√m(S₁,S₂), √m(S₁′,S₂′)}`, the `√ε` the bound scales with.
    pub sqrt_m: f64,
}

/// For two equal-time s-sets with subtrees `K`, `K′` sampled at the same
/// times, checks that the subtree members stay non-overlapping within the
/// coefficient bound.
pub fn disjoint_subtree_check<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    s1p: &CSet,
    k: &TimeRegionMap,
    kp: &TimeRegionMap,
) -> Result<Vec<DisjointSample>> {
    if !s1.same_time(s1p) || k.times() != kp.times() {
        return Err(Error::contract("disjoint-subtree check needs matched times"));
    }
    let h1 = u.heisenberg(s1)?;
    let h1p = u.heisenberg(s1p)?;
    let inter1 = u.heisenberg(&s1.intersection(s1p)?)?;
    (0..k.len())
        .into_par_iter()
        .map(|i| {
            let s2 = k.cset(i);
            let s2p = kp.cset(i);
            let h2 = u.heisenberg(&s2)?;
            let h2p = u.heisenberg(&s2p)?;
            let inter2 = u.heisenberg(&s2.intersection(&s2p)?)?;
            let coeffs = Ine4::new(
                [u.norm_sq(&h1), u.norm_sq(&h1p), u.norm_sq(&h2), u.norm_sq(&h2p)],
                MutualValues::from_vectors(u, &h1, &h2).m1()?,
                MutualValues::from_vectors(u, &h1p, &h2p).m1()?,
                u.norm_sq(&inter1),
                u.norm_sq(&inter2),
            )?;
            Ok(DisjointSample {
                time: k.times()[i],
                w: coeffs.w2,
                bound: coeffs.bound(),
                sqrt_m: coeffs.m12.sqrt().max(coeffs.m12p.sqrt()),
            })
        })
        .collect()
}
