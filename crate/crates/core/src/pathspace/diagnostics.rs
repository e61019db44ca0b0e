//! Explanation diagnostics on weighted ensembles: memory, probabilistic
//! branches, occupation bounds and a determinism probe.

use serde::{Deserialize, Serialize};

use super::{Domain, PathEnsemble};
use crate::error::guard;
use crate::{Error, Result};

/// Slack for comparisons of exact weight sums against their bounds.
pub const EXACT_SLACK: f64 = 1e-12;

/// An s-set `(t, Δ)` with `t` given as an ensemble time index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Slot {
    pub index: usize,
    pub domain: Domain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiagnosticQuery {
    /// `μ(S₂∖S₁)/μ(S₂)` for an event `S₁` and a later record `S₂`.
    Memory { event: Slot, record: Slot },
    /// `max μ(H_j∖H_i)/μ(H_j)` over sampled `i ≤ j` with `t_j − t_i ≤ window`
    /// (no window: the whole schedule).
    Branch { domains: Vec<Domain>, window: Option<f64> },
    /// Occupation of `region` at the listed indices (all when absent).
    Occupation { region: Domain, eps: f64, indices: Option<Vec<usize>> },
    /// Weight of `S₁ △ (t_target, Δ₂)` where `Δ₂` is the forward image of the
    /// paths in `S₁`.
    Determinism { slot: Slot, target: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationReport {
    /// `E(Xᵢ)` per listed time.
    pub per_time: Vec<f64>,
    /// `E(Y_n)`.
    pub mean: f64,
    /// `σ²(Y_n)`.
    pub variance: f64,
    pub eps: f64,
    /// Every `E(Xᵢ) ≥ 1 − ε`.
    pub premise: bool,
    /// `E(Y_n) ≥ 1 − ε` and `σ²(Y_n) ≤ ε`.
    pub bound_holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostic {
    Memory { value: f64 },
    Branch { max: f64, witness: Option<(usize, usize)> },
    Occupation(OccupationReport),
    Determinism { weight: f64 },
}

fn check_index(ens: &PathEnsemble, i: usize) -> Result<()> {
    if i < ens.times().len() {
        Ok(())
    } else {
        Err(Error::contract(format!("time index {i} is not on the ensemble grid")))
    }
}

pub fn ensemble_diagnostics(ens: &PathEnsemble, query: &DiagnosticQuery) -> Result<Diagnostic> {
    match query {
        DiagnosticQuery::Memory { event, record } => {
            check_index(ens, event.index)?;
            check_index(ens, record.index)?;
            let (e, r) = ((event.index, &event.domain), (record.index, &record.domain));
            let den = guard("record weight", ens.fraction_in(r.0, r.1))?;
            let num = ens.weight_where(|p| r.1.contains(p[r.0]) && !e.1.contains(p[e.0]));
            Ok(Diagnostic::Memory { value: num / den })
        }
        DiagnosticQuery::Branch { domains, window } => {
            let times = ens.times();
            if domains.len() != times.len() {
                return Err(Error::contract("a branch needs one domain per ensemble time"));
            }
            let mut max = 0.0;
            let mut witness = None;
            for j in 0..times.len() {
                let den = guard("branch member weight", ens.fraction_in(j, &domains[j]))?;
                for i in 0..=j {
                    if window.is_some_and(|w| times[j] - times[i] > w) {
                        continue;
                    }
                    let num = ens.weight_where(|p| domains[j].contains(p[j]) && !domains[i].contains(p[i]));
                    let r = num / den;
                    if r > max {
                        max = r;
                        witness = Some((i, j));
                    }
                }
            }
            Ok(Diagnostic::Branch { max, witness })
        }
        DiagnosticQuery::Occupation { region, eps, indices } => {
            let idx: Vec<usize> = match indices {
                Some(v) => v.clone(),
                None => (0..ens.times().len()).collect(),
            };
            if idx.is_empty() {
                return Err(Error::contract("occupation needs at least one time"));
            }
            for &i in &idx {
                check_index(ens, i)?;
            }
            Ok(Diagnostic::Occupation(occupation(ens, region, *eps, &idx)))
        }
        DiagnosticQuery::Determinism { slot, target } => {
            check_index(ens, slot.index)?;
            check_index(ens, *target)?;
            let inside = |p: &[f64]| slot.domain.contains(p[slot.index]);
            let mut image: Vec<f64> = ens.paths().iter().filter(|p| inside(p)).map(|p| p[*target]).collect();
            image.sort_by(f64::total_cmp);
            let in_image = |x: f64| image.binary_search_by(|y| y.total_cmp(&x)).is_ok();
            let weight = ens.weight_where(|p| inside(p) != in_image(p[*target]));
            Ok(Diagnostic::Determinism { weight })
        }
    }
}

fn occupation(ens: &PathEnsemble, region: &Domain, eps: f64, idx: &[usize]) -> OccupationReport {
    let n = idx.len() as f64;
    let per_time: Vec<f64> = idx.iter().map(|&i| ens.fraction_in(i, region)).collect();
    let ys: Vec<f64> = ens
        .paths()
        .iter()
        .map(|p| idx.iter().filter(|&&i| region.contains(p[i])).count() as f64 / n)
        .collect();
    let w = ens.weights();
    let mean: f64 = ys.iter().zip(w).map(|(y, w)| w * y).sum();
    let variance: f64 = ys.iter().zip(w).map(|(y, w)| w * (y - mean).powi(2)).sum();
    let premise = per_time.iter().all(|&m| m >= 1.0 - eps - EXACT_SLACK);
    OccupationReport {
        bound_holds: mean >= 1.0 - eps - EXACT_SLACK && variance <= eps + EXACT_SLACK,
        per_time,
        mean,
        variance,
        eps,
        premise,
    }
}
