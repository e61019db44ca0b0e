//! Typicality functions of a finite weighted measure space.

use serde::{Deserialize, Serialize};

use super::{TypicalityValue, Variant};
use crate::error::guard;
use crate::quantum::{CellMask, Region, Universe};
use crate::{Error, Result};

/// Nonnegative weights on `0..n`; subsets are [`CellMask`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiniteMeasureSpace {
    weights: Vec<f64>,
}

impl FiniteMeasureSpace {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
            return Err(Error::contract(format!("weights must be finite and >= 0, got {w}")));
        }
        guard("total weight", weights.iter().sum())?;
        Ok(FiniteMeasureSpace { weights })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        FiniteMeasureSpace::new(vec![1.0 / n as f64; n])
    }

    /// The Born measure `‖E(·)Ψ(t)‖²` of a universe at time `t`.
    pub fn born<U: Universe + ?Sized>(u: &U, t: f64) -> Result<Self> {
        let psi = u.state_at(t)?;
        let w = u.cell_weight();
        FiniteMeasureSpace::new(psi.iter().map(|a| a.norm_sqr() * w).collect())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn measure(&self, a: &CellMask) -> f64 {
        debug_assert_eq!(a.len(), self.len());
        a.indices().map(|i| self.weights[i]).sum()
    }

    pub fn full(&self) -> CellMask {
        CellMask::full(self.len())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbKind {
    /// `r(A|B) = μ(B∖A)/μ(B)`.
    Relative,
    /// `a(A) = μ(Ā)/μ(Ω)`.
    Absolute,
    /// `m(A,B) = μ(A△B)/N`.
    Mutual,
    /// `τ(A,B) = 2μ(A∩B)/(μ(A)+μ(B))`.
    Measure,
}

/// Probabilistic typicality function of kind `kind`.
///
/// `variant` selects the normalization of the mutual kind; relative and
/// absolute values carry their own denominators (they coincide with `N₁`
/// mutual values of `(A∩B, B)` and `(Ω, A)`), and `τ` has none.
pub fn prob_typicality(
    kind: ProbKind,
    a: &CellMask,
    b: Option<&CellMask>,
    space: &FiniteMeasureSpace,
    variant: Variant,
) -> Result<TypicalityValue> {
    let need_b = || b.ok_or_else(|| Error::contract(format!("{kind:?} typicality needs a second set")));
    for m in std::iter::once(a).chain(b) {
        if m.len() != space.len() {
            return Err(Error::Geometry(format!(
                "subset over {} elements in a space of {}",
                m.len(),
                space.len()
            )));
        }
    }
    match kind {
        ProbKind::Relative => {
            let b = need_b()?;
            let num = space.measure(&b.difference(a));
            Ok(TypicalityValue::new(num / guard("μ(B)", space.measure(b))?, None))
        }
        ProbKind::Absolute => {
            let num = space.measure(&a.complement());
            Ok(TypicalityValue::new(num / guard("μ(Ω)", space.total())?, None))
        }
        ProbKind::Mutual => {
            let b = need_b()?;
            let d = space.measure(&a.symmetric_difference(b));
            let v = variant.normalize(d, space.measure(a), space.measure(b))?;
            Ok(TypicalityValue::new(v, Some(variant)))
        }
        ProbKind::Measure => {
            let b = need_b()?;
            let num = 2.0 * space.measure(&a.intersection(b));
            let den = guard("μ(A)+μ(B)", space.measure(a) + space.measure(b))?;
            Ok(TypicalityValue::measure(num / den))
        }
    }
}

/// Convenience: the mutual function under a region pair.
pub fn mutual_regions(
    a: &Region,
    b: &Region,
    space: &FiniteMeasureSpace,
    variant: Variant,
) -> Result<TypicalityValue> {
    prob_typicality(ProbKind::Mutual, a.mask(), Some(b.mask()), space, variant)
}
