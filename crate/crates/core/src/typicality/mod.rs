//! Typicality functions: probabilistic ones over finite weighted spaces and
//! quantum ones over s-sets of a [`crate::quantum::Universe`].

use serde::{Deserialize, Serialize};

pub mod prob;
pub mod quantum;

pub use prob::{prob_typicality, FiniteMeasureSpace, ProbKind};
pub use quantum::{
    born_alternative_mutual, mutual_values, optimal_region, quantum_absolute, quantum_mutual,
    quantum_relative_equal_time, quantum_relative_general, quantum_typicality_measure,
    MutualValues, QuantumTypicalityReport, RelativeReport,
};

/// Normalization of a mutual typicality function `μ(A△B)/N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    /// `N₁ = max`.
    N1,
    /// `N₂ = mean`.
    N2,
    /// `N₃ = min`.
    N3,
    /// Square root of the `N₁` value.
    Sqrt,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::N1, Variant::N2, Variant::N3, Variant::Sqrt];

    /// Applies the normalization to a raw difference `d` with the two
    /// weights `a`, `b`.
    pub(crate) fn normalize(self, d: f64, a: f64, b: f64) -> crate::Result<f64> {
        use crate::error::guard;
        Ok(match self {
            Variant::N1 => d / guard("max weight", a.max(b))?,
            Variant::N2 => d / guard("mean weight", 0.5 * (a + b))?,
            Variant::N3 => d / guard("min weight", a.min(b))?,
            Variant::Sqrt => (d / guard("max weight", a.max(b))?).sqrt(),
        })
    }
}

/// A typicality value with the threshold it was judged against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TypicalityValue {
    pub value: f64,
    pub variant: Option<Variant>,
    pub eps: f64,
    /// `value ≤ eps`, or `1 − value ≤ eps` for measure-type values.
    pub in_regime: bool,
    /// Set for `τ`-type values, where typicality means a value near 1.
    #[serde(default)]
    pub measure_like: bool,
}

impl TypicalityValue {
    pub fn new(value: f64, variant: Option<Variant>) -> Self {
        TypicalityValue {
            value,
            variant,
            eps: crate::DEFAULT_EPS,
            in_regime: value <= crate::DEFAULT_EPS,
            measure_like: false,
        }
    }

    /// A `τ`-type value in `[0, 1]`.
    pub fn measure(value: f64) -> Self {
        TypicalityValue {
            measure_like: true,
            ..TypicalityValue::new(value, None)
        }
        .at_eps(crate::DEFAULT_EPS)
    }

    /// Re-judges the value against another threshold.
    pub fn at_eps(self, eps: f64) -> Self {
        let distance = if self.measure_like { 1.0 - self.value } else { self.value };
        TypicalityValue {
            eps,
            in_regime: distance <= eps,
            ..self
        }
    }
}
