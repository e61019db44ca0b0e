//! Quantum typicality functions on s-sets.
//!
//! Everything is expressed through the Heisenberg vectors `SΨ₀`. Where two
//! closed forms exist (two-time form of `m`, both forms of `a` and `τ`) both
//! are evaluated and must agree to [`FORM_TOL`].

use serde::{Deserialize, Serialize};

use super::{TypicalityValue, Variant};
use crate::error::{agree, guard};
use crate::quantum::universe::masked;
use crate::quantum::{CSet, CellMask, Region, Universe};
use crate::{Error, Result, C64};

/// Agreement required between alternative closed forms of one quantity,
/// relative to `max(1, |value|)`.
pub const FORM_TOL: f64 = 1e-10;

/// Factor in the small-denominator warning of [`quantum_relative_general`].
pub const WARNING_FACTOR: f64 = 3.0;

fn check_forms(what: &'static str, lhs: f64, rhs: f64) -> Result<()> {
    agree(what, lhs, rhs, FORM_TOL * lhs.abs().max(1.0))
}

/// All four normalizations of `‖v₁ − v₂‖²` at once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MutualValues {
    pub distance_sq: f64,
    pub weight1: f64,
    pub weight2: f64,
}

impl MutualValues {
    pub fn from_vectors<U: Universe + ?Sized>(u: &U, v1: &[C64], v2: &[C64]) -> Self {
        MutualValues {
            distance_sq: u.distance_sq(v1, v2),
            weight1: u.norm_sq(v1),
            weight2: u.norm_sq(v2),
        }
    }

    pub fn value(&self, variant: Variant) -> Result<f64> {
        variant.normalize(self.distance_sq, self.weight1, self.weight2)
    }

    pub fn typicality(&self, variant: Variant) -> Result<TypicalityValue> {
        Ok(TypicalityValue::new(self.value(variant)?, Some(variant)))
    }

    /// `m¹` (max normalization).
    pub fn m1(&self) -> Result<f64> {
        self.value(Variant::N1)
    }

    /// `m³` (min normalization).
    pub fn m3(&self) -> Result<f64> {
        self.value(Variant::N3)
    }
}

/// Raw ingredients of `m_Ψ(S₁, S₂)` from the Heisenberg vectors.
pub fn mutual_values<U: Universe + ?Sized>(u: &U, s1: &CSet, s2: &CSet) -> Result<MutualValues> {
    let v1 = u.heisenberg(s1)?;
    let v2 = u.heisenberg(s2)?;
    Ok(MutualValues::from_vectors(u, &v1, &v2))
}

/// `‖E(Δ₂)Ψ(t₂) − U(t₂−t₁)E(Δ₁)Ψ(t₁)‖²` with the two Born weights.
fn two_time_form<U: Universe + ?Sized>(
    u: &U,
    (t1, r1): (f64, &Region),
    (t2, r2): (f64, &Region),
) -> Result<MutualValues> {
    let p1 = masked(&u.state_at(t1)?, r1);
    let p2 = masked(&u.state_at(t2)?, r2);
    let moved = u.transport(&p1, t1, t2)?;
    Ok(MutualValues {
        distance_sq: u.distance_sq(&p2, &moved),
        weight1: u.norm_sq(&p1),
        weight2: u.norm_sq(&p2),
    })
}

/// `m_Ψ(S₁, S₂) = ‖S₁Ψ₀ − S₂Ψ₀‖² / N`.
///
/// For two spatial s-sets the `N₁` value is recomputed from the two-time
/// Schrödinger-picture form; a mismatch is an [`Error::Inconsistent`].
pub fn quantum_mutual<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    s2: &CSet,
    variant: Variant,
) -> Result<TypicalityValue> {
    let mv = mutual_values(u, s1, s2)?;
    let out = mv.typicality(variant)?;
    if let (CSet::Spatial { time: t1, region: r1 }, CSet::Spatial { time: t2, region: r2 }) = (s1, s2) {
        let explicit = two_time_form(u, (*t1, r1), (*t2, r2))?;
        check_forms("m_Psi two-time form", mv.m1()?, explicit.m1()?)?;
    }
    Ok(out)
}

/// `a_Ψ(S) = ‖SΨ₀ − Ψ₀‖² = ‖E(Δ̄)Ψ(t)‖²`.
pub fn quantum_absolute<U: Universe + ?Sized>(u: &U, s: &CSet) -> Result<TypicalityValue> {
    let v = u.heisenberg(s)?;
    let a = u.distance_sq(&v, u.initial());
    let b = u.born_weight(&s.complement())?;
    check_forms("a_Psi forms", a, b)?;
    Ok(TypicalityValue::new(a, None))
}

/// `r_Ψ(S₁|S₂) = ‖E(Δ₂∖Δ₁)Ψ(t)‖² / ‖E(Δ₂)Ψ(t)‖²` for equal-time s-sets.
pub fn quantum_relative_equal_time<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    s2: &CSet,
) -> Result<TypicalityValue> {
    if !s1.same_time(s2) {
        return Err(Error::contract(
            "relative typicality of unequal-time s-sets: use quantum_relative_general",
        ));
    }
    let inter = s1.intersection(s2)?;
    let m = mutual_values(u, &inter, s2)?;
    let value = m.distance_sq / guard("|S2 Psi0|^2", m.weight2)?;
    Ok(TypicalityValue::new(value, None))
}

/// `Δ̃ = {x : |Ψ(t₂)(x)|² < 2 Re[Ψ(t₂)(x)* (U(t₂)S₁Ψ₀)(x)]}`, the region that
/// minimizes `‖S₁Ψ₀ − (t₂, Δ)Ψ₀‖`.
pub fn optimal_region<U: Universe + ?Sized>(u: &U, s1: &CSet, t2: f64) -> Result<Region> {
    let phi = u.transport(&u.heisenberg(s1)?, 0.0, t2)?;
    let psi = u.state_at(t2)?;
    Ok(splitting_mask(&psi, &phi, u.cell_weight()))
}

pub(crate) fn splitting_mask(psi: &[C64], phi: &[C64], cell_width: f64) -> Region {
    let mask = CellMask::from_fn(psi.len(), |i| {
        psi[i].norm_sqr() < 2.0 * (psi[i].conj() * phi[i]).re
    });
    Region::new(mask, cell_width)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeReport {
    pub value: TypicalityValue,
    /// `m_Ψ[S₂∩(t₂,Δ̃), S₂]`.
    pub coverage_term: f64,
    /// `m_Ψ[S₁, (t₂,Δ̃)]`.
    pub recovery_term: f64,
    pub optimal_region: Region,
    /// `‖S₂Ψ₀‖ ≤ 3 ‖S₁Ψ₀ − (t₂,Δ̃)Ψ₀‖`: the value may be meaningless.
    pub small_denominator: bool,
}

/// General `r_Ψ(S₁|S₂) = max{m_Ψ[S₂∩(t₂,Δ̃), S₂], m_Ψ[S₁, (t₂,Δ̃)]}`.
pub fn quantum_relative_general<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    s2: &CSet,
) -> Result<RelativeReport> {
    let (t2, r2) = match s2 {
        CSet::Spatial { time, region } => (*time, region),
        CSet::Asymptotic { .. } => {
            return Err(Error::contract("the conditioning s-set must have a finite time"))
        }
    };
    let v1 = u.heisenberg(s1)?;
    let v2 = u.heisenberg(s2)?;
    let tilde = optimal_region(u, s1, t2)?;
    let tilde = Region::new(tilde.mask().clone(), r2.cell_width());
    let tilde_set = CSet::Spatial { time: t2, region: tilde.clone() };
    let vt = u.heisenberg(&tilde_set)?;
    let inter = u.heisenberg(&s2.intersection(&tilde_set)?)?;

    let cover = MutualValues::from_vectors(u, &inter, &v2).m1()?;
    let recover = MutualValues::from_vectors(u, &v1, &vt).m1()?;
    let residual = u.distance_sq(&v1, &vt).sqrt();
    let small = u.norm_sq(&v2).sqrt() <= WARNING_FACTOR * residual;
    Ok(RelativeReport {
        value: TypicalityValue::new(cover.max(recover), None),
        coverage_term: cover,
        recovery_term: recover,
        optimal_region: tilde,
        small_denominator: small,
    })
}

/// `τ_Ψ = 2|Re⟨S₁Ψ₀, S₂Ψ₀⟩| / (‖S₁Ψ₀‖² + ‖S₂Ψ₀‖²)`, checked against
/// `|1 − ‖S₁Ψ₀ − S₂Ψ₀‖²/(‖S₁Ψ₀‖² + ‖S₂Ψ₀‖²)|`.
pub fn quantum_typicality_measure<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    s2: &CSet,
) -> Result<TypicalityValue> {
    let v1 = u.heisenberg(s1)?;
    let v2 = u.heisenberg(s2)?;
    tau_from_vectors(u, &v1, &v2)
}

pub(crate) fn tau_from_vectors<U: Universe + ?Sized>(
    u: &U,
    v1: &[C64],
    v2: &[C64],
) -> Result<TypicalityValue> {
    let n1 = u.norm_sq(v1);
    let n2 = u.norm_sq(v2);
    let den = guard("|S1 Psi0|^2 + |S2 Psi0|^2", n1 + n2)?;
    let inner_form = 2.0 * u.inner(v1, v2).re.abs() / den;
    let diff_form = (1.0 - u.distance_sq(v1, v2) / den).abs();
    check_forms("tau_Psi forms", inner_form, diff_form)?;
    Ok(TypicalityValue::measure(inner_form))
}

/// The Born-rule style alternative: the two conditional leak terms
/// `‖S̄₂S₁Ψ₀‖²/‖S₁Ψ₀‖² + ‖S̄₁S₂Ψ₀‖²/‖S₂Ψ₀‖²`. Comparison only.
pub fn born_alternative_mutual<U: Universe + ?Sized>(
    u: &U,
    s1: &CSet,
    s2: &CSet,
) -> Result<TypicalityValue> {
    let v1 = u.heisenberg(s1)?;
    let v2 = u.heisenberg(s2)?;
    let leak12 = u.norm_sq(&u.apply_cset(&s2.complement(), &v1)?);
    let leak21 = u.norm_sq(&u.apply_cset(&s1.complement(), &v2)?);
    let value = leak12 / guard("|S1 Psi0|^2", u.norm_sq(&v1))?
        + leak21 / guard("|S2 Psi0|^2", u.norm_sq(&v2))?;
    Ok(TypicalityValue { in_regime: false, ..TypicalityValue::new(value, None) })
}

/// Every quantum typicality value of a pair of s-sets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumTypicalityReport {
    pub mutual: Vec<TypicalityValue>,
    pub tau: TypicalityValue,
    pub relative: Option<RelativeReport>,
    pub born_alternative: Option<TypicalityValue>,
}

impl QuantumTypicalityReport {
    pub fn compute<U: Universe + ?Sized>(u: &U, s1: &CSet, s2: &CSet) -> Result<Self> {
        let mv = mutual_values(u, s1, s2)?;
        let mutual = Variant::ALL
            .iter()
            .map(|&v| mv.typicality(v))
            .collect::<Result<Vec<_>>>()?;
        let relative = match s2 {
            CSet::Spatial { .. } => Some(quantum_relative_general(u, s1, s2)?),
            CSet::Asymptotic { .. } => None,
        };
        Ok(QuantumTypicalityReport {
            mutual,
            tau: quantum_typicality_measure(u, s1, s2)?,
            relative,
            born_alternative: born_alternative_mutual(u, s1, s2).ok(),
        })
    }

    pub fn mutual(&self, variant: Variant) -> TypicalityValue {
        self.mutual[Variant::ALL.iter().position(|&v| v == variant).unwrap()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::dense::{hadamard, DenseInstance};
    use crate::quantum::grid::{make_gaussian_packet, Grid};
    use crate::quantum::{GridUniverse, Hamiltonian};

    fn packet_universe() -> GridUniverse {
        let g = Grid::centered(256, 40.0).unwrap();
        GridUniverse::new(make_gaussian_packet(0.0, 0.0, 1.0, &g).unwrap(), Hamiltonian::free())
            .unwrap()
    }

    fn hadamard_instance() -> DenseInstance {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        let cell0 = Region::new(CellMask::from_indices(2, &[0]), 1.0);
        DenseInstance::from_steps(vec![one, zero], vec![cell0], vec![(1.0, hadamard()), (2.0, hadamard())])
            .unwrap()
    }

    #[test]
    fn identical_sets_have_zero_distance() {
        let u = packet_universe();
        let s = CSet::at(1.0, Region::negative_axis(u.grid())).unwrap();
        assert_eq!(quantum_mutual(&u, &s, &s, Variant::N1).unwrap().value, 0.0);
        let tau = quantum_typicality_measure(&u, &s, &s).unwrap().value;
        assert!((tau - 1.0).abs() < 1e-14);
        assert!(born_alternative_mutual(&u, &s, &s).unwrap().value < 1e-20);
    }

    #[test]
    fn disjoint_halves_give_two() {
        let u = packet_universe();
        let l = CSet::at(0.5, Region::negative_axis(u.grid())).unwrap();
        let r = l.complement();
        let m = quantum_mutual(&u, &l, &r, Variant::N1).unwrap().value;
        assert!((m - 2.0).abs() < 1e-10, "{m}");
        assert!(quantum_typicality_measure(&u, &l, &r).unwrap().value < 1e-12);
    }

    #[test]
    fn hadamard_pair_matches_hand_computation() {
        // S₁Ψ₀ = H†E₀H e₀ = (1/2)(1, 1); S₂Ψ₀ = E₀ e₀ = e₀ (U(2) = I).
        let inst = hadamard_instance();
        let s1 = inst.cset(0, 1);
        let s2 = inst.cset(0, 2);
        let m = quantum_mutual(&inst, &s1, &s2, Variant::N1).unwrap().value;
        assert!((m - 0.5).abs() < 1e-12, "{m}");
    }

    #[test]
    fn absolute_extremes() {
        let u = packet_universe();
        let g = *u.grid();
        let a = |r: Region| quantum_absolute(&u, &CSet::at(0.7, r).unwrap()).unwrap().value;
        assert!(a(Region::full(&g)).abs() < 1e-14);
        assert!((a(Region::empty(&g)) - 1.0).abs() < 1e-12);
        assert!((a(Region::negative_axis(&g)) - 0.5).abs() < 1e-10);
    }

    #[test]
    fn relative_equal_time_extremes() {
        let u = packet_universe();
        let g = *u.grid();
        let wide = CSet::at(1.0, Region::interval(&g, -5.0, 5.0)).unwrap();
        let narrow = CSet::at(1.0, Region::interval(&g, -1.0, 1.0)).unwrap();
        let right = CSet::at(1.0, Region::interval(&g, 2.0, 4.0)).unwrap();
        assert_eq!(quantum_relative_equal_time(&u, &wide, &narrow).unwrap().value, 0.0);
        assert!((quantum_relative_equal_time(&u, &narrow, &right).unwrap().value - 1.0).abs() < 1e-12);
        let later = CSet::at(2.0, Region::full(&g)).unwrap();
        assert!(matches!(quantum_relative_equal_time(&u, &wide, &later), Err(Error::Contract(_))));
    }

    #[test]
    fn optimal_region_of_empty_set_is_empty() {
        let u = packet_universe();
        let s = CSet::at(0.0, Region::interval(u.grid(), 30.0, 31.0)).unwrap();
        assert!(optimal_region(&u, &s, 1.0).unwrap().mask().is_none());
        let none = CSet::at(0.0, Region::empty(u.grid())).unwrap();
        assert!(optimal_region(&u, &none, 2.0).unwrap().mask().is_none());
    }

    #[test]
    fn general_relative_of_a_set_with_itself_vanishes() {
        let u = packet_universe();
        let s = CSet::at(0.4, Region::interval(u.grid(), -1.0, 3.0)).unwrap();
        let r = quantum_relative_general(&u, &s, &s).unwrap();
        assert!(r.value.value < 1e-12);
        assert!(!r.small_denominator);
    }
}
