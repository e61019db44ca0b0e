//! Cell masks, spatial and velocity regions, and time-tagged s-sets.

use serde::{Deserialize, Serialize};

use super::grid::Grid;
use crate::{Error, Result};

/// A subset of a finite index set, one flag per cell.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CellMask(Vec<bool>);

impl CellMask {
    pub fn new(flags: Vec<bool>) -> Self {
        CellMask(flags)
    }

    pub fn full(n: usize) -> Self {
        CellMask(vec![true; n])
    }

    pub fn empty(n: usize) -> Self {
        CellMask(vec![false; n])
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize) -> bool) -> Self {
        CellMask((0..n).map(f).collect())
    }

    /// Mask with exactly the listed indices set.
    pub fn from_indices(n: usize, indices: &[usize]) -> Self {
        let mut flags = vec![false; n];
        for &i in indices {
            flags[i] = true;
        }
        CellMask(flags)
    }

    /// Decodes the low `n` bits of `bits` (bit `i` is cell `i`).
    pub fn from_bits(n: usize, bits: u64) -> Self {
        CellMask::from_fn(n, |i| bits >> i & 1 == 1)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    fn zip_with(&self, other: &CellMask, f: impl Fn(bool, bool) -> bool) -> CellMask {
        assert_eq!(self.len(), other.len(), "mask length mismatch");
        CellMask(self.0.iter().zip(&other.0).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn union(&self, other: &CellMask) -> CellMask {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &CellMask) -> CellMask {
        self.zip_with(other, |a, b| a && b)
    }

    /// `self ∖ other`.
    pub fn difference(&self, other: &CellMask) -> CellMask {
        self.zip_with(other, |a, b| a && !b)
    }

    pub fn symmetric_difference(&self, other: &CellMask) -> CellMask {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn complement(&self) -> CellMask {
        CellMask(self.0.iter().map(|&b| !b).collect())
    }

    pub fn is_subset(&self, other: &CellMask) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }

    pub fn is_full(&self) -> bool {
        self.0.iter().all(|&b| b)
    }

    pub fn is_none(&self) -> bool {
        !self.0.iter().any(|&b| b)
    }
}

/// A union of position cells, with the cell width used for its Lebesgue
/// measure. Dense oracle instances use width 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    mask: CellMask,
    cell_width: f64,
}

impl Region {
    pub fn new(mask: CellMask, cell_width: f64) -> Self {
        Region { mask, cell_width }
    }

    pub fn full(grid: &Grid) -> Self {
        Region::new(CellMask::full(grid.n()), grid.dx())
    }

    pub fn empty(grid: &Grid) -> Self {
        Region::new(CellMask::empty(grid.n()), grid.dx())
    }

    /// Cells whose center satisfies `pred`.
    pub fn from_predicate(grid: &Grid, mut pred: impl FnMut(f64) -> bool) -> Self {
        Region::new(CellMask::from_fn(grid.n(), |i| pred(grid.x(i))), grid.dx())
    }

    /// Cells with center in the half-open interval `[a, b)`.
    pub fn interval(grid: &Grid, a: f64, b: f64) -> Self {
        Region::from_predicate(grid, |x| x >= a && x < b)
    }

    /// `R⁻`: cells with center `x < 0`.
    pub fn negative_axis(grid: &Grid) -> Self {
        Region::from_predicate(grid, |x| x < 0.0)
    }

    /// `R⁺`: cells with center `x > 0`.
    pub fn positive_axis(grid: &Grid) -> Self {
        Region::from_predicate(grid, |x| x > 0.0)
    }

    pub fn mask(&self) -> &CellMask {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    /// Lebesgue measure: number of cells times the cell width.
    pub fn lebesgue(&self) -> f64 {
        self.mask.count() as f64 * self.cell_width
    }

    fn with_mask(&self, mask: CellMask) -> Region {
        Region::new(mask, self.cell_width)
    }

    pub fn complement(&self) -> Region {
        self.with_mask(self.mask.complement())
    }

    pub fn union(&self, other: &Region) -> Region {
        self.with_mask(self.mask.union(&other.mask))
    }

    pub fn intersection(&self, other: &Region) -> Region {
        self.with_mask(self.mask.intersection(&other.mask))
    }

    pub fn difference(&self, other: &Region) -> Region {
        self.with_mask(self.mask.difference(&other.mask))
    }

    pub fn symmetric_difference(&self, other: &Region) -> Region {
        self.with_mask(self.mask.symmetric_difference(&other.mask))
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.mask.is_subset(&other.mask)
    }

    /// Zeroes amplitudes outside the region.
    pub fn apply(&self, amps: &mut [crate::C64]) {
        debug_assert_eq!(amps.len(), self.len());
        for (a, &keep) in amps.iter_mut().zip(self.mask.flags()) {
            if !keep {
                *a = crate::C64::new(0.0, 0.0);
            }
        }
    }
}

/// A set of momentum-grid cells (FFT order), read as velocities `v = p/m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VelocityRegion {
    mask: CellMask,
}

impl VelocityRegion {
    pub fn new(mask: CellMask) -> Self {
        VelocityRegion { mask }
    }

    pub fn all(grid: &Grid) -> Self {
        VelocityRegion::new(CellMask::full(grid.n()))
    }

    /// Momentum cells whose center velocity `k/m` satisfies `pred`.
    pub fn from_predicate(grid: &Grid, mass: f64, mut pred: impl FnMut(f64) -> bool) -> Self {
        VelocityRegion::new(CellMask::from_fn(grid.n(), |j| pred(grid.momentum(j) / mass)))
    }

    /// Velocities strictly above `v0`, snapped to momentum-cell centers.
    pub fn above(grid: &Grid, mass: f64, v0: f64) -> Self {
        VelocityRegion::from_predicate(grid, mass, |v| v > v0)
    }

    pub fn mask(&self) -> &CellMask {
        &self.mask
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn complement(&self) -> VelocityRegion {
        VelocityRegion::new(self.mask.complement())
    }

    pub fn union(&self, other: &VelocityRegion) -> VelocityRegion {
        VelocityRegion::new(self.mask.union(&other.mask))
    }

    pub fn intersection(&self, other: &VelocityRegion) -> VelocityRegion {
        VelocityRegion::new(self.mask.intersection(&other.mask))
    }

    /// Whether velocity `v` falls in a selected momentum cell. Velocities
    /// beyond the momentum grid are assigned to the outermost cells.
    pub fn contains_velocity(&self, grid: &Grid, mass: f64, v: f64) -> bool {
        self.mask.contains(grid.momentum_cell(mass * v))
    }

    /// Zeroes momentum amplitudes (FFT order) outside the region.
    pub fn apply(&self, spectrum: &mut [crate::C64]) {
        for (a, &keep) in spectrum.iter_mut().zip(self.mask.flags()) {
            if !keep {
                *a = crate::C64::new(0.0, 0.0);
            }
        }
    }
}

/// An s-set: a region at a finite time, or a velocity region at `t = ∞`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CSet {
    Spatial { time: f64, region: Region },
    Asymptotic { region: VelocityRegion },
}

impl CSet {
    pub fn at(time: f64, region: Region) -> Result<Self> {
        if !time.is_finite() || time < 0.0 {
            return Err(Error::contract(format!(
                "s-set time must be finite and nonnegative, got {time}"
            )));
        }
        Ok(CSet::Spatial { time, region })
    }

    pub fn asymptotic(region: VelocityRegion) -> Self {
        CSet::Asymptotic { region }
    }

    /// Finite time, or `None` for asymptotic sets.
    pub fn time(&self) -> Option<f64> {
        match self {
            CSet::Spatial { time, .. } => Some(*time),
            CSet::Asymptotic { .. } => None,
        }
    }

    pub fn region(&self) -> Option<&Region> {
        match self {
            CSet::Spatial { region, .. } => Some(region),
            CSet::Asymptotic { .. } => None,
        }
    }

    pub fn is_asymptotic(&self) -> bool {
        matches!(self, CSet::Asymptotic { .. })
    }

    /// Same-time complement `(t, Δ̄)` or `(∞, Δ̄_v)`.
    pub fn complement(&self) -> CSet {
        match self {
            CSet::Spatial { time, region } => CSet::Spatial {
                time: *time,
                region: region.complement(),
            },
            CSet::Asymptotic { region } => CSet::Asymptotic {
                region: region.complement(),
            },
        }
    }

    /// Equal-time intersection. The intersection of unequal-time s-sets is
    /// not an s-set.
    pub fn intersection(&self, other: &CSet) -> Result<CSet> {
        self.combine(other, Region::intersection, VelocityRegion::intersection)
    }

    pub fn union(&self, other: &CSet) -> Result<CSet> {
        self.combine(other, Region::union, VelocityRegion::union)
    }

    fn combine(
        &self,
        other: &CSet,
        spatial: impl Fn(&Region, &Region) -> Region,
        velocity: impl Fn(&VelocityRegion, &VelocityRegion) -> VelocityRegion,
    ) -> Result<CSet> {
        match (self, other) {
            (CSet::Spatial { time: t1, region: r1 }, CSet::Spatial { time: t2, region: r2 })
                if t1 == t2 =>
            {
                Ok(CSet::Spatial {
                    time: *t1,
                    region: spatial(r1, r2),
                })
            }
            (CSet::Asymptotic { region: r1 }, CSet::Asymptotic { region: r2 }) => {
                Ok(CSet::Asymptotic {
                    region: velocity(r1, r2),
                })
            }
            _ => Err(Error::contract(
                "set operations are only defined for equal-time s-sets",
            )),
        }
    }

    pub fn same_time(&self, other: &CSet) -> bool {
        self.time() == other.time()
    }
}
