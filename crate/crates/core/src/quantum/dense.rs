//! Small dense Hilbert spaces with explicit unitaries per time tag.
//!
//! These are the brute-force oracle for everything the grid pipeline
//! computes: regions are diagonal 0/1 projectors, and `U(t)` is looked up by
//! tag (`U(0) = I`).

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::region::{CSet, CellMask, Region, VelocityRegion};
use super::universe::{GridUniverse, Universe};
use crate::{Error, Result, C64};

/// Tolerance on `‖U†U − I‖` (Frobenius) accepted at construction.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseInstance {
    dim: usize,
    state: Vec<C64>,
    regions: Vec<Region>,
    times: Vec<f64>,
    unitaries: Vec<DMatrix<C64>>,
}

impl DenseInstance {
    /// `unitaries[k]` is `U(times[k])`. Tags must be distinct and positive.
    pub fn new(
        state: Vec<C64>,
        regions: Vec<Region>,
        times: Vec<f64>,
        unitaries: Vec<DMatrix<C64>>,
    ) -> Result<Self> {
        let dim = state.len();
        if dim < 2 {
            return Err(Error::Geometry(format!("dense dimension must be >= 2, got {dim}")));
        }
        let norm = crate::quantum::grid::norm_sq(1.0, &state);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::contract(format!("dense state has norm² {norm}, expected 1")));
        }
        if let Some(r) = regions.iter().find(|r| r.len() != dim) {
            return Err(Error::Geometry(format!("region of {} cells in dimension {dim}", r.len())));
        }
        if times.len() != unitaries.len() {
            return Err(Error::contract("one unitary per time tag is required"));
        }
        for (k, &t) in times.iter().enumerate() {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::contract(format!("time tags must be positive, got {t}")));
            }
            if times[..k].contains(&t) {
                return Err(Error::contract(format!("duplicate time tag {t}")));
            }
        }
        for (t, u) in times.iter().zip(&unitaries) {
            if u.nrows() != dim || u.ncols() != dim {
                return Err(Error::Geometry(format!("U({t}) is not {dim}x{dim}")));
            }
            let defect = unitarity_defect(u);
            if defect > UNITARITY_TOL {
                return Err(Error::Numeric(format!("U({t}) is not unitary: defect {defect:e}")));
            }
        }
        Ok(DenseInstance { dim, state, regions, times, unitaries })
    }

    /// Builds `U(t_k) = V_k ⋯ V_1` from per-interval step unitaries.
    pub fn from_steps(
        state: Vec<C64>,
        regions: Vec<Region>,
        steps: Vec<(f64, DMatrix<C64>)>,
    ) -> Result<Self> {
        let dim = state.len();
        let mut acc = DMatrix::<C64>::identity(dim, dim);
        let mut times = Vec::with_capacity(steps.len());
        let mut unitaries = Vec::with_capacity(steps.len());
        for (t, v) in steps {
            if v.nrows() != dim || v.ncols() != dim {
                return Err(Error::Geometry(format!("step unitary at {t} is not {dim}x{dim}")));
            }
            acc = &v * &acc;
            times.push(t);
            unitaries.push(acc.clone());
        }
        DenseInstance::new(state, regions, times, unitaries)
    }

    /// Embeds a grid universe: amplitudes scaled by `√dx` and each `U(t)`
    /// assembled column by column from propagated basis vectors.
    pub fn from_grid(u: &GridUniverse, regions: Vec<Region>, times: Vec<f64>) -> Result<Self> {
        let n = u.dim();
        let scale = u.cell_weight().sqrt();
        let state = u.initial().iter().map(|a| a * scale).collect();
        let mut unitaries = Vec::with_capacity(times.len());
        for &t in &times {
            let mut m = DMatrix::<C64>::zeros(n, n);
            for j in 0..n {
                let mut e = vec![C64::new(0.0, 0.0); n];
                e[j] = C64::new(1.0, 0.0);
                let col = u.transport(&e, 0.0, t)?;
                m.set_column(j, &DVector::from_vec(col));
            }
            unitaries.push(m);
        }
        DenseInstance::new(state, regions, times, unitaries)
    }

    pub fn state(&self) -> &[C64] {
        &self.state
    }

    pub fn regions(&self) -> &[Region] {
        &self.regions
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn unitaries(&self) -> &[DMatrix<C64>] {
        &self.unitaries
    }

    /// `U(t)`; `t = 0` is the identity.
    pub fn unitary(&self, t: f64) -> Result<DMatrix<C64>> {
        if t == 0.0 {
            return Ok(DMatrix::identity(self.dim, self.dim));
        }
        self.times
            .iter()
            .position(|&s| s == t)
            .map(|k| self.unitaries[k].clone())
            .ok_or_else(|| Error::contract(format!("no unitary tagged with time {t}")))
    }

    /// The s-set `(times[time_index], regions[region_index])`; `time_index`
    /// 0 is `t = 0`, `k ≥ 1` is the `k`-th tag.
    pub fn cset(&self, region_index: usize, time_index: usize) -> CSet {
        let t = if time_index == 0 { 0.0 } else { self.times[time_index - 1] };
        CSet::Spatial { time: t, region: self.regions[region_index].clone() }
    }

    /// Number of time indices accepted by [`DenseInstance::cset`].
    pub fn time_count(&self) -> usize {
        self.times.len() + 1
    }

    fn tag_index(&self, t: f64) -> Result<Option<usize>> {
        if t == 0.0 {
            return Ok(None);
        }
        self.times
            .iter()
            .position(|&s| s == t)
            .map(Some)
            .ok_or_else(|| Error::contract(format!("no unitary tagged with time {t}")))
    }
}

impl Universe for DenseInstance {
    fn dim(&self) -> usize {
        self.dim
    }

    fn cell_weight(&self) -> f64 {
        1.0
    }

    fn initial(&self) -> &[C64] {
        &self.state
    }

    fn transport(&self, v: &[C64], from: f64, to: f64) -> Result<Vec<C64>> {
        if from == to {
            return Ok(v.to_vec());
        }
        let mut w = DVector::from_column_slice(v);
        if let Some(k) = self.tag_index(from)? {
            w = self.unitaries[k].ad_mul(&w);
        }
        if let Some(k) = self.tag_index(to)? {
            w = &self.unitaries[k] * w;
        }
        Ok(w.as_slice().to_vec())
    }

    fn asymptotic_projection(&self, _v: &[C64], _region: &VelocityRegion) -> Result<Vec<C64>> {
        Err(Error::Unsupported("dense instances have no asymptotic velocity".into()))
    }
}

/// Frobenius norm of `U†U − I`.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let n = u.nrows();
    (u.ad_mul(u) - DMatrix::<C64>::identity(n, n)).norm()
}

/// Random instance families used by the consistency suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// Haar state, Haar unitaries, uniform random masks.
    Haar,
    /// Haar state, unitaries within a random distance `δ` of the identity,
    /// so that equal-region s-sets at different times nearly coincide.
    Clustered,
    /// Two blocks of cells carrying weight 1/2 each; unitaries are
    /// block-diagonal Haar up to a `δ` coupling. The first two regions are the
    /// blocks.
    Blocked,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Haar, Family::Clustered, Family::Blocked];

    pub fn name(self) -> &'static str {
        match self {
            Family::Haar => "haar",
            Family::Clustered => "clustered",
            Family::Blocked => "blocked",
        }
    }
}

/// Haar-random instance with random nonempty, non-full masks; deterministic
/// in `seed`.
pub fn oracle_random_instance(
    dim: usize,
    n_regions: usize,
    n_times: usize,
    seed: u64,
) -> Result<DenseInstance> {
    family_instance(Family::Haar, dim, n_regions, n_times, seed)
}

pub fn family_instance(
    family: Family,
    dim: usize,
    n_regions: usize,
    n_times: usize,
    seed: u64,
) -> Result<DenseInstance> {
    if !(2..=64).contains(&dim) {
        return Err(Error::contract(format!("dense dimension must be in 2..=64, got {dim}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let times: Vec<f64> = (1..=n_times).map(|k| k as f64).collect();
    match family {
        Family::Haar => {
            let state = haar_state(dim, &mut rng);
            let regions = (0..n_regions).map(|_| random_region(dim, &mut rng)).collect();
            let unitaries = (0..n_times).map(|_| haar_unitary(dim, &mut rng)).collect();
            DenseInstance::new(state, regions, times, unitaries)
        }
        Family::Clustered => {
            let state = haar_state(dim, &mut rng);
            let regions = (0..n_regions).map(|_| random_region(dim, &mut rng)).collect();
            let delta = log_uniform(&mut rng, 1e-6, 1e-1);
            let unitaries = (0..n_times).map(|_| near_identity(dim, delta, &mut rng)).collect();
            DenseInstance::new(state, regions, times, unitaries)
        }
        Family::Blocked => {
            if dim % 2 != 0 {
                return Err(Error::contract(format!("blocked family needs an even dimension, got {dim}")));
            }
            let half = dim / 2;
            let mut state = haar_state(half, &mut rng);
            state.extend(haar_state(half, &mut rng));
            let s = std::f64::consts::FRAC_1_SQRT_2;
            state.iter_mut().for_each(|a| *a *= s);
            let block_a = Region::new(CellMask::from_fn(dim, |i| i < half), 1.0);
            let mut regions = vec![block_a.clone(), block_a.complement()];
            regions.extend((2..n_regions).map(|_| random_region(dim, &mut rng)));
            let delta = log_uniform(&mut rng, 1e-6, 1e-1);
            let unitaries = (0..n_times)
                .map(|_| {
                    let mut b = DMatrix::<C64>::zeros(dim, dim);
                    b.view_mut((0, 0), (half, half)).copy_from(&haar_unitary(half, &mut rng));
                    b.view_mut((half, half), (half, half))
                        .copy_from(&haar_unitary(half, &mut rng));
                    b * near_identity(dim, delta, &mut rng)
                })
                .collect();
            DenseInstance::new(state, regions, times, unitaries)
        }
    }
}

/// Per-instance seed derived from a suite seed (splitmix64 finalizer over
/// the three inputs).
pub fn derive_seed(seed: u64, dim: usize, index: u64) -> u64 {
    let mut z = seed;
    for w in [dim as u64, index] {
        z = splitmix(z ^ splitmix(w.wrapping_add(0x9E37_79B9_7F4A_7C15)));
    }
    z
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

fn log_uniform(rng: &mut impl Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn haar_state(dim: usize, rng: &mut impl Rng) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let n = crate::quantum::grid::norm_sq(1.0, &v).sqrt();
    v.into_iter().map(|a| a / n).collect()
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `R`'s diagonal
/// moved into `Q`.
fn haar_unitary(dim: usize, rng: &mut impl Rng) -> DMatrix<C64> {
    let g = DMatrix::<C64>::from_fn(dim, dim, |_, _| gaussian(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Cayley transform `(I − iδK)(I + iδK)⁻¹` of a normalized GUE matrix `K`.
fn near_identity(dim: usize, delta: f64, rng: &mut impl Rng) -> DMatrix<C64> {
    let g = DMatrix::<C64>::from_fn(dim, dim, |_, _| gaussian(rng));
    let k = (&g + g.adjoint()) / C64::new(2.0 * (dim as f64).sqrt(), 0.0);
    let id = DMatrix::<C64>::identity(dim, dim);
    let i_delta = C64::new(0.0, delta);
    let plus = &id + &k * i_delta;
    let minus = &id - &k * i_delta;
    let inv = plus.try_inverse().expect("I + iδK is invertible for Hermitian K");
    minus * inv
}

fn random_region(dim: usize, rng: &mut impl Rng) -> Region {
    loop {
        let mask = CellMask::from_fn(dim, |_| rng.random_bool(0.5));
        if !mask.is_none() && !mask.is_full() {
            return Region::new(mask, 1.0);
        }
    }
}

/// The 2x2 Hadamard matrix.
pub fn hadamard() -> DMatrix<C64> {
    let s = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    DMatrix::from_row_slice(2, 2, &[s, s, s, -s])
}
