//! Uniform periodic 1D grids and amplitude fields on them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::fft;
use crate::error::guard;
use crate::{Error, Result, C64};

/// A uniform periodic grid `x_i = x_min + i·dx`, `i = 0..n`, with `n` a
/// power of two.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    x_min: f64,
    dx: f64,
}

impl Grid {
    pub fn new(n: usize, x_min: f64, dx: f64) -> Result<Self> {
        if n < 2 || !n.is_power_of_two() {
            return Err(Error::Geometry(format!(
                "cell count must be a power of two >= 2, got {n}"
            )));
        }
        if !(dx > 0.0 && dx.is_finite() && x_min.is_finite()) {
            return Err(Error::Geometry(format!("invalid geometry x_min={x_min} dx={dx}")));
        }
        Ok(Grid { n, x_min, dx })
    }

    /// Grid of `n` cells tiling `[-length/2, length/2)`. Cell centers sit at
    /// half-integer multiples of `dx`, so they pair up as `±x` and no center
    /// lies on the origin.
    pub fn centered(n: usize, length: f64) -> Result<Self> {
        let dx = length / n as f64;
        Grid::new(n, -length / 2.0 + dx / 2.0, dx)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn length(&self) -> f64 {
        self.n as f64 * self.dx
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(|i| self.x(i))
    }

    /// Momentum-grid spacing `2π / (n·dx)`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.length()
    }

    /// Wavenumber of FFT bin `j` (ħ = 1, so also the momentum).
    pub fn momentum(&self, j: usize) -> f64 {
        let half = self.n / 2;
        let signed = if j < half { j as f64 } else { j as f64 - self.n as f64 };
        signed * self.dk()
    }

    /// FFT bin containing momentum `p`; out-of-range momenta clamp to the
    /// outermost bins.
    pub fn momentum_cell(&self, p: f64) -> usize {
        let half = (self.n / 2) as i64;
        let signed = ((p / self.dk()).round() as i64).clamp(-half, half - 1);
        if signed < 0 {
            (signed + self.n as i64) as usize
        } else {
            signed as usize
        }
    }

    /// Cell containing `x`, wrapping periodically.
    pub fn cell_of(&self, x: f64) -> usize {
        let u = ((x - self.x_min) / self.dx).round();
        u.rem_euclid(self.n as f64) as usize % self.n
    }
}

/// Complex amplitudes on a [`Grid`]; the norm is `Σ|ψ_i|² dx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    grid: Grid,
    amps: Vec<C64>,
}

impl GridState {
    pub fn new(grid: Grid, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != grid.n() {
            return Err(Error::Geometry(format!(
                "{} amplitudes for a grid of {} cells",
                amps.len(),
                grid.n()
            )));
        }
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(Error::Numeric("non-finite amplitude".into()));
        }
        Ok(GridState { grid, amps })
    }

    pub fn zero(grid: Grid) -> Self {
        GridState {
            grid,
            amps: vec![C64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> C64) -> Result<Self> {
        GridState::new(grid, grid.xs().map(f).collect())
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn amps(&self) -> &[C64] {
        &self.amps
    }

    pub fn amps_mut(&mut self) -> &mut [C64] {
        &mut self.amps
    }

    pub fn into_amps(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(self.grid.dx, &self.amps)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &GridState) -> C64 {
        inner(self.grid.dx, &self.amps, &other.amps)
    }

    /// Probability density `|ψ_i|²` per cell (not multiplied by `dx`).
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn normalized(mut self) -> Result<Self> {
        let n = guard("state norm", self.norm_sq())?;
        let s = 1.0 / n.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(self)
    }

    pub fn add(&self, other: &GridState) -> GridState {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridState) -> GridState {
        self.zip(other, |a, b| a - b)
    }

    pub fn scale(&self, s: C64) -> GridState {
        GridState {
            grid: self.grid,
            amps: self.amps.iter().map(|a| a * s).collect(),
        }
    }

    fn zip(&self, other: &GridState, f: impl Fn(C64, C64) -> C64) -> GridState {
        assert_eq!(self.amps.len(), other.amps.len(), "grid mismatch");
        GridState {
            grid: self.grid,
            amps: self.amps.iter().zip(&other.amps).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Momentum-space amplitudes in FFT order (unnormalized forward DFT).
    pub fn spectrum(&self) -> Vec<C64> {
        let mut s = self.amps.clone();
        fft::forward(&mut s);
        s
    }

    /// Mean position `⟨x⟩` (state need not be normalized).
    pub fn mean_position(&self) -> f64 {
        let w: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        self.grid
            .xs()
            .zip(&self.amps)
            .map(|(x, a)| x * a.norm_sqr())
            .sum::<f64>()
            / w
    }

    /// Position standard deviation of `|ψ|²`.
    pub fn position_std(&self) -> f64 {
        let w: f64 = self.amps.iter().map(|a| a.norm_sqr()).sum();
        let mean = self.mean_position();
        let var = self
            .grid
            .xs()
            .zip(&self.amps)
            .map(|(x, a)| (x - mean).powi(2) * a.norm_sqr())
            .sum::<f64>()
            / w;
        var.sqrt()
    }
}

pub fn norm_sq(weight: f64, amps: &[C64]) -> f64 {
    weight * amps.iter().map(|a| a.norm_sqr()).sum::<f64>()
}

/// `⟨a|b⟩` with cell weight `weight`.
pub fn inner(weight: f64, a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>() * weight
}

/// `‖a − b‖²` with cell weight `weight`.
pub fn distance_sq(weight: f64, a: &[C64], b: &[C64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    weight * a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>()
}

/// Normalized Gaussian packet `exp(-(x-c)²/(2σ²) + i p₀ x)`.
///
/// With this convention `|ψ|²` has standard deviation `σ/√2`, and free
/// spreading follows `σ(t) = σ √(1 + t²/(m²σ⁴))`.
pub fn make_gaussian_packet(
    center: f64,
    mean_momentum: f64,
    sigma: f64,
    grid: &Grid,
) -> Result<GridState> {
    if !(sigma >= 4.0 * grid.dx()) {
        return Err(Error::Geometry(format!(
            "packet width {sigma} is below four cells ({})",
            4.0 * grid.dx()
        )));
    }
    let lo = grid.x_min() - grid.dx() / 2.0;
    let hi = lo + grid.length();
    let outside = 0.5 * erfc((center - lo) / sigma) + 0.5 * erfc((hi - center) / sigma);
    if outside > 1e-8 {
        return Err(Error::Geometry(format!(
            "grid [{lo}, {hi}) leaves {outside:e} of the packet at {center} outside"
        )));
    }
    GridState::from_fn(*grid, |x| {
        let u = (x - center) / sigma;
        C64::from_polar((-0.5 * u * u).exp(), mean_momentum * x)
    })?
    .normalized()
}

/// Velocity-convention momentum spread of [`make_gaussian_packet`]: the
/// standard deviation of `|ψ̂(p)|²`, `1/(σ√2)`.
pub fn gaussian_momentum_std(sigma: f64) -> f64 {
    1.0 / (sigma * std::f64::consts::SQRT_2)
}
