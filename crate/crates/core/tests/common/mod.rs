#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use typicality::quantum::{CSet, DenseInstance, Grid, GridState};
use typicality::C64;

/// Composite Simpson rule with `n` (even) panels.
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    assert!(n % 2 == 0);
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Density of `exp(-(x-c)²/(2σ²))` normalized as a probability density of
/// `|ψ|²`, i.e. a normal density with standard deviation `σ/√2`.
pub fn packet_density(x: f64, c: f64, sigma: f64) -> f64 {
    let u = (x - c) / sigma;
    (-u * u).exp() / (sigma * std::f64::consts::PI.sqrt())
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Deterministic pseudo-random normalized amplitudes (xorshift), so tests do
/// not share code paths with the library's generators.
pub fn scrambled_state(grid: Grid, seed: u64) -> GridState {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
    let mut next = move || {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    };
    let amps: Vec<C64> = (0..grid.n()).map(|_| c(next(), next())).collect();
    GridState::new(grid, amps).unwrap().normalized().unwrap()
}

/// `U†(t) E(Δ) U(t) Ψ₀` straight from the instance matrices, with plain
/// vector algebra.
pub fn dense_heisenberg(inst: &DenseInstance, s: &CSet) -> DVector<C64> {
    let (t, region) = match s {
        CSet::Spatial { time, region } => (*time, region),
        CSet::Asymptotic { .. } => panic!("dense oracle handles spatial sets only"),
    };
    let u = inst.unitary(t).unwrap();
    let p = DMatrix::<C64>::from_fn(inst.state().len(), inst.state().len(), |i, j| {
        if i == j && region.mask().contains(i) { c(1.0, 0.0) } else { c(0.0, 0.0) }
    });
    let psi = DVector::from_column_slice(inst.state());
    u.adjoint() * p * &u * psi
}

pub fn norm_sq(v: &DVector<C64>) -> f64 {
    v.iter().map(|a| a.norm_sqr()).sum()
}
