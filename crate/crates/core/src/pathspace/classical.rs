//! Classical Liouville path space: uniform phase-space samples moved by a
//! Hamiltonian flow.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PathEnsemble;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassicalHamiltonian {
    Free { mass: f64 },
    Harmonic { mass: f64, omega: f64 },
}

impl Default for ClassicalHamiltonian {
    fn default() -> Self {
        ClassicalHamiltonian::Harmonic { mass: 1.0, omega: 1.0 }
    }
}

impl ClassicalHamiltonian {
    pub fn mass(&self) -> f64 {
        match *self {
            ClassicalHamiltonian::Free { mass } | ClassicalHamiltonian::Harmonic { mass, .. } => mass,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            ClassicalHamiltonian::Free { mass } => mass > 0.0,
            ClassicalHamiltonian::Harmonic { mass, omega } => mass > 0.0 && omega > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid classical Hamiltonian {self:?}")))
        }
    }

    fn force(&self, x: f64) -> f64 {
        match *self {
            ClassicalHamiltonian::Free { .. } => 0.0,
            ClassicalHamiltonian::Harmonic { mass, omega } => -mass * omega * omega * x,
        }
    }

    /// Exact flow `(x, p) ↦ (x(t), p(t))`; negative `t` runs it backwards.
    pub fn exact_flow(&self, x: f64, p: f64, t: f64) -> (f64, f64) {
        match *self {
            ClassicalHamiltonian::Free { mass } => (x + p * t / mass, p),
            ClassicalHamiltonian::Harmonic { mass, omega } => {
                let (s, c) = (omega * t).sin_cos();
                (x * c + p / (mass * omega) * s, p * c - mass * omega * x * s)
            }
        }
    }

    /// Velocity-Verlet step.
    fn step(&self, x: f64, p: f64, dt: f64) -> (f64, f64) {
        let m = self.mass();
        let p_half = p + 0.5 * dt * self.force(x);
        let x_new = x + dt * p_half / m;
        (x_new, p_half + 0.5 * dt * self.force(x_new))
    }
}

/// Axis-aligned phase-space box `[x₀,x₁) × [p₀,p₁)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseBox {
    pub x: (f64, f64),
    pub p: (f64, f64),
}

impl PhaseBox {
    pub fn volume(&self) -> f64 {
        (self.x.1 - self.x.0).max(0.0) * (self.p.1 - self.p.0).max(0.0)
    }

    pub fn contains(&self, x: f64, p: f64) -> bool {
        x >= self.x.0 && x < self.x.1 && p >= self.p.0 && p < self.p.1
    }

    pub fn intersection(&self, other: &PhaseBox) -> PhaseBox {
        PhaseBox {
            x: (self.x.0.max(other.x.0), self.x.1.min(other.x.1)),
            p: (self.p.0.max(other.p.0), self.p.1.min(other.p.1)),
        }
    }
}

/// A classical ensemble keeps momenta alongside positions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalEnsemble {
    pub paths: PathEnsemble,
    /// `momenta[path][time index]`.
    pub momenta: Vec<Vec<f64>>,
    pub hamiltonian: ClassicalHamiltonian,
    pub init: PhaseBox,
}

/// Default Verlet step.
pub const CLASSICAL_STEP: f64 = 1e-3;

/// `n_paths` uniform samples of `init`, integrated to each of `times`
/// (nonnegative, increasing) with a symplectic step of at most `max_step`.
pub fn classical_ensemble(
    h: ClassicalHamiltonian,
    init: PhaseBox,
    n_paths: usize,
    times: &[f64],
    seed: u64,
    max_step: f64,
) -> Result<ClassicalEnsemble> {
    h.validate()?;
    if !(init.volume() > 0.0) {
        return Err(Error::Config("initial phase-space region has zero volume".into()));
    }
    if n_paths == 0 || !(max_step > 0.0) {
        return Err(Error::Config("need at least one path and a positive step".into()));
    }
    if times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::Config("ensemble times must be >= 0".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts: Vec<(f64, f64)> = (0..n_paths)
        .map(|_| {
            (
                rng.random_range(init.x.0..init.x.1),
                rng.random_range(init.p.0..init.p.1),
            )
        })
        .collect();
    let traced: Vec<(Vec<f64>, Vec<f64>)> = starts
        .par_iter()
        .map(|&(x0, p0)| {
            let (mut x, mut p, mut now) = (x0, p0, 0.0);
            let mut xs = Vec::with_capacity(times.len());
            let mut ps = Vec::with_capacity(times.len());
            for &t in times {
                let span = t - now;
                let n = (span / max_step - 1e-9).ceil().max(0.0) as usize;
                if n > 0 {
                    let dt = span / n as f64;
                    for _ in 0..n {
                        (x, p) = h.step(x, p, dt);
                    }
                }
                now = t;
                xs.push(x);
                ps.push(p);
            }
            (xs, ps)
        })
        .collect();
    let (positions, momenta): (Vec<_>, Vec<_>) = traced.into_iter().unzip();
    Ok(ClassicalEnsemble {
        paths: PathEnsemble::uniform(times.to_vec(), positions)?,
        momenta,
        hamiltonian: h,
        init,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleReport {
    pub time: f64,
    /// Weight of paths in the cell at the first sample.
    pub initial_fraction: f64,
    /// Weight of paths in the transported cell `Φ_t(C)` at time `t`.
    pub transported_fraction: f64,
    /// `vol(C ∩ init) / vol(init)`.
    pub analytic_fraction: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Measure of a transported cell against its initial measure and the
/// analytic value. Membership in `Φ_t(C)` is decided by pulling the state
/// back with the exact flow.
pub fn liouville_check(ens: &ClassicalEnsemble, cell: &PhaseBox, time_index: usize) -> Result<LiouvilleReport> {
    let times = ens.paths.times();
    if time_index >= times.len() {
        return Err(Error::contract(format!("time index {time_index} out of range")));
    }
    let t = times[time_index] - times[0];
    let w = ens.paths.weights();
    let mut initial = 0.0;
    let mut transported = 0.0;
    for (i, wi) in w.iter().enumerate() {
        if cell.contains(ens.paths.position(i, 0), ens.momenta[i][0]) {
            initial += wi;
        }
        let (x0, p0) = ens.hamiltonian.exact_flow(
            ens.paths.position(i, time_index),
            ens.momenta[i][time_index],
            -t,
        );
        if cell.contains(x0, p0) {
            transported += wi;
        }
    }
    let start = ens.init;
    let analytic = cell.intersection(&start).volume() / start.volume();
    // The first sample sits at time times[0]; the analytic value refers to the
    // initial box only when that is t = 0.
    let analytic = if times[0] == 0.0 { analytic } else { initial };
    let n = ens.paths.effective_size();
    let tolerance = 3.0 * (analytic * (1.0 - analytic) / n).sqrt() + 1e-2;
    let pass = (transported - analytic).abs() <= tolerance && (transported - initial).abs() <= tolerance;
    Ok(LiouvilleReport {
        time: times[time_index],
        initial_fraction: initial,
        transported_fraction: transported,
        analytic_fraction: analytic,
        tolerance,
        pass,
    })
}
