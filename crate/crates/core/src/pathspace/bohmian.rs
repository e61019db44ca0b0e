//! Bohmian trajectories: guidance velocity from the wave function and an
//! ensemble integrator seeded from `|Ψ₀|²`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Domain, PathEnsemble};
use crate::quantum::fft;
use crate::quantum::propagate::propagate_in_place;
use crate::quantum::universe::masked;
use crate::quantum::{Grid, GridState, GridUniverse, Region, Universe};
use crate::{Error, Result, C64};

/// `|ψ(x)|` below this fraction of `max|ψ|` counts as a node.
pub const NODE_FRACTION: f64 = 1e-6;

/// `ψ` and `∂ψ/∂x` on a grid, ready for interpolation.
#[derive(Debug, Clone)]
pub struct VelocityField {
    grid: Grid,
    mass: f64,
    time: f64,
    psi: Vec<C64>,
    dpsi: Vec<C64>,
    floor: f64,
}

impl VelocityField {
    pub fn new(grid: &Grid, mass: f64, psi: &[C64], time: f64) -> Self {
        let mut d = psi.to_vec();
        fft::forward(&mut d);
        let n = grid.n();
        for (j, a) in d.iter_mut().enumerate() {
            // The Nyquist mode has no well-defined derivative.
            *a *= if j == n / 2 { C64::new(0.0, 0.0) } else { C64::new(0.0, grid.momentum(j)) };
        }
        fft::inverse(&mut d);
        let peak = psi.iter().map(|a| a.norm()).fold(0.0, f64::max);
        VelocityField {
            grid: grid.clone(),
            mass,
            time,
            psi: psi.to_vec(),
            dpsi: d,
            floor: NODE_FRACTION * peak,
        }
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// `(1/m) Im(ψ'/ψ)` at `x`, from four-point interpolation of `ψ` and `ψ'`.
    pub fn velocity(&self, x: f64) -> Result<f64> {
        let n = self.grid.n() as i64;
        let s = (x - self.grid.x_min()) / self.grid.dx();
        if !s.is_finite() {
            return Err(Error::Numeric(format!("non-finite trajectory position {x}")));
        }
        let i0 = s.floor();
        let f = s - i0;
        let w = [
            -f * (f - 1.0) * (f - 2.0) / 6.0,
            (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0,
            -(f + 1.0) * f * (f - 2.0) / 2.0,
            (f + 1.0) * f * (f - 1.0) / 6.0,
        ];
        let (mut p, mut dp) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
        for (k, wk) in w.iter().enumerate() {
            let idx = (i0 as i64 - 1 + k as i64).rem_euclid(n) as usize;
            p += self.psi[idx] * wk;
            dp += self.dpsi[idx] * wk;
        }
        if p.norm() < self.floor {
            return Err(Error::Node { x, t: self.time });
        }
        Ok((dp * p.conj()).im / (self.mass * p.norm_sqr()))
    }
}

/// Guidance velocity of `psi` at `x`.
pub fn bohmian_velocity(psi: &GridState, x: f64, mass: f64) -> Result<f64> {
    VelocityField::new(psi.grid(), mass, psi.amps(), 0.0).velocity(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BohmConfig {
    pub n_paths: usize,
    pub seed: u64,
    /// Outer step; fields are computed on this grid of times.
    pub dt: f64,
    /// Absolute step-doubling tolerance on positions.
    pub tol: f64,
    /// Maximum number of step halvings below `dt`.
    pub max_halvings: u32,
    /// Seed only inside this region (initial density `|E(Δ)Ψ₀|²`).
    #[serde(default)]
    pub seed_region: Option<Region>,
}

impl Default for BohmConfig {
    fn default() -> Self {
        BohmConfig {
            n_paths: 64,
            seed: 0,
            dt: 0.01,
            tol: 1e-6,
            max_halvings: 12,
            seed_region: None,
        }
    }
}

/// Stratified inverse-CDF sample of `n` positions from the cell density of
/// `psi`, uniform within each cell. The result is sorted.
fn stratified_positions(grid: &Grid, psi: &[C64], n: usize, seed: u64) -> Result<Vec<f64>> {
    let mut cum = Vec::with_capacity(psi.len());
    let mut acc = 0.0;
    for a in psi {
        acc += a.norm_sqr();
        cum.push(acc);
    }
    crate::error::guard("seeding density", acc * grid.dx())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|k| {
            let u = (k as f64 + rng.random::<f64>()) / n as f64 * acc;
            let i = cum.partition_point(|&c| c <= u).min(psi.len() - 1);
            let lo = if i == 0 { 0.0 } else { cum[i - 1] };
            let width = cum[i] - lo;
            let frac = if width > 0.0 { ((u - lo) / width).clamp(0.0, 1.0) } else { 0.5 };
            grid.x(i) + (frac - 0.5) * grid.dx()
        })
        .collect())
}

struct Integrator<'a> {
    u: &'a GridUniverse,
    tol: f64,
    max_halvings: u32,
}

impl Integrator<'_> {
    fn advance_state(&self, psi: &[C64], dt: f64) -> Result<Vec<C64>> {
        let mut out = psi.to_vec();
        propagate_in_place(&mut out, self.u.grid(), self.u.hamiltonian(), dt, self.u.steps())?;
        Ok(out)
    }

    fn field(&self, psi: &[C64], t: f64) -> VelocityField {
        VelocityField::new(self.u.grid(), self.u.mass(), psi, t)
    }

    /// Field at time `s`, propagated from the state `psi` at `t`.
    fn field_from(&self, psi: &[C64], t: f64, s: f64) -> Result<VelocityField> {
        Ok(self.field(&self.advance_state(psi, s - t)?, s))
    }

    fn rk4(f0: &VelocityField, fm: &VelocityField, f1: &VelocityField, x: f64, h: f64) -> Result<f64> {
        let k1 = f0.velocity(x)?;
        let k2 = fm.velocity(x + 0.5 * h * k1)?;
        let k3 = fm.velocity(x + 0.5 * h * k2)?;
        let k4 = f1.velocity(x + h * k3)?;
        Ok(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4))
    }

    /// One step over `[a, a+h]` given fields at the quarter points, with
    /// step doubling and recursive halving on error or node contact.
    fn advance(
        &self,
        origin: (&[C64], f64),
        x: f64,
        a: f64,
        h: f64,
        f: [&VelocityField; 5],
        depth: u32,
    ) -> Result<f64> {
        let full = Self::rk4(f[0], f[2], f[4], x, h);
        let half = Self::rk4(f[0], f[1], f[2], x, h / 2.0).and_then(|y| Self::rk4(f[2], f[3], f[4], y, h / 2.0));
        let last = depth >= self.max_halvings;
        match (&full, &half) {
            (Ok(p), Ok(q)) if (p - q).abs() <= self.tol || last => return Ok(*q),
            (Err(_), _) | (_, Err(_)) if last => return half.and(full),
            _ => {}
        }
        let (psi, t) = origin;
        let g = |s: f64| self.field_from(psi, t, s);
        let (l1, l3) = (g(a + h / 8.0)?, g(a + 3.0 * h / 8.0)?);
        let y = self.advance(origin, x, a, h / 2.0, [f[0], &l1, f[1], &l3, f[2]], depth + 1)?;
        let (r1, r3) = (g(a + 5.0 * h / 8.0)?, g(a + 7.0 * h / 8.0)?);
        self.advance(origin, y, a + h / 2.0, h / 2.0, [f[2], &r1, f[3], &r3, f[4]], depth + 1)
    }
}

/// Trajectories seeded by stratified sampling of `|Ψ₀|²` (optionally
/// restricted to `cfg.seed_region`) and sampled at `times` (nonnegative,
/// increasing).
pub fn bohmian_ensemble(u: &GridUniverse, times: &[f64], cfg: &BohmConfig) -> Result<PathEnsemble> {
    if cfg.n_paths == 0 || !(cfg.dt > 0.0) || !(cfg.tol > 0.0) {
        return Err(Error::Config("Bohmian ensemble needs paths, a positive step and tolerance".into()));
    }
    if times.is_empty() || times[0] < 0.0 || times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::contract("output times must be nonnegative and increasing"));
    }
    let grid = u.grid();
    let seed_density = match &cfg.seed_region {
        Some(r) => masked(u.initial(), r),
        None => u.initial().to_vec(),
    };
    let mut xs = stratified_positions(grid, &seed_density, cfg.n_paths, cfg.seed)?;
    let integ = Integrator { u, tol: cfg.tol, max_halvings: cfg.max_halvings };

    let t_end = *times.last().expect("nonempty");
    let mut marks: Vec<f64> = (1..)
        .map(|k| k as f64 * cfg.dt)
        .take_while(|&t| t < t_end - 1e-12)
        .chain(times.iter().copied().filter(|&t| t > 0.0))
        .collect();
    marks.sort_by(f64::total_cmp);
    marks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12);

    let mut out: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); cfg.n_paths];
    let mut next_out = 0;
    let mut record = |xs: &[f64], t: f64, next_out: &mut usize| {
        if *next_out < times.len() && (times[*next_out] - t).abs() <= 1e-12 {
            for (o, x) in out.iter_mut().zip(xs) {
                o.push(*x);
            }
            *next_out += 1;
        }
    };
    record(&xs, 0.0, &mut next_out);

    let mut psi = u.initial().to_vec();
    let mut now = 0.0;
    let mut f_start = integ.field(&psi, now);
    for &b in &marks {
        let h = b - now;
        let q: Vec<VelocityField> = (1..=4)
            .map(|k| integ.field_from(&psi, now, now + k as f64 * h / 4.0))
            .collect::<Result<_>>()?;
        let fields = [&f_start, &q[0], &q[1], &q[2], &q[3]];
        let origin = (psi.as_slice(), now);
        xs = xs
            .par_iter()
            .map(|&x| integ.advance(origin, x, now, h, fields, 0))
            .collect::<Result<Vec<f64>>>()?;
        psi = integ.advance_state(&psi, h)?;
        now = b;
        f_start = integ.field(&psi, now);
        record(&xs, now, &mut next_out);
    }
    debug_assert_eq!(next_out, times.len());
    PathEnsemble::uniform(times.to_vec(), out)
}

/// Paths keep their initial order at every sample (1D non-crossing).
pub fn order_preserved(ens: &PathEnsemble) -> bool {
    let mut idx: Vec<usize> = (0..ens.len()).collect();
    idx.sort_by(|&a, &b| ens.position(a, 0).total_cmp(&ens.position(b, 0)));
    (0..ens.times().len()).all(|k| idx.windows(2).all(|w| ens.position(w[0], k) <= ens.position(w[1], k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceEntry {
    pub time: f64,
    pub region_index: usize,
    pub fraction: f64,
    pub born: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivarianceReport {
    pub entries: Vec<EquivarianceEntry>,
    pub pass: bool,
}

/// Ensemble fraction in each region against `‖E(Δ)Ψ(t)‖²` at every sample,
/// within `3σ_binomial + 1e-2`.
pub fn equivariance_check(u: &GridUniverse, ens: &PathEnsemble, regions: &[Region]) -> Result<EquivarianceReport> {
    let n = ens.effective_size();
    let mut entries = Vec::new();
    for (k, &t) in ens.times().iter().enumerate() {
        let psi = u.state_at(t)?;
        for (j, r) in regions.iter().enumerate() {
            let born = u.norm_sq(&masked(&psi, r));
            let fraction = ens.fraction_in(k, &Domain::cells(u.grid(), r));
            let tolerance = 3.0 * (born * (1.0 - born) / n).max(0.0).sqrt() + 1e-2;
            entries.push(EquivarianceEntry {
                time: t,
                region_index: j,
                fraction,
                born,
                tolerance,
                pass: (fraction - born).abs() <= tolerance,
            });
        }
    }
    let pass = entries.iter().all(|e| e.pass);
    Ok(EquivarianceReport { entries, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::grid::make_gaussian_packet;
    use crate::quantum::Hamiltonian;

    #[test]
    fn plane_wave_velocity() {
        let g = Grid::centered(256, 32.0).unwrap();
        let p0 = 5.0 * g.dk();
        let psi = GridState::from_fn(g.clone(), |x| C64::from_polar(1.0, p0 * x)).unwrap();
        for x in [-7.3, 0.0, 11.1] {
            assert!((bohmian_velocity(&psi, x, 2.0).unwrap() - p0 / 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn real_gaussian_is_static() {
        let g = Grid::centered(256, 32.0).unwrap();
        let psi = make_gaussian_packet(0.0, 0.0, 1.0, &g).unwrap();
        assert!(bohmian_velocity(&psi, 0.7, 1.0).unwrap().abs() < 1e-12);
        assert!(matches!(bohmian_velocity(&psi, 15.0, 1.0), Err(Error::Node { .. })));
    }

    #[test]
    fn large_ensemble_tracks_width() {
        let g = Grid::centered(1024, 80.0).unwrap();
        let u = GridUniverse::new(make_gaussian_packet(0.0, 1.0, 1.0, &g).unwrap(), Hamiltonian::free()).unwrap();
        let cfg = BohmConfig { n_paths: 2000, dt: 0.05, ..BohmConfig::default() };
        let ens = bohmian_ensemble(&u, &[0.0, 1.0, 3.0], &cfg).unwrap();
        for (k, &t) in ens.times().iter().enumerate() {
            let analytic = (1.0 + t * t).sqrt() / std::f64::consts::SQRT_2;
            let got = ens.position_std(k);
            assert!((got / analytic - 1.0).abs() < 0.02, "t={t}: {got} vs {analytic}");
        }
        assert!(order_preserved(&ens));
    }
}
