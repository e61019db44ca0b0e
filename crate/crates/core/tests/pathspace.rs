mod common;

use common::{c, dense_heisenberg, norm_sq};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use typicality::pathspace::bohmian::order_preserved;
use typicality::pathspace::diagnostics::Slot;
use typicality::pathspace::{
    additivity_gap, bohmian_ensemble, bohmian_velocity, classical_ensemble, ensemble_diagnostics, equivariance_check,
    everett_bell_fdd, liouville_check, mu_q_fdd, BohmConfig, ClassicalHamiltonian, Diagnostic, DiagnosticQuery, Domain,
    PathEnsemble, PhaseBox,
};
use typicality::quantum::dense::{family_instance, hadamard};
use typicality::quantum::{
    evolve, make_gaussian_packet, CSet, CellMask, DenseInstance, Family, Grid, GridState, GridUniverse, Hamiltonian,
    Region, Universe,
};
use typicality::C64;

/// Guidance velocity of a free Gaussian `exp(-(x-x0)²/(2σ²) + ip₀x)` at time
/// `t`, from the phase of the closed-form solution.
fn free_gaussian_velocity(x: f64, t: f64, x0: f64, p0: f64, sigma: f64, m: f64) -> f64 {
    let tau = t / (m * sigma * sigma);
    let u = x - x0 - p0 * t / m;
    (p0 + u * tau / (sigma * sigma * (1.0 + tau * tau))) / m
}

#[test]
fn guidance_velocity_of_free_gaussian() {
    let g = Grid::centered(2048, 80.0).unwrap();
    let (x0, p0, sigma, m, t) = (-3.0, 1.5, 1.0, 1.0, 2.0);
    let psi = evolve(&make_gaussian_packet(x0, p0, sigma, &g).unwrap(), &Hamiltonian::Free { mass: m }, t).unwrap();
    let center = x0 + p0 * t / m;
    let v = bohmian_velocity(&psi, center, m).unwrap();
    assert!((v - p0 / m).abs() < 1e-3, "{v}");
    for dx in [-1.7, -0.6, 0.45, 1.3] {
        let x = center + dx;
        let v = bohmian_velocity(&psi, x, m).unwrap();
        let oracle = free_gaussian_velocity(x, t, x0, p0, sigma, m);
        assert!((v - oracle).abs() < 1e-3, "x = {x}: {v} vs {oracle}");
    }
}

#[test]
fn plane_wave_and_real_state_velocities() {
    let g = Grid::centered(256, 32.0).unwrap();
    let k = 5.0 * g.dk();
    let wave = GridState::from_fn(g, |x| C64::from_polar(1.0, k * x)).unwrap().normalized().unwrap();
    for x in [-10.3, 0.1, 7.7] {
        assert!((bohmian_velocity(&wave, x, 2.0).unwrap() - k / 2.0).abs() < 1e-9);
    }
    let real = make_gaussian_packet(0.5, 0.0, 1.0, &g).unwrap();
    for x in [-1.0, 0.3, 2.0] {
        assert!(bohmian_velocity(&real, x, 1.0).unwrap().abs() < 1e-12);
    }
}


#[test]
fn ensemble_spread_tracks_free_width() {
    let g = Grid::centered(1024, 80.0).unwrap();
    let psi = make_gaussian_packet(0.0, 0.8, 1.0, &g).unwrap();
    let u = GridUniverse::new(psi, Hamiltonian::free()).unwrap();
    let times = [0.0, 1.0, 2.0, 3.0];
    let cfg = BohmConfig { n_paths: 2000, seed: 4, ..BohmConfig::default() };
    let ens = bohmian_ensemble(&u, &times, &cfg).unwrap();
    assert!(order_preserved(&ens));
    for (i, &t) in times.iter().enumerate() {
        let analytic = std::f64::consts::FRAC_1_SQRT_2 * (1.0 + t * t).sqrt();
        let got = ens.position_std(i);
        assert!((got / analytic - 1.0).abs() < 0.02, "t = {t}: {got} vs {analytic}");
    }
    let regions = [Region::negative_axis(&g), Region::interval(&g, 0.5, 2.5), Region::interval(&g, -1.0, 1.0)];
    let rep = equivariance_check(&u, &ens, &regions).unwrap();
    assert!(rep.pass, "{rep:?}");
}

#[test]
fn ground_state_trajectories_stand_still() {
    let g = Grid::centered(512, 32.0).unwrap();
    let ground = make_gaussian_packet(0.0, 0.0, 1.0, &g).unwrap();
    let u = GridUniverse::new(ground, Hamiltonian::Harmonic { mass: 1.0, omega: 1.0 }).unwrap();
    let cfg = BohmConfig { n_paths: 50, seed: 2, dt: 0.02, ..BohmConfig::default() };
    let ens = bohmian_ensemble(&u, &[0.0, 0.5, 1.0], &cfg).unwrap();
    for p in ens.paths() {
        assert!(p.iter().all(|x| (x - p[0]).abs() < 1e-3), "{p:?}");
    }
}

fn hadamard_chain() -> DenseInstance {
    DenseInstance::from_steps(vec![c(1.0, 0.0), c(0.0, 0.0)], vec![], vec![(1.0, hadamard()), (2.0, hadamard())]).unwrap()
}

fn cell(ix: &[usize]) -> Region {
    Region::new(CellMask::from_indices(2, ix), 1.0)
}

/// `‖E_n U_n ⋯ E_1 U_1 ψ‖²` with explicit matrices.
fn chain_oracle(steps: &[(DMatrix<C64>, &[usize])], psi: &[C64]) -> f64 {
    let mut v = DVector::from_column_slice(psi);
    for (u, keep) in steps {
        v = u * v;
        for i in 0..v.len() {
            if !keep.contains(&i) {
                v[i] = c(0.0, 0.0);
            }
        }
    }
    norm_sq(&v)
}

#[test]
fn hadamard_everett_bell_product() {
    let u = hadamard_chain();
    let q = [CSet::at(1.0, cell(&[0])).unwrap(), CSet::at(2.0, cell(&[0])).unwrap()];
    let psi = [c(1.0, 0.0), c(0.0, 0.0)];
    let h = hadamard();
    let w1 = chain_oracle(&[(h.clone(), &[0])], &psi);
    let w2 = chain_oracle(&[(&h * &h, &[0])], &psi);
    let got = everett_bell_fdd(&u, &q).unwrap();
    assert!((got - w1 * w2).abs() < 1e-12);
    assert!((got - 0.5).abs() < 1e-12);
}

#[test]
fn hadamard_chain_is_not_additive() {
    let u = hadamard_chain();
    let psi = [c(1.0, 0.0), c(0.0, 0.0)];
    let h = hadamard();
    let whole = chain_oracle(&[(h.clone(), &[0, 1]), (h.clone(), &[0])], &psi);
    let left = chain_oracle(&[(h.clone(), &[0]), (h.clone(), &[0])], &psi);
    let right = chain_oracle(&[(h.clone(), &[1]), (h.clone(), &[0])], &psi);
    let q = [CSet::at(1.0, cell(&[0, 1])).unwrap(), CSet::at(2.0, cell(&[0])).unwrap()];
    assert!((mu_q_fdd(&u, &q).unwrap() - whole).abs() < 1e-12);
    assert!((whole - 1.0).abs() < 1e-12);
    assert!((left - 0.25).abs() < 1e-12 && (right - 0.25).abs() < 1e-12);
    let gap = additivity_gap(&u, &q, 0, &cell(&[0])).unwrap();
    assert!((gap - (whole - left - right)).abs() < 1e-12);
    assert!((gap - 0.5).abs() < 1e-12);
}

#[test]
fn repeated_or_unordered_times_are_refused() {
    let u = hadamard_chain();
    let a = CSet::at(1.0, cell(&[0])).unwrap();
    let b = CSet::at(2.0, cell(&[1])).unwrap();
    assert!(everett_bell_fdd(&u, &[a.clone(), a.clone()]).is_err());
    assert!(mu_q_fdd(&u, &[b, a]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn everett_bell_marginals_and_full_factors(dim in 2usize..9, seed in any::<u64>(), ri in 0usize..3, ti in 0usize..3) {
        let inst = family_instance(Family::Haar, dim, 3, 2, seed).unwrap();
        let s = inst.cset(ri, ti);
        let born = norm_sq(&dense_heisenberg(&inst, &s));
        prop_assert!((everett_bell_fdd(&inst, &[s.clone()]).unwrap() - born).abs() < 1e-14);
        let other = (ti + 1) % 3;
        let full = CSet::at(inst.cset(0, other).time().unwrap(), Region::new(CellMask::full(dim), 1.0)).unwrap();
        let with = everett_bell_fdd(&inst, &[s.clone(), full]).unwrap();
        prop_assert!((with - everett_bell_fdd(&inst, &[s]).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn projected_chain_is_additive_in_the_last_slot(dim in 2usize..9, seed in any::<u64>(), bits in any::<u64>()) {
        let inst = family_instance(Family::Haar, dim, 3, 2, seed).unwrap();
        let q = [inst.cset(0, 1), inst.cset(1, 2)];
        let part = Region::new(CellMask::from_bits(dim, bits), 1.0);
        prop_assert!(additivity_gap(&inst, &q, 1, &part).unwrap().abs() < 1e-12);
        let single = mu_q_fdd(&inst, &q[..1]).unwrap();
        prop_assert!((single - inst.born_weight(&q[0]).unwrap()).abs() < 1e-12);
        let full = Region::new(CellMask::full(dim), 1.0);
        let chain = [CSet::at(1.0, full.clone()).unwrap(), CSet::at(2.0, full).unwrap()];
        prop_assert!((mu_q_fdd(&inst, &chain).unwrap() - 1.0).abs() < 1e-12);
    }

    /// With every per-time miss weight at most ε, the pooled occupation
    /// satisfies both bounds exactly.
    #[test]
    fn occupation_bounds_hold_on_weighted_ensembles(
        raw in prop::collection::vec((0.01..1.0f64, prop::collection::vec(-1.0..1.0f64, 6)), 3..40),
    ) {
        let times: Vec<f64> = (0..6).map(f64::from).collect();
        let total: f64 = raw.iter().map(|r| r.0).sum();
        let weights: Vec<f64> = raw.iter().map(|r| r.0 / total).collect();
        let positions: Vec<Vec<f64>> = raw.iter().map(|r| r.1.clone()).collect();
        let ens = PathEnsemble::new(times, positions, weights).unwrap();
        let region = Domain::interval(-0.8, 1.0);
        let eps = (0..6).map(|i| 1.0 - ens.fraction_in(i, &region)).fold(0.0, f64::max);
        let q = DiagnosticQuery::Occupation { region, eps, indices: None };
        let Diagnostic::Occupation(r) = ensemble_diagnostics(&ens, &q).unwrap() else { panic!() };
        prop_assert!(r.premise);
        prop_assert!(r.bound_holds, "{r:?}");
        prop_assert!(r.mean >= 1.0 - eps - 1e-12 && r.variance <= eps + 1e-12);
        prop_assert!((r.mean - r.per_time.iter().sum::<f64>() / 6.0).abs() < 1e-12);
    }
}

#[test]
fn memory_by_direct_enumeration() {
    let ens = PathEnsemble::new(
        vec![0.0, 1.0],
        vec![vec![0.5, 0.5], vec![1.5, 0.6], vec![2.5, 3.0]],
        vec![0.5, 0.4, 0.1],
    )
    .unwrap();
    // S₂ at t = 1 captures paths {1, 2}; S₁ at t = 0 captures path {1}.
    let record = Slot { index: 1, domain: Domain::Intervals { intervals: vec![(0.55, 0.7), (2.9, 3.1)] } };
    let event = Slot { index: 0, domain: Domain::interval(1.0, 2.0) };
    let oracle = [0.5, 0.4, 0.1]
        .iter()
        .zip([false, true, true])
        .zip([false, true, false])
        .filter(|((_, in2), in1)| *in2 && !*in1)
        .map(|((w, _), _)| *w)
        .sum::<f64>()
        / 0.5;
    let Diagnostic::Memory { value } = ensemble_diagnostics(&ens, &DiagnosticQuery::Memory { event, record }).unwrap()
    else {
        panic!()
    };
    assert!((value - oracle).abs() < 1e-15);
    assert!((value - 0.1 / 0.5).abs() < 1e-15);

}

#[test]
fn three_path_relative_value() {
    // Paths 1 and 2 (0-based) end inside S₂; only path 1 starts in S₁.
    let ens = PathEnsemble::new(
        vec![0.0, 1.0],
        vec![vec![0.5, 0.5], vec![1.5, 2.5], vec![2.5, 2.6]],
        vec![0.1, 0.5, 0.4],
    )
    .unwrap();
    let record = Slot { index: 1, domain: Domain::interval(2.0, 3.0) };
    let event = Slot { index: 0, domain: Domain::interval(1.0, 2.0) };
    let Diagnostic::Memory { value } = ensemble_diagnostics(&ens, &DiagnosticQuery::Memory { event, record }).unwrap()
    else {
        panic!()
    };
    assert!((value - 0.4 / 0.9).abs() < 1e-15, "{value}");
}

#[test]
fn branch_window_and_determinism_probe() {
    let init = PhaseBox { x: (-1.0, 1.0), p: (-1.0, 1.0) };
    let times = [0.0, 0.5, 1.0];
    let ens = classical_ensemble(ClassicalHamiltonian::default(), init, 500, &times, 9, 1e-3).unwrap();
    for index in 0..3 {
        for target in 0..3 {
            let slot = Slot { index, domain: Domain::interval(-0.3, 0.4) };
            let q = DiagnosticQuery::Determinism { slot, target };
            assert_eq!(ensemble_diagnostics(&ens.paths, &q).unwrap(), Diagnostic::Determinism { weight: 0.0 });
        }
    }
    let q = DiagnosticQuery::Branch { domains: vec![Domain::Everywhere; 3], window: None };
    let Diagnostic::Branch { max, .. } = ensemble_diagnostics(&ens.paths, &q).unwrap() else { panic!() };
    assert_eq!(max, 0.0);
    assert!((ens.paths.fraction_in(2, &Domain::Everywhere) - 1.0).abs() < 1e-12);
}

#[test]
fn liouville_against_analytic_rotation() {
    use std::f64::consts::PI;
    let init = PhaseBox { x: (-1.0, 1.0), p: (-0.5, 1.5) };
    let times = [0.0, PI / 8.0, PI / 4.0, PI / 2.0];
    let ens = classical_ensemble(ClassicalHamiltonian::default(), init, 20_000, &times, 21, 1e-3).unwrap();
    let cell = PhaseBox { x: (-0.4, 0.6), p: (0.0, 0.8) };
    let n = ens.paths.len() as f64;
    for k in 1..times.len() {
        let t = times[k];
        // Unit harmonic flow is a rotation by −t in (x, p): pull back by +t.
        let (s, co) = t.sin_cos();
        let pulled = (0..ens.paths.len())
            .filter(|&i| {
                let (x, p) = (ens.paths.position(i, k), ens.momenta[i][k]);
                cell.contains(x * co - p * s, p * co + x * s)
            })
            .count() as f64
            / n;
        let analytic = cell.intersection(&init).volume() / init.volume();
        let sigma = (analytic * (1.0 - analytic) / n).sqrt();
        assert!((pulled - analytic).abs() <= 3.0 * sigma + 1e-2, "t = {t}: {pulled} vs {analytic}");
        let r = liouville_check(&ens, &cell, k).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.transported_fraction - pulled).abs() <= 1e-3);
    }
}

#[test]
fn free_gaussian_equivariance_with_seeded_region() {
    let g = Grid::centered(512, 64.0).unwrap();
    let a = make_gaussian_packet(-6.0, 1.0, 1.0, &g).unwrap();
    let b = make_gaussian_packet(6.0, -1.0, 1.0, &g).unwrap();
    let u = GridUniverse::new(a.add(&b).normalized().unwrap(), Hamiltonian::free()).unwrap();
    let cfg = BohmConfig { n_paths: 400, seed: 5, ..BohmConfig::default() };
    let ens = bohmian_ensemble(&u, &[0.0, 2.0, 4.0], &cfg).unwrap();
    let rep = equivariance_check(&u, &ens, &[Region::negative_axis(&g), Region::interval(&g, -4.0, 0.0)]).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert!(order_preserved(&ens));
}
