mod common;

use common::{c, scrambled_state};
use proptest::prelude::*;
use typicality::asymptotics::{
    complement_weight_sum, convergence_profile, evolve_then_project, f_projector_vec, project_then_evolve,
    scaled_region,
};
use typicality::branching::{
    asymptotic_support_check, branch_verify, build_subtree, irreducible_check, subtree_members_are_supports,
    subtree_support_scan, TimeRegionMap,
};
use typicality::overlap::{overlapping_measure, packet_overlap_profile};
use typicality::quantum::{
    make_gaussian_packet, CSet, CellMask, DenseInstance, Grid, GridUniverse, Hamiltonian, Region, Universe,
    VelocityRegion,
};
use typicality::scenario::ScenarioConfig;
use typicality::typicality::{born_alternative_mutual, quantum_mutual, quantum_relative_general, Variant};
use typicality::Error;

fn bundled(name: &str) -> GridUniverse {
    let text = match name {
        "separating_packets" => include_str!("../../cli/scenarios/separating_packets.json"),
        "gaussian_crossing" => include_str!("../../cli/scenarios/gaussian_crossing.json"),
        _ => unreachable!(),
    };
    ScenarioConfig::from_json(text).unwrap().universe().unwrap()
}

fn packet_universe(x0: f64, p0: f64, sigma: f64) -> GridUniverse {
    let g = Grid::centered(512, 80.0).unwrap();
    GridUniverse::new(make_gaussian_packet(x0, p0, sigma, &g).unwrap(), Hamiltonian::free()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn asymptotic_projector_laws(x0 in -4.0..4.0f64, p0 in -2.0..2.0f64, sigma in 0.8..2.0f64, v0 in -1.5..1.5f64, t in 0.1..5.0f64, seed in any::<u64>()) {
        let u = packet_universe(x0, p0, sigma);
        let g = *u.grid();
        let dv = VelocityRegion::above(&g, 1.0, v0);
        let psi = u.initial().to_vec();
        let once = f_projector_vec(&u, &dv, None, &psi).unwrap();
        let twice = f_projector_vec(&u, &dv, None, &once).unwrap();
        prop_assert!(u.distance_sq(&once, &twice).sqrt() <= 1e-12);
        let phi = scrambled_state(g, seed);
        let lhs = u.inner(phi.amps(), &once);
        let rhs = u.inner(&f_projector_vec(&u, &dv, None, phi.amps()).unwrap(), &psi);
        prop_assert!((lhs - rhs).norm() <= 1e-12);
        let a = project_then_evolve(&u, &dv, t).unwrap();
        let b = evolve_then_project(&u, &dv, t).unwrap();
        prop_assert!(u.distance_sq(&a, &b).sqrt() <= 1e-10);
        for time in [None, Some(t)] {
            prop_assert!((complement_weight_sum(&u, &dv, time, &psi).unwrap() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn all_velocities_act_as_identity() {
    let u = packet_universe(-1.0, 0.7, 1.0);
    let all = VelocityRegion::all(u.grid());
    for t in [None, Some(0.0), Some(1.5)] {
        let out = f_projector_vec(&u, &all, t, u.initial()).unwrap();
        assert!(u.distance_sq(&out, u.initial()).sqrt() < 1e-12, "{t:?}");
    }
    let prof = convergence_profile(&u, &all, &[0.0, 1.0, 2.0], 0.05).unwrap();
    assert!(prof.distances.iter().all(|&d| d < 1e-12));
    assert_eq!(prof.t_conv, Some(0.0));
}

#[test]
fn zero_time_projector_is_full_or_empty() {
    let g = Grid::centered(64, 16.0).unwrap();
    assert!(scaled_region(&g, 1.0, &VelocityRegion::above(&g, 1.0, -0.5), 0.0).mask().is_full());
    assert!(scaled_region(&g, 1.0, &VelocityRegion::above(&g, 1.0, 0.5), 0.0).mask().is_none());
}

#[test]
fn asymptotic_projector_needs_free_dynamics() {
    let g = Grid::centered(128, 20.0).unwrap();
    let u = GridUniverse::new(
        make_gaussian_packet(0.0, 0.0, 1.0, &g).unwrap(),
        Hamiltonian::Harmonic { mass: 1.0, omega: 1.0 },
    )
    .unwrap();
    let dv = VelocityRegion::above(&g, 1.0, 0.0);
    assert!(matches!(f_projector_vec(&u, &dv, None, u.initial()), Err(Error::Unsupported(_))));
    assert!(f_projector_vec(&u, &dv, Some(1.0), u.initial()).is_ok());
}

fn two_packets(gap: f64, p: f64) -> GridUniverse {
    let g = Grid::centered(2048, 160.0).unwrap();
    let a = make_gaussian_packet(-gap, -p, 1.0, &g).unwrap();
    let b = make_gaussian_packet(gap, p, 1.0, &g).unwrap();
    GridUniverse::new(a.add(&b).normalized().unwrap(), Hamiltonian::free()).unwrap()
}

#[test]
fn overlap_profile_sandwich_and_initial_disjointness() {
    for p in [-3.0, 3.0] {
        let u = two_packets(6.0, p);
        let g = *u.grid();
        let s1 = CSet::at(0.0, Region::negative_axis(&g)).unwrap();
        let times: Vec<f64> = (0..17).map(|k| k as f64 * 0.25).collect();
        let prof = packet_overlap_profile(&u, &s1, &times, 0.01).unwrap();
        assert!(prof.samples[0].w < 1e-8);
        assert!(prof.all_inequalities_hold());
        for s in &prof.samples {
            assert!(s.m_at_split <= s.w + 1e-9 && s.w <= s.m3_at_split + 1e-9, "{s:?}");
            if s.support_premise {
                assert!(s.leak <= s.m3_at_split + 1e-9);
            }
        }
        // Packets meeting head-on (p < 0 moves them together) overlap mid-run.
        let peak = prof.max_w();
        if p < 0.0 {
            assert!(peak > 0.5, "{peak}");
        } else {
            assert!(peak < 0.01, "{peak}");
        }
    }
}

#[test]
fn heavy_or_full_sets_violate_the_weight_precondition() {
    let u = packet_universe(-1.0, 0.0, 1.0);
    let g = *u.grid();
    let heavy = CSet::at(0.0, Region::interval(&g, -10.0, 0.2)).unwrap();
    assert!(u.born_weight(&heavy).unwrap() > 0.55);
    assert!(matches!(subtree_support_scan(&u, &heavy, &[0.0, 1.0], 0.01), Err(Error::Contract(_))));
    let full = CSet::at(0.0, Region::full(&g)).unwrap();
    assert!(matches!(asymptotic_support_check(&u, &full, 0.02), Err(Error::Contract(_))));
}

#[test]
fn constant_branch_on_a_static_state() {
    // Diagonal unitaries leave every population unchanged.
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let psi = vec![c(s, 0.0), c(0.0, 0.0), c(0.0, s), c(0.0, 0.0)];
    let phases = |k: f64| {
        nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_fn(4, |i, _| {
            typicality::C64::from_polar(1.0, k * (i as f64 + 0.5))
        }))
    };
    let inst = DenseInstance::new(psi, vec![], vec![1.0, 2.0, 3.0], vec![phases(0.3), phases(1.1), phases(2.9)]).unwrap();
    let half = Region::new(CellMask::from_indices(4, &[0, 1]), 1.0);
    let map = TimeRegionMap::constant(vec![0.0, 1.0, 2.0, 3.0], half).unwrap();
    let rep = branch_verify(&inst, &map, 0.05).unwrap();
    assert!(rep.pass && rep.max_value < 1e-14, "{rep:?}");
    let heavy = TimeRegionMap::constant(vec![0.0, 1.0], Region::new(CellMask::from_indices(4, &[0, 2]), 1.0)).unwrap();
    assert!(matches!(branch_verify(&inst, &heavy, 0.05), Err(Error::Contract(_))));
}

#[test]
fn separating_packets_typicality_values() {
    let u = bundled("separating_packets");
    let g = *u.grid();
    let s1 = CSet::at(0.0, Region::negative_axis(&g)).unwrap();
    let s2 = CSet::at(8.0, Region::negative_axis(&g)).unwrap();
    let m = quantum_mutual(&u, &s1, &s2, Variant::N1).unwrap().value;
    let born = born_alternative_mutual(&u, &s1, &s2).unwrap().value;
    assert!(m <= 0.05 && born <= 0.05, "{m} {born}");
    let r = quantum_relative_general(&u, &s1, &s2).unwrap();
    assert!(r.value.value <= 0.02, "{r:?}");
    assert!(!r.small_denominator);
}

#[test]
fn separating_packets_subtree_implies_asymptotic_support() {
    let u = bundled("separating_packets");
    let g = *u.grid();
    let s1 = CSet::at(0.0, Region::negative_axis(&g)).unwrap();
    let times: Vec<f64> = (0..9).map(|k| k as f64).collect();
    let scan = subtree_support_scan(&u, &s1, &times, 0.01).unwrap();
    assert!(scan.pass);
    assert!(asymptotic_support_check(&u, &s1, 0.01).unwrap().pass);
    let (map, rep) = build_subtree(&u, &s1, &times, 0.02).unwrap();
    assert!(rep.pass);
    assert!(subtree_members_are_supports(&u, &map, 0.02).unwrap());
    // K(t₁) = K(t₁) pairs are exactly zero.
    assert!(rep.values.iter().filter(|w| w.t1 == w.t2).all(|w| w.value == 0.0));
    // The candidate equal to S itself is never a counterexample; one
    // reaching outside S is refused.
    let own = vec![("self".to_string(), Region::negative_axis(&g))];
    let rep = irreducible_check(&u, &s1, &own, "self", 0.01).unwrap();
    assert!(rep.irreducible);
    assert_eq!(rep.candidates[0].mutual, 0.0);
    assert_eq!(rep.candidates[0].lebesgue_ratio, 0.0);
    let outside = vec![("outside".to_string(), Region::interval(&g, -5.0, 5.0))];
    assert!(matches!(irreducible_check(&u, &s1, &outside, "x", 0.01), Err(Error::Contract(_))));
}

#[test]
fn crossing_packets_mid_crossing_values() {
    let u = bundled("gaussian_crossing");
    let g = *u.grid();
    let s1 = CSet::at(0.0, Region::negative_axis(&g)).unwrap();
    let s2 = CSet::at(2.0, Region::negative_axis(&g)).unwrap();
    let m = quantum_mutual(&u, &s1, &s2, Variant::N1).unwrap().value;
    let born = born_alternative_mutual(&u, &s1, &s2).unwrap().value;
    assert!(m >= 0.2 && born >= 0.2, "{m} {born}");
    let times = [0.0, 1.0, 2.0, 3.0];
    assert!(matches!(build_subtree(&u, &s1, &times, 0.02), Err(Error::Contract(_))));
    let a = make_gaussian_packet(-8.0, 4.0, 1.0, &g).unwrap();
    let b = make_gaussian_packet(8.0, -4.0, 1.0, &g).unwrap();
    assert!(overlapping_measure(&a, &b).unwrap() < 1e-8);
}
