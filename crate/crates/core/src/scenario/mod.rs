//! Config-driven scenarios on the grid: packet crossing, separating packets,
//! a two-slit asymptotic support, a stationary double well and free-particle
//! velocity convergence.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde_json::json;

use crate::asymptotics::{
    complement_weight_sum, convergence_profile, evolve_then_project, project_then_evolve,
};
use crate::branching::{
    asymptotic_support_check, branch_verify, build_subtree, disjoint_subtree_check, interval_shrinkage_candidates,
    irreducible_check, subtree_members_are_supports, subtree_support_scan, TimeRegionMap,
};
use crate::overlap::packet_overlap_profile;
use crate::pathspace::bohmian::order_preserved;
use crate::pathspace::{bohmian_ensemble, equivariance_check, BohmConfig, Domain};
use crate::quantum::{make_gaussian_packet, CSet, GridUniverse, Region, Universe, VelocityRegion};
use crate::typicality::{quantum_mutual, Variant};
use crate::{Error, Result};

pub mod config;
pub mod report;

pub use config::{EpsLevels, Experiment, GridSpec, HamiltonianSpec, PacketSpec, RegionSpec, ScenarioConfig, Schedule};
pub use report::{config_hash, ScenarioOutput, ScenarioReport, Series, Verdict};

/// Slack for identities that hold up to round-off.
pub const EXACT_TOL: f64 = 1e-12;

/// Free-evolution commutation tolerance for `F⁺`.
pub const COMMUTATION_TOL: f64 = 1e-10;

#[derive(Default)]
struct Out {
    series: Vec<Series>,
    metrics: BTreeMap<String, f64>,
    tables: BTreeMap<String, serde_json::Value>,
    verdicts: Vec<Verdict>,
}

impl Out {
    fn metric(&mut self, k: &str, v: f64) {
        self.metrics.insert(k.to_string(), v);
    }

    fn verdict(&mut self, v: Verdict) {
        self.verdicts.push(v);
    }
}

/// Runs a validated scenario.
pub fn run(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    cfg.validate()?;
    let u = cfg.universe()?;
    let times = cfg.schedule.times();
    let mut out = Out::default();
    match &cfg.experiment {
        Experiment::GaussianCrossing { s1, target, window, after, bohm_paths, bohm_dt } => {
            crossing(cfg, &u, &times, s1, target, *window, *after, *bohm_paths, *bohm_dt, &mut out)?
        }
        Experiment::SeparatingPackets { s1, partner, candidate, fractions, swap_at } => {
            separating(cfg, &u, &times, s1, partner, candidate, fractions, *swap_at, &mut out)?
        }
        Experiment::TwoSlit { slits, max_margin, fractions } => {
            two_slit(cfg, &u, &times, *slits, *max_margin, fractions, &mut out)?
        }
        Experiment::DoubleWell { region } => double_well(cfg, &u, &times, region, &mut out)?,
        Experiment::FreeConvergence { velocity_threshold, threshold } => {
            free_convergence(cfg, &u, &times, *velocity_threshold, *threshold, &mut out)?
        }
    }
    Ok(ScenarioOutput::new(cfg.clone(), out.series, out.metrics, out.tables, out.verdicts))
}

fn overlap_series(profile: &crate::overlap::OverlapProfile) -> Series {
    let mut s = Series::new("overlap", &["t", "w", "m_at_split", "m3_at_split", "leak"]);
    for x in &profile.samples {
        s.push(vec![x.time, x.w, x.m_at_split, x.m3_at_split, x.leak]);
    }
    s
}

fn path_series(name: &str, ens: &crate::pathspace::PathEnsemble) -> Series {
    let cols: Vec<String> = std::iter::once("t".to_string())
        .chain((0..ens.len()).map(|i| format!("x{i}")))
        .collect();
    let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
    let mut s = Series::new(name, &col_refs);
    for (k, &t) in ens.times().iter().enumerate() {
        s.push(std::iter::once(t).chain((0..ens.len()).map(|i| ens.position(i, k))).collect());
    }
    s
}

#[allow(clippy::too_many_arguments)]
fn crossing(
    cfg: &ScenarioConfig,
    u: &GridUniverse,
    times: &[f64],
    s1: &RegionSpec,
    target: &RegionSpec,
    window: [f64; 2],
    after: f64,
    bohm_paths: usize,
    bohm_dt: f64,
    out: &mut Out,
) -> Result<()> {
    let grid = u.grid();
    let sched = cfg.schedule;
    let eps = cfg.eps;
    let r1 = s1.region(grid);
    let rt = target.region(grid);
    let c1 = CSet::at(0.0, r1.clone())?;

    let profile = packet_overlap_profile(u, &c1, times, eps.support)?;
    let in_window = profile.samples.iter().filter(|s| s.time >= window[0] && s.time <= window[1]);
    let w_window = in_window.map(|s| s.w).fold(f64::INFINITY, f64::min);
    let w_after = profile.samples.iter().filter(|s| s.time >= after).map(|s| s.w).fold(0.0, f64::max);
    out.metric("w_max", profile.max_w());
    out.verdict(
        Verdict::above("overlap_inside_window", w_window, 0.5)
            .schedule(sched)
            .detail(format!("min w over samples in [{:?}, {:?}]", window[0], window[1])),
    );
    out.verdict(
        Verdict::new("overlap_after_crossing", w_after < eps.support, w_after, eps.support)
            .eps(eps.support)
            .schedule(sched)
            .detail(format!("max w over samples t >= {after:?}")),
    );
    out.verdict(
        Verdict::new("overlap_sandwich", profile.all_inequalities_hold(), 0.0, 0.0)
            .schedule(sched)
            .detail("inf m <= w <= inf m3 and leak <= m3 at every sample"),
    );
    out.series.push(overlap_series(&profile));

    let mutual = times
        .par_iter()
        .map(|&t| Ok(quantum_mutual(u, &c1, &CSet::at(t, rt.clone())?, Variant::N1)?.value))
        .collect::<Result<Vec<f64>>>()?;
    let mut ms = Series::new("mutual", &["t", "m"]);
    for (t, m) in times.iter().zip(&mutual) {
        ms.push(vec![*t, *m]);
    }
    out.series.push(ms);
    let m_end = *mutual.last().expect("schedule has samples");
    out.verdict(Verdict::at_most("mutual_at_horizon", m_end, eps.mutual).eps(eps.mutual).schedule(sched));

    let asym = asymptotic_support_check(u, &c1, eps.asymptotic)?;
    out.verdict(Verdict::at_most("asymptotic_support", asym.value, eps.asymptotic).eps(eps.asymptotic));

    let scan = subtree_support_scan(u, &c1, times, eps.support)?;
    let wt: Vec<f64> = scan.witnesses.iter().map(|w| w.t2).collect();
    let mid = wt.iter().any(|t| *t >= window[0] && *t <= window[1]) && wt.iter().all(|t| *t < after);
    out.tables.insert("scan_witness_times".into(), json!(wt));
    out.verdict(
        Verdict::new("subtree_scan_fails_mid_crossing", !scan.pass && mid, scan.max_value, eps.support)
            .eps(eps.support)
            .schedule(sched)
            .detail(format!(
                "{} witnesses in [{:?}, {:?}]",
                wt.len(),
                wt.first().copied().unwrap_or(f64::NAN),
                wt.last().copied().unwrap_or(f64::NAN)
            )),
    );
    let refused = matches!(build_subtree(u, &c1, times, eps.support), Err(Error::Contract(_)));
    out.verdict(Verdict::new("subtree_construction_refused", refused, 0.0, 0.0).eps(eps.support));

    let bohm = BohmConfig {
        n_paths: bohm_paths,
        seed: cfg.seed,
        dt: bohm_dt,
        seed_region: Some(r1.clone()),
        ..BohmConfig::default()
    };
    let ens = bohmian_ensemble(u, times, &bohm)?;
    let inside = Domain::cells(grid, &r1);
    let exceptions = ens.paths().iter().flatten().filter(|x| !inside.contains(**x)).count();
    out.metric("bohm_max_x", ens.paths().iter().flatten().fold(f64::NEG_INFINITY, |a, b| a.max(*b)));
    out.verdict(
        Verdict::new("bohmian_paths_stay_in_s1", exceptions == 0, exceptions as f64, 0.0)
            .schedule(sched)
            .detail(format!("{bohm_paths} paths seeded in s1; count of samples outside")),
    );
    out.verdict(Verdict::new("bohmian_order_preserved", order_preserved(&ens), 0.0, 0.0).schedule(sched));
    out.series.push(path_series("bohmian_s1", &ens));

    let full = BohmConfig { seed_region: None, ..bohm };
    let ens_full = bohmian_ensemble(u, times, &full)?;
    let eq = equivariance_check(u, &ens_full, &[r1, rt])?;
    let worst = eq.entries.iter().map(|e| (e.fraction - e.born).abs() - e.tolerance).fold(f64::MIN, f64::max);
    out.verdict(
        Verdict::new("bohmian_equivariance", eq.pass, worst, 0.0)
            .schedule(sched)
            .detail("max over samples of |fraction - born| - (3 sigma + 1e-2)"),
    );
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn separating(
    cfg: &ScenarioConfig,
    u: &GridUniverse,
    times: &[f64],
    s1: &RegionSpec,
    partner: &RegionSpec,
    candidate: &RegionSpec,
    fractions: &[f64],
    swap_at: f64,
    out: &mut Out,
) -> Result<()> {
    let grid = u.grid();
    let sched = cfg.schedule;
    let eps = cfg.eps;
    let r1 = s1.region(grid);
    let c1 = CSet::at(0.0, r1.clone())?;
    let c1p = CSet::at(0.0, partner.region(grid))?;

    let profile = packet_overlap_profile(u, &c1, times, eps.support)?;
    out.metric("w_max", profile.max_w());
    out.series.push(overlap_series(&profile));

    let scan = subtree_support_scan(u, &c1, times, eps.support)?;
    out.verdict(Verdict::at_most("subtree_support_scan", scan.max_value, eps.support).eps(eps.support).schedule(sched));

    let (k, sub) = build_subtree(u, &c1, times, eps.subtree)?;
    out.verdict(Verdict::at_most("build_subtree", sub.max_value, eps.subtree).eps(eps.subtree).schedule(sched));
    let members = subtree_members_are_supports(u, &k, eps.subtree)?;
    out.verdict(Verdict::new("subtree_members_are_supports", members, 0.0, 0.0).eps(eps.subtree).schedule(sched));

    let mut ks = Series::new("subtree", &["t", "lebesgue", "weight", "mean_x"]);
    for (i, t) in k.times().iter().enumerate() {
        let reg = &k.regions()[i];
        let psi = u.state_at(*t)?;
        let dens: Vec<(f64, f64)> = reg.mask().indices().map(|j| (grid.x(j), psi[j].norm_sqr())).collect();
        let mass: f64 = dens.iter().map(|d| d.1).sum();
        let mean = dens.iter().map(|d| d.0 * d.1).sum::<f64>() / mass;
        ks.push(vec![*t, reg.lebesgue(), u.born_weight(&k.cset(i))?, mean]);
    }
    out.series.push(ks);

    let asym = asymptotic_support_check(u, &c1, eps.asymptotic)?;
    out.verdict(Verdict::at_most("asymptotic_support", asym.value, eps.asymptotic).eps(eps.asymptotic));

    let branch = branch_verify(u, &k, eps.branch)?;
    out.verdict(
        Verdict::at_most("branch_verify", branch.max_value, eps.branch)
            .eps(eps.branch)
            .schedule(sched)
            .detail(format!("{} small-denominator warnings", branch.warnings)),
    );

    let (kp, _) = build_subtree(u, &c1p, times, eps.subtree)?;
    let swapped: Vec<Region> = (0..k.len())
        .map(|i| if k.times()[i] < swap_at { k.regions()[i].clone() } else { kp.regions()[i].clone() })
        .collect();
    let swapped = TimeRegionMap::new(k.times().to_vec(), swapped)?;
    let sw = branch_verify(u, &swapped, eps.branch)?;
    let first = sw.witnesses.first().map(|w| (w.t1, w.t2));
    out.verdict(
        Verdict::new("swapped_map_fails", !sw.pass, sw.max_value, eps.branch)
            .eps(eps.branch)
            .schedule(sched)
            .detail(format!("first witness pair {first:?}")),
    );

    let disjoint = disjoint_subtree_check(u, &c1, &c1p, &k, &kp)?;
    let mut ds = Series::new("disjoint", &["t", "w", "bound", "sqrt_m"]);
    for d in &disjoint {
        ds.push(vec![d.time, d.w, d.bound, d.sqrt_m]);
    }
    out.series.push(ds);
    let worst = disjoint.iter().map(|d| d.w - d.bound).fold(f64::MIN, f64::max);
    out.verdict(
        Verdict::at_most("disjoint_subtrees_within_bound", worst, EXACT_TOL)
            .schedule(sched)
            .detail("max over samples of w(S2,S2') - (a sqrt m + b sqrt m' + c w(S1,S1'))"),
    );

    let mut candidates = vec![("candidate".to_string(), candidate.region(grid))];
    candidates.extend(interval_shrinkage_candidates(grid, &r1, fractions));
    let irr = irreducible_check(u, &c1, &candidates, "candidate plus interval shrinkage", eps.irreducible)?;
    let cand = irr.candidates.iter().find(|c| c.label == "candidate");
    out.verdict(
        Verdict::new("not_irreducible", !irr.irreducible, cand.map_or(f64::NAN, |c| c.lebesgue_ratio), eps.irreducible)
            .eps(eps.irreducible)
            .detail("value: Lebesgue ratio of the configured candidate"),
    );
    out.tables.insert("irreducible".into(), serde_json::to_value(&irr)?);
    Ok(())
}

fn two_slit(
    cfg: &ScenarioConfig,
    u: &GridUniverse,
    times: &[f64],
    slits: [f64; 2],
    max_margin: f64,
    fractions: &[f64],
    out: &mut Out,
) -> Result<()> {
    let grid = u.grid();
    let eps = cfg.eps.irreducible;
    let (lo, hi) = (slits[0].min(slits[1]), slits[0].max(slits[1]));
    let steps = (max_margin / grid.dx()).floor() as usize;
    let mut scan = Series::new("margin_scan", &["margin", "asymptotic_value"]);
    let mut chosen = None;
    for k in 0..=steps {
        let e = k as f64 * grid.dx();
        let c = CSet::at(0.0, Region::interval(grid, lo - e, hi + e))?;
        let check = asymptotic_support_check(u, &c, eps)?;
        scan.push(vec![e, check.value]);
        if check.pass {
            chosen = Some((e, c));
            break;
        }
    }
    out.series.push(scan);
    let Some((margin, s)) = chosen else {
        return Err(Error::Config(format!(
            "no margin up to {max_margin} makes the slit interval an asymptotic support at eps = {eps}"
        )));
    };
    out.metric("margin", margin);
    let region = s.region().expect("spatial").clone();
    out.metric("lebesgue", region.lebesgue());
    out.metric("weight", u.born_weight(&s)?);

    let profile = packet_overlap_profile(u, &s, times, eps)?;
    out.metric("w_max", profile.max_w());
    out.series.push(overlap_series(&profile));

    let candidates = interval_shrinkage_candidates(grid, &region, fractions);
    let irr = irreducible_check(u, &s, &candidates, "interval shrinkage", eps)?;
    let supports = irr.candidates.iter().filter(|c| c.is_asymptotic_support).count();
    out.verdict(
        Verdict::new("irreducible", irr.irreducible, supports as f64, 0.0)
            .eps(eps)
            .detail(format!("{} candidates, value: how many are asymptotic supports", irr.candidates.len())),
    );
    out.tables.insert("irreducible".into(), serde_json::to_value(&irr)?);
    Ok(())
}

fn double_well(cfg: &ScenarioConfig, u: &GridUniverse, times: &[f64], region: &RegionSpec, out: &mut Out) -> Result<()> {
    let sched = cfg.schedule;
    let r = region.region(u.grid());
    let map = TimeRegionMap::constant(times.to_vec(), r)?;
    let mut ws = Series::new("weights", &["t", "region_weight", "norm"]);
    let mut drift: f64 = 0.0;
    let mut norm_err: f64 = 0.0;
    let w0 = u.born_weight(&map.cset(0))?;
    for i in 0..map.len() {
        let t = map.times()[i];
        let w = u.born_weight(&map.cset(i))?;
        let n = u.norm_sq(&u.state_at(t)?);
        drift = drift.max((w - w0).abs());
        norm_err = norm_err.max((n - 1.0).abs());
        ws.push(vec![t, w, n]);
    }
    out.series.push(ws);
    out.metric("region_weight", w0);
    out.metric("weight_drift", drift);
    out.verdict(Verdict::at_most("norm_preserved", norm_err, 1e-10).schedule(sched));
    let b = branch_verify(u, &map, cfg.eps.branch)?;
    out.verdict(Verdict::at_most("constant_branch", b.max_value, cfg.eps.branch).eps(cfg.eps.branch).schedule(sched));
    Ok(())
}

fn free_convergence(
    cfg: &ScenarioConfig,
    u: &GridUniverse,
    times: &[f64],
    v0: f64,
    threshold: f64,
    out: &mut Out,
) -> Result<()> {
    let grid = u.grid();
    let sched = cfg.schedule;
    let mass = u.mass();
    let dv = VelocityRegion::above(grid, mass, v0);
    let p = cfg.packets[0];
    let peak = VelocityRegion::above(grid, mass, p.momentum / mass);

    let prof = convergence_profile(u, &dv, times, threshold)?;
    let prof_peak = convergence_profile(u, &peak, times, threshold)?;
    let mut cs = Series::new("convergence", &["t", "distance", "distance_peak_boundary"]);
    for i in 0..times.len() {
        cs.push(vec![times[i], prof.distances[i], prof_peak.distances[i]]);
    }
    out.series.push(cs);
    if let Some(t) = prof.t_conv {
        out.metric("t_conv", t);
    }
    out.metric("final_distance", prof.final_distance());
    out.metric("final_distance_peak_boundary", prof_peak.final_distance());
    out.verdict(
        Verdict::at_most("converges", prof.final_distance(), threshold)
            .schedule(sched)
            .detail(format!("t_conv = {:?}", prof.t_conv)),
    );
    out.verdict(
        Verdict::above("peak_boundary_flagged", prof_peak.final_distance(), threshold)
            .schedule(sched)
            .detail("boundary on the mean velocity; expected not to converge"),
    );

    let psi = u.initial();
    let n0 = u.norm_sq(psi);
    let stamps: Vec<Option<f64>> = times.iter().map(|t| Some(*t)).chain([None]).collect();
    let complement = stamps
        .par_iter()
        .map(|t| Ok((complement_weight_sum(u, &dv, *t, psi)? - n0).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.verdict(Verdict::at_most("complement_decomposition", complement, EXACT_TOL).schedule(sched));

    let f = u.asymptotic_projection(psi, &dv)?;
    let ff = u.asymptotic_projection(&f, &dv)?;
    out.verdict(Verdict::at_most("f_plus_idempotent", u.distance_sq(&f, &ff).sqrt(), EXACT_TOL));
    let phi = make_gaussian_packet(p.center + 1.5, -p.momentum, 1.5 * p.sigma, grid)?;
    let fphi = u.asymptotic_projection(phi.amps(), &dv)?;
    let herm = (u.inner(phi.amps(), &f) - u.inner(&fphi, psi)).norm();
    out.verdict(Verdict::at_most("f_plus_hermitian", herm, EXACT_TOL));
    let t_end = *times.last().expect("schedule has samples");
    let a = project_then_evolve(u, &dv, t_end)?;
    let b = evolve_then_project(u, &dv, t_end)?;
    out.verdict(Verdict::at_most("f_plus_commutes_with_free_evolution", u.distance_sq(&a, &b).sqrt(), COMMUTATION_TOL));
    Ok(())
}
