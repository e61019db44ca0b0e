//! Randomized verification of the typicality inequalities and implications
//! over dense oracle instances, plus the normalization chains, equal-time
//! reductions and path-space identities.
//!
//! Every instance is rebuilt from `(seed, dim, index)`, so a failure
//! certificate replays exactly.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::pathspace::diagnostics::{Diagnostic, DiagnosticQuery};
use crate::pathspace::{additivity_gap, ensemble_diagnostics, everett_bell_fdd, mu_q_fdd, Domain, PathEnsemble};
use crate::quantum::dense::derive_seed;
use crate::quantum::{family_instance, CSet, CellMask, DenseInstance, Family, Region, Universe};
use crate::typicality::{
    prob_typicality, quantum_absolute, quantum_mutual, quantum_relative_equal_time, quantum_typicality_measure,
    FiniteMeasureSpace, ProbKind, Variant,
};
use crate::{Error, Result, C64};

/// Certificates kept per check.
pub const MAX_CERTIFICATES: usize = 32;

/// Tolerance for exact identities (proof identity of ine2, equal-time
/// reductions, path-space identities).
pub const IDENTITY_TOL: f64 = 1e-12;

/// `m¹` branch on which the probabilistic normalization chain is asserted.
pub const PROB_CHAIN_BRANCH: f64 = 0.5;

/// `m¹` branch on which the quantum normalization chain is asserted.
pub const QUANTUM_CHAIN_BRANCH: f64 = 0.08;

/// Denominators below this make an instance vacuous for a check.
const TINY: f64 = crate::DEGENERATE_NORM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Inequalities,
    Implications,
    EqualTimeReduction,
    PathspaceDiagnostics,
}

impl Suite {
    pub const ALL: [Suite; 4] = [
        Suite::Inequalities,
        Suite::Implications,
        Suite::EqualTimeReduction,
        Suite::PathspaceDiagnostics,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Inequalities => "inequalities",
            Suite::Implications => "implications",
            Suite::EqualTimeReduction => "equal-time-reduction",
            Suite::PathspaceDiagnostics => "pathspace-diagnostics",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite {s:?}")))
    }
}

fn default_families() -> Vec<Family> {
    Family::ALL.to_vec()
}

fn default_regions() -> usize {
    4
}

fn default_times() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub dims: Vec<usize>,
    /// Instances per dimension.
    pub count: usize,
    pub seed: u64,
    pub eps_levels: Vec<f64>,
    /// Allowed violation of the inequalities and implication bounds.
    pub tolerance: f64,
    #[serde(default = "default_families")]
    pub families: Vec<Family>,
    #[serde(default = "default_regions")]
    pub n_regions: usize,
    /// Tagged times per instance (besides `t = 0`).
    #[serde(default = "default_times")]
    pub n_times: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            dims: vec![2, 4, 8, 16],
            count: 10_000,
            seed: 7,
            eps_levels: vec![1e-2, 1e-3, 1e-4],
            tolerance: 1e-9,
            families: default_families(),
            n_regions: default_regions(),
            n_times: default_times(),
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dims.is_empty() {
            return bad("dims must not be empty".into());
        }
        if let Some(d) = self.dims.iter().find(|d| !(2..=64).contains(*d)) {
            return bad(format!("dimension {d} outside 2..=64"));
        }
        if self.count == 0 {
            return bad("count must be >= 1".into());
        }
        if let Some(e) = self.eps_levels.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return bad(format!("eps level {e} outside (0, 1)"));
        }
        if !(self.tolerance >= 0.0 && self.tolerance.is_finite()) {
            return bad(format!("tolerance {} must be finite and >= 0", self.tolerance));
        }
        if self.families.is_empty() {
            return bad("families must not be empty".into());
        }
        if self.n_regions < 2 || self.n_times == 0 {
            return bad("need at least two regions and one tagged time".into());
        }
        Ok(())
    }

    /// Families cycle with the instance index; the blocked family is skipped
    /// on odd dimensions.
    pub fn family_for(&self, dim: usize, index: u64) -> Family {
        let usable: Vec<Family> = self
            .families
            .iter()
            .copied()
            .filter(|f| *f != Family::Blocked || dim % 2 == 0)
            .collect();
        if usable.is_empty() {
            Family::Haar
        } else {
            usable[(index % usable.len() as u64) as usize]
        }
    }

    pub fn instance(&self, dim: usize, index: u64) -> Result<DenseInstance> {
        family_instance(
            self.family_for(dim, index),
            dim,
            self.n_regions,
            self.n_times,
            derive_seed(self.seed, dim, index),
        )
    }
}

/// Enough to rebuild and rerun one failing instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub dim: usize,
    pub index: u64,
    pub family: Family,
    pub check: String,
    pub detail: String,
    pub violation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CheckStats {
    /// Instances/tuples where the side conditions held and the check ran.
    pub checked: u64,
    /// Tuples where premises or side conditions failed.
    pub vacuous: u64,
    pub failures: u64,
    /// Largest `lhs − rhs` seen (negative when every check had slack).
    pub max_violation: Option<f64>,
    /// Largest checked quantity (the conclusion value for implications).
    pub max_value: Option<f64>,
    pub certificates: Vec<Certificate>,
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

impl CheckStats {
    fn merge(mut self, other: CheckStats) -> CheckStats {
        self.checked += other.checked;
        self.vacuous += other.vacuous;
        self.failures += other.failures;
        self.max_violation = max_opt(self.max_violation, other.max_violation);
        self.max_value = max_opt(self.max_value, other.max_value);
        self.certificates.extend(other.certificates);
        self.certificates
            .sort_by(|a, b| (a.dim, a.index, &a.detail).cmp(&(b.dim, b.index, &b.detail)));
        self.certificates.truncate(MAX_CERTIFICATES);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub config: SuiteConfig,
    pub instances: u64,
    pub checks: BTreeMap<String, CheckStats>,
    pub pass: bool,
}

impl SuiteReport {
    fn new(suite: Suite, config: &SuiteConfig) -> Self {
        SuiteReport {
            suite,
            config: config.clone(),
            instances: 0,
            checks: BTreeMap::new(),
            pass: true,
        }
    }

    /// Associative merge of two partial reports of the same suite.
    pub fn merge(mut self, other: SuiteReport) -> SuiteReport {
        self.instances += other.instances;
        for (k, v) in other.checks {
            let merged = match self.checks.remove(&k) {
                Some(mine) => mine.merge(v),
                None => v,
            };
            self.checks.insert(k, merged);
        }
        self.pass = self.checks.values().all(|c| c.failures == 0);
        self
    }

    pub fn failures(&self) -> u64 {
        self.checks.values().map(|c| c.failures).sum()
    }

    /// Largest violation over the checks whose name starts with `prefix`.
    pub fn max_violation(&self, prefix: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .fold(None, |acc, (_, c)| max_opt(acc, c.max_violation))
    }
}

struct Tally<'a> {
    suite: Suite,
    cfg: &'a SuiteConfig,
    dim: usize,
    index: u64,
    family: Family,
    checks: BTreeMap<String, CheckStats>,
}

impl Tally<'_> {
    fn entry(&mut self, name: &str) -> &mut CheckStats {
        if !self.checks.contains_key(name) {
            self.checks.insert(name.to_string(), CheckStats::default());
        }
        self.checks.get_mut(name).expect("inserted")
    }

    /// Records `lhs ≤ rhs + tol`.
    fn check(&mut self, name: &str, tol: f64, lhs: f64, rhs: f64, detail: impl FnOnce() -> String) {
        self.check_violation(name, tol, lhs - rhs, lhs, detail);
    }

    fn check_violation(&mut self, name: &str, tol: f64, violation: f64, value: f64, detail: impl FnOnce() -> String) {
        let cert = (!(violation <= tol)).then(|| Certificate {
            suite: self.suite,
            config: self.cfg.clone(),
            dim: self.dim,
            index: self.index,
            family: self.family,
            check: name.to_string(),
            detail: detail(),
            violation,
        });
        let e = self.entry(name);
        e.checked += 1;
        e.max_violation = max_opt(e.max_violation, Some(violation));
        e.max_value = max_opt(e.max_value, Some(value));
        if let Some(c) = cert {
            e.failures += 1;
            if e.certificates.len() < MAX_CERTIFICATES {
                e.certificates.push(c);
            }
        }
    }

    fn vacuous(&mut self, name: &str) {
        self.entry(name).vacuous += 1;
    }
}

/// Runs a suite over every configured dimension and instance.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut report = SuiteReport::new(suite, cfg);
    for &dim in &cfg.dims {
        let parts = (0..cfg.count as u64)
            .into_par_iter()
            .map(|i| run_instance(suite, cfg, dim, i))
            .collect::<Result<Vec<_>>>()?;
        for p in parts {
            report = report.merge(p);
        }
    }
    Ok(report)
}

/// Runs one instance; the report covers just that instance.
pub fn run_instance(suite: Suite, cfg: &SuiteConfig, dim: usize, index: u64) -> Result<SuiteReport> {
    let inst = cfg.instance(dim, index)?;
    let mut t = Tally {
        suite,
        cfg,
        dim,
        index,
        family: cfg.family_for(dim, index),
        checks: BTreeMap::new(),
    };
    match suite {
        Suite::Inequalities => inequalities(&inst, &mut t)?,
        Suite::Implications => implications(&inst, &mut t)?,
        Suite::EqualTimeReduction => reductions(&inst, &mut t)?,
        Suite::PathspaceDiagnostics => pathspace_identities(&inst, &mut t)?,
    }
    let mut report = SuiteReport::new(suite, cfg);
    report.instances = 1;
    report.checks = t.checks;
    report.pass = report.failures() == 0;
    Ok(report)
}

/// Reruns the instance a certificate points at.
pub fn replay(cert: &Certificate) -> Result<SuiteReport> {
    cert.config.validate()?;
    run_instance(cert.suite, &cert.config, cert.dim, cert.index)
}

/// Heisenberg vectors of every `(region, time)` s-set of an instance, with
/// weights, pairwise squared distances and equal-time intersections/unions.
struct Tables {
    /// `(region index, time index)`.
    labels: Vec<(usize, usize)>,
    vecs: Vec<Vec<C64>>,
    w: Vec<f64>,
    d2: Vec<Vec<f64>>,
    /// Equal-time pairs `(p, q)` with `p < q` (indices into `labels`).
    pairs: Vec<EqualTimePair>,
}

struct EqualTimePair {
    p: usize,
    q: usize,
    inter: Vec<C64>,
    union: Vec<C64>,
    w_inter: f64,
}

impl Tables {
    fn build(inst: &DenseInstance) -> Result<Self> {
        let nr = inst.regions().len();
        let nt = inst.time_count();
        let labels: Vec<(usize, usize)> = (0..nt).flat_map(|ti| (0..nr).map(move |ri| (ri, ti))).collect();
        let vecs = labels
            .iter()
            .map(|&(ri, ti)| inst.heisenberg(&inst.cset(ri, ti)))
            .collect::<Result<Vec<_>>>()?;
        let w: Vec<f64> = vecs.iter().map(|v| inst.norm_sq(v)).collect();
        let d2 = vecs
            .iter()
            .map(|a| vecs.iter().map(|b| inst.distance_sq(a, b)).collect())
            .collect();
        let mut pairs = Vec::new();
        for p in 0..labels.len() {
            for q in p + 1..labels.len() {
                if labels[p].1 != labels[q].1 {
                    continue;
                }
                let (sp, sq) = (inst.cset(labels[p].0, labels[p].1), inst.cset(labels[q].0, labels[q].1));
                let inter = inst.heisenberg(&sp.intersection(&sq)?)?;
                let union = inst.heisenberg(&sp.union(&sq)?)?;
                let w_inter = inst.norm_sq(&inter);
                pairs.push(EqualTimePair { p, q, inter, union, w_inter });
            }
        }
        Ok(Tables { labels, vecs, w, d2, pairs })
    }

    fn len(&self) -> usize {
        self.labels.len()
    }

    fn name(&self, p: usize) -> String {
        format!("S(region {}, time {})", self.labels[p].0, self.labels[p].1)
    }

    fn m1(&self, p: usize, q: usize) -> Option<f64> {
        let den = self.w[p].max(self.w[q]);
        (den >= TINY).then(|| self.d2[p][q] / den)
    }

    fn m3(&self, p: usize, q: usize) -> Option<f64> {
        let den = self.w[p].min(self.w[q]);
        (den >= TINY).then(|| self.d2[p][q] / den)
    }

    /// `w(S, S′)` for an equal-time pair.
    fn overlap(&self, pair: &EqualTimePair) -> Option<f64> {
        let den = self.w[pair.p].min(self.w[pair.q]);
        (den >= TINY).then(|| pair.w_inter / den)
    }
}

/// `ε₃ = ε / (1 − √ε)²`, the `m³` bound implied by `m¹ ≤ ε`.
pub fn m3_bound(eps: f64) -> f64 {
    eps / (1.0 - eps.sqrt()).powi(2)
}

/// Ingredients of the four-set overlap bound
/// `w(S₂,S₂′) ≤ a√m(S₁,S₂) + b√m(S₁′,S₂′) + c·w(S₁,S₁′)`, with weights
/// `[‖S₁Ψ₀‖², ‖S₁′Ψ₀‖², ‖S₂Ψ₀‖², ‖S₂′Ψ₀‖²]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ine4 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m12: f64,
    pub m12p: f64,
    pub w1: f64,
    pub w2: f64,
}

impl Ine4 {
    pub fn new(weights: [f64; 4], m12: f64, m12p: f64, inter1_weight: f64, inter2_weight: f64) -> Result<Self> {
        use crate::error::guard;
        let [n1, n1p, n2, n2p] = weights.map(f64::sqrt);
        let min2 = guard("min weight of S2, S2'", (n2 * n2).min(n2p * n2p))?;
        let min1 = guard("min weight of S1, S1'", (n1 * n1).min(n1p * n1p))?;
        Ok(Ine4 {
            a: n1.max(n2) * n2p / min2,
            b: n1p.max(n2p) * n1 / min2,
            c: min1 / min2,
            m12,
            m12p,
            w1: inter1_weight / min1,
            w2: inter2_weight / min2,
        })
    }

    pub fn bound(&self) -> f64 {
        self.a * self.m12.sqrt() + self.b * self.m12p.sqrt() + self.c * self.w1
    }
}

fn ine4_for(tb: &Tables, s1: &EqualTimePair, s2: (usize, usize), w_inter2: f64) -> Option<Ine4> {
    let (p2, q2) = s2;
    let m12 = tb.m1(s1.p, p2)?;
    let m12p = tb.m1(s1.q, q2)?;
    Ine4::new([tb.w[s1.p], tb.w[s1.q], tb.w[p2], tb.w[q2]], m12, m12p, s1.w_inter, w_inter2).ok()
}

fn prob_mutuals(space: &FiniteMeasureSpace, a: &CellMask, b: &CellMask) -> Option<[f64; 3]> {
    let m = |v| prob_typicality(ProbKind::Mutual, a, Some(b), space, v).ok().map(|x| x.value);
    Some([m(Variant::N1)?, m(Variant::N2)?, m(Variant::N3)?])
}

fn inequalities(inst: &DenseInstance, t: &mut Tally) -> Result<()> {
    let tol = t.cfg.tolerance;
    let tb = Tables::build(inst)?;
    let n = tb.len();

    // Probabilistic chain under each Born measure.
    for ti in 0..inst.time_count() {
        let time = if ti == 0 { 0.0 } else { inst.times()[ti - 1] };
        let space = FiniteMeasureSpace::born(inst, time)?;
        let regions = inst.regions();
        for (ia, ra) in regions.iter().enumerate() {
            for (ib, rb) in regions.iter().enumerate().skip(ia + 1) {
                let detail = || format!("regions {ia}, {ib} at time {ti}");
                let Some([m1, m2, m3]) = prob_mutuals(&space, ra.mask(), rb.mask()) else {
                    t.vacuous("prob_chain");
                    continue;
                };
                if m1 <= PROB_CHAIN_BRANCH {
                    let v = (m1 - m2).max(m2 - m3).max(m3 - m1 / (1.0 - m1)).max(m1 / (1.0 - m1) - 2.0 * m1);
                    t.check_violation("prob_chain", tol, v, m1, detail);
                } else {
                    t.vacuous("prob_chain");
                }
                let r = |x: &Region, y: &Region| {
                    prob_typicality(ProbKind::Relative, x.mask(), Some(y.mask()), &space, Variant::N1)
                        .map(|v| v.value)
                };
                match (r(ra, rb), r(rb, ra)) {
                    (Ok(rab), Ok(rba)) if m1 < 1.0 => {
                        let s = rab + rba;
                        let v = (m1 - s).max(s - m1 / (1.0 - m1));
                        t.check_violation("prob_relative_sandwich", tol, v, s, detail);
                    }
                    _ => t.vacuous("prob_relative_sandwich"),
                }
            }
        }
    }

    // Quantum chain over all pairs.
    for p in 0..n {
        for q in p + 1..n {
            let (Some(m1), Some(m3)) = (tb.m1(p, q), tb.m3(p, q)) else {
                t.vacuous("quantum_chain");
                continue;
            };
            if m1 <= QUANTUM_CHAIN_BRANCH {
                let m2 = tb.d2[p][q] / (0.5 * (tb.w[p] + tb.w[q]));
                let top = m1 / (1.0 - m1.sqrt()).powi(2);
                let v = (m1 - m2).max(m2 - m3).max(m3 - top).max(top - 2.0 * m1);
                t.check_violation("quantum_chain", tol, v, m1, || format!("{}, {}", tb.name(p), tb.name(q)));
            } else {
                t.vacuous("quantum_chain");
            }
        }
    }

    // ine1 over all triples.
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                match (tb.m1(p, r), tb.m3(p, q), tb.m3(q, r)) {
                    (Some(lhs), Some(a), Some(b)) => {
                        let rhs = a + b + 2.0 * (a * b).sqrt();
                        t.check("ine1", tol, lhs, rhs, || {
                            format!("{}, {}, {}", tb.name(p), tb.name(q), tb.name(r))
                        });
                    }
                    _ => t.vacuous("ine1"),
                }
            }
        }
    }

    for pair in &tb.pairs {
        let (p, q) = (pair.p, pair.q);
        let pname = || format!("{} & {}", tb.name(p), tb.name(q));

        // ine3.
        match (tb.overlap(pair), tb.m3(p, q)) {
            (Some(w), Some(m3)) => t.check("ine3", tol, 1.0 - w, 0.5 * m3, pname),
            _ => t.vacuous("ine3"),
        }

        // ine2 and its proof identity against every S₂.
        let w_union = inst.norm_sq(&pair.union);
        for s2 in 0..n {
            let detail = || format!("{} vs {}", pname(), tb.name(s2));
            let d_int = inst.distance_sq(&pair.inter, &tb.vecs[s2]);
            let d_uni = inst.distance_sq(&pair.union, &tb.vecs[s2]);
            let identity = (d_int + d_uni - tb.d2[p][s2] - tb.d2[q][s2]).abs();
            t.check_violation("ine2_identity", IDENTITY_TOL, identity, identity, detail);
            let (Some(a), Some(b)) = (tb.m3(p, s2), tb.m3(q, s2)) else {
                t.vacuous("ine2_intersection");
                t.vacuous("ine2_union");
                continue;
            };
            for (name, d, wx) in [("ine2_intersection", d_int, pair.w_inter), ("ine2_union", d_uni, w_union)] {
                let den = wx.max(tb.w[s2]);
                if den >= TINY {
                    t.check(name, tol, d / den, a + b, detail);
                } else {
                    t.vacuous(name);
                }
            }
        }

        // ine4 against every equal-time ordered pair (S₂, S₂′).
        for other in &tb.pairs {
            for (p2, q2) in [(other.p, other.q), (other.q, other.p)] {
                let detail = || format!("{} -> {} & {}", pname(), tb.name(p2), tb.name(q2));
                let Some(k) = ine4_for(&tb, pair, (p2, q2), other.w_inter) else {
                    t.vacuous("ine4");
                    continue;
                };
                t.check("ine4", tol, k.w2, k.bound(), detail);
                for &eps in &t.cfg.eps_levels.clone() {
                    let name = format!("ine4_coefficients@{eps}");
                    let ratio = tb.w[p] / tb.w[q];
                    let premise = k.m12.sqrt() <= eps
                        && k.m12p.sqrt() <= eps
                        && ratio >= 1.0 - eps
                        && ratio <= 1.0 / (1.0 - eps);
                    if premise {
                        let (lo, hi) = ((1.0 - eps).powi(4), (1.0 - eps).powi(-4));
                        let v = [k.a, k.b, k.c].iter().map(|x| (lo - x).max(x - hi)).fold(f64::MIN, f64::max);
                        t.check_violation(&name, tol, v, k.a.max(k.b).max(k.c), detail);
                    } else {
                        t.vacuous(&name);
                    }
                }
            }
        }
    }
    Ok(())
}

fn implications(inst: &DenseInstance, t: &mut Tally) -> Result<()> {
    let tol = t.cfg.tolerance;
    let tb = Tables::build(inst)?;
    let n = tb.len();
    for &eps in &t.cfg.eps_levels.clone() {
        let e3 = m3_bound(eps);
        let small = |x: Option<f64>| x.is_some_and(|v| v <= eps);

        let name1 = format!("impli1@{eps}");
        for p in 0..n {
            for q in (0..n).filter(|&q| q != p) {
                for r in (0..n).filter(|&r| r != p && r != q) {
                    if small(tb.m1(p, q)) && small(tb.m1(q, r)) {
                        let m = tb.m1(p, r).expect("weights checked by the premises");
                        t.check(&name1, tol, m, 4.0 * e3, || {
                            format!("{}, {}, {}", tb.name(p), tb.name(q), tb.name(r))
                        });
                    } else {
                        t.vacuous(&name1);
                    }
                }
            }
        }

        let (name2, name3) = (format!("impli2@{eps}"), format!("impli3@{eps}"));
        let mb = 4.0 * e3;
        for pair in &tb.pairs {
            let (p, q) = (pair.p, pair.q);
            let w_union = inst.norm_sq(&pair.union);
            for s2 in (0..n).filter(|&s| s != p && s != q) {
                if !(small(tb.m1(p, s2)) && small(tb.m1(q, s2))) {
                    t.vacuous(&name2);
                    t.vacuous(&name3);
                    continue;
                }
                let detail = || format!("{} & {} vs {}", tb.name(p), tb.name(q), tb.name(s2));
                let d_int = inst.distance_sq(&pair.inter, &tb.vecs[s2]);
                let d_uni = inst.distance_sq(&pair.union, &tb.vecs[s2]);
                let m_int = d_int / pair.w_inter.max(tb.w[s2]);
                let m_uni = d_uni / w_union.max(tb.w[s2]);
                t.check(&name2, tol, m_int.max(m_uni), 2.0 * e3, detail);
                match tb.overlap(pair) {
                    Some(w) if mb < 1.0 => {
                        let bound = 0.5 * mb / (1.0 - mb.sqrt()).powi(2);
                        t.check(&name3, tol, 1.0 - w, bound, detail);
                    }
                    _ => t.vacuous(&name3),
                }
            }
        }

        let name4 = format!("impli4@{eps}");
        let bound4 = 3.0 * eps * (1.0 - eps).powi(-4);
        for s1 in &tb.pairs {
            for other in &tb.pairs {
                for (p2, q2) in [(other.p, other.q), (other.q, other.p)] {
                    let Some(k) = ine4_for(&tb, s1, (p2, q2), other.w_inter) else {
                        t.vacuous(&name4);
                        continue;
                    };
                    let ratio = tb.w[s1.p] / tb.w[s1.q];
                    let premise = ratio >= 1.0 - eps
                        && ratio <= 1.0 / (1.0 - eps)
                        && k.m12.sqrt() <= eps
                        && k.m12p.sqrt() <= eps
                        && k.w1 <= eps;
                    if premise {
                        t.check(&name4, tol, k.w2, bound4, || {
                            format!("{} & {} -> {} & {}", tb.name(s1.p), tb.name(s1.q), tb.name(p2), tb.name(q2))
                        });
                    } else {
                        t.vacuous(&name4);
                    }
                }
            }
        }
    }
    Ok(())
}

fn reductions(inst: &DenseInstance, t: &mut Tally) -> Result<()> {
    let regions = inst.regions().to_vec();
    for ti in 0..inst.time_count() {
        let time = if ti == 0 { 0.0 } else { inst.times()[ti - 1] };
        let space = FiniteMeasureSpace::born(inst, time)?;
        for (ia, ra) in regions.iter().enumerate() {
            let s1 = inst.cset(ia, ti);
            let detail = || format!("region {ia} at time {ti}");
            match (quantum_absolute(inst, &s1), prob_typicality(ProbKind::Absolute, ra.mask(), None, &space, Variant::N1)) {
                (Ok(q), Ok(p)) => {
                    let d = scaled_gap(q.value, p.value);
                    t.check_violation("reduction_absolute", IDENTITY_TOL, d, q.value, detail);
                }
                _ => t.vacuous("reduction_absolute"),
            }
            for (ib, rb) in regions.iter().enumerate() {
                let s2 = inst.cset(ib, ti);
                let detail = || format!("regions {ia}, {ib} at time {ti}");
                for v in Variant::ALL {
                    let name = format!("reduction_mutual_{v:?}").to_lowercase();
                    let q = quantum_mutual(inst, &s1, &s2, v);
                    let p = prob_typicality(ProbKind::Mutual, ra.mask(), Some(rb.mask()), &space, v);
                    record_pair(t, &name, q.map(|x| x.value), p.map(|x| x.value), detail);
                }
                let q = quantum_relative_equal_time(inst, &s1, &s2).map(|x| x.value);
                let p = prob_typicality(ProbKind::Relative, ra.mask(), Some(rb.mask()), &space, Variant::N1).map(|x| x.value);
                record_pair(t, "reduction_relative", q, p, detail);
                let q = quantum_typicality_measure(inst, &s1, &s2).map(|x| x.value);
                let p = prob_typicality(ProbKind::Measure, ra.mask(), Some(rb.mask()), &space, Variant::N1).map(|x| x.value);
                record_pair(t, "reduction_tau", q, p, detail);
            }
        }
    }
    Ok(())
}

/// `|a − b|`, measured in units of `max(1, |b|)`: one ulp of an `m³` value
/// near `10⁴` already exceeds `10⁻¹²`.
pub fn scaled_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn record_pair(t: &mut Tally, name: &str, q: Result<f64>, p: Result<f64>, detail: impl FnOnce() -> String) {
    match (q, p) {
        (Ok(q), Ok(p)) => {
            t.check_violation(name, IDENTITY_TOL, scaled_gap(q, p), q, detail);
        }
        (Err(Error::Inconsistent { lhs, rhs, .. }), _) => {
            t.check_violation(name, IDENTITY_TOL, scaled_gap(lhs, rhs), lhs, detail);
        }
        _ => t.vacuous(name),
    }
}

fn pathspace_identities(inst: &DenseInstance, t: &mut Tally) -> Result<()> {
    let nr = inst.regions().len();
    let nt = inst.time_count();
    let time = |ti: usize| if ti == 0 { 0.0 } else { inst.times()[ti - 1] };
    let full = Region::new(CellMask::full(inst.dim()), 1.0);
    for ti in 0..nt {
        let space = FiniteMeasureSpace::born(inst, time(ti))?;
        for ri in 0..nr {
            let s = inst.cset(ri, ti);
            let detail = || format!("region {ri} at time {ti}");
            let eb = everett_bell_fdd(inst, std::slice::from_ref(&s))?;
            let born = space.measure(inst.regions()[ri].mask());
            t.check_violation("everett_bell_marginal", IDENTITY_TOL, (eb - born).abs(), eb, detail);
            let mq = mu_q_fdd(inst, std::slice::from_ref(&s))?;
            t.check_violation("mu_q_single_slot", IDENTITY_TOL, (mq - born).abs(), mq, detail);
            for tj in (ti + 1)..nt {
                let with_full = [s.clone(), CSet::at(time(tj), full.clone())?];
                let d = (everett_bell_fdd(inst, &with_full)? - eb).abs();
                t.check_violation("everett_bell_drop_full", IDENTITY_TOL, d, d, detail);
                for rj in 0..nr {
                    for rk in 0..nr {
                        let chain = [s.clone(), inst.cset(rj, tj)];
                        let gap = additivity_gap(inst, &chain, 1, &inst.regions()[rk])?.abs();
                        t.check_violation("mu_q_final_split_gap", IDENTITY_TOL, gap, gap, || {
                            format!("regions {ri}@{ti}, {rj}@{tj}, split by {rk}")
                        });
                    }
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(t.cfg.seed ^ 0x6f63_6375_7061_7469, t.dim, t.index));
    for &eps in &t.cfg.eps_levels.clone() {
        let name = format!("occupation_bound@{eps}");
        let ens = random_occupation_ensemble(&mut rng, 4 * t.dim, 5, eps)?;
        let q = DiagnosticQuery::Occupation { region: Domain::interval(0.5, 1.5), eps, indices: None };
        let Diagnostic::Occupation(r) = ensemble_diagnostics(&ens, &q)? else {
            unreachable!("occupation query returns an occupation report")
        };
        if r.premise {
            let v = ((1.0 - eps) - r.mean).max(r.variance - eps);
            t.check_violation(&name, IDENTITY_TOL, v, 1.0 - r.mean, || format!("occupation ensemble at eps {eps}"));
        } else {
            t.vacuous(&name);
        }
    }
    Ok(())
}

/// Paths at position 1 (inside) or 0 (a miss); at every time the missing
/// paths carry at most `eps` of the weight.
fn random_occupation_ensemble(rng: &mut ChaCha8Rng, n_paths: usize, n_times: usize, eps: f64) -> Result<PathEnsemble> {
    let raw: Vec<f64> = (0..n_paths).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let mut positions = vec![vec![1.0; n_times]; n_paths];
    for k in 0..n_times {
        let budget = eps * rng.random::<f64>();
        let mut used = 0.0;
        let start = rng.random_range(0..n_paths);
        for j in 0..n_paths {
            let i = (start + j) % n_paths;
            if used + weights[i] <= budget {
                used += weights[i];
                positions[i][k] = 0.0;
            }
        }
    }
    PathEnsemble::new((0..n_times).map(|k| k as f64).collect(), positions, weights)
}
