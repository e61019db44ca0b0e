//! JSON scenario schema. Every field has an explicit default, and the
//! effective config (defaults filled in) is what gets hashed and emitted.

use serde::{Deserialize, Serialize};

use crate::quantum::{make_gaussian_packet, Grid, GridState, GridUniverse, Hamiltonian, Region};
use crate::error::json_location;
use crate::{Error, Result, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub grid: GridSpec,
    #[serde(default)]
    pub hamiltonian: HamiltonianSpec,
    /// Summed, then normalized.
    pub packets: Vec<PacketSpec>,
    pub schedule: Schedule,
    #[serde(default)]
    pub eps: EpsLevels,
    #[serde(default)]
    pub seed: u64,
    pub experiment: Experiment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    /// Cell count, a power of two.
    pub n: usize,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum HamiltonianSpec {
    Free {
        #[serde(default = "one")]
        mass: f64,
    },
    Harmonic {
        #[serde(default = "one")]
        mass: f64,
        omega: f64,
    },
    /// `V(x) = m ω² (|x| − d)² / 2`, two harmonic wells at `±d`.
    DoubleWell {
        #[serde(default = "one")]
        mass: f64,
        omega: f64,
        separation: f64,
    },
}

impl Default for HamiltonianSpec {
    fn default() -> Self {
        HamiltonianSpec::Free { mass: 1.0 }
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PacketSpec {
    pub center: f64,
    #[serde(default)]
    pub momentum: f64,
    pub sigma: f64,
    /// Factor applied to the normalized packet before summing.
    #[serde(default = "one")]
    pub amplitude: f64,
}

/// `samples` uniform times from 0 to `horizon` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    pub horizon: f64,
    pub samples: usize,
}

impl Schedule {
    pub fn times(&self) -> Vec<f64> {
        let last = (self.samples - 1) as f64;
        (0..self.samples).map(|k| self.horizon * k as f64 / last).collect()
    }
}

fn eps_support() -> f64 {
    0.01
}
fn eps_subtree() -> f64 {
    0.02
}
fn eps_branch() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsLevels {
    /// Subtree-support scans and "non-overlapping" verdicts.
    #[serde(default = "eps_support")]
    pub support: f64,
    #[serde(default = "eps_subtree")]
    pub subtree: f64,
    #[serde(default = "eps_branch")]
    pub branch: f64,
    #[serde(default = "eps_subtree")]
    pub asymptotic: f64,
    /// Bound on `m_Ψ` between an initial set and its later image.
    #[serde(default = "eps_subtree")]
    pub mutual: f64,
    #[serde(default = "eps_support")]
    pub irreducible: f64,
}

impl Default for EpsLevels {
    fn default() -> Self {
        EpsLevels {
            support: eps_support(),
            subtree: eps_subtree(),
            branch: eps_branch(),
            asymptotic: eps_subtree(),
            mutual: eps_subtree(),
            irreducible: eps_support(),
        }
    }
}

impl EpsLevels {
    pub fn uniform(eps: f64) -> Self {
        EpsLevels { support: eps, subtree: eps, branch: eps, asymptotic: eps, mutual: eps, irreducible: eps }
    }

    fn all(&self) -> [f64; 6] {
        [self.support, self.subtree, self.branch, self.asymptotic, self.mutual, self.irreducible]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegionSpec {
    Full,
    NegativeAxis,
    PositiveAxis,
    /// Cells with centers in `[a, b)`.
    Interval { a: f64, b: f64 },
}

impl RegionSpec {
    pub fn region(&self, grid: &Grid) -> Region {
        match *self {
            RegionSpec::Full => Region::full(grid),
            RegionSpec::NegativeAxis => Region::negative_axis(grid),
            RegionSpec::PositiveAxis => Region::positive_axis(grid),
            RegionSpec::Interval { a, b } => Region::interval(grid, a, b),
        }
    }
}

fn fractions() -> Vec<f64> {
    vec![0.05, 0.1, 0.25]
}
fn bohm_paths() -> usize {
    64
}
fn bohm_dt() -> f64 {
    0.01
}
fn threshold() -> f64 {
    crate::asymptotics::DEFAULT_CONVERGENCE_THRESHOLD
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Two packets meeting head-on; `s1` is one side at `t = 0`, `target` the
    /// side it ends up on.
    GaussianCrossing {
        s1: RegionSpec,
        target: RegionSpec,
        /// Interval of times where the packets overlap.
        window: [f64; 2],
        /// Times from here on count as "after the crossing".
        after: f64,
        #[serde(default = "bohm_paths")]
        bohm_paths: usize,
        #[serde(default = "bohm_dt")]
        bohm_dt: f64,
    },
    /// Two packets moving apart; `s1` and `partner` are the two supports.
    SeparatingPackets {
        s1: RegionSpec,
        partner: RegionSpec,
        /// Sub-region of `s1` tested for irreducibility on top of the
        /// interval-shrinkage family.
        candidate: RegionSpec,
        #[serde(default = "fractions")]
        fractions: Vec<f64>,
        /// The swapped map follows the partner's subtree from this time on.
        swap_at: f64,
    },
    /// The slit packets sit at `slits[0]` and `slits[1]`; the s-set is the
    /// tightest interval around them (grown in whole cells up to
    /// `max_margin`) that is an asymptotic support.
    TwoSlit {
        slits: [f64; 2],
        max_margin: f64,
        #[serde(default = "fractions")]
        fractions: Vec<f64>,
    },
    /// Constant map on a stationary state.
    DoubleWell { region: RegionSpec },
    /// `‖F^t(Δ_v)ψ − F⁺(Δ_v)ψ‖` for `Δ_v = {v > velocity_threshold}`, and for
    /// the boundary placed on the packet's mean velocity.
    FreeConvergence {
        velocity_threshold: f64,
        #[serde(default = "threshold")]
        threshold: f64,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::GaussianCrossing { .. } => "gaussian_crossing",
            Experiment::SeparatingPackets { .. } => "separating_packets",
            Experiment::TwoSlit { .. } => "two_slit",
            Experiment::DoubleWell { .. } => "double_well",
            Experiment::FreeConvergence { .. } => "free_convergence",
        }
    }
}

fn config_err<T>(msg: String) -> Result<T> {
    Err(Error::Config(msg))
}

impl ScenarioConfig {
    /// Parses and validates; parse errors carry line and column.
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ScenarioConfig = serde_json::from_str(text).map_err(|e| Error::Config(json_location(&e)))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes") + "\n"
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n;
        if n < 2 || !n.is_power_of_two() {
            return config_err(format!("grid.n = {n} must be a power of two >= 2"));
        }
        if !(self.grid.length > 0.0 && self.grid.length.is_finite()) {
            return config_err(format!("grid.length = {} must be positive", self.grid.length));
        }
        if self.name.is_empty() || !self.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return config_err(format!("name {:?} must be nonempty [A-Za-z0-9_-]", self.name));
        }
        if self.packets.is_empty() {
            return config_err("packets must not be empty".into());
        }
        if self.schedule.samples < 2 || !(self.schedule.horizon > 0.0 && self.schedule.horizon.is_finite()) {
            return config_err("schedule needs samples >= 2 and a positive finite horizon".into());
        }
        if let Some(e) = self.eps.all().iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
            return config_err(format!("eps level {e} outside (0, 1)"));
        }
        match &self.experiment {
            Experiment::GaussianCrossing { window, after, bohm_paths, bohm_dt, .. } => {
                let times = self.schedule.times();
                if !(window[0] <= window[1]) || !times.iter().any(|t| *t >= window[0] && *t <= window[1]) {
                    return config_err(format!("crossing window {window:?} holds no scheduled sample"));
                }
                if !times.iter().any(|t| t >= after) {
                    return config_err(format!("no scheduled sample at or after {after}"));
                }
                if *bohm_paths == 0 || !(*bohm_dt > 0.0) {
                    return config_err("bohm_paths must be >= 1 and bohm_dt positive".into());
                }
            }
            Experiment::SeparatingPackets { fractions, .. } | Experiment::TwoSlit { fractions, .. } => {
                if let Some(f) = fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
                    return config_err(format!("shrinkage fraction {f} outside (0, 1)"));
                }
            }
            Experiment::DoubleWell { .. } => {
                if !matches!(self.hamiltonian, HamiltonianSpec::DoubleWell { .. }) {
                    return config_err("double_well experiment needs a double_well hamiltonian".into());
                }
            }
            Experiment::FreeConvergence { threshold, .. } => {
                if !matches!(self.hamiltonian, HamiltonianSpec::Free { .. }) {
                    return config_err("free_convergence needs free dynamics".into());
                }
                if self.packets.len() != 1 {
                    return config_err("free_convergence uses exactly one packet".into());
                }
                if !(*threshold > 0.0) {
                    return config_err("threshold must be positive".into());
                }
            }
        }
        if let Experiment::TwoSlit { .. } | Experiment::SeparatingPackets { .. } | Experiment::GaussianCrossing { .. } =
            &self.experiment
        {
            if !matches!(self.hamiltonian, HamiltonianSpec::Free { .. }) {
                return config_err(format!("{} uses free dynamics", self.experiment.kind()));
            }
        }
        self.universe().map(|_| ())
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::centered(self.grid.n, self.grid.length).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn hamiltonian(&self, grid: &Grid) -> Hamiltonian {
        match self.hamiltonian {
            HamiltonianSpec::Free { mass } => Hamiltonian::Free { mass },
            HamiltonianSpec::Harmonic { mass, omega } => Hamiltonian::Harmonic { mass, omega },
            HamiltonianSpec::DoubleWell { mass, omega, separation } => Hamiltonian::Tabulated {
                mass,
                potential: grid
                    .xs()
                    .map(|x| 0.5 * mass * omega * omega * (x.abs() - separation).powi(2))
                    .collect(),
            },
        }
    }

    pub fn initial_state(&self, grid: &Grid) -> Result<GridState> {
        let mut amps = vec![C64::new(0.0, 0.0); grid.n()];
        for p in &self.packets {
            let packet = make_gaussian_packet(p.center, p.momentum, p.sigma, grid)?;
            for (a, b) in amps.iter_mut().zip(packet.amps()) {
                *a += b * p.amplitude;
            }
        }
        GridState::new(*grid, amps)?.normalized()
    }

    /// Geometry and construction failures surface as config errors.
    pub fn universe(&self) -> Result<GridUniverse> {
        let build = || -> Result<GridUniverse> {
            let grid = self.grid()?;
            let h = self.hamiltonian(&grid);
            GridUniverse::new(self.initial_state(&grid)?, h)
        };
        build().map_err(|e| match e {
            Error::Geometry(m) | Error::Contract(m) | Error::Unsupported(m) => Error::Config(m),
            Error::Degenerate { quantity, value } => Error::Config(format!("{quantity} = {value:e}")),
            other => other,
        })
    }
}
