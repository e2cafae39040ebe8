//! Run configuration, read from TOML.
//!
//! Every section except `potential` has defaults, so the smallest valid file
//! for the `gn` task is empty. The schema:
//!
//! ```toml
//! task = "sweep"            # optional, must match the subcommand if given
//! dimension = 1
//! seed = 0                  # random GN test fields only
//!
//! [grid]
//! half_width = 16.0         # box is [-L, L)^d
//! points = 2048             # per axis, even
//!
//! [profile]
//! tol = 1e-14               # relaxation tolerance for Q0
//! ode_tol = 1e-12           # radial shooting tolerance
//! random_fields = 200
//! slack = 1e-10
//!
//! [potential]
//! wells = [{ center = [0.0], p = 4.0, lambda = 1.0 }]
//! envelope = { c = 0.0, s = 2.0 }   # optional c |x|^s
//! tail_exponent = 4.0               # optional override
//! offset = 2.3              # the shift a, or instead:
//! gap = 0.1                 # a = a* - gap, with a* from the grid profile
//!
//! [classify]
//! strict = false
//! expect = "SubcriticalExists"   # optional, turns the report into a verdict
//!
//! [solver]
//! tau = 1.0
//! c_stab = 0.0              # omit to recompute every step
//! tol_energy = 1e-12
//! tol_residual = 1e-7
//! max_iters = 200000
//! energy_floor = -1e3
//! init_center = [0.0]
//! init_width = 1.0
//!
//! [sweep]
//! gaps = [1e-2, 1e-3, 1e-4]  # or largest / smallest / count
//! width_factor = 8.0
//! max_points = 16384
//! warm_start = true
//! ball_constant = 16.0       # omit for 8 / b
//! trial_radius_fraction = 0.4
//! compare_half_width = 32.0
//! compare_points = 2048
//!
//! [trialbound]
//! ells = [1.0, 2.0, 4.0]     # omit for a ladder around the optimal scale
//! radius_fraction = 0.4
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Unknown keys are rejected.

use std::fmt;
use std::path::Path;

use mcnls::blowup::SweepPlan;
use mcnls::minimizer::{Init, SolverConfig};
use mcnls::potential::{Envelope, PotentialSpec, Well};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("config does not parse: {0}")]
    Parse(String),
    #[error("missing field `{field}`: {reason}")]
    Missing { field: &'static str, reason: String },
    #[error("invalid field `{field}`: {reason}")]
    Invalid { field: &'static str, reason: String },
}

const REGIME_NAMES: [&str; 4] = ["SubcriticalExists", "SubcriticalNoMin", "Critical", "Supercritical"];

fn missing(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Missing { field, reason: reason.into() }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { field, reason: reason.into() }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Gn,
    Classify,
    Solve,
    Sweep,
    Trialbound,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Gn => "gn",
            Task::Classify => "classify",
            Task::Solve => "solve",
            Task::Sweep => "sweep",
            Task::Trialbound => "trialbound",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub profile: ProfileSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSection>,
    #[serde(default)]
    pub classify: ClassifySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub trialbound: TrialSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_dimension() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub half_width: f64,
    pub points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        GridSection { half_width: 16.0, points: 2048 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileSection {
    pub tol: f64,
    pub ode_tol: f64,
    pub random_fields: usize,
    pub slack: f64,
}

impl Default for ProfileSection {
    fn default() -> Self {
        ProfileSection { tol: 1e-14, ode_tol: 1e-12, random_fields: 200, slack: 1e-10 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSection {
    #[serde(default)]
    pub wells: Vec<Well>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Envelope>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_exponent: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
}

/// The shift `a`, given directly or relative to the sharp constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Offset {
    Absolute(f64),
    Gap(f64),
}

impl Offset {
    pub fn resolve(self, a_star: f64) -> f64 {
        match self {
            Offset::Absolute(a) => a,
            Offset::Gap(g) => a_star - g,
        }
    }
}

impl PotentialSection {
    /// The potential with offset zero; the caller applies [`Offset`].
    pub fn base_spec(&self) -> PotentialSpec {
        PotentialSpec {
            wells: self.wells.clone(),
            envelope: self.envelope,
            offset: 0.0,
            tail_exponent: self.tail_exponent,
        }
    }

    pub fn offset(&self) -> Result<Option<Offset>, ConfigError> {
        match (self.offset, self.gap) {
            (Some(_), Some(_)) => Err(invalid("potential.gap", "give either potential.offset or potential.gap, not both")),
            (Some(a), None) => Ok(Some(Offset::Absolute(a))),
            (None, Some(g)) => Ok(Some(Offset::Gap(g))),
            (None, None) => Ok(None),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassifySection {
    pub strict: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expect: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverSection {
    pub tau: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_stab: Option<f64>,
    pub tol_energy: f64,
    pub tol_residual: f64,
    pub max_iters: usize,
    pub energy_floor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub init_center: Option<Vec<f64>>,
    pub init_width: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        let d = SolverConfig::default();
        SolverSection {
            tau: d.tau,
            c_stab: d.c_stab,
            tol_energy: d.tol_energy,
            tol_residual: d.tol_residual,
            max_iters: d.max_iters,
            energy_floor: d.energy_floor,
            init_center: None,
            init_width: 1.0,
        }
    }
}

impl SolverSection {
    pub fn to_config(&self, dim: usize) -> Result<SolverConfig, ConfigError> {
        let center = self.init_center.clone().unwrap_or_else(|| vec![0.0; dim]);
        if center.len() != dim {
            return Err(invalid("solver.init_center", format!("expected {dim} coordinates, got {}", center.len())));
        }
        let cfg = SolverConfig {
            tau: self.tau,
            c_stab: self.c_stab,
            tol_energy: self.tol_energy,
            tol_residual: self.tol_residual,
            max_iters: self.max_iters,
            energy_floor: self.energy_floor,
            init: Init::Gaussian { center, width: self.init_width },
        };
        cfg.validate().map_err(|e| invalid("solver", e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gaps: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub largest: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub smallest: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub count: Option<usize>,
    pub width_factor: f64,
    pub max_points: usize,
    pub warm_start: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball_constant: Option<f64>,
    pub trial_radius_fraction: f64,
    pub compare_half_width: f64,
    pub compare_points: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        let p = SweepPlan::default();
        SweepSection {
            gaps: None,
            largest: None,
            smallest: None,
            count: None,
            width_factor: p.width_factor,
            max_points: p.max_points,
            warm_start: p.warm_start,
            ball_constant: p.ball_constant,
            trial_radius_fraction: p.trial_radius_fraction,
            compare_half_width: p.compare_half_width,
            compare_points: p.compare_points,
        }
    }
}

impl SweepSection {
    pub fn to_plan(&self) -> Result<SweepPlan, ConfigError> {
        let geometric = (self.largest, self.smallest, self.count);
        let base = match (&self.gaps, geometric) {
            (Some(_), (None, None, None)) | (None, (None, None, None)) => SweepPlan {
                gaps: self.gaps.clone().unwrap_or_else(|| SweepPlan::default().gaps),
                ..SweepPlan::default()
            },
            (None, (Some(l), Some(s), Some(c))) => {
                SweepPlan::geometric(l, s, c).map_err(|e| invalid("sweep.largest", e.to_string()))?
            }
            (Some(_), _) => return Err(invalid("sweep.gaps", "give either sweep.gaps or largest/smallest/count")),
            (None, _) => return Err(missing("sweep.count", "a geometric sweep needs largest, smallest and count")),
        };
        let plan = SweepPlan {
            width_factor: self.width_factor,
            max_points: self.max_points,
            warm_start: self.warm_start,
            ball_constant: self.ball_constant,
            trial_radius_fraction: self.trial_radius_fraction,
            compare_half_width: self.compare_half_width,
            compare_points: self.compare_points,
            ..base
        };
        plan.validate().map_err(|e| invalid("sweep", e.to_string()))?;
        Ok(plan)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrialSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ells: Option<Vec<f64>>,
    pub radius_fraction: f64,
}

impl Default for TrialSection {
    fn default() -> Self {
        TrialSection { ells: None, radius_fraction: 0.4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: "out".into() }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config is always representable in TOML")
    }

    /// Task-independent checks plus the blocks `task` requires.
    pub fn validate(&self, task: Task) -> Result<(), ConfigError> {
        if let Some(t) = self.task {
            if t != task {
                return Err(invalid("task", format!("config is for `{t}` but the `{task}` subcommand was run")));
            }
        }
        if !(1..=3).contains(&self.dimension) {
            return Err(invalid("dimension", "must be 1, 2 or 3"));
        }
        if !(self.grid.half_width > 0.0 && self.grid.half_width.is_finite()) {
            return Err(invalid("grid.half_width", "must be positive"));
        }
        if self.grid.points < 8 || !self.grid.points.is_multiple_of(2) {
            return Err(invalid("grid.points", "must be even and at least 8"));
        }
        if !(self.profile.tol > 0.0 && self.profile.ode_tol > 0.0) {
            return Err(invalid("profile.tol", "tolerances must be positive"));
        }
        self.solver.to_config(self.dimension)?;
        if !(self.trialbound.radius_fraction > 0.0 && self.trialbound.radius_fraction < 0.5) {
            return Err(invalid("trialbound.radius_fraction", "must lie in (0, 1/2)"));
        }
        if let Some(ells) = &self.trialbound.ells {
            if ells.is_empty() || !ells.iter().all(|&l| l > 0.0 && l.is_finite()) {
                return Err(invalid("trialbound.ells", "must be a nonempty list of positive scales"));
            }
        }
        if let Some(name) = &self.classify.expect {
            if !REGIME_NAMES.contains(&name.as_str()) {
                return Err(invalid("classify.expect", format!("`{name}` is not one of {}", REGIME_NAMES.join(", "))));
            }
        }
        if let Some(pot) = &self.potential {
            pot.base_spec().validate(self.dimension).map_err(|e| invalid("potential", e.to_string()))?;
            pot.offset()?;
        }
        match task {
            Task::Gn => {}
            Task::Classify | Task::Solve => {
                let pot = self.potential.as_ref().ok_or_else(|| missing("potential", format!("the {task} task needs a potential block")))?;
                if pot.offset()?.is_none() {
                    return Err(missing("potential.offset", "give potential.offset or potential.gap"));
                }
            }
            Task::Sweep => {
                let pot = self.potential.as_ref().ok_or_else(|| missing("potential", "the sweep task needs a potential block"))?;
                if pot.wells.is_empty() {
                    return Err(missing("potential.wells", "the sweep task needs at least one well"));
                }
                if pot.offset()?.is_some() {
                    return Err(invalid("potential.offset", "the sweep sets the offset from sweep.gaps"));
                }
                self.sweep.clone().unwrap_or_default().to_plan()?;
            }
            Task::Trialbound => {
                let pot = self.potential.as_ref().ok_or_else(|| missing("potential", "the trialbound task needs a potential block"))?;
                if pot.wells.is_empty() {
                    return Err(missing("potential.wells", "the trialbound task needs at least one well"));
                }
                match pot.offset()? {
                    Some(Offset::Gap(g)) if g > 0.0 => {}
                    Some(Offset::Gap(_)) => return Err(invalid("potential.gap", "must be positive")),
                    Some(Offset::Absolute(_)) => {
                        return Err(invalid("potential.offset", "the trialbound task takes potential.gap"))
                    }
                    None => return Err(missing("potential.gap", "the trialbound task needs a positive gap")),
                }
            }
        }
        Ok(())
    }

    /// Canonical form used for the provenance hash. The output directory
    /// does not change any result and is left out.
    pub fn canonical(&self) -> String {
        let mut c = self.clone();
        c.output = OutputSection::default();
        c.to_toml()
    }
}
