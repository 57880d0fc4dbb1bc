//! Named scenarios: initial fronts, evolution, checks and artifacts.

mod checks;
mod probe;
mod registry;
mod run;
mod studies;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::levelsets::{signed_distance, InsideRule};
use crate::linalg::Vec2;
use crate::manifold::{build_manifold, ManifoldSpec, MetricField};
use crate::operators::CurvatureOperator;
use crate::solver::{LevelSetField, SolverConfig};

pub use probe::{viscosity_probe, ProbeReport, PROBE_NOTES};
pub use registry::{registry, scenario, scenario_names};
pub use run::{run_scenario, CheckResult, RunOptions, ScenarioReport, CHECKPOINT_FILE, REPORT_FORMAT, REPORT_VERSION};
pub use studies::{
    comparison_pairs, hyperboloid_distance_decay, invariance_test, lipschitz_constant, lipschitz_tracking,
    supersolution_sign_test, ComparisonReport, InvarianceReport, LipschitzReport, SignReport,
};

/// Initial level-set functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialField {
    /// `radius − |x − center|` in chart coordinates (negated when `inside_negative`).
    Circle {
        center: Vec2,
        radius: f64,
        #[serde(default)]
        inside_negative: bool,
    },
    /// `scale · (x_axis − offset)`.
    Coordinate {
        axis: usize,
        #[serde(default)]
        offset: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// `min(x_axis − lo, hi − x_axis)`: positive between two parallel fronts.
    Band { axis: usize, lo: f64, hi: f64 },
    /// Geodesic signed distance to the zero set of another field.
    DistanceTo { front: Box<InitialField> },
}

fn one() -> f64 {
    1.0
}

impl InitialField {
    pub fn sample(&self, m: &MetricField) -> Result<LevelSetField> {
        let grid = m.grid();
        Ok(match self {
            InitialField::Circle { center, radius, inside_negative } => {
                let sign = if *inside_negative { -1.0 } else { 1.0 };
                LevelSetField::from_fn(grid, |p| {
                    let d = grid.displacement(*center, p);
                    sign * (radius - d[0].hypot(d[1]))
                })
            }
            InitialField::Coordinate { axis, offset, scale } => {
                check_axis(*axis)?;
                LevelSetField::from_fn(grid, |p| scale * (p[*axis] - offset))
            }
            InitialField::Band { axis, lo, hi } => {
                check_axis(*axis)?;
                if !(lo < hi) {
                    return Err(Error::InvalidConfig(format!("band needs lo < hi, got [{lo}, {hi}]")));
                }
                LevelSetField::from_fn(grid, |p| (p[*axis] - lo).min(hi - p[*axis]))
            }
            InitialField::DistanceTo { front } => {
                let base = front.sample(m)?;
                let values = signed_distance(&base, m, InsideRule::Positive)?;
                LevelSetField { grid: grid.clone(), values, time: 0.0 }
            }
        })
    }
}

fn check_axis(axis: usize) -> Result<()> {
    if axis > 1 {
        return Err(Error::InvalidConfig(format!("axis must be 0 or 1, got {axis}")));
    }
    Ok(())
}

/// Strictly increasing relabelings `θ` with `θ(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relabel {
    Identity,
    /// `r³`
    Cube,
    Tanh,
    /// `2r + r³`
    LinearCubic,
}

impl Relabel {
    pub const ALL: [Relabel; 3] = [Relabel::Cube, Relabel::Tanh, Relabel::LinearCubic];

    pub fn apply(&self, r: f64) -> f64 {
        match self {
            Relabel::Identity => r,
            Relabel::Cube => r * r * r,
            Relabel::Tanh => r.tanh(),
            Relabel::LinearCubic => 2.0 * r + r * r * r,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Relabel::Identity => "identity",
            Relabel::Cube => "cube",
            Relabel::Tanh => "tanh",
            Relabel::LinearCubic => "linear_cubic",
        }
    }

    pub fn relabel(&self, u: &LevelSetField) -> LevelSetField {
        LevelSetField { grid: u.grid.clone(), values: u.values.iter().map(|&v| self.apply(v)).collect(), time: u.time }
    }
}

/// Named assertions evaluated on a scenario's trajectory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum Check {
    /// Time at which the zero set disappears, against `expected`.
    ExtinctionTime { expected: f64, rel_tol: f64 },
    /// Area-equivalent radius of the zero set against `sqrt(r0² − 2t)` for `t ≤ t_max`.
    RadiusTrajectory { r0: f64, t_max: f64, rel_tol: f64 },
    /// Every zero-set vertex stays within `cells · h` of `{x_axis = value}`.
    FrontStationary { axis: usize, value: f64, cells: f64 },
    /// MIN distance to a companion front evolved alongside: initial value
    /// against `initial`, then strictly decreasing with a total drop of at least `min_drop`.
    DistanceDecay { companion: InitialField, initial: f64, rel_tol: f64, min_drop: f64 },
    /// Discrete Lipschitz constant; bounded by `factor · L(0)` up to `until` when `factor` is set.
    Lipschitz {
        #[serde(default)]
        factor: Option<f64>,
        #[serde(default)]
        until: Option<f64>,
    },
    MaxPrinciple,
    /// Zero sets of the runs from `u0` and `θ∘u0` within `cells · h` at every snapshot.
    Invariance { theta: Relabel, cells: f64 },
    /// Consistency of consecutive snapshots with the equation; `tol_cells · h` residual tolerance.
    ViscosityProbe { tol_cells: f64, min_pass_rate: f64 },
    /// Sign pattern of `r′/(rv)·sign(s)` on `(0, s_max]`.
    SupersolutionSign { s_max: f64, samples: usize },
}

impl Check {
    pub fn name(&self) -> String {
        match self {
            Check::ExtinctionTime { .. } => "extinction_time".into(),
            Check::RadiusTrajectory { .. } => "radius_trajectory".into(),
            Check::FrontStationary { .. } => "front_stationary".into(),
            Check::DistanceDecay { .. } => "distance_decay".into(),
            Check::Lipschitz { .. } => "lipschitz".into(),
            Check::MaxPrinciple => "max_principle".into(),
            Check::Invariance { theta, .. } => format!("invariance_{}", theta.name()),
            Check::ViscosityProbe { .. } => "viscosity_probe".into(),
            Check::SupersolutionSign { .. } => "supersolution_sign".into(),
        }
    }
}

fn default_resolution() -> [usize; 2] {
    [128, 128]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub manifold: ManifoldSpec,
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 2],
    pub initial: InitialField,
    #[serde(default)]
    pub relabel: Option<Relabel>,
    pub operator: CurvatureOperator,
    pub solver: SolverConfig,
    #[serde(default)]
    pub checks: Vec<Check>,
}

impl Scenario {
    /// Parameter checks that need no compute beyond sampling the metric.
    pub fn validate(&self) -> Result<()> {
        self.manifold.validate()?;
        self.manifold.grid(self.resolution)?;
        self.operator.kind.validate_2d()?;
        self.solver.validate()?;
        Ok(())
    }

    pub fn metric(&self) -> Result<MetricField> {
        build_manifold(&self.manifold, &self.manifold.grid(self.resolution)?)
    }

    pub fn initial_field(&self, m: &MetricField) -> Result<LevelSetField> {
        let u = self.initial.sample(m)?;
        Ok(match self.relabel {
            Some(theta) => theta.relabel(&u),
            None => u,
        })
    }

    pub fn with_resolution(mut self, resolution: [usize; 2]) -> Self {
        self.resolution = resolution;
        self
    }
}
