//! Explicit time integration of `u_t + F(Du, D²u) = 0` on a chart grid.
//!
//! Every step is a pure map from the previous buffer to the next. Nodes on
//! the edges of non-periodic axes keep their initial values (Dirichlet data);
//! periodic axes wrap through the stencils.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{dot, Vec2};
use crate::manifold::grid::ChartGrid;
use crate::manifold::stencil::{hessian_from_partials, partials};
use crate::manifold::MetricField;
use crate::operators::{tangential_trace_2d, CurvatureOperator, OperatorKind};

/// Growth factor over the initial sup-norm that counts as blow-up.
pub const BLOWUP_FACTOR: f64 = 1e6;

/// Node values on a chart grid at a time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSetField {
    pub grid: ChartGrid,
    pub values: Vec<f64>,
    pub time: f64,
}

impl LevelSetField {
    pub fn new(grid: ChartGrid, values: Vec<f64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a grid of {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::BlowUp { node, time, value: values[node] });
        }
        Ok(LevelSetField { grid, values, time })
    }

    pub fn from_fn(grid: &ChartGrid, f: impl Fn(Vec2) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.point(k))).collect();
        LevelSetField { grid: grid.clone(), values, time: 0.0 }
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn at(&self, p: Vec2) -> Option<f64> {
        self.grid.interpolate(&self.values, p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `|ζ|² → |ζ|² + ε²` in the denominator where `|ζ| < ε`.
    #[default]
    Regularized,
    /// No update where `|ζ| < ε`.
    FreezeDegenerate,
}

fn default_cfl() -> f64 {
    0.4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_cfl")]
    pub cfl_safety: f64,
    /// Gradient floor; `h_min²` when absent.
    #[serde(default)]
    pub eps_grad: Option<f64>,
    #[serde(rename = "t_end_seconds")]
    pub t_end: f64,
    /// Snapshot cadence; only `t = 0` and `t_end` when absent.
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    #[serde(default)]
    pub scheme: Scheme,
    /// Replace `u` by the signed distance to its zero set every N steps.
    #[serde(default)]
    pub redistance_every: Option<usize>,
}

impl SolverConfig {
    pub fn new(t_end: f64) -> Self {
        SolverConfig {
            cfl_safety: default_cfl(),
            eps_grad: None,
            t_end,
            snapshot_every: None,
            scheme: Scheme::Regularized,
            redistance_every: None,
        }
    }

    pub fn with_snapshots(mut self, every: f64) -> Self {
        self.snapshot_every = Some(every);
        self
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::InvalidConfig(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if let Some(e) = self.eps_grad {
            if !(e > 0.0) {
                return Err(Error::InvalidConfig(format!("eps_grad must be positive, got {e}")));
            }
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(Error::InvalidConfig(format!("t_end must be a finite time >= 0, got {}", self.t_end)));
        }
        if let Some(s) = self.snapshot_every {
            if !(s > 0.0) {
                return Err(Error::InvalidConfig(format!("snapshot_every must be positive, got {s}")));
            }
        }
        if self.redistance_every == Some(0) {
            return Err(Error::InvalidConfig("redistance_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn eps_for(&self, grid: &ChartGrid) -> f64 {
        self.eps_grad.unwrap_or_else(|| grid.min_spacing().powi(2))
    }
}

/// Stable explicit step `cfl · h_min² / max λ(g⁻¹)`.
///
/// In 2-D the diffusion tensor of every operator is the tangential
/// projection of `g⁻¹` (scaled by the normal eigenvalue 1 for `det₊`), so
/// its spectrum is bounded by that of `g⁻¹` independently of `|ζ|`.
pub fn stable_dt(m: &MetricField, op: &CurvatureOperator, cfg: &SolverConfig) -> f64 {
    let h = m.grid().min_spacing();
    cfg.cfl_safety * h * h / (op.kind.diffusion_factor_2d() * m.max_inverse_eigenvalue())
}

/// `−F(Du, D²u)` at one node.
pub fn node_rate(u: &[f64], m: &MetricField, kind: OperatorKind, eps: f64, scheme: Scheme, node: usize) -> f64 {
    let grid = m.grid();
    let (i, j) = grid.ij(node);
    if grid.is_boundary(i, j) {
        return 0.0;
    }
    let (du, d2u) = partials(grid, u, i, j);
    let hess = hessian_from_partials(du, d2u, m.christoffel(node));
    let g_inv = m.g_inv(node);
    let norm = dot(du, g_inv.apply(du)).max(0.0).sqrt();
    let tangential = if norm < eps {
        match scheme {
            Scheme::FreezeDegenerate => return 0.0,
            Scheme::Regularized => tangential_trace_2d(du, &hess, &g_inv, eps),
        }
    } else {
        tangential_trace_2d(du, &hess, &g_inv, 0.0)
    };
    kind.speed_2d(tangential)
}

/// `−F` at every node.
pub fn rates(u: &[f64], m: &MetricField, op: &CurvatureOperator, cfg: &SolverConfig) -> Vec<f64> {
    let eps = cfg.eps_for(m.grid());
    (0..u.len())
        .into_par_iter()
        .map(|node| node_rate(u, m, op.kind, eps, cfg.scheme, node))
        .collect()
}

fn check_compatible(u: &LevelSetField, m: &MetricField, op: &CurvatureOperator) -> Result<()> {
    if &u.grid != m.grid() {
        return Err(Error::DimensionMismatch("field and metric live on different grids".into()));
    }
    op.kind.validate_2d()
}

fn advance_values(u: &LevelSetField, m: &MetricField, op: &CurvatureOperator, cfg: &SolverConfig, dt: f64) -> Vec<f64> {
    let eps = cfg.eps_for(m.grid());
    let prev = &u.values;
    (0..prev.len())
        .into_par_iter()
        .map(|node| prev[node] + dt * node_rate(prev, m, op.kind, eps, cfg.scheme, node))
        .collect()
}

fn blowup_scan(values: &[f64], limit: f64, time: f64) -> Result<()> {
    match values.iter().position(|v| !v.is_finite() || v.abs() > limit) {
        Some(node) => Err(Error::BlowUp { node, time, value: values[node] }),
        None => Ok(()),
    }
}

fn blowup_limit(initial_max: f64) -> f64 {
    BLOWUP_FACTOR * if initial_max > 0.0 { initial_max } else { 1.0 }
}

/// One forward-Euler step of the stable size.
pub fn step(u: &LevelSetField, m: &MetricField, op: &CurvatureOperator, cfg: &SolverConfig) -> Result<LevelSetField> {
    cfg.validate()?;
    check_compatible(u, m, op)?;
    let dt = stable_dt(m, op, cfg);
    let values = advance_values(u, m, op, cfg, dt);
    let time = u.time + dt;
    blowup_scan(&values, blowup_limit(u.max_abs()), time)?;
    Ok(LevelSetField { grid: u.grid.clone(), values, time })
}

/// State needed to resume an interrupted integration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub field: LevelSetField,
    pub steps: usize,
    pub initial_max: f64,
}

/// Stepper that lands exactly on requested times.
#[derive(Debug, Clone)]
pub struct Integrator<'a> {
    field: LevelSetField,
    metric: &'a MetricField,
    op: CurvatureOperator,
    cfg: SolverConfig,
    dt: f64,
    steps: usize,
    initial_max: f64,
}

impl<'a> Integrator<'a> {
    pub fn new(u0: LevelSetField, metric: &'a MetricField, op: CurvatureOperator, cfg: SolverConfig) -> Result<Self> {
        let initial_max = u0.max_abs();
        Self::resume(Checkpoint { field: u0, steps: 0, initial_max }, metric, op, cfg)
    }

    pub fn resume(cp: Checkpoint, metric: &'a MetricField, op: CurvatureOperator, cfg: SolverConfig) -> Result<Self> {
        cfg.validate()?;
        check_compatible(&cp.field, metric, &op)?;
        let dt = stable_dt(metric, &op, &cfg);
        Ok(Integrator { field: cp.field, metric, op, cfg, dt, steps: cp.steps, initial_max: cp.initial_max })
    }

    pub fn field(&self) -> &LevelSetField {
        &self.field
    }

    pub fn time(&self) -> f64 {
        self.field.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn config(&self) -> &SolverConfig {
        &self.cfg
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint { field: self.field.clone(), steps: self.steps, initial_max: self.initial_max }
    }

    pub fn finished(&self) -> bool {
        self.field.time >= self.cfg.t_end
    }

    /// Next time a snapshot is due (or `t_end`).
    pub fn next_stop(&self) -> f64 {
        let t = self.field.time;
        let mut stop = self.cfg.t_end;
        if let Some(every) = self.cfg.snapshot_every {
            let k = (t / every + 1e-9).floor() + 1.0;
            stop = stop.min(every * k);
        }
        stop
    }

    /// One step, shortened so that it does not pass `target`.
    pub fn step_toward(&mut self, target: f64) -> Result<()> {
        let t = self.field.time;
        if t >= target {
            return Ok(());
        }
        let (dt, t_new) = if t + self.dt >= target - 1e-12 * target.abs().max(1.0) {
            (target - t, target)
        } else {
            (self.dt, t + self.dt)
        };
        let mut values = advance_values(&self.field, self.metric, &self.op, &self.cfg, dt);
        blowup_scan(&values, blowup_limit(self.initial_max), t_new)?;
        self.steps += 1;
        if let Some(n) = self.cfg.redistance_every {
            if self.steps % n == 0 {
                let tmp = LevelSetField { grid: self.field.grid.clone(), values, time: t_new };
                values = crate::levelsets::redistance(&tmp, self.metric)?;
            }
        }
        self.field.values = values;
        self.field.time = t_new;
        Ok(())
    }

    pub fn advance_to(&mut self, target: f64) -> Result<()> {
        while self.field.time < target {
            self.step_toward(target)?;
        }
        Ok(())
    }
}

/// Snapshots of an evolution; `failure` carries the error that stopped it early.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<LevelSetField>,
    pub steps: usize,
    pub dt: f64,
    pub failure: Option<Error>,
}

impl Trajectory {
    pub fn last(&self) -> &LevelSetField {
        self.snapshots.last().expect("trajectory holds at least the initial field")
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.time).collect()
    }

    /// Snapshot closest to `t`.
    pub fn at_time(&self, t: f64) -> &LevelSetField {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("nonempty trajectory")
    }

    pub fn into_result(self) -> Result<Trajectory> {
        match self.failure {
            Some(e) => Err(e),
            None => Ok(self),
        }
    }
}

/// Step until `t_end`, recording `u0`, every snapshot time and `t_end`.
pub fn evolve(u0: &LevelSetField, m: &MetricField, op: &CurvatureOperator, cfg: &SolverConfig) -> Result<Trajectory> {
    let mut it = Integrator::new(u0.clone(), m, *op, cfg.clone())?;
    let mut traj = Trajectory { snapshots: vec![u0.clone()], steps: 0, dt: it.dt(), failure: None };
    while !it.finished() {
        let stop = it.next_stop();
        if let Err(e) = it.advance_to(stop) {
            traj.failure = Some(e);
            break;
        }
        traj.snapshots.push(it.field().clone());
    }
    traj.steps = it.steps();
    Ok(traj)
}

#[derive(Debug, Clone, Serialize)]
pub struct MaxPrincipleReport {
    pub times: Vec<f64>,
    pub maxima: Vec<f64>,
    pub minima: Vec<f64>,
    /// Largest excess over the allowed slack (≤ 0 passes).
    pub worst_excess: f64,
    pub passed: bool,
}

/// `max u` nonincreasing and `min u` nondecreasing up to `1e-8 + 10 h² Δt`.
pub fn max_principle_check(traj: &Trajectory) -> MaxPrincipleReport {
    let times = traj.times();
    let maxima: Vec<f64> = traj.snapshots.iter().map(|s| s.max()).collect();
    let minima: Vec<f64> = traj.snapshots.iter().map(|s| s.min()).collect();
    let h = traj.snapshots.first().map(|s| s.grid.min_spacing()).unwrap_or(0.0);
    let mut worst = f64::NEG_INFINITY;
    for k in 1..times.len() {
        let slack = 1e-8 + 10.0 * h * h * (times[k] - times[k - 1]);
        worst = worst.max(maxima[k] - maxima[k - 1] - slack);
        worst = worst.max(minima[k - 1] - minima[k] - slack);
    }
    if times.len() < 2 {
        worst = 0.0;
    }
    MaxPrincipleReport { times, maxima, minima, worst_excess: worst, passed: worst <= 0.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{build_manifold, ManifoldSpec};

    fn plane(n: usize) -> (ManifoldSpec, MetricField) {
        let spec = ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]]);
        let m = build_manifold(&spec, &spec.grid([n, n]).unwrap()).unwrap();
        (spec, m)
    }

    #[test]
    fn linear_field_is_stationary() {
        let (_, m) = plane(17);
        let u = LevelSetField::from_fn(m.grid(), |p| 0.3 * p[0] - 0.7 * p[1]);
        let next = step(&u, &m, &CurvatureOperator::mce(), &SolverConfig::new(1.0)).unwrap();
        for (a, b) in next.values.iter().zip(&u.values) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_field_is_fixed_for_both_schemes() {
        let spec = ManifoldSpec::hyperboloid([-1.0, 1.0]);
        let m = build_manifold(&spec, &spec.grid([16, 16]).unwrap()).unwrap();
        let u = LevelSetField::from_fn(m.grid(), |_| 2.5);
        for scheme in [Scheme::Regularized, Scheme::FreezeDegenerate] {
            let cfg = SolverConfig::new(0.05).with_scheme(scheme);
            let traj = evolve(&u, &m, &CurvatureOperator::mce(), &cfg).unwrap();
            assert!(traj.last().values.iter().all(|&v| v == 2.5));
        }
    }

    #[test]
    fn zero_end_time_returns_initial_field() {
        let (_, m) = plane(9);
        let u = LevelSetField::from_fn(m.grid(), |p| p[0]);
        let traj = evolve(&u, &m, &CurvatureOperator::mce(), &SolverConfig::new(0.0)).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.steps, 0);
    }

    #[test]
    fn snapshots_land_on_cadence() {
        let (_, m) = plane(17);
        let u = LevelSetField::from_fn(m.grid(), |p| 0.5 - p[0].hypot(p[1]));
        let cfg = SolverConfig::new(0.01).with_snapshots(0.003);
        let traj = evolve(&u, &m, &CurvatureOperator::mce(), &cfg).unwrap();
        let times = traj.times();
        let expect = [0.0, 0.003, 0.006, 0.009, 0.01];
        assert_eq!(times.len(), expect.len());
        for (a, b) in times.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15, "{times:?}");
        }
    }

    #[test]
    fn update_converges_at_second_order() {
        // smooth radial field u = exp(−|x|²) away from its critical point
        let probe = [0.4, 0.3];
        let exact = {
            let r2: f64 = probe[0] * probe[0] + probe[1] * probe[1];
            let r = r2.sqrt();
            // −F = tangential Laplacian = u'(r)/r for a radial field in the plane
            -2.0 * r * (-r2).exp() / r
        };
        let mut errs = Vec::new();
        for n in [21, 41, 81, 161] {
            let (_, m) = plane(n);
            let u = LevelSetField::from_fn(m.grid(), |p| (-(p[0] * p[0] + p[1] * p[1])).exp());
            let g = m.grid();
            let node = (0..g.len())
                .find(|&k| (g.point(k)[0] - probe[0]).abs() < 1e-9 && (g.point(k)[1] - probe[1]).abs() < 1e-9)
                .expect("probe is a node");
            let r = node_rate(&u.values, &m, OperatorKind::Mce, 1e-12, Scheme::Regularized, node);
            errs.push((r - exact).abs());
        }
        for w in errs.windows(2) {
            let order = (w[0] / w[1]).log2();
            assert!(order >= 1.8, "{errs:?}");
        }
    }

    #[test]
    fn integrator_resume_is_bitwise() {
        let (_, m) = plane(33);
        let u = LevelSetField::from_fn(m.grid(), |p| 0.5 - p[0].hypot(p[1]));
        let cfg = SolverConfig::new(0.02).with_snapshots(0.005);
        let op = CurvatureOperator::mce();
        let full = evolve(&u, &m, &op, &cfg).unwrap();
        let mut it = Integrator::new(u.clone(), &m, op, cfg.clone()).unwrap();
        while it.time() < 0.01 {
            let stop = it.next_stop();
            it.advance_to(stop).unwrap();
        }
        let cp = it.checkpoint();
        let mut it2 = Integrator::resume(cp, &m, op, cfg).unwrap();
        while !it2.finished() {
            let stop = it2.next_stop();
            it2.advance_to(stop).unwrap();
        }
        assert_eq!(it2.field().values, full.last().values);
        assert_eq!(it2.steps(), full.steps);
    }

    #[test]
    fn blowup_is_reported() {
        let (_, m) = plane(17);
        let u = LevelSetField::from_fn(m.grid(), |p| 0.5 - p[0].hypot(p[1]));
        // a far too large step drives the explicit scheme unstable
        let cfg = SolverConfig { cfl_safety: 1.0, ..SolverConfig::new(50.0) };
        let op = CurvatureOperator::mce();
        let mut it = Integrator::new(u, &m, op, cfg).unwrap();
        it.dt *= 40.0;
        let err = it.advance_to(50.0).unwrap_err();
        assert!(matches!(err, Error::BlowUp { .. }), "{err:?}");
    }

    #[test]
    fn max_principle_on_shrinking_circle_and_sensitivity() {
        let (_, m) = plane(65);
        let u = LevelSetField::from_fn(m.grid(), |p| 0.5 - p[0].hypot(p[1]));
        let cfg = SolverConfig::new(0.06).with_snapshots(0.02);
        let traj = evolve(&u, &m, &CurvatureOperator::mce(), &cfg).unwrap();
        assert!(max_principle_check(&traj).passed);

        let c = LevelSetField::from_fn(m.grid(), |_| 1.0);
        let traj = evolve(&c, &m, &CurvatureOperator::mce(), &cfg).unwrap();
        let rep = max_principle_check(&traj);
        assert!(rep.passed);
        assert!(rep.maxima.iter().all(|&v| v == 1.0) && rep.minima.iter().all(|&v| v == 1.0));

        let mut drifted = traj.clone();
        for s in drifted.snapshots.iter_mut() {
            let t = s.time;
            for v in &mut s.values {
                *v += t * 0.02;
            }
        }
        assert!(!max_principle_check(&drifted).passed);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig { cfl_safety: 0.0, ..SolverConfig::new(1.0) }.validate().is_err());
        assert!(SolverConfig { eps_grad: Some(-1.0), ..SolverConfig::new(1.0) }.validate().is_err());
        assert!(SolverConfig::new(-1.0).validate().is_err());
        let cfg: SolverConfig = serde_json::from_str(r#"{"t_end_seconds": 0.1, "scheme": "freeze_degenerate"}"#).unwrap();
        assert_eq!(cfg.cfl_safety, 0.4);
        assert_eq!(cfg.scheme, Scheme::FreezeDegenerate);
    }
}
