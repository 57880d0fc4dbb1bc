use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use serde::Serialize;

use super::checks::evaluate;
use super::Scenario;
use crate::error::{Error, Result};
use crate::io;
use crate::levelsets::{extract_contour, Contour};
use crate::manifold::MetricField;
use crate::solver::{Checkpoint, Integrator, LevelSetField, Trajectory};

pub const REPORT_FORMAT: &str = "riemflow-report";
pub const REPORT_VERSION: u32 = 1;

pub const CHECKPOINT_FILE: &str = "checkpoint.rfld";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Where artifacts go; nothing is written when absent.
    pub output_dir: Option<PathBuf>,
    /// Write a checkpoint every N steps (0 disables).
    pub checkpoint_every: usize,
    pub resume: Option<Checkpoint>,
    /// Checked between steps; when set the run flushes a checkpoint and stops.
    pub interrupt: Option<Arc<AtomicBool>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// The check only emits data and cannot fail.
    pub recorded_only: bool,
    pub message: String,
    pub metrics: serde_json::Value,
}

impl CheckResult {
    pub(crate) fn new(name: String, passed: bool, message: String, metrics: serde_json::Value) -> Self {
        CheckResult { name, passed, recorded_only: false, message, metrics }
    }

    pub(crate) fn failed(name: String, e: &Error) -> Self {
        CheckResult { name, passed: false, recorded_only: false, message: e.to_string(), metrics: serde_json::Value::Null }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioReport {
    pub format: &'static str,
    pub version: u32,
    pub scenario: String,
    pub passed: bool,
    pub error: Option<String>,
    pub interrupted: bool,
    pub steps: usize,
    pub dt: f64,
    pub final_time: f64,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
}

impl ScenarioReport {
    fn new(name: &str) -> Self {
        ScenarioReport {
            format: REPORT_FORMAT,
            version: REPORT_VERSION,
            scenario: name.to_string(),
            passed: false,
            error: None,
            interrupted: false,
            steps: 0,
            dt: 0.0,
            final_time: 0.0,
            checks: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Everything a check may look at.
pub(crate) struct RunContext<'a> {
    pub sc: &'a Scenario,
    pub m: &'a MetricField,
    pub traj: &'a Trajectory,
    pub contours: &'a [Contour],
    pub out: Option<&'a Path>,
    pub artifacts: Vec<String>,
}

impl RunContext<'_> {
    pub fn write_series(&mut self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
        if let Some(out) = self.out {
            let rel = format!("series/{name}.csv");
            io::write_series(&out.join(&rel), header, rows)?;
            self.artifacts.push(rel);
        }
        Ok(())
    }
}

struct Recorder<'a> {
    out: Option<&'a Path>,
    snapshots: Vec<LevelSetField>,
    artifacts: Vec<String>,
    steps: usize,
    dt: f64,
}

impl Recorder<'_> {
    fn record(&mut self, field: &LevelSetField) -> Result<()> {
        let k = self.snapshots.len();
        if let Some(out) = self.out {
            let f = format!("fields/snap_{k:05}.rfld");
            io::write_snapshot(field, &out.join(&f))?;
            let c = extract_contour(field, 0.0);
            let csv = format!("contours/contour_{k:05}.csv");
            let json = format!("contours/contour_{k:05}.json");
            io::write_contour(&c, &out.join(&csv), &out.join(&json))?;
            self.artifacts.extend([f, csv, json]);
        }
        self.snapshots.push(field.clone());
        Ok(())
    }
}

/// Snapshots written by an earlier run up to the checkpoint time.
fn load_previous(out: &Path, until: f64) -> Result<Vec<LevelSetField>> {
    let dir = out.join("fields");
    let mut names: Vec<PathBuf> = fs::read_dir(&dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "rfld"))
        .collect();
    names.sort();
    let mut fields = Vec::new();
    for p in names {
        let f = io::read_snapshot(&p)?;
        if f.time <= until {
            fields.push(f);
        }
    }
    Ok(fields)
}

fn evolve_primary(
    sc: &Scenario,
    m: &MetricField,
    u0: LevelSetField,
    opts: &RunOptions,
    rec: &mut Recorder,
) -> Result<(usize, f64)> {
    let mut it = match &opts.resume {
        Some(cp) => {
            if let Some(out) = rec.out {
                for f in load_previous(out, cp.field.time)? {
                    rec.snapshots.push(f);
                }
            }
            if rec.snapshots.is_empty() {
                rec.snapshots.push(cp.field.clone());
            }
            Integrator::resume(cp.clone(), m, sc.operator, sc.solver.clone())?
        }
        None => {
            rec.record(&u0)?;
            Integrator::new(u0, m, sc.operator, sc.solver.clone())?
        }
    };
    let checkpoint_path = rec.out.map(|o| o.join(CHECKPOINT_FILE));
    while !it.finished() {
        let stop = it.next_stop();
        while it.time() < stop {
            it.step_toward(stop)?;
            rec.steps = it.steps();
            rec.dt = it.dt();
            if it.time() == stop {
                rec.record(it.field())?;
            }
            if opts.checkpoint_every > 0 && it.steps() % opts.checkpoint_every == 0 {
                if let Some(p) = &checkpoint_path {
                    io::write_checkpoint(&it.checkpoint(), p)?;
                }
            }
            if opts.interrupt.as_ref().is_some_and(|f| f.load(Ordering::SeqCst)) {
                if let Some(p) = &checkpoint_path {
                    io::write_checkpoint(&it.checkpoint(), p)?;
                }
                return Err(Error::Interrupted { time: it.time() });
            }
        }
    }
    Ok((it.steps(), it.dt()))
}

/// Evolve the scenario, evaluate its checks and write artifacts.
///
/// Errors end up in the report; this never panics on bad input.
pub fn run_scenario(sc: &Scenario, opts: &RunOptions) -> ScenarioReport {
    let mut report = ScenarioReport::new(&sc.name);
    let out = opts.output_dir.as_deref();
    let result = (|| -> Result<()> {
        sc.validate()?;
        let m = sc.metric()?;
        let u0 = sc.initial_field(&m)?;
        let mut rec = Recorder { out, snapshots: Vec::new(), artifacts: Vec::new(), steps: 0, dt: 0.0 };
        let evolved = evolve_primary(sc, &m, u0, opts, &mut rec);
        report.artifacts.append(&mut rec.artifacts);
        let (steps, dt) = match evolved {
            Ok(v) => v,
            Err(e) => {
                report.interrupted = matches!(e, Error::Interrupted { .. });
                report.steps = rec.steps;
                report.dt = rec.dt;
                report.final_time = match e {
                    Error::Interrupted { time } => time,
                    _ => rec.snapshots.last().map(|s| s.time).unwrap_or(0.0),
                };
                return Err(e);
            }
        };
        report.steps = steps;
        report.dt = dt;
        let traj = Trajectory { snapshots: rec.snapshots, steps, dt, failure: None };
        report.final_time = traj.last().time;
        let contours: Vec<Contour> = traj.snapshots.iter().map(|s| extract_contour(s, 0.0)).collect();
        let mut ctx = RunContext { sc, m: &m, traj: &traj, contours: &contours, out, artifacts: Vec::new() };
        for check in &sc.checks {
            let r = evaluate(check, &mut ctx);
            report.checks.push(r);
        }
        report.artifacts.append(&mut ctx.artifacts);
        Ok(())
    })();
    if let Err(e) = result {
        report.error = Some(e.to_string());
    }
    report.passed = report.error.is_none() && report.checks.iter().all(|c| c.passed);
    if let Some(out) = out {
        match io::write_json(&out.join("report.json"), &report) {
            Ok(()) => report.artifacts.push("report.json".into()),
            Err(e) => {
                report.passed = false;
                report.error.get_or_insert(e.to_string());
            }
        }
    }
    report
}
