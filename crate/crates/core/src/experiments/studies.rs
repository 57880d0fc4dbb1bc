use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::run::{run_scenario, RunOptions, ScenarioReport};
use super::{registry, Relabel, Scenario};
use crate::error::{Error, Result};
use crate::levelsets::{chart_hausdorff, extract_contour, mean_curvature_of_distance, Contour};
use crate::linalg::Vec2;
use crate::manifold::{build_manifold, ManifoldSpec, MetricField, Profile};
use crate::operators::CurvatureOperator;
use crate::solver::{evolve, LevelSetField, SolverConfig, Trajectory};

/// Largest `|Δu| / d(x, y)` over grid edges along both axes, with `d` the
/// metric length of the edge.
pub fn lipschitz_constant(u: &[f64], m: &MetricField) -> f64 {
    let grid = m.grid();
    let [n0, n1] = grid.resolution();
    let mut worst: f64 = 0.0;
    for i in 0..n0 {
        for j in 0..n1 {
            let a = grid.index(i, j);
            let pa = grid.point(a);
            for (di, dj) in [(1, 0), (0, 1)] {
                if let Some(b) = grid.neighbor(i, j, di, dj) {
                    let d = m.segment_length(pa, grid.point(b));
                    if d > 0.0 {
                        worst = worst.max((u[b] - u[a]).abs() / d);
                    }
                }
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub scenario: String,
    /// `(t, L(t))`
    pub series: Vec<(f64, f64)>,
    pub initial: f64,
    pub max_ratio: f64,
}

pub fn lipschitz_tracking(sc: &Scenario) -> Result<LipschitzReport> {
    let m = sc.metric()?;
    let u0 = sc.initial_field(&m)?;
    let traj = evolve(&u0, &m, &sc.operator, &sc.solver)?.into_result()?;
    let series: Vec<(f64, f64)> = traj.snapshots.iter().map(|s| (s.time, lipschitz_constant(&s.values, &m))).collect();
    let initial = series[0].1;
    let max_ratio = if initial > 0.0 { series.iter().map(|p| p.1 / initial).fold(0.0, f64::max) } else { 0.0 };
    Ok(LipschitzReport { scenario: sc.name.clone(), series, initial, max_ratio })
}

/// Chart Hausdorff distance with the convention that two empty contours agree
/// and an empty one is infinitely far from a nonempty one.
pub(crate) fn contour_gap(a: &Contour, b: &Contour, m: &MetricField) -> Result<f64> {
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Ok(0.0),
        (false, false) => chart_hausdorff(a, b, m.grid()),
        _ => Ok(f64::INFINITY),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub theta: Relabel,
    pub tolerance: f64,
    /// `(t, Hausdorff distance)`
    pub series: Vec<(f64, f64)>,
    pub worst: f64,
    pub passed: bool,
}

/// Evolve `θ∘u0` and compare its zero sets to those of `base`.
pub(crate) fn invariance_against(
    sc: &Scenario,
    m: &MetricField,
    base: &Trajectory,
    theta: Relabel,
    cells: f64,
) -> Result<InvarianceReport> {
    let relabeled = theta.relabel(&base.snapshots[0]);
    let other = evolve(&relabeled, m, &sc.operator, &sc.solver)?.into_result()?;
    if other.snapshots.len() != base.snapshots.len() {
        return Err(Error::DimensionMismatch(format!(
            "relabeled run has {} snapshots, base run {}",
            other.snapshots.len(),
            base.snapshots.len()
        )));
    }
    let mut series = Vec::with_capacity(base.snapshots.len());
    for (a, b) in base.snapshots.iter().zip(&other.snapshots) {
        let gap = contour_gap(&extract_contour(a, 0.0), &extract_contour(b, 0.0), m)?;
        series.push((a.time, gap));
    }
    let tolerance = cells * m.grid().min_spacing();
    let worst = series.iter().map(|p| p.1).fold(0.0, f64::max);
    Ok(InvarianceReport { theta, tolerance, series, worst, passed: worst <= tolerance })
}

/// Runs of `u0` and `θ∘u0` from the scenario's setup, three cells of tolerance.
pub fn invariance_test(sc: &Scenario, theta: Relabel) -> Result<InvarianceReport> {
    let m = sc.metric()?;
    let u0 = sc.initial_field(&m)?;
    let base = evolve(&u0, &m, &sc.operator, &sc.solver)?.into_result()?;
    invariance_against(sc, &m, &base, theta, 3.0)
}

pub fn hyperboloid_distance_decay() -> ScenarioReport {
    let sc = registry()
        .into_iter()
        .find(|s| s.name == "hyperboloid_distance_decay")
        .expect("built-in scenario");
    run_scenario(&sc, &RunOptions::default())
}

#[derive(Debug, Clone, Serialize)]
pub struct SignReport {
    pub profile: Profile,
    pub s_max: f64,
    /// `(s, H(s)·sign(s))` at the sample points on both sides.
    pub samples: Vec<(f64, f64)>,
    pub mixed_positive_side: bool,
    pub mixed_negative_side: bool,
    /// Largest `|H|` for the cylinder `r ≡ 1`.
    pub control_max: f64,
    /// Smallest `H(s)·sign(s)` on the hyperboloid over the same range.
    pub hyperboloid_min: f64,
    pub passed: bool,
}

fn signed_curvatures(profile: Profile, s_max: f64, samples: usize) -> Result<Vec<(f64, f64)>> {
    let spec = ManifoldSpec::revolution(profile, [-s_max, s_max]);
    let mut out = Vec::with_capacity(2 * samples);
    for k in 1..=samples {
        let s = s_max * k as f64 / samples as f64;
        for s in [-s, s] {
            out.push((s, mean_curvature_of_distance(&spec, s)? * s.signum()));
        }
    }
    Ok(out)
}

fn has_both_signs(values: impl Iterator<Item = f64>) -> bool {
    let (mut pos, mut neg) = (false, false);
    for v in values {
        pos |= v > 1e-12;
        neg |= v < -1e-12;
    }
    pos && neg
}

/// Sign of `H(s)·sign(s)` for the distance from the equator: passes when the
/// profile gives both signs on each side while the cylinder gives zero.
pub fn supersolution_sign_test(profile: Profile, s_max: f64, samples: usize) -> Result<SignReport> {
    if !(s_max > 0.0) || samples == 0 {
        return Err(Error::InvalidConfig(format!("need s_max > 0 and samples > 0, got {s_max}, {samples}")));
    }
    let values = signed_curvatures(profile, s_max, samples)?;
    let mixed_positive_side = has_both_signs(values.iter().filter(|p| p.0 > 0.0).map(|p| p.1));
    let mixed_negative_side = has_both_signs(values.iter().filter(|p| p.0 < 0.0).map(|p| p.1));
    let control_max = signed_curvatures(Profile::Constant(1.0), s_max, samples)?
        .iter()
        .map(|p| p.1.abs())
        .fold(0.0, f64::max);
    let hyperboloid_min = signed_curvatures(Profile::Hyperboloid, s_max, samples)?
        .iter()
        .map(|p| p.1)
        .fold(f64::INFINITY, f64::min);
    Ok(SignReport {
        profile,
        s_max,
        samples: values,
        mixed_positive_side,
        mixed_negative_side,
        control_max,
        hyperboloid_min,
        passed: mixed_positive_side && mixed_negative_side && control_max <= 1e-12,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub manifold: &'static str,
    pub pairs: usize,
    pub gap: f64,
    /// Largest `u_g − u_h` over pairs, snapshots and nodes (≤ 1e-8 passes).
    pub worst_violation: f64,
    pub failing_pairs: usize,
    pub passed: bool,
}

/// Sum of a few random plane waves; frequencies are integers along periodic axes.
fn random_smooth(rng: &mut ChaCha8Rng, spec: &ManifoldSpec, modes: usize, amp: f64) -> impl Fn(Vec2) -> f64 {
    let ext = spec.extents();
    let periodic = spec.periodic();
    let waves: Vec<(f64, [f64; 2], f64)> = (0..modes)
        .map(|_| {
            let mut k = [0.0; 2];
            for a in 0..2 {
                let len = ext[a][1] - ext[a][0];
                let base = 2.0 * std::f64::consts::PI / len;
                k[a] = if periodic[a] {
                    base * rng.gen_range(-3i32..=3) as f64
                } else {
                    base * rng.gen_range(-2.0..2.0)
                };
            }
            (rng.gen_range(-amp..amp), k, rng.gen_range(0.0..std::f64::consts::TAU))
        })
        .collect();
    move |p| waves.iter().map(|(a, k, ph)| a * (k[0] * p[0] + k[1] * p[1] + ph).sin()).sum()
}

/// Random ordered pairs `g ≤ h = g + gap + φ` with `φ ≥ 0` smooth; checks that
/// the evolutions stay ordered at every snapshot.
pub fn comparison_pairs(
    spec: &ManifoldSpec,
    resolution: [usize; 2],
    pairs: usize,
    seed: u64,
    solver: &SolverConfig,
    gap: f64,
) -> Result<ComparisonReport> {
    let m = build_manifold(spec, &spec.grid(resolution)?)?;
    let grid = m.grid();
    let op = CurvatureOperator::mce();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut failing = 0;
    for _ in 0..pairs {
        let g = random_smooth(&mut rng, spec, 4, 0.5);
        let bump = random_smooth(&mut rng, spec, 1, 1.0);
        let scale = rng.gen_range(0.05..0.3);
        let ug = LevelSetField::from_fn(grid, &g);
        let uh = LevelSetField::from_fn(grid, |p| {
            let b = bump(p);
            g(p) + gap + scale * b * b
        });
        let tg = evolve(&ug, &m, &op, solver)?.into_result()?;
        let th = evolve(&uh, &m, &op, solver)?.into_result()?;
        let mut pair_worst = f64::NEG_INFINITY;
        for (a, b) in tg.snapshots.iter().zip(&th.snapshots) {
            for (x, y) in a.values.iter().zip(&b.values) {
                pair_worst = pair_worst.max(x - y);
            }
        }
        if pair_worst > 1e-8 {
            failing += 1;
        }
        worst = worst.max(pair_worst);
    }
    Ok(ComparisonReport {
        manifold: spec.name(),
        pairs,
        gap,
        worst_violation: worst,
        failing_pairs: failing,
        passed: failing == 0,
    })
}
