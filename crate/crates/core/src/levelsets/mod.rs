//! Fronts: contour extraction, signed distance and distances between fronts.
//!
//! Contour vertices are stored as wrapped chart points; consumers measure
//! segments with [`ChartGrid::displacement`] so chains may cross a periodic seam.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Sym2, Vec2};
use crate::manifold::grid::ChartGrid;
use crate::manifold::stencil::gradient;
use crate::manifold::{distance_field, ManifoldSpec, MetricField};
use crate::operators::{eval_f, CurvatureOperator, Jet};
use crate::solver::LevelSetField;

/// A polyline in chart coordinates. Closed chains repeat the first vertex at the end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chain {
    pub closed: bool,
    pub points: Vec<Vec2>,
}

impl Chain {
    /// Metric length of the polyline.
    pub fn length(&self, m: &MetricField) -> f64 {
        let grid = m.grid();
        self.points
            .windows(2)
            .map(|w| {
                let d = grid.displacement(w[0], w[1]);
                m.segment_length(w[0], [w[0][0] + d[0], w[0][1] + d[1]])
            })
            .sum()
    }

    /// Signed chart-space area by the shoelace formula, unwrapping across seams.
    pub fn chart_area(&self, grid: &ChartGrid) -> f64 {
        if !self.closed || self.points.len() < 3 {
            return 0.0;
        }
        let mut pts = vec![self.points[0]];
        for w in self.points.windows(2) {
            let prev = *pts.last().unwrap();
            let d = grid.displacement(w[0], w[1]);
            pts.push([prev[0] + d[0], prev[1] + d[1]]);
        }
        let mut a = 0.0;
        for w in pts.windows(2) {
            a += w[0][0] * w[1][1] - w[1][0] * w[0][1];
        }
        0.5 * a
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contour {
    pub chains: Vec<Chain>,
    pub level: f64,
    pub source_time: f64,
}

impl Contour {
    /// No sign change was found.
    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn vertices(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.chains.iter().flat_map(|c| c.points.iter().copied())
    }

    pub fn vertex_count(&self) -> usize {
        self.chains.iter().map(|c| c.points.len()).sum()
    }

    pub fn length(&self, m: &MetricField) -> f64 {
        self.chains.iter().map(|c| c.length(m)).sum()
    }

    fn require_nonempty(&self) -> Result<()> {
        if self.is_empty() {
            Err(Error::EmptyContour)
        } else {
            Ok(())
        }
    }
}

type EdgeKey = (usize, usize);

fn edge_key(a: usize, b: usize) -> EdgeKey {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn edge_point(grid: &ChartGrid, values: &[f64], level: f64, key: EdgeKey) -> Vec2 {
    let (a, b) = key;
    let (ua, ub) = (values[a], values[b]);
    let t = (level - ua) / (ub - ua);
    let pa = grid.point(a);
    let d = grid.displacement(pa, grid.point(b));
    grid.wrap_point([pa[0] + t * d[0], pa[1] + t * d[1]])
}

fn cell_segments(grid: &ChartGrid, values: &[f64], level: f64, cell: [usize; 2], out: &mut Vec<(EdgeKey, EdgeKey)>) {
    let c = grid.cell_corners(cell);
    let inside = c.map(|n| values[n] > level);
    let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
    let crossing: Vec<usize> = (0..4).filter(|&e| inside[edges[e].0] != inside[edges[e].1]).collect();
    let key = |e: usize| edge_key(c[edges[e].0], c[edges[e].1]);
    match crossing.len() {
        0 => {}
        2 => out.push((key(crossing[0]), key(crossing[1]))),
        4 => {
            let centre = 0.25 * (values[c[0]] + values[c[1]] + values[c[2]] + values[c[3]]);
            if (centre > level) == inside[0] {
                // corners 0 and 2 join through the centre; cut off corners 1 and 3
                out.push((key(0), key(1)));
                out.push((key(2), key(3)));
            } else {
                out.push((key(3), key(0)));
                out.push((key(1), key(2)));
            }
        }
        _ => unreachable!("a cell has an even number of sign changes"),
    }
}

/// Marching squares for `{u = level}`.
pub fn extract_contour(u: &LevelSetField, level: f64) -> Contour {
    let grid = &u.grid;
    let values = &u.values;
    let (rows, cols) = (grid.cells(0), grid.cells(1));
    let segments: Vec<(EdgeKey, EdgeKey)> = (0..rows)
        .into_par_iter()
        .map(|i| {
            let mut row = Vec::new();
            for j in 0..cols {
                cell_segments(grid, values, level, [i, j], &mut row);
            }
            row
        })
        .flatten_iter()
        .collect();

    let mut incident: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segments.iter().enumerate() {
        incident.entry(a).or_default().push(s);
        incident.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut chains = Vec::new();

    let walk = |start_seg: usize, start_key: EdgeKey, used: &mut Vec<bool>| -> (Vec<EdgeKey>, bool) {
        let mut keys = vec![start_key];
        let mut seg = start_seg;
        let mut at = start_key;
        loop {
            used[seg] = true;
            let (a, b) = segments[seg];
            let next = if a == at { b } else { a };
            keys.push(next);
            if next == start_key {
                return (keys, true);
            }
            match incident[&next].iter().copied().find(|&s| !used[s]) {
                Some(s) => {
                    seg = s;
                    at = next;
                }
                None => return (keys, false),
            }
        }
    };

    // open chains start at edges with a single incident segment
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        let (a, b) = segments[s];
        let start = if incident[&a].len() == 1 {
            Some(a)
        } else if incident[&b].len() == 1 {
            Some(b)
        } else {
            None
        };
        if let Some(k) = start {
            let (keys, closed) = walk(s, k, &mut used);
            chains.push((keys, closed));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            let (keys, closed) = walk(s, segments[s].0, &mut used);
            chains.push((keys, closed));
        }
    }

    let chains = chains
        .into_iter()
        .map(|(keys, closed)| Chain { closed, points: keys.iter().map(|&k| edge_point(grid, values, level, k)).collect() })
        .collect();
    Contour { chains, level, source_time: u.time }
}

/// Which side of the front counts as inside (positive distance).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InsideRule {
    /// `{u > level}` is inside.
    #[default]
    Positive,
    /// `{u < level}` is inside.
    Negative,
}

/// Geodesic distance to the zero set of `u`, positive on the inside.
pub fn signed_distance(u: &LevelSetField, m: &MetricField, rule: InsideRule) -> Result<Vec<f64>> {
    let contour = extract_contour(u, 0.0);
    signed_distance_to(&contour, u, m, rule)
}

/// Distance to a given contour, with the sign taken from `u`.
pub fn signed_distance_to(contour: &Contour, u: &LevelSetField, m: &MetricField, rule: InsideRule) -> Result<Vec<f64>> {
    contour.require_nonempty()?;
    let seeds: Vec<Vec2> = contour.vertices().collect();
    let df = distance_field(m, &seeds)?;
    Ok(df
        .values
        .iter()
        .zip(&u.values)
        .map(|(&d, &v)| {
            let inside = match rule {
                InsideRule::Positive => v > contour.level,
                InsideRule::Negative => v < contour.level,
            };
            if v == contour.level {
                0.0
            } else if inside {
                d
            } else {
                -d
            }
        })
        .collect())
}

/// Signed distance to the current zero set; unchanged when there is none.
pub fn redistance(u: &LevelSetField, m: &MetricField) -> Result<Vec<f64>> {
    match signed_distance(u, m, InsideRule::Positive) {
        Ok(d) => Ok(d),
        Err(Error::EmptyContour) => Ok(u.values.clone()),
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EikonalResidual {
    pub median: f64,
    pub p95: f64,
    pub nodes: usize,
}

/// Distribution of `||∇d| − 1|` over interior nodes.
pub fn eikonal_residual(d: &[f64], m: &MetricField) -> EikonalResidual {
    let grid = m.grid();
    let mut r: Vec<f64> = (0..grid.len())
        .filter(|&k| {
            let (i, j) = grid.ij(k);
            !grid.is_boundary(i, j)
        })
        .map(|k| (gradient(d, m, k).norm() - 1.0).abs())
        .collect();
    r.sort_by(f64::total_cmp);
    let pick = |q: f64| r.get(((r.len() as f64 - 1.0) * q).round() as usize).copied().unwrap_or(f64::NAN);
    EikonalResidual { median: pick(0.5), p95: pick(0.95), nodes: r.len() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrontDistanceMode {
    Min,
    Hausdorff,
}

/// Distance between two fronts measured on the vertex-seeded distance graph.
pub fn front_distance(c1: &Contour, c2: &Contour, m: &MetricField, mode: FrontDistanceMode) -> Result<f64> {
    c1.require_nonempty()?;
    c2.require_nonempty()?;
    let directed = |from: &Contour, to: &Contour, reduce: fn(f64, f64) -> f64, init: f64| -> Result<f64> {
        let seeds: Vec<Vec2> = to.vertices().collect();
        let df = distance_field(m, &seeds)?;
        let mut acc = init;
        for p in from.vertices() {
            let d = df.sample(m, p).ok_or_else(|| Error::InvalidGrid(format!("contour vertex {p:?} off the grid")))?;
            acc = reduce(acc, d);
        }
        Ok(acc)
    };
    match mode {
        FrontDistanceMode::Min => directed(c1, c2, f64::min, f64::INFINITY),
        FrontDistanceMode::Hausdorff => {
            let a = directed(c1, c2, f64::max, 0.0)?;
            let b = directed(c2, c1, f64::max, 0.0)?;
            Ok(a.max(b))
        }
    }
}

/// Chart-space Hausdorff distance between two contours (vertex to segment).
pub fn chart_hausdorff(c1: &Contour, c2: &Contour, grid: &ChartGrid) -> Result<f64> {
    c1.require_nonempty()?;
    c2.require_nonempty()?;
    let to_polyline = |p: Vec2, c: &Contour| -> f64 {
        let mut best = f64::INFINITY;
        for ch in &c.chains {
            if ch.points.len() == 1 {
                best = best.min(grid.chart_distance(p, ch.points[0]));
            }
            for w in ch.points.windows(2) {
                let a = grid.displacement(p, w[0]);
                let d = grid.displacement(w[0], w[1]);
                let b = [a[0] + d[0], a[1] + d[1]];
                let len2 = d[0] * d[0] + d[1] * d[1];
                let t = if len2 > 0.0 { (-(a[0] * d[0] + a[1] * d[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
                let q = [a[0] + t * d[0], a[1] + t * d[1]];
                best = best.min(q[0].hypot(q[1])).min(b[0].hypot(b[1]));
            }
        }
        best
    };
    let directed = |a: &Contour, b: &Contour| a.vertices().map(|p| to_polyline(p, b)).fold(0.0, f64::max);
    Ok(directed(c1, c2).max(directed(c2, c1)))
}

/// `−F_MCE` of the jet of the distance `d(s) = ∫₀^s v` from the equator of a
/// surface of revolution, evaluated through the operator pipeline.
pub fn mean_curvature_of_distance(spec: &ManifoldSpec, s: f64) -> Result<f64> {
    let profile = spec
        .profile()
        .ok_or_else(|| Error::InvalidManifold(format!("{} is not a surface of revolution", spec.name())))?;
    let p = [s, 0.0];
    let v = profile.meridian_speed(s);
    let dv = profile.dr(s) * profile.ddr(s) / v;
    let gamma = spec.christoffel_at(p);
    let zeta = [v, 0.0];
    let h_ss = dv - gamma[0][0][0] * v;
    let h_st = -gamma[0][0][1] * v;
    let h_tt = -gamma[0][1][1] * v;
    let jet = Jet::from_2d(p, zeta, Sym2::new(h_ss, h_st, h_tt), spec.metric_at(p));
    Ok(-eval_f(&CurvatureOperator::mce(), &jet)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::{build_manifold, Profile};
    use std::f64::consts::PI;

    fn plane(n: usize) -> MetricField {
        let spec = ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]]);
        build_manifold(&spec, &spec.grid([n, n]).unwrap()).unwrap()
    }

    #[test]
    fn revolution_equator_is_one_closed_chain() {
        let spec = ManifoldSpec::revolution(Profile::OnePlusCos2, [-1.0, 1.0]);
        let grid = spec.grid([20, 32]).unwrap();
        let u = LevelSetField::from_fn(&grid, |p| p[0]);
        let c = extract_contour(&u, 0.0);
        assert_eq!(c.chains.len(), 1);
        let ch = &c.chains[0];
        assert!(ch.closed);
        assert_eq!(ch.points.first(), ch.points.last());
        assert_eq!(ch.points.len(), 33);
        assert!(ch.points.iter().all(|p| p[0].abs() < 1e-15));
    }

    #[test]
    fn circle_interpolation_error() {
        let m = plane(41);
        let grid = m.grid();
        let h = grid.min_spacing();
        let u = LevelSetField::from_fn(grid, |p| p[0] * p[0] + p[1] * p[1] - 0.25);
        let c = extract_contour(&u, 0.0);
        assert_eq!(c.chains.len(), 1);
        assert!(c.chains[0].closed);
        let worst = c.vertices().map(|p| (p[0].hypot(p[1]) - 0.5).abs()).fold(0.0, f64::max);
        assert!(worst <= h * h / 2.0, "{worst}");
        // vertices sit on cell edges with zero interpolated residual
        for p in c.vertices() {
            let r = u.at(p).unwrap();
            assert!(r.abs() <= 1e-12, "{r}");
        }
        let area = c.chains[0].chart_area(grid).abs();
        assert!((area - PI * 0.25).abs() < 0.01);
    }

    #[test]
    fn constant_field_gives_empty_contour() {
        let m = plane(9);
        let u = LevelSetField::from_fn(m.grid(), |_| 1.0);
        let c = extract_contour(&u, 0.0);
        assert!(c.is_empty());
        assert_eq!(signed_distance(&u, &m, InsideRule::Positive).unwrap_err(), Error::EmptyContour);
    }

    #[test]
    fn saddle_uses_cell_average() {
        let grid = ChartGrid::new([[0.0, 1.0], [0.0, 1.0]], [8, 8], [false, false]).unwrap();
        // checkerboard-like cell at (3,3): corners + − + − with positive centre
        let mut u = LevelSetField::from_fn(&grid, |_| -1.0);
        for (i, j, v) in [(3, 3, 1.0), (4, 3, -0.5), (4, 4, 1.0), (3, 4, -0.5)] {
            u.values[grid.index(i, j)] = v;
        }
        let mut segs = Vec::new();
        cell_segments(&grid, &u.values, 0.0, [3, 3], &mut segs);
        let c = grid.cell_corners([3, 3]);
        // centre is inside, so the two negative corners are cut off
        assert_eq!(segs, vec![(edge_key(c[0], c[1]), edge_key(c[1], c[2])), (edge_key(c[2], c[3]), edge_key(c[3], c[0]))]);
    }

    #[test]
    fn extraction_is_thread_count_independent() {
        let m = plane(64);
        let u = LevelSetField::from_fn(m.grid(), |p| (5.0 * p[0]).sin() * (4.0 * p[1]).cos() - 0.1);
        let a = extract_contour(&u, 0.0);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| extract_contour(&u, 0.0));
        assert_eq!(a, b);
    }

    #[test]
    fn signed_distance_to_circle() {
        let m = plane(65);
        let u = LevelSetField::from_fn(m.grid(), |p| 0.25 - p[0] * p[0] - p[1] * p[1]);
        let d = signed_distance(&u, &m, InsideRule::Positive).unwrap();
        let grid = m.grid();
        for k in 0..grid.len() {
            let p = grid.point(k);
            let exact = 0.5 - p[0].hypot(p[1]);
            assert!((d[k] - exact).abs() <= 0.09 * exact.abs() + 2.0 * grid.min_spacing(), "{p:?}: {} vs {exact}", d[k]);
        }
        let r = eikonal_residual(&d, &m);
        assert!(r.median <= 0.12 && r.p95 <= 0.2, "{r:?}");
    }

    #[test]
    fn signed_distance_from_equator() {
        let prof = Profile::OnePlusCos2;
        let spec = ManifoldSpec::revolution(prof, [-1.0, 1.0]);
        let grid = spec.grid([65, 64]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let u = LevelSetField::from_fn(&grid, |p| p[0]);
        let d = signed_distance(&u, &m, InsideRule::Positive).unwrap();
        let h = grid.min_spacing();
        for k in 0..grid.len() {
            let s = grid.point(k)[0];
            let exact = s.signum() * prof.meridian_length(0.0, s.abs());
            assert!((d[k] - exact).abs() <= 2.0 * h, "s={s}");
        }
    }

    #[test]
    fn front_distances() {
        let m = plane(65);
        let inner = extract_contour(&LevelSetField::from_fn(m.grid(), |p| 0.2 - p[0].hypot(p[1])), 0.0);
        let outer = extract_contour(&LevelSetField::from_fn(m.grid(), |p| 0.5 - p[0].hypot(p[1])), 0.0);
        for mode in [FrontDistanceMode::Min, FrontDistanceMode::Hausdorff] {
            assert_eq!(front_distance(&inner, &inner, &m, mode).unwrap(), 0.0);
        }
        let d = front_distance(&inner, &outer, &m, FrontDistanceMode::Min).unwrap();
        assert!((d - 0.3).abs() < 0.3 * 0.09, "{d}");
        let a = front_distance(&inner, &outer, &m, FrontDistanceMode::Hausdorff).unwrap();
        let b = front_distance(&outer, &inner, &m, FrontDistanceMode::Hausdorff).unwrap();
        assert!((a - b).abs() <= 1e-12);
        let ch = chart_hausdorff(&inner, &outer, m.grid()).unwrap();
        assert!((ch - 0.3).abs() < 0.01);
    }

    #[test]
    fn hyperboloid_front_gap() {
        let spec = ManifoldSpec::hyperboloid([-2.0, 2.0]);
        let grid = spec.grid([81, 64]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let eq = extract_contour(&LevelSetField::from_fn(&grid, |p| p[0]), 0.0);
        let s1 = extract_contour(&LevelSetField::from_fn(&grid, |p| p[0] - 1.0), 0.0);
        let d = front_distance(&eq, &s1, &m, FrontDistanceMode::Min).unwrap();
        let exact = Profile::Hyperboloid.meridian_length(0.0, 1.0);
        // independent value from adaptive quadrature
        assert!((exact - 1.099_687_413_739_204).abs() < 1e-10);
        assert!((d - exact).abs() / exact < 0.03, "{d} vs {exact}");
    }

    #[test]
    fn curvature_of_distance() {
        let rev = ManifoldSpec::revolution(Profile::OnePlusCos2, [-1.5, 1.5]);
        assert!(mean_curvature_of_distance(&rev, 0.0).unwrap().abs() < 1e-6);
        let v = mean_curvature_of_distance(&rev, PI / 4.0).unwrap();
        assert!((v + 1.0 / (1.5 * 2f64.sqrt())).abs() < 1e-3, "{v}");
        let hyp = ManifoldSpec::hyperboloid([-2.0, 2.0]);
        let v = mean_curvature_of_distance(&hyp, 1.0).unwrap();
        assert!((v - 1.0 / (2.0 * 1.5f64.sqrt())).abs() < 1e-3, "{v}");
        for prof in [Profile::OnePlusCos2, Profile::Hyperboloid] {
            let spec = ManifoldSpec::revolution(prof, [-1.0, 1.0]);
            for k in 0..=20 {
                let s = -1.0 + 0.1 * k as f64;
                let exact = prof.dr(s) / (prof.r(s) * prof.meridian_speed(s));
                assert!((mean_curvature_of_distance(&spec, s).unwrap() - exact).abs() <= 1e-3);
            }
        }
        assert!(mean_curvature_of_distance(&ManifoldSpec::sphere(1.0, [-1.0, 1.0]), 0.0).is_err());
    }
}
