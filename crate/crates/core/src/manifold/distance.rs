//! Geodesic distance fields.
//!
//! [`distance_field`] runs Dijkstra on the 8-neighbour node graph with
//! metric segment lengths; it is monotone and first-order accurate, with the
//! usual ~8% worst-case metrication overestimate. [`shooting_distance`]
//! inverts the exponential map by Newton iteration and is accurate to the
//! integrator tolerance, which is what second-derivative checks need.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use super::geodesic::Geodesic;
use super::metric::MetricField;
use super::spec::ManifoldSpec;
use crate::error::{Error, Result};
use crate::linalg::{Sym2, Vec2};

const NEIGHBORS: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Node distances to a seed set plus the seeds themselves, so the field can
/// be evaluated at off-grid points.
#[derive(Debug, Clone)]
pub struct DistanceField {
    pub values: Vec<f64>,
    seeds_by_cell: HashMap<[usize; 2], Vec<Vec2>>,
}

impl DistanceField {
    /// Distance at an arbitrary chart point: the best of a straight hop to a
    /// corner of the enclosing cell or to a seed in the same cell.
    pub fn sample(&self, m: &MetricField, p: Vec2) -> Option<f64> {
        let grid = m.grid();
        let p = grid.wrap_point(p);
        let (cell, _) = grid.locate(p)?;
        let mut best = f64::INFINITY;
        for c in grid.cell_corners(cell) {
            best = best.min(self.values[c] + m.segment_length(grid.point(c), p));
        }
        if let Some(seeds) = self.seeds_by_cell.get(&cell) {
            for &s in seeds {
                best = best.min(m.segment_length(s, p));
            }
        }
        Some(best)
    }
}

/// Approximate geodesic distance from every node to the seed set.
pub fn distance_field(m: &MetricField, seeds: &[Vec2]) -> Result<DistanceField> {
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let grid = m.grid();
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut heap = BinaryHeap::new();
    let mut seeds_by_cell: HashMap<[usize; 2], Vec<Vec2>> = HashMap::new();

    for &seed in seeds {
        let seed = grid.wrap_point(seed);
        let (cell, _) = grid.locate(seed).ok_or(Error::InvalidGrid(format!("seed {seed:?} outside the grid")))?;
        seeds_by_cell.entry(cell).or_default().push(seed);
        for c in grid.cell_corners(cell) {
            let d = m.segment_length(seed, grid.point(c));
            if d < dist[c] {
                dist[c] = d;
                heap.push(Entry { dist: d, node: c });
            }
        }
    }

    let weight = |a: usize, b: usize| m.segment_length(grid.point(a), grid.point(b));
    while let Some(Entry { dist: d, node }) = heap.pop() {
        if d > dist[node] {
            continue;
        }
        let (i, j) = grid.ij(node);
        for (di, dj) in NEIGHBORS {
            if let Some(nb) = grid.neighbor(i, j, di, dj) {
                let nd = d + weight(node, nb);
                if nd < dist[nb] {
                    dist[nb] = nd;
                    heap.push(Entry { dist: nd, node: nb });
                }
            }
        }
    }
    Ok(DistanceField { values: dist, seeds_by_cell })
}

/// Riemannian distance from `x0` to `x` by shooting: solve `exp_{x0}(v) = x`
/// with Newton's method on a fixed-step integrator, return `|v|`.
///
/// Valid inside the injectivity budget of `x0`; `steps` fixes the RK4 step
/// count so nearby targets share one smooth discretisation.
pub fn shooting_distance(spec: &ManifoldSpec, x0: Vec2, x: Vec2, steps: usize) -> Result<f64> {
    Ok(shoot(spec, x0, x, steps)?.1)
}

/// Initial velocity `v` with `exp_{x0}(v) = x`, and its length.
pub fn shoot(spec: &ManifoldSpec, x0: Vec2, x: Vec2, steps: usize) -> Result<(Vec2, f64)> {
    let disp = |a: Vec2, b: Vec2| {
        let mut d = [b[0] - a[0], b[1] - a[1]];
        if spec.periodic()[1] {
            d[1] -= 2.0 * std::f64::consts::PI * (d[1] / (2.0 * std::f64::consts::PI)).round();
        }
        d
    };
    let target_disp = disp(x0, x);
    if target_disp == [0.0, 0.0] {
        return Ok(([0.0, 0.0], 0.0));
    }
    let end = |v: Vec2| -> Result<Vec2> {
        let tr = Geodesic::new(x0, v).integrate(spec, steps, &[])?;
        Ok(disp(x0, tr.end))
    };
    let mut v = target_disp;
    let scale = target_disp[0].hypot(target_disp[1]);
    let mut residual = f64::INFINITY;
    for _ in 0..50 {
        let e = end(v)?;
        let r = [e[0] - target_disp[0], e[1] - target_disp[1]];
        residual = r[0].hypot(r[1]);
        if residual <= 1e-14 * (1.0 + scale) {
            break;
        }
        let eps = 1e-7 * (1.0 + scale);
        let mut jac = [[0.0; 2]; 2];
        for c in 0..2 {
            let mut vp = v;
            let mut vm = v;
            vp[c] += eps;
            vm[c] -= eps;
            let (ep, em) = (end(vp)?, end(vm)?);
            jac[0][c] = (ep[0] - em[0]) / (2.0 * eps);
            jac[1][c] = (ep[1] - em[1]) / (2.0 * eps);
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-14 {
            break;
        }
        let dv = [(jac[1][1] * r[0] - jac[0][1] * r[1]) / det, (-jac[1][0] * r[0] + jac[0][0] * r[1]) / det];
        v = [v[0] - dv[0], v[1] - dv[1]];
    }
    if !(residual <= 1e-10 * (1.0 + scale)) {
        return Err(Error::ShootingFailed { target: x, residual });
    }
    let g: Sym2 = spec.metric_at(x0);
    Ok((v, g.quad(v).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::metric::build_manifold;
    use crate::manifold::spec::Profile;

    #[test]
    fn empty_seeds_rejected() {
        let spec = ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]]);
        let m = build_manifold(&spec, &spec.grid([16, 16]).unwrap()).unwrap();
        assert_eq!(distance_field(&m, &[]).unwrap_err(), Error::EmptySeeds);
    }

    #[test]
    fn euclidean_metrication_bound() {
        let spec = ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]]);
        let grid = spec.grid([65, 65]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let df = distance_field(&m, &[[0.0, 0.0]]).unwrap();
        let centre = grid.index(32, 32);
        assert_eq!(df.values[centre], 0.0);
        let mut worst: f64 = 0.0;
        for k in 0..grid.len() {
            let p = grid.point(k);
            let r = p[0].hypot(p[1]);
            if r > 0.0 {
                assert!(df.values[k] >= r - 1e-12);
                worst = worst.max(df.values[k] / r - 1.0);
            }
        }
        assert!(worst <= 0.083, "overestimate {worst}");
        assert!(worst > 0.05, "8-neighbour graph should show metrication ({worst})");
    }

    #[test]
    fn seed_point_samples_to_zero() {
        let spec = ManifoldSpec::hyperboloid([-2.0, 2.0]);
        let grid = spec.grid([33, 32]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let seed = [0.123, 0.456];
        let df = distance_field(&m, &[seed]).unwrap();
        assert_eq!(df.sample(&m, seed).unwrap(), 0.0);
    }

    #[test]
    fn equator_distance_depends_on_s_only() {
        let prof = Profile::OnePlusCos2;
        let spec = ManifoldSpec::revolution(prof, [-1.0, 1.0]);
        let grid = spec.grid([65, 64]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let seeds: Vec<Vec2> = (0..64).map(|j| [0.0, grid.coord(1, j)]).collect();
        let df = distance_field(&m, &seeds).unwrap();
        let h = grid.min_spacing();
        for i in 0..65 {
            let row: Vec<f64> = (0..64).map(|j| df.values[grid.index(i, j)]).collect();
            let (lo, hi) = row.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            assert!(hi - lo <= 2.0 * h);
            let s = grid.coord(0, i);
            let exact = prof.meridian_length(0.0, s.abs());
            assert!((row[0] - exact).abs() < 1e-3, "s={s}: {} vs {exact}", row[0]);
        }
    }

    #[test]
    fn shooting_recovers_flat_distance() {
        let spec = ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]]);
        let d = shooting_distance(&spec, [0.0, 0.0], [0.3, 0.4], 16).unwrap();
        assert!((d - 0.5).abs() < 1e-13);
    }

    #[test]
    fn shooting_on_sphere_matches_great_circle() {
        let spec = ManifoldSpec::sphere(1.0, [-1.4, 1.4]);
        let (x0, x) = ([0.1, 0.2], [0.5, -0.4]);
        let d = shooting_distance(&spec, x0, x, 200).unwrap();
        let emb = |p: Vec2| [p[0].cos() * p[1].cos(), p[0].cos() * p[1].sin(), p[0].sin()];
        let (a, b) = (emb(x0), emb(x));
        let exact = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]).acos();
        assert!((d - exact).abs() < 1e-9, "{d} vs {exact}");
    }
}
