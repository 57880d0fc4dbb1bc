//! Finite-difference derivatives of node data.
//!
//! Interior nodes (and every node along a periodic axis) use centered
//! differences; nodes on a non-periodic edge use second-order one-sided stencils.

use super::grid::ChartGrid;
use super::metric::MetricField;
use crate::linalg::{Sym2, Vec2};

/// A tangent vector at a point in both index positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentData {
    pub point: Vec2,
    /// Contravariant components `v^i`.
    pub vector: Vec2,
    /// Covariant components `ζ_i = g_ij v^j`.
    pub covector: Vec2,
}

impl TangentData {
    pub fn from_vector(point: Vec2, vector: Vec2, g: &Sym2) -> Self {
        TangentData { point, vector, covector: g.apply(vector) }
    }

    pub fn from_covector(point: Vec2, covector: Vec2, g_inv: &Sym2) -> Self {
        TangentData { point, vector: g_inv.apply(covector), covector }
    }

    /// `|v|² = g_ij v^i v^j = v^i ζ_i`.
    pub fn norm_sq(&self) -> f64 {
        (self.vector[0] * self.covector[0] + self.vector[1] * self.covector[1]).max(0.0)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

/// First difference along `axis` at index `k`, given a sampler over offsets.
fn first_diff(grid: &ChartGrid, axis: usize, k: usize, f: &dyn Fn(usize) -> f64) -> f64 {
    let h = grid.spacing(axis);
    let at = |d: isize| grid.offset(axis, k, d).map(f);
    match (at(-1), at(1)) {
        (Some(m), Some(p)) => (p - m) / (2.0 * h),
        (None, Some(p1)) => {
            let p2 = at(2).expect("resolution >= 8");
            (-3.0 * f(k) + 4.0 * p1 - p2) / (2.0 * h)
        }
        (Some(m1), None) => {
            let m2 = at(-2).expect("resolution >= 8");
            (3.0 * f(k) - 4.0 * m1 + m2) / (2.0 * h)
        }
        (None, None) => unreachable!("axis with a single node"),
    }
}

fn second_diff(grid: &ChartGrid, axis: usize, k: usize, f: &dyn Fn(usize) -> f64) -> f64 {
    let h = grid.spacing(axis);
    let at = |d: isize| grid.offset(axis, k, d).map(f);
    match (at(-1), at(1)) {
        (Some(m), Some(p)) => (p - 2.0 * f(k) + m) / (h * h),
        (None, Some(p1)) => {
            let (p2, p3) = (at(2).unwrap(), at(3).unwrap());
            (2.0 * f(k) - 5.0 * p1 + 4.0 * p2 - p3) / (h * h)
        }
        (Some(m1), None) => {
            let (m2, m3) = (at(-2).unwrap(), at(-3).unwrap());
            (2.0 * f(k) - 5.0 * m1 + 4.0 * m2 - m3) / (h * h)
        }
        (None, None) => unreachable!("axis with a single node"),
    }
}

/// Coordinate partials `(∂_i u, ∂_i∂_j u)` at node `(i, j)`.
pub fn partials(grid: &ChartGrid, u: &[f64], i: usize, j: usize) -> (Vec2, Sym2) {
    let du0 = first_diff(grid, 0, i, &|ii| u[grid.index(ii, j)]);
    let du1 = first_diff(grid, 1, j, &|jj| u[grid.index(i, jj)]);
    let d00 = second_diff(grid, 0, i, &|ii| u[grid.index(ii, j)]);
    let d11 = second_diff(grid, 1, j, &|jj| u[grid.index(i, jj)]);
    let d01 = first_diff(grid, 1, j, &|jj| first_diff(grid, 0, i, &|ii| u[grid.index(ii, jj)]));
    ([du0, du1], Sym2::new(d00, d01, d11))
}

/// Gradient at a node: covector from differences, vector by raising with `g^ij`.
pub fn gradient(u: &[f64], m: &MetricField, node: usize) -> TangentData {
    let grid = m.grid();
    let (i, j) = grid.ij(node);
    let du0 = first_diff(grid, 0, i, &|ii| u[grid.index(ii, j)]);
    let du1 = first_diff(grid, 1, j, &|jj| u[grid.index(i, jj)]);
    TangentData::from_covector(grid.point(node), [du0, du1], &m.g_inv(node))
}

/// Covariant Hessian `H_ij = ∂_i∂_j u − Γ^k_ij ∂_k u` at a node.
pub fn covariant_hessian(u: &[f64], m: &MetricField, node: usize) -> Sym2 {
    let grid = m.grid();
    let (i, j) = grid.ij(node);
    let (du, d2u) = partials(grid, u, i, j);
    hessian_from_partials(du, d2u, m.christoffel(node))
}

pub fn hessian_from_partials(du: Vec2, d2u: Sym2, gamma: &super::spec::Christoffel) -> Sym2 {
    let corr = |a: usize, b: usize| gamma[0][a][b] * du[0] + gamma[1][a][b] * du[1];
    Sym2::new(d2u.xx - corr(0, 0), d2u.xy - corr(0, 1), d2u.yy - corr(1, 1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::metric::build_manifold;
    use crate::manifold::spec::{ManifoldSpec, Profile};

    fn sample(grid: &ChartGrid, f: impl Fn(Vec2) -> f64) -> Vec<f64> {
        (0..grid.len()).map(|k| f(grid.point(k))).collect()
    }

    #[test]
    fn linear_field_on_flat_chart() {
        let spec = ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]]);
        let grid = spec.grid([17, 17]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let u = sample(&grid, |p| p[0]);
        for node in [0, grid.index(8, 8), grid.len() - 1] {
            let t = gradient(&u, &m, node);
            assert!((t.covector[0] - 1.0).abs() < 1e-12 && t.covector[1].abs() < 1e-12);
            assert!((t.vector[0] - 1.0).abs() < 1e-12 && t.vector[1].abs() < 1e-12);
        }
    }

    #[test]
    fn revolution_gradient_at_equator() {
        let spec = ManifoldSpec::revolution(Profile::OnePlusCos2, [-1.0, 1.0]);
        let grid = spec.grid([33, 32]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let node = grid.index(16, 0);
        let t = gradient(&sample(&grid, |p| p[0]), &m, node);
        assert!((t.vector[0] - 1.0).abs() < 1e-12 && (t.covector[0] - 1.0).abs() < 1e-12);
        // u = θ is linear in the periodic coordinate away from the seam
        let node = grid.index(16, 10);
        let t = gradient(&sample(&grid, |p| p[1]), &m, node);
        assert!((t.norm_sq() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn quadratic_hessian_is_exact() {
        let spec = ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]]);
        let grid = spec.grid([21, 21]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let u = sample(&grid, |p| 0.5 * (p[0] * p[0] + p[1] * p[1]));
        for node in 0..grid.len() {
            let h = covariant_hessian(&u, &m, node);
            assert!(h.max_abs_diff(&Sym2::IDENTITY) <= 1e-12, "node {node}: {h:?}");
        }
        let u = sample(&grid, |p| 2.0 * p[0] * p[0] - 3.0 * p[0] * p[1] + p[1] * p[1]);
        for node in 0..grid.len() {
            let h = covariant_hessian(&u, &m, node);
            assert!(h.max_abs_diff(&Sym2::new(4.0, -3.0, 2.0)) <= 1e-11, "node {node}: {h:?}");
        }
    }

    #[test]
    fn constant_field_has_zero_hessian() {
        let spec = ManifoldSpec::hyperboloid([-1.0, 1.0]);
        let grid = spec.grid([16, 16]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let u = vec![3.25; grid.len()];
        for node in 0..grid.len() {
            assert_eq!(covariant_hessian(&u, &m, node), Sym2::ZERO);
        }
    }

    #[test]
    fn coordinate_hessian_is_minus_christoffel() {
        let spec = ManifoldSpec::revolution(Profile::OnePlusCos2, [-1.0, 1.0]);
        let grid = spec.grid([41, 32]).unwrap();
        let m = build_manifold(&spec, &grid).unwrap();
        let u = sample(&grid, |p| p[0]);
        let prof = Profile::OnePlusCos2;
        for i in [0, 7, 20, 33, 40] {
            let node = grid.index(i, 4);
            let s = grid.coord(0, i);
            let h = covariant_hessian(&u, &m, node);
            let (dr, ddr) = (prof.dr(s), prof.ddr(s));
            let expect_ss = -dr * ddr / (dr * dr + 1.0);
            assert!((h.xx - expect_ss).abs() < 1e-11, "s={s}");
            assert!((h.yy + m.christoffel(node)[0][1][1]).abs() < 1e-11);
            assert!(h.xy.abs() < 1e-11);
        }
    }

    #[test]
    fn raise_lower_roundtrip() {
        let g = Sym2::new(1.7, -0.2, 0.6);
        let gi = g.inverse().unwrap();
        let t = TangentData::from_vector([0.0, 0.0], [0.3, -1.1], &g);
        let back = TangentData::from_covector(t.point, t.covector, &gi);
        assert!((back.vector[0] - 0.3).abs() < 1e-12 && (back.vector[1] + 1.1).abs() < 1e-12);
        assert!(t.norm() > 0.0);
        assert_eq!(TangentData::from_vector([0.0, 0.0], [0.0, 0.0], &g).norm(), 0.0);
    }
}
