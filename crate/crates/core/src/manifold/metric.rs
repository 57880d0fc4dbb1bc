use serde::{Deserialize, Serialize};

use super::grid::ChartGrid;
use super::spec::{Christoffel, ManifoldSpec, MIN_PROFILE_RADIUS};
use crate::error::{Error, Result};
use crate::linalg::{Sym2, Vec2};

/// Smallest eigenvalue accepted for a sampled metric.
pub const MIN_METRIC_EIGENVALUE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Analytic,
    FiniteDifference,
}

/// Metric tensor, its inverse and Christoffel symbols sampled at every grid node.
#[derive(Debug, Clone)]
pub struct MetricField {
    grid: ChartGrid,
    g: Vec<Sym2>,
    g_inv: Vec<Sym2>,
    christoffel: Vec<Christoffel>,
    provenance: Provenance,
}

/// Sample a built-in manifold on `grid`, with closed-form Christoffel symbols.
pub fn build_manifold(spec: &ManifoldSpec, grid: &ChartGrid) -> Result<MetricField> {
    spec.validate()?;
    check_grid_fits(spec, grid)?;

    if let Some(prof) = spec.profile() {
        let min_r = (0..grid.resolution()[0])
            .map(|i| prof.r(grid.coord(0, i)))
            .fold(f64::INFINITY, f64::min);
        if !(min_r >= MIN_PROFILE_RADIUS) {
            return Err(Error::ProfileTooSmall { min_radius: min_r });
        }
    }

    MetricField::sample_analytic(spec, grid)
}

fn check_grid_fits(spec: &ManifoldSpec, grid: &ChartGrid) -> Result<()> {
    let ext = spec.extents();
    let gext = grid.extents();
    for axis in 0..2 {
        if grid.periodic()[axis] != spec.periodic()[axis] {
            return Err(Error::InvalidGrid(format!("axis {axis} periodicity does not match the {} chart", spec.name())));
        }
        let tol = 1e-12 * (1.0 + ext[axis][1].abs().max(ext[axis][0].abs()));
        if spec.periodic()[axis] {
            if (gext[axis][0] - ext[axis][0]).abs() > tol || (gext[axis][1] - ext[axis][1]).abs() > tol {
                return Err(Error::InvalidGrid(format!("periodic axis {axis} must span the full period")));
            }
        } else if gext[axis][0] < ext[axis][0] - tol || gext[axis][1] > ext[axis][1] + tol {
            return Err(Error::InvalidGrid(format!("axis {axis} extends past the chart")));
        }
    }
    Ok(())
}

impl MetricField {
    /// Metric known only at the nodes; Christoffel symbols from fourth-order
    /// central differences of `g` at grid spacing.
    pub fn from_samples(grid: ChartGrid, g: Vec<Sym2>) -> Result<Self> {
        if g.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!("{} metric samples for {} nodes", g.len(), grid.len())));
        }
        let mut g_inv = Vec::with_capacity(g.len());
        for (node, gi) in g.iter().enumerate() {
            g_inv.push(checked_inverse(node, gi)?);
        }
        let [n0, n1] = grid.resolution();
        let h = grid.spacings();
        let mut christoffel = vec![[[[0.0; 2]; 2]; 2]; grid.len()];
        for i in 0..n0 {
            for j in 0..n1 {
                let node = grid.index(i, j);
                // dg[l] = ∂_l g
                let dg: [Sym2; 2] = [0, 1].map(|axis| {
                    let k = if axis == 0 { i } else { j };
                    let at = |d: isize| -> Option<Sym2> {
                        let kk = grid.offset(axis, k, d)?;
                        Some(if axis == 0 { g[grid.index(kk, j)] } else { g[grid.index(i, kk)] })
                    };
                    fd_first(&at, h[axis])
                });
                christoffel[node] = christoffel_from_derivatives(&g_inv[node], &dg);
            }
        }
        Ok(MetricField { grid, g, g_inv, christoffel, provenance: Provenance::FiniteDifference })
    }

    /// Sample the closed-form metric of `spec` on any grid, including local
    /// patches that do not cover the whole chart.
    pub fn sample_analytic(spec: &ManifoldSpec, grid: &ChartGrid) -> Result<Self> {
        let points: Vec<Vec2> = (0..grid.len()).map(|k| grid.point(k)).collect();
        let g: Vec<Sym2> = points.iter().map(|&p| spec.metric_at(p)).collect();
        let christoffel = points.iter().map(|&p| spec.christoffel_at(p)).collect();
        MetricField::assemble(grid.clone(), g, christoffel, Provenance::Analytic)
    }

    fn assemble(grid: ChartGrid, g: Vec<Sym2>, christoffel: Vec<Christoffel>, provenance: Provenance) -> Result<Self> {
        let mut g_inv = Vec::with_capacity(g.len());
        for (node, gi) in g.iter().enumerate() {
            g_inv.push(checked_inverse(node, gi)?);
        }
        Ok(MetricField { grid, g, g_inv, christoffel, provenance })
    }

    pub fn grid(&self) -> &ChartGrid {
        &self.grid
    }

    pub fn g(&self, node: usize) -> Sym2 {
        self.g[node]
    }

    pub fn g_inv(&self, node: usize) -> Sym2 {
        self.g_inv[node]
    }

    pub fn christoffel(&self, node: usize) -> &Christoffel {
        &self.christoffel[node]
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// Bilinearly interpolated metric at an arbitrary chart point.
    pub fn metric_interp(&self, p: Vec2) -> Option<Sym2> {
        let (cell, [fx, fy]) = self.grid.locate(p)?;
        let [c00, c10, c11, c01] = self.grid.cell_corners(cell);
        let w = [(1.0 - fx) * (1.0 - fy), fx * (1.0 - fy), fx * fy, (1.0 - fx) * fy];
        let mut out = Sym2::ZERO;
        for (wk, c) in w.iter().zip([c00, c10, c11, c01]) {
            out = out.add(&self.g[c].scale(*wk));
        }
        Some(out)
    }

    /// Metric length of the straight chart segment `a → b`, midpoint rule.
    pub fn segment_length(&self, a: Vec2, b: Vec2) -> f64 {
        let d = self.grid.displacement(a, b);
        let mid = self.grid.wrap_point([a[0] + 0.5 * d[0], a[1] + 0.5 * d[1]]);
        let g = self.metric_interp(self.clamp(mid)).expect("clamped point lies in the grid");
        g.quad(d).max(0.0).sqrt()
    }

    fn clamp(&self, p: Vec2) -> Vec2 {
        let ext = self.grid.extents();
        let mut q = p;
        for axis in 0..2 {
            if !self.grid.periodic()[axis] {
                q[axis] = q[axis].clamp(ext[axis][0], ext[axis][1]);
            }
        }
        q
    }

    /// Largest eigenvalue of `g^{-1}` over the grid.
    pub fn max_inverse_eigenvalue(&self) -> f64 {
        self.g_inv.iter().map(|gi| gi.eigenvalues()[1]).fold(0.0, f64::max)
    }

    /// Check every structural invariant; returns the worst `g · g⁻¹ − I` entry.
    pub fn check_invariants(&self) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for node in 0..self.grid.len() {
            let g = self.g[node];
            let ev = g.eigenvalues();
            if !(ev[0] > MIN_METRIC_EIGENVALUE) {
                return Err(Error::NonPositiveDefinite { node, eigenvalues: ev });
            }
            let gi = self.g_inv[node];
            let e0 = g.apply(gi.apply([1.0, 0.0]));
            let e1 = g.apply(gi.apply([0.0, 1.0]));
            worst = worst.max((e0[0] - 1.0).abs()).max(e0[1].abs()).max(e1[0].abs()).max((e1[1] - 1.0).abs());
            for k in 0..2 {
                if self.christoffel[node][k][0][1] != self.christoffel[node][k][1][0] {
                    return Err(Error::InvalidManifold(format!("Christoffel symbols not symmetric at node {node}")));
                }
            }
        }
        Ok(worst)
    }
}

fn checked_inverse(node: usize, g: &Sym2) -> Result<Sym2> {
    let ev = g.eigenvalues();
    if !(ev[0] > MIN_METRIC_EIGENVALUE) || !g.is_finite() {
        return Err(Error::NonPositiveDefinite { node, eigenvalues: ev });
    }
    g.inverse().ok_or(Error::NonPositiveDefinite { node, eigenvalues: ev })
}

/// Fourth-order central first derivative, falling back to second-order
/// central or one-sided stencils near a non-periodic edge.
fn fd_first(at: &dyn Fn(isize) -> Option<Sym2>, h: f64) -> Sym2 {
    let comb = |terms: &[(isize, f64)], denom: f64| -> Option<Sym2> {
        let mut acc = Sym2::ZERO;
        for &(d, c) in terms {
            acc = acc.add(&at(d)?.scale(c));
        }
        Some(acc.scale(1.0 / denom))
    };
    comb(&[(-2, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)], 12.0 * h)
        .or_else(|| comb(&[(-1, -1.0), (1, 1.0)], 2.0 * h))
        .or_else(|| comb(&[(0, -3.0), (1, 4.0), (2, -1.0)], 2.0 * h))
        .or_else(|| comb(&[(0, 3.0), (-1, -4.0), (-2, 1.0)], 2.0 * h))
        .unwrap_or(Sym2::ZERO)
}

/// `Γ^k_ij = ½ g^{kl} (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
pub fn christoffel_from_derivatives(g_inv: &Sym2, dg: &[Sym2; 2]) -> Christoffel {
    let mut gamma = [[[0.0; 2]; 2]; 2];
    for k in 0..2 {
        for i in 0..2 {
            for j in i..2 {
                let mut acc = 0.0;
                for l in 0..2 {
                    acc += g_inv.get(k, l) * (dg[i].get(j, l) + dg[j].get(i, l) - dg[l].get(i, j));
                }
                gamma[k][i][j] = 0.5 * acc;
                gamma[k][j][i] = 0.5 * acc;
            }
        }
    }
    gamma
}

/// Christoffel symbols at an arbitrary point from fourth-order central
/// differences of the analytic metric with step `h_fd`.
pub fn christoffel_fd(spec: &ManifoldSpec, p: Vec2, h_fd: f64) -> Christoffel {
    let dg = [0, 1].map(|axis| {
        let at = |d: f64| {
            let mut q = p;
            q[axis] += d * h_fd;
            spec.metric_at(q)
        };
        at(-2.0)
            .scale(1.0)
            .add(&at(-1.0).scale(-8.0))
            .add(&at(1.0).scale(8.0))
            .add(&at(2.0).scale(-1.0))
            .scale(1.0 / (12.0 * h_fd))
    });
    let g_inv = spec.metric_at(p).inverse().expect("metric invertible");
    christoffel_from_derivatives(&g_inv, &dg)
}
