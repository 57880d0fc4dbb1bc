//! Discrete consistency probe: does the pair of snapshots satisfy the
//! equation at the sampled nodes, with the degenerate branch where `|Du|` vanishes?

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::manifold::stencil::{hessian_from_partials, partials};
use crate::manifold::MetricField;
use crate::operators::{tangential_trace_2d, CurvatureOperator};
use crate::solver::LevelSetField;

pub const PROBE_NOTES: &str = "jet from the mean of two consecutive snapshots, time derivative by their difference; \
nodes with |Du| < 10*eps_grad use the degenerate branch |u_t| <= tol with modulus w(r) = r^(3/2); \
non-periodic edge nodes are skipped";

const BINS: [f64; 6] = [0.25, 0.5, 1.0, 2.0, 4.0, f64::INFINITY];

#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub notes: &'static str,
    pub tolerance: f64,
    pub gradient_cutoff: f64,
    pub sampled: usize,
    pub degenerate: usize,
    pub violations: usize,
    pub pass_rate: f64,
    pub worst_residual: f64,
    /// Counts of `residual / tolerance` falling at or below each bin edge.
    pub histogram: Vec<(f64, usize)>,
}

/// Residuals of `u_t + F(Du, D²u)` between two snapshots at the sampled nodes
/// (all interior nodes when `sample` is `None`).
pub fn viscosity_probe(
    prev: &LevelSetField,
    next: &LevelSetField,
    m: &MetricField,
    op: &CurvatureOperator,
    eps_grad: f64,
    tol_cells: f64,
    sample: Option<&[usize]>,
) -> Result<ProbeReport> {
    let grid = m.grid();
    if prev.grid != *grid || next.grid != *grid {
        return Err(Error::DimensionMismatch("probe snapshots live on a different grid".into()));
    }
    let dt = next.time - prev.time;
    if !(dt > 0.0) {
        return Err(Error::InvalidConfig("probe needs two snapshots at increasing times".into()));
    }
    let mean: Vec<f64> = prev.values.iter().zip(&next.values).map(|(a, b)| 0.5 * (a + b)).collect();
    let tolerance = tol_cells * grid.min_spacing();
    let cutoff = 10.0 * eps_grad;
    let all: Vec<usize>;
    let nodes = match sample {
        Some(s) => s,
        None => {
            all = (0..grid.len()).collect();
            &all
        }
    };
    let mut rep = ProbeReport {
        notes: PROBE_NOTES,
        tolerance,
        gradient_cutoff: cutoff,
        sampled: 0,
        degenerate: 0,
        violations: 0,
        pass_rate: 1.0,
        worst_residual: 0.0,
        histogram: BINS.iter().map(|&b| (b, 0)).collect(),
    };
    for &node in nodes {
        let (i, j) = grid.ij(node);
        if grid.is_boundary(i, j) {
            continue;
        }
        let a = (next.values[node] - prev.values[node]) / dt;
        let (du, d2u) = partials(grid, &mean, i, j);
        let g_inv = m.g_inv(node);
        let norm = dot(du, g_inv.apply(du)).max(0.0).sqrt();
        let residual = if norm >= cutoff {
            let hess = hessian_from_partials(du, d2u, m.christoffel(node));
            (a - op.kind.speed_2d(tangential_trace_2d(du, &hess, &g_inv, 0.0))).abs()
        } else {
            rep.degenerate += 1;
            a.abs()
        };
        rep.sampled += 1;
        rep.worst_residual = rep.worst_residual.max(residual);
        if !(residual <= tolerance) {
            rep.violations += 1;
        }
        let ratio = residual / tolerance;
        if let Some(bin) = rep.histogram.iter_mut().find(|(edge, _)| ratio <= *edge) {
            bin.1 += 1;
        }
    }
    if rep.sampled > 0 {
        rep.pass_rate = 1.0 - rep.violations as f64 / rep.sampled as f64;
    }
    Ok(rep)
}
