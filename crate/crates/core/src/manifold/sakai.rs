//! Comparison bounds for the Hessian of the distance to a point under
//! sectional-curvature bounds `δ ≤ K ≤ Δ`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::distance::shooting_distance;
use super::geodesic::exp_map;
use super::grid::ChartGrid;
use super::metric::MetricField;
use super::spec::ManifoldSpec;
use super::stencil::{covariant_hessian, gradient};
use crate::error::{Error, Result};
use crate::linalg::Vec2;

/// Shooting step count shared by every node of a patch.
const SHOOTING_STEPS: usize = 400;

/// `s_κ(t)`: `sin(√κ t)/√κ`, `t`, or `sinh(√|κ| t)/√|κ|`.
pub fn s_kappa(kappa: f64, t: f64) -> f64 {
    if kappa > 0.0 {
        (kappa.sqrt() * t).sin() / kappa.sqrt()
    } else if kappa == 0.0 {
        t
    } else {
        let k = (-kappa).sqrt();
        (k * t).sinh() / k
    }
}

/// `c_κ(t)`: `cos(√κ t)`, `1`, or `cosh(√|κ| t)`.
pub fn c_kappa(kappa: f64, t: f64) -> f64 {
    if kappa > 0.0 {
        (kappa.sqrt() * t).cos()
    } else if kappa == 0.0 {
        1.0
    } else {
        ((-kappa).sqrt() * t).cosh()
    }
}

/// `c_κ(t) / s_κ(t)`, the model-space Hessian of distance on unit vectors ⊥ ∇d.
pub fn model_hessian(kappa: f64, t: f64) -> f64 {
    c_kappa(kappa, t) / s_kappa(kappa, t)
}

#[derive(Debug, Clone, Copy)]
pub struct SakaiOptions {
    /// Patch spacing for the finite-difference Hessian; the pass tolerance is `5·h`.
    pub h: f64,
    pub samples: usize,
    pub seed: u64,
    /// Samples are drawn with `d(x, x0) ∈ [inner_fraction·r, r]`.
    pub inner_fraction: f64,
}

impl Default for SakaiOptions {
    fn default() -> Self {
        SakaiOptions { h: 1e-2, samples: 24, seed: 7, inner_fraction: 0.25 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SakaiSample {
    pub point: Vec2,
    pub distance: f64,
    /// `D²d(v, v)` for a unit `v ⊥ ∇d`.
    pub tangential: f64,
    pub lower: f64,
    pub upper: f64,
    /// `D²d(n, n)` for the unit gradient `n`.
    pub normal: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SakaiReport {
    pub radius: f64,
    pub delta: f64,
    pub big_delta: f64,
    pub tolerance: f64,
    /// Smallest of `D²d(v,v) − lower` and `upper − D²d(v,v)` over samples.
    pub worst_margin: f64,
    pub worst_null: f64,
    pub passed: bool,
    pub samples: Vec<SakaiSample>,
}

/// Distance Hessian at `x` from a 3×3 finite-difference core of shooting
/// distances to `x0`, with spacing `h`. Returns `(d, tangential, normal)`.
pub fn distance_hessian_at(spec: &ManifoldSpec, x0: Vec2, x: Vec2, h: f64) -> Result<(f64, f64, f64)> {
    let n = 9;
    let c = n / 2;
    let extents = [[x[0] - c as f64 * h, x[0] + c as f64 * h], [x[1] - c as f64 * h, x[1] + c as f64 * h]];
    let grid = ChartGrid::new(extents, [n, n], [false, false])?;
    let m = MetricField::sample_analytic(spec, &grid)?;
    // only the stencil core around the centre is evaluated
    let mut values = vec![0.0; grid.len()];
    for i in c - 1..=c + 1 {
        for j in c - 1..=c + 1 {
            values[grid.index(i, j)] = shooting_distance(spec, x0, grid.node_point(i, j), SHOOTING_STEPS)?;
        }
    }
    let centre = grid.index(c, c);
    let grad = gradient(&values, &m, centre);
    let hess = covariant_hessian(&values, &m, centre);
    let g = m.g(centre);
    let norm = grad.norm();
    let nrm = [grad.vector[0] / norm, grad.vector[1] / norm];
    let tan = [-grad.covector[1], grad.covector[0]];
    let tan_len = g.quad(tan).sqrt();
    let tan = [tan[0] / tan_len, tan[1] / tan_len];
    Ok((values[centre], hess.quad(tan), hess.quad(nrm)))
}

pub fn sakai_bounds_check(
    spec: &ManifoldSpec,
    x0: Vec2,
    radius: f64,
    delta: f64,
    big_delta: f64,
    opts: SakaiOptions,
) -> Result<SakaiReport> {
    let mut bound = spec.injectivity_budget(x0);
    if big_delta > 0.0 {
        bound = bound.min(PI / (2.0 * big_delta.sqrt()));
    }
    if !(radius > 0.0 && radius < bound) {
        return Err(Error::RadiusTooLarge { radius, bound });
    }
    let tolerance = 5.0 * opts.h;
    let g0 = spec.metric_at(x0);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut samples = Vec::with_capacity(opts.samples);
    for _ in 0..opts.samples {
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let rho: f64 = rng.gen_range(opts.inner_fraction * radius..radius);
        // g0-orthonormal frame from Gram–Schmidt on the coordinate axes
        let e0 = [1.0 / g0.xx.sqrt(), 0.0];
        let e1 = [-g0.xy / g0.xx, 1.0];
        let e1_len = g0.quad(e1).sqrt();
        let (c, s) = (rho * phi.cos(), rho * phi.sin() / e1_len);
        let v = [c * e0[0] + s * e1[0], s * e1[1]];
        let x = exp_map(spec, x0, v)?;
        let (d, tangential, normal) = distance_hessian_at(spec, x0, x, opts.h)?;
        samples.push(SakaiSample {
            point: x,
            distance: d,
            tangential,
            lower: model_hessian(big_delta, d),
            upper: model_hessian(delta, d),
            normal,
        });
    }
    let worst_margin = samples
        .iter()
        .map(|s| (s.tangential - s.lower).min(s.upper - s.tangential))
        .fold(f64::INFINITY, f64::min);
    let worst_null = samples.iter().map(|s| s.normal.abs()).fold(0.0, f64::max);
    Ok(SakaiReport {
        radius,
        delta,
        big_delta,
        tolerance,
        worst_margin,
        worst_null,
        passed: worst_margin >= -tolerance && worst_null <= tolerance,
        samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_functions() {
        assert!((model_hessian(1.0, 0.7) - 1.0 / 0.7f64.tan()).abs() < 1e-15);
        assert!((model_hessian(0.0, 0.5) - 2.0).abs() < 1e-15);
        let t = 0.4;
        assert!((model_hessian(-1.0, t) - t.cosh() / t.sinh()).abs() < 1e-15);
        // t c(t) / s(t) → 1 as t → 0
        for k in [-2.0, 0.0, 3.0] {
            assert!((1e-6 * model_hessian(k, 1e-6) - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn radius_guard() {
        let spec = ManifoldSpec::sphere(1.0, [-1.4, 1.4]);
        let err = sakai_bounds_check(&spec, [0.0, 0.0], 1.6, 1.0, 1.0, SakaiOptions::default()).unwrap_err();
        assert!(matches!(err, Error::RadiusTooLarge { .. }));
    }

    #[test]
    fn flat_plane_is_tight() {
        let spec = ManifoldSpec::euclidean([[-2.0, 2.0], [-2.0, 2.0]]);
        let opts = SakaiOptions { samples: 6, ..SakaiOptions::default() };
        let rep = sakai_bounds_check(&spec, [0.0, 0.0], 1.0, 0.0, 0.0, opts).unwrap();
        for s in &rep.samples {
            assert!((s.tangential - 1.0 / s.distance).abs() < 5.0 * opts.h);
        }
        assert!(rep.passed, "{rep:?}");
    }
}
