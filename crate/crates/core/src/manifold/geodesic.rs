//! Geodesics, the exponential map and parallel transport by fixed-step RK4.

use super::spec::{Christoffel, ManifoldSpec};
use super::stencil::TangentData;
use crate::error::{Error, Result};
use crate::linalg::Vec2;

/// Default arc length per RK4 step when no grid scale is available.
pub const DEFAULT_ARC_STEP: f64 = 1e-2;

/// Relative arc-length tolerance for [`exp_map`].
pub const ARC_LENGTH_TOL: f64 = 1e-6;

const MAX_REFINEMENTS: usize = 12;

/// `−Γ^k_ij a^i b^j`
fn contract(gamma: &Christoffel, a: Vec2, b: Vec2) -> Vec2 {
    let mut out = [0.0; 2];
    for (k, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                acc += gamma[k][i][j] * a[i] * b[j];
            }
        }
        *o = -acc;
    }
    out
}

/// Geodesic state plus any number of vectors transported along it.
#[derive(Debug, Clone)]
struct FlowState {
    x: Vec2,
    v: Vec2,
    w: Vec<Vec2>,
}

impl FlowState {
    fn deriv(&self, spec: &ManifoldSpec) -> FlowState {
        let gamma = spec.christoffel_at(self.x);
        FlowState {
            x: self.v,
            v: contract(&gamma, self.v, self.v),
            w: self.w.iter().map(|&w| contract(&gamma, self.v, w)).collect(),
        }
    }

    fn axpy(&self, h: f64, d: &FlowState) -> FlowState {
        let add = |a: Vec2, b: Vec2| [a[0] + h * b[0], a[1] + h * b[1]];
        FlowState {
            x: add(self.x, d.x),
            v: add(self.v, d.v),
            w: self.w.iter().zip(&d.w).map(|(&a, &b)| add(a, b)).collect(),
        }
    }

    fn rk4(&self, spec: &ManifoldSpec, dt: f64) -> FlowState {
        let k1 = self.deriv(spec);
        let k2 = self.axpy(0.5 * dt, &k1).deriv(spec);
        let k3 = self.axpy(0.5 * dt, &k2).deriv(spec);
        let k4 = self.axpy(dt, &k3).deriv(spec);
        let comb = |a: Vec2, b: Vec2, c: Vec2, d: Vec2| {
            [(a[0] + 2.0 * b[0] + 2.0 * c[0] + d[0]) * dt / 6.0, (a[1] + 2.0 * b[1] + 2.0 * c[1] + d[1]) * dt / 6.0]
        };
        let dx = comb(k1.x, k2.x, k3.x, k4.x);
        let dv = comb(k1.v, k2.v, k3.v, k4.v);
        FlowState {
            x: [self.x[0] + dx[0], self.x[1] + dx[1]],
            v: [self.v[0] + dv[0], self.v[1] + dv[1]],
            w: (0..self.w.len())
                .map(|n| {
                    let dw = comb(k1.w[n], k2.w[n], k3.w[n], k4.w[n]);
                    [self.w[n][0] + dw[0], self.w[n][1] + dw[1]]
                })
                .collect(),
        }
    }
}

fn speed(spec: &ManifoldSpec, x: Vec2, v: Vec2) -> f64 {
    spec.metric_at(x).quad(v).max(0.0).sqrt()
}

/// One RK4 step of `x'' + Γ(x', x') = 0`; returns the new point and velocity.
pub fn geodesic_step(spec: &ManifoldSpec, x: Vec2, v: Vec2, dt: f64) -> Result<(Vec2, Vec2)> {
    let next = FlowState { x, v, w: Vec::new() }.rk4(spec, dt);
    if !spec.in_chart(next.x) {
        return Err(Error::ChartExit { point: next.x });
    }
    Ok((spec.wrap(next.x), next.v))
}

/// Constant-speed geodesic `γ(t) = exp_x(t v)`, `t ∈ [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Geodesic {
    pub start: Vec2,
    pub velocity: Vec2,
}

/// Result of integrating a geodesic over `t ∈ [0, 1]`.
#[derive(Debug, Clone)]
pub struct GeodesicTrace {
    pub end: Vec2,
    pub end_velocity: Vec2,
    /// Transported vectors at the endpoint, in input order.
    pub transported: Vec<Vec2>,
    /// Arc length accumulated from per-step speeds (Simpson rule per step).
    pub arc_length: f64,
    pub steps: usize,
}

impl Geodesic {
    pub fn new(start: Vec2, velocity: Vec2) -> Self {
        Geodesic { start, velocity }
    }

    pub fn length(&self, spec: &ManifoldSpec) -> f64 {
        speed(spec, self.start, self.velocity)
    }

    /// Integrate with a fixed number of RK4 steps, transporting `w` along.
    pub fn integrate(&self, spec: &ManifoldSpec, steps: usize, w: &[Vec2]) -> Result<GeodesicTrace> {
        let steps = steps.max(1);
        let dt = 1.0 / steps as f64;
        let mut state = FlowState { x: self.start, v: self.velocity, w: w.to_vec() };
        let mut arc = 0.0;
        let mut s0 = speed(spec, state.x, state.v);
        for _ in 0..steps {
            let mid = {
                let half = state.rk4(spec, 0.5 * dt);
                speed(spec, half.x, half.v)
            };
            let next = state.rk4(spec, dt);
            if !spec.in_chart(next.x) {
                return Err(Error::ChartExit { point: next.x });
            }
            let s1 = speed(spec, next.x, next.v);
            arc += dt * (s0 + 4.0 * mid + s1) / 6.0;
            s0 = s1;
            state = FlowState { x: spec.wrap(next.x), ..next };
        }
        Ok(GeodesicTrace { end: state.x, end_velocity: state.v, transported: state.w, arc_length: arc, steps })
    }

    /// Integrate with the step count implied by `arc_step`, halving the step
    /// until the accumulated arc length matches `|v|` to [`ARC_LENGTH_TOL`].
    pub fn trace(&self, spec: &ManifoldSpec, arc_step: f64, w: &[Vec2]) -> Result<GeodesicTrace> {
        let len = self.length(spec);
        let mut steps = ((len / arc_step).ceil() as usize).max(1);
        let mut last = self.integrate(spec, steps, w)?;
        for _ in 0..MAX_REFINEMENTS {
            if len == 0.0 || ((last.arc_length - len) / len).abs() <= ARC_LENGTH_TOL {
                break;
            }
            steps *= 2;
            last = self.integrate(spec, steps, w)?;
        }
        Ok(last)
    }
}

/// Exponential map `exp_x(v)` within the manifold's injectivity budget.
pub fn exp_map(spec: &ManifoldSpec, x: Vec2, v: Vec2) -> Result<Vec2> {
    exp_map_with(spec, x, v, DEFAULT_ARC_STEP)
}

pub fn exp_map_with(spec: &ManifoldSpec, x: Vec2, v: Vec2, arc_step: f64) -> Result<Vec2> {
    let geo = Geodesic::new(x, v);
    let len = geo.length(spec);
    if len == 0.0 {
        return Ok(x);
    }
    let budget = spec.injectivity_budget(x);
    if len > budget {
        return Err(Error::InjectivityExceeded { length: len, budget });
    }
    Ok(geo.trace(spec, arc_step, &[])?.end)
}

/// Parallel transport `L_xy w` of a tangent vector along a geodesic.
pub fn parallel_transport(spec: &ManifoldSpec, geodesic: &Geodesic, w: &TangentData) -> Result<TangentData> {
    let trace = geodesic.trace(spec, DEFAULT_ARC_STEP, &[w.vector])?;
    let g_end = spec.metric_at(trace.end);
    Ok(TangentData::from_vector(trace.end, trace.transported[0], &g_end))
}

/// Matrix of `L_xy` in coordinates: column `c` is the transport of `∂_c`.
pub fn transport_matrix(spec: &ManifoldSpec, geodesic: &Geodesic) -> Result<(Vec2, [[f64; 2]; 2])> {
    let trace = geodesic.trace(spec, DEFAULT_ARC_STEP, &[[1.0, 0.0], [0.0, 1.0]])?;
    let (e0, e1) = (trace.transported[0], trace.transported[1]);
    Ok((trace.end, [[e0[0], e1[0]], [e0[1], e1[1]]]))
}
