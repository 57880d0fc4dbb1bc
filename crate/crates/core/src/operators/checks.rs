//! Randomised validators for ellipticity, geometricity, translation
//! invariance and the small-gradient limit of the admissible class.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{eval_f, CurvatureOperator, Jet, OperatorKind};
use crate::error::Result;
use crate::linalg::{Sym2, Vec2};
use crate::manifold::{transport_matrix, Geodesic, ManifoldSpec};

#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub trial: usize,
    pub defect: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyReport {
    pub check: String,
    pub operator: String,
    pub trials: usize,
    /// Trials where the operator could not be evaluated (degenerate draws).
    pub skipped: usize,
    pub tolerance: f64,
    /// Largest defect relative to the per-trial allowance (≤ 1 passes).
    pub worst_ratio: f64,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

impl PropertyReport {
    fn new(check: &str, op: &CurvatureOperator, trials: usize, tolerance: f64) -> Self {
        PropertyReport {
            check: check.to_string(),
            operator: op.kind.to_string(),
            trials,
            skipped: 0,
            tolerance,
            worst_ratio: 0.0,
            violations: Vec::new(),
            passed: true,
        }
    }

    fn record(&mut self, trial: usize, defect: f64, allowance: f64, detail: impl FnOnce() -> String) {
        let ratio = defect / allowance;
        if ratio.is_nan() || ratio > 1.0 {
            self.violations.push(Violation { trial, defect, detail: detail() });
            self.passed = false;
        }
        if ratio > self.worst_ratio {
            self.worst_ratio = ratio;
        }
    }
}

fn dims_for(kind: OperatorKind) -> (usize, usize) {
    match kind {
        OperatorKind::CodimK(k) => (k + 1, k + 3),
        _ => (2, 4),
    }
}

fn random_sym(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.gen_range(-scale..scale);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

fn random_metric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let b = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-0.6..0.6));
    &b * b.transpose() + DMatrix::identity(n, n) * 0.5
}

fn random_covector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 0.1 {
            let target = rng.gen_range(0.5..2.0);
            return v * (target / norm);
        }
    }
}

/// Random jet of dimension `n` with a random positive-definite metric.
pub(crate) fn random_jet(rng: &mut ChaCha8Rng, n: usize) -> Jet {
    let metric = random_metric(rng, n);
    let zeta = random_covector(rng, n);
    let a = random_sym(rng, n, 1.5);
    Jet::new(vec![0.0; n], zeta, a, metric)
}

fn random_dim(rng: &mut ChaCha8Rng, kind: OperatorKind) -> usize {
    let (lo, hi) = dims_for(kind);
    rng.gen_range(lo..=hi)
}

/// `F(ζ, A + S) ≤ F(ζ, A) + 1e-10` for random positive semidefinite `S`.
pub fn check_elliptic(op: &CurvatureOperator, trials: usize, seed: u64) -> PropertyReport {
    let tol = 1e-10;
    let mut rep = PropertyReport::new("elliptic", op, trials, tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let n = random_dim(&mut rng, op.kind);
        let jet = random_jet(&mut rng, n);
        let rank = rng.gen_range(1..=n);
        let c = DMatrix::from_fn(n, rank, |_, _| rng.gen_range(-1.0..1.0));
        let s = &c * c.transpose();
        let bumped = Jet { a: &jet.a + &s, ..jet.clone() };
        match (eval_f(op, &jet), eval_f(op, &bumped)) {
            (Ok(f0), Ok(f1)) => rep.record(trial, f1 - f0, tol, || format!("n={n}: F(A)={f0}, F(A+S)={f1}")),
            _ => rep.skipped += 1,
        }
    }
    rep
}

/// `F(λζ, λA + μ ζ⊗ζ) = λ F(ζ, A)` for `λ ∈ (0.1, 10)`, `μ ∈ [−5, 5]`.
pub fn check_geometric(op: &CurvatureOperator, trials: usize, seed: u64) -> PropertyReport {
    let tol = 1e-8;
    let mut rep = PropertyReport::new("geometric", op, trials, tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let n = random_dim(&mut rng, op.kind);
        let jet = random_jet(&mut rng, n);
        let lambda = 10f64.powf(rng.gen_range(-1.0..1.0));
        let mu = rng.gen_range(-5.0..=5.0);
        match (eval_f(op, &jet), eval_f(op, &jet.rescaled(lambda, mu))) {
            (Ok(f0), Ok(f1)) => {
                let expect = lambda * f0;
                rep.record(trial, (f1 - expect).abs(), tol * (1.0 + expect.abs()), || {
                    format!("n={n}, λ={lambda}, μ={mu}: {f1} vs {expect}")
                })
            }
            _ => rep.skipped += 1,
        }
    }
    rep
}

/// `CODIM_K(1)` against `MCE` on random 2-D jets, absolute tolerance 1e-10.
pub fn check_codim_one_is_mce(trials: usize, seed: u64) -> PropertyReport {
    let tol = 1e-10;
    let codim = CurvatureOperator::new(OperatorKind::CodimK(1));
    let mce = CurvatureOperator::mce();
    let mut rep = PropertyReport::new("codim_one_matches_mce", &codim, trials, tol);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let jet = random_jet(&mut rng, 2);
        match (eval_f(&codim, &jet), eval_f(&mce, &jet)) {
            (Ok(a), Ok(b)) => rep.record(trial, (a - b).abs(), tol, || format!("{a} vs {b}")),
            _ => rep.skipped += 1,
        }
    }
    rep
}

fn sample_base_point(rng: &mut ChaCha8Rng, spec: &ManifoldSpec) -> Vec2 {
    let ext = spec.extents();
    let per = spec.periodic();
    let mut p = [0.0; 2];
    for a in 0..2 {
        let [lo, hi] = ext[a];
        p[a] = if per[a] {
            rng.gen_range(lo..hi)
        } else {
            let mid = 0.5 * (lo + hi);
            let half = 0.3 * (hi - lo);
            rng.gen_range(mid - half..mid + half)
        };
    }
    p
}

/// `F(L_xy ζ, A) = F(ζ, L_yx A)` along random geodesics inside the injectivity budget.
pub fn check_translation_invariant(
    op: &CurvatureOperator,
    spec: &ManifoldSpec,
    trials: usize,
    seed: u64,
) -> Result<PropertyReport> {
    op.kind.validate_2d()?;
    spec.validate()?;
    let tol = 1e-6;
    let mut rep = PropertyReport::new("translation_invariant", op, trials, tol);
    rep.check = format!("translation_invariant[{}]", spec.name());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let x = sample_base_point(&mut rng, spec);
        let gx = spec.metric_at(x);
        let budget = spec.injectivity_budget(x).min(2.0);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let dir = [phi.cos(), phi.sin()];
        let len = rng.gen_range(0.05..0.5) * budget;
        let dir_len = gx.quad(dir).sqrt();
        let v = [dir[0] * len / dir_len, dir[1] * len / dir_len];
        let (y, t) = transport_matrix(spec, &Geodesic::new(x, v))?;
        let gy = spec.metric_at(y);

        let zeta: Vec2 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let a = Sym2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        // ζ at x → vector → transport → covector at y
        let raised = gx.inverse().expect("metric is positive definite").apply(zeta);
        let moved = [t[0][0] * raised[0] + t[0][1] * raised[1], t[1][0] * raised[0] + t[1][1] * raised[1]];
        let zeta_y = gy.apply(moved);
        let a_x = a.congruence(t);

        let lhs = eval_f(op, &Jet::from_2d(y, zeta_y, a, gy));
        let rhs = eval_f(op, &Jet::from_2d(x, zeta, a_x, gx));
        match (lhs, rhs) {
            (Ok(l), Ok(r)) => rep.record(trial, (l - r).abs(), tol * (1.0 + r.abs()), || {
                format!("x={x:?}, y={y:?}: {l} vs {r}")
            }),
            _ => rep.skipped += 1,
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, Serialize)]
pub struct FClassReport {
    pub operator: String,
    pub dim: usize,
    pub power: i32,
    /// `(t, max over directions and signs of |f′(t)/t · F(ζ_t, ±2I)|)`.
    pub series: Vec<(f64, f64)>,
    pub monotone: bool,
    pub final_value: f64,
    pub threshold: f64,
    pub passed: bool,
}

/// Small-gradient limit `f′(t)/t · F(ζ_t, ±2I) → 0` for the operator's own `f`.
pub fn check_f_class(op: &CurvatureOperator) -> FClassReport {
    let dim = dims_for(op.kind).0;
    let f = op.admissible_f(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let directions: Vec<DVector<f64>> = (0..8)
        .map(|_| {
            let v = random_covector(&mut rng, dim);
            let n = v.norm();
            v / n
        })
        .collect();
    let mut series = Vec::new();
    for e in 1..=6 {
        let t = 10f64.powi(-e);
        let mut worst: f64 = 0.0;
        for d in &directions {
            for sign in [1.0, -1.0] {
                let jet = Jet::euclidean(d * t, DMatrix::identity(dim, dim) * (2.0 * sign));
                let value = match eval_f(op, &jet) {
                    Ok(v) => f.d1(t) / t * v,
                    Err(_) => f64::NAN,
                };
                worst = worst.max(value.abs());
                if value.is_nan() {
                    worst = f64::NAN;
                }
            }
        }
        series.push((t, worst));
    }
    let monotone = series.windows(2).all(|w| w[1].1 <= w[0].1 * (1.0 + 1e-12));
    let final_value = series.last().map(|s| s.1).unwrap_or(f64::NAN);
    let threshold = 1e-4;
    FClassReport {
        operator: op.kind.to_string(),
        dim,
        power: f.power,
        monotone,
        final_value,
        threshold,
        passed: f.is_admissible() && monotone && final_value < threshold,
        series,
    }
}
