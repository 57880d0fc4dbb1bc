//! Geometric curvature operators `F(ζ, A)`.
//!
//! All operators are evaluated in a `g`-orthonormal frame obtained from the
//! Cholesky factor of the metric, so traces and spectra are those of the
//! endomorphism `g⁻¹A` rather than of the raw coordinate matrix. The
//! tangential compression `T = Uᵀ Ã U` (with `U` an orthonormal basis of
//! `ν⊥`) carries everything the three operators need:
//!
//! * mean curvature: `F = −tr T`
//! * positive Gauss curvature: `F = −|ζ| ∏ max(λ_i(T)/|ζ|, 0)`; the normal
//!   direction contributes the eigenvalue 1 of `ζ⊗ζ/|ζ|²`
//! * codimension-k mean curvature: `F = −Σ_{i ≤ n−k} λ_i(T)`

mod checks;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_eigen, Sym2, Vec2};

pub use checks::{
    check_codim_one_is_mce, check_elliptic, check_f_class, check_geometric, check_translation_invariant, FClassReport, PropertyReport,
    Violation,
};

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const JACOBI_TOL: f64 = 1e-14;

/// Default floor on `|ζ|` below which [`eval_f`] refuses to evaluate.
pub const DEFAULT_EPS_GRAD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum OperatorKind {
    Mce,
    GcePlus,
    CodimK(usize),
}

impl fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorKind::Mce => write!(f, "mce"),
            OperatorKind::GcePlus => write!(f, "gce_plus"),
            OperatorKind::CodimK(k) => write!(f, "codim_k({k})"),
        }
    }
}

impl FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "mce" => return Ok(OperatorKind::Mce),
            "gce_plus" => return Ok(OperatorKind::GcePlus),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("codim_k(").and_then(|r| r.strip_suffix(')')) {
            let k: usize = arg
                .trim()
                .parse()
                .map_err(|_| Error::UnknownName { kind: "operator", name: s.to_string() })?;
            if k == 0 {
                return Err(Error::InvalidConfig("codim_k needs k >= 1".into()));
            }
            return Ok(OperatorKind::CodimK(k));
        }
        Err(Error::UnknownName { kind: "operator", name: s.to_string() })
    }
}

impl TryFrom<String> for OperatorKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<OperatorKind> for String {
    fn from(k: OperatorKind) -> String {
        k.to_string()
    }
}

/// Power function `f(t) = t^p` from the admissible class of the operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdmissibleF {
    pub power: i32,
}

impl AdmissibleF {
    pub fn value(&self, t: f64) -> f64 {
        t.powi(self.power)
    }

    pub fn d1(&self, t: f64) -> f64 {
        self.power as f64 * t.powi(self.power - 1)
    }

    pub fn d2(&self, t: f64) -> f64 {
        (self.power * (self.power - 1)) as f64 * t.powi(self.power - 2)
    }

    /// `f(0) = f'(0) = f''(0) = 0` and `f'' > 0` on `(0, ∞)` hold exactly when `p ≥ 3`.
    pub fn is_admissible(&self) -> bool {
        self.power >= 3
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureOperator {
    pub kind: OperatorKind,
    #[serde(default = "default_eps")]
    pub eps_grad: f64,
}

fn default_eps() -> f64 {
    DEFAULT_EPS_GRAD
}

impl CurvatureOperator {
    pub fn new(kind: OperatorKind) -> Self {
        CurvatureOperator { kind, eps_grad: DEFAULT_EPS_GRAD }
    }

    pub fn mce() -> Self {
        Self::new(OperatorKind::Mce)
    }

    pub fn gce_plus() -> Self {
        Self::new(OperatorKind::GcePlus)
    }

    /// `t⁴` for the mean-curvature family, `t^{2n}` for positive Gauss curvature.
    pub fn admissible_f(&self, dim: usize) -> AdmissibleF {
        match self.kind {
            OperatorKind::Mce | OperatorKind::CodimK(_) => AdmissibleF { power: 4 },
            OperatorKind::GcePlus => AdmissibleF { power: 2 * dim as i32 },
        }
    }
}

/// Second-order jet `(ζ, A)` at a point, with the metric used to raise indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet {
    pub point: Vec<f64>,
    /// Covariant components `ζ_i`.
    pub zeta: DVector<f64>,
    /// Covariant components `A_ij`.
    pub a: DMatrix<f64>,
    pub metric: DMatrix<f64>,
}

impl Jet {
    pub fn new(point: Vec<f64>, zeta: DVector<f64>, a: DMatrix<f64>, metric: DMatrix<f64>) -> Self {
        Jet { point, zeta, a, metric }
    }

    pub fn euclidean(zeta: DVector<f64>, a: DMatrix<f64>) -> Self {
        let n = zeta.len();
        Jet { point: vec![0.0; n], zeta, a, metric: DMatrix::identity(n, n) }
    }

    pub fn from_2d(point: Vec2, zeta: Vec2, a: Sym2, g: Sym2) -> Self {
        Jet {
            point: point.to_vec(),
            zeta: DVector::from_column_slice(&zeta),
            a: a.to_dmatrix(),
            metric: g.to_dmatrix(),
        }
    }

    pub fn dim(&self) -> usize {
        self.zeta.len()
    }

    /// `|ζ| = sqrt(g^ij ζ_i ζ_j)`.
    pub fn zeta_norm(&self) -> f64 {
        match self.frame() {
            Ok(f) => f.zeta.norm(),
            Err(_) => f64::NAN,
        }
    }

    /// Same jet with `(λζ, λA + μ ζ⊗ζ)`.
    pub fn rescaled(&self, lambda: f64, mu: f64) -> Jet {
        let zz = &self.zeta * self.zeta.transpose();
        Jet {
            point: self.point.clone(),
            zeta: &self.zeta * lambda,
            a: &self.a * lambda + zz * mu,
            metric: self.metric.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.dim();
        if self.a.shape() != (n, n) || self.metric.shape() != (n, n) {
            return Err(Error::DimensionMismatch(format!(
                "ζ has {n} components, A is {:?}, g is {:?}",
                self.a.shape(),
                self.metric.shape()
            )));
        }
        let defect = (&self.a - self.a.transpose()).abs().max();
        if defect > SYMMETRY_TOL {
            return Err(Error::NonSymmetric { defect });
        }
        Ok(())
    }

    /// Components of `ζ` and `A` in a `g`-orthonormal frame.
    fn frame(&self) -> Result<Frame> {
        let chol = nalgebra::Cholesky::new(self.metric.clone())
            .ok_or_else(|| Error::InvalidManifold("jet metric is not positive definite".into()))?;
        let l = chol.l();
        let l_inv = l
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidManifold("singular Cholesky factor".into()))?;
        let zeta = &l_inv * &self.zeta;
        let a = &l_inv * &self.a * l_inv.transpose();
        // symmetrize the rounding residue
        let a = (&a + a.transpose()) * 0.5;
        Ok(Frame { zeta, a })
    }
}

struct Frame {
    zeta: DVector<f64>,
    a: DMatrix<f64>,
}

/// Orthonormal basis of `ν⊥` as the trailing columns of a Householder reflector.
fn normal_complement(nu: &DVector<f64>) -> DMatrix<f64> {
    let n = nu.len();
    let mut w = nu.clone();
    let sign = if nu[0] >= 0.0 { 1.0 } else { -1.0 };
    w[0] += sign;
    let wn2 = w.norm_squared();
    let h = DMatrix::<f64>::identity(n, n) - (&w * w.transpose()) * (2.0 / wn2);
    h.columns(1, n - 1).into_owned()
}

/// Spectrum of the tangential compression of `A` and `|ζ|`.
fn tangential_spectrum(jet: &Jet, eps_grad: f64) -> Result<(Vec<f64>, f64)> {
    jet.validate()?;
    let frame = jet.frame()?;
    let norm = frame.zeta.norm();
    if !(norm >= eps_grad) || norm == 0.0 {
        return Err(Error::DegenerateGradient { norm, floor: eps_grad });
    }
    let nu = &frame.zeta / norm;
    let u = normal_complement(&nu);
    let t = u.transpose() * &frame.a * &u;
    let t = (&t + t.transpose()) * 0.5;
    let values = if t.nrows() == 1 {
        vec![t[(0, 0)]]
    } else {
        jacobi_eigen(&t, JACOBI_TOL).0
    };
    Ok((values, norm))
}

/// Evaluate `F(ζ, A)` for the operator.
pub fn eval_f(op: &CurvatureOperator, jet: &Jet) -> Result<f64> {
    let n = jet.dim();
    if n < 2 {
        return Err(Error::DimensionMismatch("curvature operators need n >= 2".into()));
    }
    let (lambda, norm) = tangential_spectrum(jet, op.eps_grad)?;
    Ok(match op.kind {
        OperatorKind::Mce => -lambda.iter().sum::<f64>(),
        OperatorKind::GcePlus => -norm * lambda.iter().map(|l| (l / norm).max(0.0)).product::<f64>(),
        OperatorKind::CodimK(k) => {
            if k == 0 || k >= n {
                return Err(Error::DimensionMismatch(format!("codim_k({k}) needs 1 <= k <= n-1 = {}", n - 1)));
            }
            -lambda.iter().take(n - k).sum::<f64>()
        }
    })
}

/// `|ζ| · G(ζ/|ζ|, (1/|ζ|)(I − ν⊗ν)Â)` in a `g`-orthonormal frame.
pub fn f_from_g(g: &dyn Fn(&DVector<f64>, &DMatrix<f64>) -> f64, jet: &Jet, eps_grad: f64) -> Result<f64> {
    jet.validate()?;
    let frame = jet.frame()?;
    let norm = frame.zeta.norm();
    if !(norm >= eps_grad) || norm == 0.0 {
        return Err(Error::DegenerateGradient { norm, floor: eps_grad });
    }
    let nu = &frame.zeta / norm;
    let n = nu.len();
    let proj = DMatrix::<f64>::identity(n, n) - &nu * nu.transpose();
    let shape = proj * &frame.a / norm;
    Ok(norm * g(&nu, &shape))
}

/// `G(ν, S) = −tr S`, the mean-curvature form.
pub fn mce_g(_nu: &DVector<f64>, shape: &DMatrix<f64>) -> f64 {
    -shape.trace()
}

/// Regularised tangential trace in 2-D:
/// `tr(g⁻¹H) − H(ζ♯, ζ♯) / (|ζ|² + ε²)`.
///
/// With `ε = 0` this is `−F_MCE(ζ, H)`.
#[inline]
pub fn tangential_trace_2d(zeta: Vec2, hess: &Sym2, g_inv: &Sym2, eps: f64) -> f64 {
    let raised = g_inv.apply(zeta);
    let norm_sq = zeta[0] * raised[0] + zeta[1] * raised[1];
    g_inv.contract(hess) - hess.quad(raised) / (norm_sq + eps * eps)
}

impl OperatorKind {
    /// Normal speed `−F` in 2-D given the tangential trace from [`tangential_trace_2d`].
    ///
    /// On a surface the normal eigenvalue of the Gauss-curvature endomorphism is
    /// 1, so `det₊` reduces to the positive part of the single tangential one.
    #[inline]
    pub fn speed_2d(&self, tangential: f64) -> f64 {
        match self {
            OperatorKind::Mce | OperatorKind::CodimK(_) => tangential,
            OperatorKind::GcePlus => tangential.max(0.0),
        }
    }

    /// Bound on the sensitivity of `−F` to the tangential eigenvalue in 2-D
    /// (the product of the remaining `det₊` factors, which is the normal eigenvalue 1).
    pub fn diffusion_factor_2d(&self) -> f64 {
        1.0
    }

    pub fn validate_2d(&self) -> Result<()> {
        match self {
            OperatorKind::CodimK(k) if *k != 1 => {
                Err(Error::InvalidConfig(format!("codim_k({k}) has no meaning on a surface; use k = 1")))
            }
            _ => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e1_jet(a: &[f64]) -> Jet {
        Jet::euclidean(DVector::from_vec(vec![1.0, 0.0]), DMatrix::from_row_slice(2, 2, a))
    }

    #[test]
    fn mce_of_identity_form() {
        let op = CurvatureOperator::mce();
        assert_eq!(eval_f(&op, &e1_jet(&[1.0, 0.0, 0.0, 1.0])).unwrap(), -1.0);
        let j3 = Jet::euclidean(DVector::from_vec(vec![0.0, 2.0, 0.0]), DMatrix::identity(3, 3));
        assert!((eval_f(&op, &j3).unwrap() + 2.0).abs() < 1e-15);
    }

    #[test]
    fn gce_plus_brute_force() {
        let op = CurvatureOperator::gce_plus();
        let jet = e1_jet(&[5.0, 0.0, 0.0, 2.0]);
        // brute force: eigenvalues of the (non-symmetric) endomorphism P·Â/|ζ| + ζ⊗ζ/|ζ|²
        let b: DMatrix<f64> = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 2.0]) + DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let ev = b.complex_eigenvalues();
        let det_plus: f64 = ev.iter().map(|z| z.re.max(0.0)).product();
        assert_eq!(det_plus, 2.0);
        assert!((eval_f(&op, &jet).unwrap() + 2.0).abs() < 1e-14);
    }

    #[test]
    fn gce_plus_matches_nonsymmetric_endomorphism() {
        // off-diagonal A couples ν and τ; the endomorphism is triangular in that frame
        let op = CurvatureOperator::gce_plus();
        let zeta: DVector<f64> = DVector::from_vec(vec![0.6, 0.8]);
        let a = DMatrix::from_row_slice(2, 2, &[0.3, 0.7, 0.7, 1.9]);
        let nz = zeta.norm();
        let nu: DVector<f64> = &zeta / nz;
        let p = DMatrix::identity(2, 2) - &nu * nu.transpose();
        let b = &p * &a / nz + &nu * nu.transpose();
        let det_plus: f64 = b.complex_eigenvalues().iter().map(|z| z.re.max(0.0)).product();
        let got = eval_f(&op, &Jet::euclidean(zeta, a)).unwrap();
        assert!((got + nz * det_plus).abs() < 1e-12);
    }

    #[test]
    fn codim_k_top_is_smallest_eigenvalue() {
        let zeta = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, -1.0, 0.3, 0.0, 0.3, 4.0]);
        let jet = Jet::euclidean(zeta, a);
        let op = CurvatureOperator::new(OperatorKind::CodimK(2));
        let (vals, _) = jacobi_eigen(&DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, -1.0]), 1e-15);
        assert!((eval_f(&op, &jet).unwrap() + vals[0]).abs() < 1e-13);
        let op1 = CurvatureOperator::new(OperatorKind::CodimK(1));
        let mce = eval_f(&CurvatureOperator::mce(), &jet).unwrap();
        assert!((eval_f(&op1, &jet).unwrap() - mce).abs() < 1e-13);
        assert!(eval_f(&CurvatureOperator::new(OperatorKind::CodimK(3)), &jet).is_err());
    }

    #[test]
    fn singular_and_asymmetric_jets_are_rejected() {
        let op = CurvatureOperator { kind: OperatorKind::Mce, eps_grad: 1e-6 };
        let j = Jet::euclidean(DVector::from_vec(vec![1e-8, 0.0]), DMatrix::identity(2, 2));
        assert!(matches!(eval_f(&op, &j), Err(Error::DegenerateGradient { .. })));
        let j = e1_jet(&[1.0, 0.2, 0.1, 1.0]);
        assert!(matches!(eval_f(&op, &j), Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn rank_one_normal_term_is_ignored() {
        let op = CurvatureOperator::mce();
        let g = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 0.5]);
        let jet = Jet::new(vec![0.0; 2], DVector::from_vec(vec![0.4, -1.2]), DMatrix::from_row_slice(2, 2, &[1.0, 0.2, 0.2, -0.5]), g);
        let base = eval_f(&op, &jet).unwrap();
        let shifted = eval_f(&op, &jet.rescaled(1.0, 7.5)).unwrap();
        assert!((base - shifted).abs() <= 1e-10);
    }

    #[test]
    fn curved_metric_fast_path_agrees() {
        let g = Sym2::new(1.5, 0.2, 2.0);
        let gi = g.inverse().unwrap();
        let (zeta, h) = ([0.3, -0.9], Sym2::new(0.4, -0.1, 1.3));
        let jet = Jet::from_2d([0.0, 0.0], zeta, h, g);
        let t = tangential_trace_2d(zeta, &h, &gi, 0.0);
        for kind in [OperatorKind::Mce, OperatorKind::GcePlus, OperatorKind::CodimK(1)] {
            let f = eval_f(&CurvatureOperator::new(kind), &jet).unwrap();
            assert!((kind.speed_2d(t) + f).abs() < 1e-13, "{kind}");
        }
        let neg = Sym2::new(-0.4, 0.1, -1.3);
        let t = tangential_trace_2d(zeta, &neg, &gi, 0.0);
        assert_eq!(OperatorKind::GcePlus.speed_2d(t), 0.0);
    }

    #[test]
    fn g_form_identity() {
        let jet = e1_jet(&[3.0, 1.0, 1.0, 2.0]);
        let v = f_from_g(&mce_g, &jet, 1e-12).unwrap();
        assert!((v - eval_f(&CurvatureOperator::mce(), &jet).unwrap()).abs() < 1e-14);
        assert_eq!(f_from_g(&|_, _| 0.0, &jet, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn operator_names() {
        for name in ["mce", "gce_plus", "codim_k(2)"] {
            assert_eq!(name.parse::<OperatorKind>().unwrap().to_string(), name);
        }
        assert!("gce".parse::<OperatorKind>().is_err());
        assert!("codim_k(0)".parse::<OperatorKind>().is_err());
    }

    #[test]
    fn admissible_functions() {
        let f = CurvatureOperator::mce().admissible_f(2);
        assert_eq!(f.power, 4);
        assert!(f.is_admissible());
        assert_eq!((f.value(0.0), f.d1(0.0), f.d2(0.0)), (0.0, 0.0, 0.0));
        assert!(f.d2(0.3) > 0.0);
        assert_eq!(CurvatureOperator::gce_plus().admissible_f(3).power, 6);
        assert!(!AdmissibleF { power: 2 }.is_admissible());
    }
}
