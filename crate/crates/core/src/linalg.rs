//! Small dense helpers: symmetric 2×2 tensors with closed-form spectra, and a
//! cyclic Jacobi eigensolver for the n×n jets used in operator tests.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub type Vec2 = [f64; 2];

/// Symmetric 2×2 matrix stored by its three independent entries.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Sym2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl Sym2 {
    pub const IDENTITY: Sym2 = Sym2 { xx: 1.0, xy: 0.0, yy: 1.0 };
    pub const ZERO: Sym2 = Sym2 { xx: 0.0, xy: 0.0, yy: 0.0 };

    pub const fn new(xx: f64, xy: f64, yy: f64) -> Self {
        Sym2 { xx, xy, yy }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Sym2 { xx: a, xy: 0.0, yy: b }
    }

    pub fn from_rows(m: [[f64; 2]; 2]) -> Self {
        Sym2 { xx: m[0][0], xy: 0.5 * (m[0][1] + m[1][0]), yy: m[1][1] }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        match (i, j) {
            (0, 0) => self.xx,
            (1, 1) => self.yy,
            _ => self.xy,
        }
    }

    pub fn rows(&self) -> [[f64; 2]; 2] {
        [[self.xx, self.xy], [self.xy, self.yy]]
    }

    pub fn det(&self) -> f64 {
        self.xx * self.yy - self.xy * self.xy
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    pub fn inverse(&self) -> Option<Sym2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Sym2 { xx: self.yy / det, xy: -self.xy / det, yy: self.xx / det })
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [self.xx * v[0] + self.xy * v[1], self.xy * v[0] + self.yy * v[1]]
    }

    /// `B(v, w)` for the bilinear form represented by `self`.
    pub fn form(&self, v: Vec2, w: Vec2) -> f64 {
        let bw = self.apply(w);
        v[0] * bw[0] + v[1] * bw[1]
    }

    pub fn quad(&self, v: Vec2) -> f64 {
        self.form(v, v)
    }

    pub fn scale(&self, s: f64) -> Sym2 {
        Sym2 { xx: s * self.xx, xy: s * self.xy, yy: s * self.yy }
    }

    pub fn add(&self, o: &Sym2) -> Sym2 {
        Sym2 { xx: self.xx + o.xx, xy: self.xy + o.xy, yy: self.yy + o.yy }
    }

    pub fn outer(v: Vec2) -> Sym2 {
        Sym2 { xx: v[0] * v[0], xy: v[0] * v[1], yy: v[1] * v[1] }
    }

    /// Trace of `self · other` for two symmetric matrices.
    pub fn contract(&self, other: &Sym2) -> f64 {
        self.xx * other.xx + 2.0 * self.xy * other.xy + self.yy * other.yy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = half_diff.hypot(self.xy);
        [mean - radius, mean + radius]
    }

    /// `Tᵀ · self · T` where the columns of `t` are the images of the basis vectors.
    pub fn congruence(&self, t: [[f64; 2]; 2]) -> Sym2 {
        let c0 = [t[0][0], t[1][0]];
        let c1 = [t[0][1], t[1][1]];
        Sym2 { xx: self.form(c0, c0), xy: self.form(c0, c1), yy: self.form(c1, c1) }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[self.xx, self.xy, self.xy, self.yy])
    }

    pub fn max_abs_diff(&self, o: &Sym2) -> f64 {
        (self.xx - o.xx).abs().max((self.xy - o.xy).abs()).max((self.yy - o.yy).abs())
    }

    pub fn is_finite(&self) -> bool {
        self.xx.is_finite() && self.xy.is_finite() && self.yy.is_finite()
    }
}

pub fn dot(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

pub fn mat2_vec(m: [[f64; 2]; 2], v: Vec2) -> Vec2 {
    [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
}

/// Eigen-decomposition of a real symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as columns.
pub fn jacobi_eigen(a: &DMatrix<f64>, tol: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "jacobi_eigen needs a square matrix");
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let scale = m.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[(p, q)] * m[(p, q)];
            }
        }
        if off.sqrt() <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= f64::MIN_POSITIVE {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    (values, vectors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sym2_inverse_roundtrip() {
        let g = Sym2::new(2.0, 0.3, 1.5);
        let gi = g.inverse().unwrap();
        let e0 = g.apply(gi.apply([1.0, 0.0]));
        let e1 = g.apply(gi.apply([0.0, 1.0]));
        assert!((e0[0] - 1.0).abs() < 1e-14 && e0[1].abs() < 1e-14);
        assert!(e1[0].abs() < 1e-14 && (e1[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_jacobi() {
        let s = Sym2::new(-0.7, 1.3, 2.2);
        let (vals, _) = jacobi_eigen(&s.to_dmatrix(), 1e-14);
        let cf = s.eigenvalues();
        assert!((vals[0] - cf[0]).abs() < 1e-12);
        assert!((vals[1] - cf[1]).abs() < 1e-12);
    }

    #[test]
    fn jacobi_reconstructs() {
        let a = DMatrix::from_row_slice(
            4,
            4,
            &[4.0, 1.0, -2.0, 0.5, 1.0, 3.0, 0.0, 1.0, -2.0, 0.0, 1.0, 0.3, 0.5, 1.0, 0.3, -1.0],
        );
        let (vals, vecs) = jacobi_eigen(&a, 1e-14);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals.clone()));
        let rec = &vecs * d * vecs.transpose();
        assert!((rec - &a).abs().max() < 1e-11);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
    }
}
