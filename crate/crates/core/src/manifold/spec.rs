use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::ChartGrid;
use crate::error::{Error, Result};
use crate::linalg::{Sym2, Vec2};

/// Christoffel symbols indexed `[k][i][j]` for `Γ^k_ij`.
pub type Christoffel = [[[f64; 2]; 2]; 2];

pub const MIN_PROFILE_RADIUS: f64 = 1e-6;

/// Fraction of the conjugate-point scale used as the injectivity budget.
const INJECTIVITY_FRACTION: f64 = 0.95;

/// Named meridian profiles `r(s)` for surfaces of revolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Profile {
    /// `1 + cos²(s)`
    OnePlusCos2,
    /// `sqrt(1 + s²)`
    Hyperboloid,
    Constant(f64),
}

impl Profile {
    pub fn r(&self, s: f64) -> f64 {
        match *self {
            Profile::OnePlusCos2 => 1.0 + s.cos().powi(2),
            Profile::Hyperboloid => (1.0 + s * s).sqrt(),
            Profile::Constant(c) => c,
        }
    }

    pub fn dr(&self, s: f64) -> f64 {
        match *self {
            Profile::OnePlusCos2 => -(2.0 * s).sin(),
            Profile::Hyperboloid => s / (1.0 + s * s).sqrt(),
            Profile::Constant(_) => 0.0,
        }
    }

    pub fn ddr(&self, s: f64) -> f64 {
        match *self {
            Profile::OnePlusCos2 => -2.0 * (2.0 * s).cos(),
            Profile::Hyperboloid => (1.0 + s * s).powf(-1.5),
            Profile::Constant(_) => 0.0,
        }
    }

    /// Meridian speed `v(s) = sqrt(r'(s)² + 1)`.
    pub fn meridian_speed(&self, s: f64) -> f64 {
        self.dr(s).hypot(1.0)
    }

    /// Signed meridian arc length `∫_a^b v(s) ds` by composite Gauss–Legendre quadrature.
    pub fn meridian_length(&self, a: f64, b: f64) -> f64 {
        gauss_legendre(|s| self.meridian_speed(s), a, b, 64)
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::OnePlusCos2 => write!(f, "one_plus_cos2"),
            Profile::Hyperboloid => write!(f, "hyperboloid"),
            Profile::Constant(c) => write!(f, "constant({c})"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "one_plus_cos2" => return Ok(Profile::OnePlusCos2),
            "hyperboloid" => return Ok(Profile::Hyperboloid),
            _ => {}
        }
        if let Some(arg) = s.strip_prefix("constant(").and_then(|r| r.strip_suffix(')')) {
            let c: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::InvalidManifold(format!("bad constant profile argument `{arg}`")))?;
            return Ok(Profile::Constant(c));
        }
        Err(Error::UnknownName { kind: "profile", name: s.to_string() })
    }
}

impl TryFrom<String> for Profile {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Profile> for String {
    fn from(p: Profile) -> String {
        p.to_string()
    }
}

/// One of the built-in surfaces together with the chart patch it is simulated on.
///
/// Surfaces of revolution use `(s, θ)` with `θ ∈ [-π, π)` periodic; the sphere
/// uses latitude/longitude `(ψ, θ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ManifoldSpec {
    Euclidean { extents: [[f64; 2]; 2] },
    Revolution { profile: Profile, s_range: [f64; 2] },
    Hyperboloid { s_range: [f64; 2] },
    Sphere { radius: f64, lat_range: [f64; 2] },
}

impl ManifoldSpec {
    pub fn euclidean(extents: [[f64; 2]; 2]) -> Self {
        ManifoldSpec::Euclidean { extents }
    }

    pub fn revolution(profile: Profile, s_range: [f64; 2]) -> Self {
        ManifoldSpec::Revolution { profile, s_range }
    }

    pub fn hyperboloid(s_range: [f64; 2]) -> Self {
        ManifoldSpec::Hyperboloid { s_range }
    }

    pub fn sphere(radius: f64, lat_range: [f64; 2]) -> Self {
        ManifoldSpec::Sphere { radius, lat_range }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldSpec::Euclidean { .. } => "euclidean",
            ManifoldSpec::Revolution { .. } => "revolution",
            ManifoldSpec::Hyperboloid { .. } => "hyperboloid",
            ManifoldSpec::Sphere { .. } => "sphere",
        }
    }

    /// Meridian profile for the revolution family (the hyperboloid included).
    pub fn profile(&self) -> Option<Profile> {
        match self {
            ManifoldSpec::Revolution { profile, .. } => Some(*profile),
            ManifoldSpec::Hyperboloid { .. } => Some(Profile::Hyperboloid),
            _ => None,
        }
    }

    pub fn extents(&self) -> [[f64; 2]; 2] {
        match self {
            ManifoldSpec::Euclidean { extents } => *extents,
            ManifoldSpec::Revolution { s_range, .. } | ManifoldSpec::Hyperboloid { s_range } => {
                [*s_range, [-PI, PI]]
            }
            ManifoldSpec::Sphere { lat_range, .. } => [*lat_range, [-PI, PI]],
        }
    }

    pub fn periodic(&self) -> [bool; 2] {
        match self {
            ManifoldSpec::Euclidean { .. } => [false, false],
            _ => [false, true],
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (axis, [a, b]) in self.extents().into_iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && b > a) {
                return Err(Error::InvalidManifold(format!("axis {axis} range [{a}, {b}] is empty")));
            }
        }
        match self {
            ManifoldSpec::Sphere { radius, lat_range } => {
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::InvalidManifold(format!("sphere radius {radius} must be positive")));
                }
                if lat_range[0] <= -PI / 2.0 || lat_range[1] >= PI / 2.0 {
                    return Err(Error::InvalidManifold(
                        "latitude range must stay strictly inside (-π/2, π/2)".into(),
                    ));
                }
            }
            ManifoldSpec::Revolution { .. } | ManifoldSpec::Hyperboloid { .. } => {
                let min_r = self.min_profile_radius().unwrap_or(f64::INFINITY);
                if !(min_r >= MIN_PROFILE_RADIUS) {
                    return Err(Error::ProfileTooSmall { min_radius: min_r });
                }
            }
            ManifoldSpec::Euclidean { .. } => {}
        }
        Ok(())
    }

    /// Grid over the full chart patch with the manifold's periodicity.
    pub fn grid(&self, resolution: [usize; 2]) -> Result<ChartGrid> {
        ChartGrid::new(self.extents(), resolution, self.periodic())
    }

    pub fn metric_at(&self, p: Vec2) -> Sym2 {
        match self {
            ManifoldSpec::Euclidean { .. } => Sym2::IDENTITY,
            ManifoldSpec::Revolution { .. } | ManifoldSpec::Hyperboloid { .. } => {
                let prof = self.profile().expect("revolution family");
                let s = p[0];
                let dr = prof.dr(s);
                Sym2::diag(dr * dr + 1.0, prof.r(s).powi(2))
            }
            ManifoldSpec::Sphere { radius, .. } => {
                let r2 = radius * radius;
                Sym2::diag(r2, r2 * p[0].cos().powi(2))
            }
        }
    }

    /// Closed-form Christoffel symbols of the second kind.
    pub fn christoffel_at(&self, p: Vec2) -> Christoffel {
        let mut gamma = [[[0.0; 2]; 2]; 2];
        match self {
            ManifoldSpec::Euclidean { .. } => {}
            ManifoldSpec::Revolution { .. } | ManifoldSpec::Hyperboloid { .. } => {
                let prof = self.profile().expect("revolution family");
                let s = p[0];
                let (r, dr, ddr) = (prof.r(s), prof.dr(s), prof.ddr(s));
                let e = dr * dr + 1.0;
                gamma[0][0][0] = dr * ddr / e;
                gamma[0][1][1] = -r * dr / e;
                gamma[1][0][1] = dr / r;
                gamma[1][1][0] = dr / r;
            }
            ManifoldSpec::Sphere { .. } => {
                let psi = p[0];
                gamma[0][1][1] = psi.sin() * psi.cos();
                gamma[1][0][1] = -psi.tan();
                gamma[1][1][0] = -psi.tan();
            }
        }
        gamma
    }

    /// Minimum of `r` over the meridian range, sampled densely.
    pub fn min_profile_radius(&self) -> Option<f64> {
        let prof = self.profile()?;
        let [a, b] = self.extents()[0];
        let n = 2048;
        Some((0..=n).map(|k| prof.r(a + (b - a) * k as f64 / n as f64)).fold(f64::INFINITY, f64::min))
    }

    /// Metric lower bound on the distance from `p` to the edge of the chart
    /// along non-periodic axes.
    pub fn chart_margin(&self, p: Vec2) -> f64 {
        let ext = self.extents();
        let coord_margin = |axis: usize| (p[axis] - ext[axis][0]).min(ext[axis][1] - p[axis]);
        match self {
            ManifoldSpec::Euclidean { .. } => coord_margin(0).min(coord_margin(1)),
            // sqrt(g_ss) = v(s) >= 1
            ManifoldSpec::Revolution { .. } | ManifoldSpec::Hyperboloid { .. } => coord_margin(0),
            ManifoldSpec::Sphere { radius, .. } => radius * coord_margin(0),
        }
    }

    /// Largest tangent length for which exp/transport-based operations are trusted at `p`.
    pub fn injectivity_budget(&self, p: Vec2) -> f64 {
        let intrinsic = match self {
            ManifoldSpec::Euclidean { .. } => f64::INFINITY,
            ManifoldSpec::Sphere { radius, .. } => INJECTIVITY_FRACTION * PI * radius,
            ManifoldSpec::Revolution { .. } | ManifoldSpec::Hyperboloid { .. } => {
                INJECTIVITY_FRACTION * PI * self.min_profile_radius().unwrap_or(0.0)
            }
        };
        intrinsic.min(self.chart_margin(p).max(0.0))
    }

    /// Canonical chart representative of `p`.
    pub fn wrap(&self, p: Vec2) -> Vec2 {
        if self.periodic()[1] {
            let w = -PI + (p[1] + PI).rem_euclid(2.0 * PI);
            [p[0], if w >= PI { -PI } else { w }]
        } else {
            p
        }
    }

    /// Whether `p` lies inside the non-periodic chart ranges.
    pub fn in_chart(&self, p: Vec2) -> bool {
        let ext = self.extents();
        let periodic = self.periodic();
        (0..2).all(|a| periodic[a] || (p[a] >= ext[a][0] && p[a] <= ext[a][1]))
    }
}

/// Composite Gauss–Legendre quadrature (5 nodes per panel).
pub fn gauss_legendre(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 5] = [
        0.0,
        -0.538_469_310_105_683_1,
        0.538_469_310_105_683_1,
        -0.906_179_845_938_664,
        0.906_179_845_938_664,
    ];
    const W: [f64; 5] = [
        0.568_888_888_888_888_9,
        0.478_628_670_499_366_5,
        0.478_628_670_499_366_5,
        0.236_926_885_056_189_1,
        0.236_926_885_056_189_1,
    ];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let mid = a + (k as f64 + 0.5) * h;
        let half = 0.5 * h;
        total += X.iter().zip(W.iter()).map(|(x, w)| w * f(mid + half * x)).sum::<f64>() * half;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn central(f: impl Fn(f64) -> f64, s: f64) -> f64 {
        let h = 1e-5;
        (f(s + h) - f(s - h)) / (2.0 * h)
    }

    #[test]
    fn profile_derivatives_match_central_differences() {
        for prof in [Profile::OnePlusCos2, Profile::Hyperboloid, Profile::Constant(1.5)] {
            for &s in &[-1.7, -0.4, 0.0, 0.3, 1.0, 1.9] {
                assert!((prof.dr(s) - central(|x| prof.r(x), s)).abs() < 1e-8, "{prof} r' at {s}");
                assert!((prof.ddr(s) - central(|x| prof.dr(x), s)).abs() < 1e-8, "{prof} r'' at {s}");
            }
        }
    }

    #[test]
    fn profile_names_roundtrip() {
        for name in ["one_plus_cos2", "hyperboloid", "constant(2.5)"] {
            let p: Profile = name.parse().unwrap();
            assert_eq!(p.to_string(), name);
        }
        assert!("paraboloid".parse::<Profile>().is_err());
        assert!("constant(x)".parse::<Profile>().is_err());
    }

    #[test]
    fn quadrature_integrates_polynomials() {
        let v = gauss_legendre(|x| x.powi(7) - 3.0 * x * x, -1.0, 2.0, 3);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn serde_tags() {
        let m = ManifoldSpec::revolution(Profile::Constant(2.0), [-1.0, 1.0]);
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"kind\":\"revolution\""));
        assert!(json.contains("constant(2)"));
        let back: ManifoldSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn tiny_profile_is_rejected() {
        let m = ManifoldSpec::revolution(Profile::Constant(1e-9), [-1.0, 1.0]);
        assert!(matches!(m.validate(), Err(Error::ProfileTooSmall { .. })));
    }
}
