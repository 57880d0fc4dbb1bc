//! Operator property suites bundled into one report.

use serde::Serialize;

use riemflow::manifold::{ManifoldSpec, Profile};
use riemflow::operators::{
    check_codim_one_is_mce, check_elliptic, check_f_class, check_geometric, check_translation_invariant,
    CurvatureOperator, FClassReport, PropertyReport,
};

pub const PROPS_FORMAT: &str = "riemflow-props";
pub const PROPS_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct PropsReport {
    pub format: &'static str,
    pub version: u32,
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<PropertyReport>,
    pub f_class: Vec<FClassReport>,
}

/// Manifolds used for the translation-invariance suite.
pub fn transport_manifolds() -> Vec<ManifoldSpec> {
    vec![
        ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]]),
        ManifoldSpec::revolution(Profile::OnePlusCos2, [-1.5, 1.5]),
        ManifoldSpec::hyperboloid([-2.0, 2.0]),
        ManifoldSpec::sphere(1.0, [-1.2, 1.2]),
    ]
}

/// `trials` each for ellipticity, geometricity and the codimension-one
/// comparison; `transport_trials` per manifold for translation invariance.
pub fn run_props(seed: u64, trials: usize, transport_trials: usize) -> riemflow::Result<PropsReport> {
    let mut suites = Vec::new();
    let ops = [CurvatureOperator::mce(), CurvatureOperator::gce_plus()];
    for op in &ops {
        suites.push(check_elliptic(op, trials, seed));
        suites.push(check_geometric(op, trials, seed.wrapping_add(1)));
        for (k, spec) in transport_manifolds().iter().enumerate() {
            suites.push(check_translation_invariant(op, spec, transport_trials, seed.wrapping_add(2 + k as u64))?);
        }
    }
    suites.push(check_codim_one_is_mce(trials, seed.wrapping_add(10)));
    let f_class: Vec<FClassReport> = ops.iter().map(check_f_class).collect();
    let passed = suites.iter().all(|s| s.passed) && f_class.iter().all(|f| f.passed);
    Ok(PropsReport { format: PROPS_FORMAT, version: PROPS_VERSION, seed, passed, suites, f_class })
}
