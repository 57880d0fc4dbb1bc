use super::{Check, InitialField, Relabel, Scenario};
use crate::error::{Error, Result};
use crate::manifold::{ManifoldSpec, Profile};
use crate::operators::CurvatureOperator;
use crate::solver::SolverConfig;

fn unit_square() -> ManifoldSpec {
    ManifoldSpec::euclidean([[-1.0, 1.0], [-1.0, 1.0]])
}

fn circle() -> InitialField {
    InitialField::Circle { center: [0.0, 0.0], radius: 0.5, inside_negative: false }
}

fn latitude(offset: f64) -> InitialField {
    InitialField::Coordinate { axis: 0, offset, scale: 1.0 }
}

fn base(name: &str, manifold: ManifoldSpec, resolution: [usize; 2], initial: InitialField, solver: SolverConfig) -> Scenario {
    Scenario {
        name: name.into(),
        manifold,
        resolution,
        initial,
        relabel: None,
        operator: CurvatureOperator::mce(),
        solver,
        checks: Vec::new(),
    }
}

fn probe() -> Check {
    Check::ViscosityProbe { tol_cells: 20.0, min_pass_rate: 0.99 }
}

fn shrinking_circle() -> Scenario {
    let mut sc = base(
        "euclid_shrinking_circle",
        unit_square(),
        [128, 128],
        circle(),
        SolverConfig::new(0.14).with_snapshots(0.0025),
    );
    sc.checks = vec![
        Check::ExtinctionTime { expected: 0.125, rel_tol: 0.05 },
        Check::RadiusTrajectory { r0: 0.5, t_max: 0.1, rel_tol: 0.02 },
        Check::MaxPrinciple,
        Check::Lipschitz { factor: Some(1.05), until: Some(0.1) },
        probe(),
    ];
    sc
}

fn hyperboloid() -> ManifoldSpec {
    ManifoldSpec::hyperboloid([-2.0, 2.0])
}

fn stationary_equator() -> Scenario {
    let mut sc = base(
        "hyperboloid_stationary_equator",
        hyperboloid(),
        [129, 128],
        latitude(0.0),
        SolverConfig::new(0.5).with_snapshots(0.05),
    );
    sc.checks = vec![Check::FrontStationary { axis: 0, value: 0.0, cells: 2.0 }, probe()];
    sc
}

fn distance_decay() -> Scenario {
    let mut sc = base(
        "hyperboloid_distance_decay",
        hyperboloid(),
        [129, 128],
        latitude(0.0),
        SolverConfig::new(0.3).with_snapshots(0.05),
    );
    sc.checks = vec![
        Check::FrontStationary { axis: 0, value: 0.0, cells: 2.0 },
        Check::DistanceDecay {
            companion: latitude(1.0),
            initial: Profile::Hyperboloid.meridian_length(0.0, 1.0),
            rel_tol: 0.03,
            min_drop: 1e-4,
        },
    ];
    sc
}

fn supersolution_sign() -> Scenario {
    let mut sc = base(
        "revolution_supersolution_sign",
        ManifoldSpec::revolution(Profile::OnePlusCos2, [-2.0, 2.0]),
        [129, 128],
        latitude(0.0),
        SolverConfig::new(0.0),
    );
    sc.checks = vec![Check::SupersolutionSign { s_max: 2.0, samples: 200 }];
    sc
}

fn gauss_convex() -> Scenario {
    let mut sc = base(
        "euclid_gauss_convex",
        unit_square(),
        [128, 128],
        InitialField::Circle { center: [0.0, 0.0], radius: 0.5, inside_negative: true },
        SolverConfig::new(0.1).with_snapshots(0.0025),
    );
    sc.operator = CurvatureOperator::gce_plus();
    sc.checks = vec![Check::RadiusTrajectory { r0: 0.5, t_max: 0.1, rel_tol: 0.02 }, Check::MaxPrinciple, probe()];
    sc
}

fn invariance_circle(theta: Relabel) -> Scenario {
    let mut sc = base(
        &format!("invariance_{}", theta.name()),
        unit_square(),
        [128, 128],
        circle(),
        SolverConfig::new(0.08).with_snapshots(0.01),
    );
    sc.checks = vec![Check::Invariance { theta, cells: 3.0 }];
    sc
}

fn invariance_revolution(theta: Relabel) -> Scenario {
    let mut sc = base(
        &format!("invariance_revolution_{}", theta.name()),
        ManifoldSpec::revolution(Profile::OnePlusCos2, [-1.5, 1.5]),
        [129, 128],
        latitude(0.5),
        SolverConfig::new(0.2).with_snapshots(0.025),
    );
    sc.checks = vec![Check::Invariance { theta, cells: 3.0 }];
    sc
}

fn lipschitz_euclidean() -> Scenario {
    let mut sc = base(
        "lipschitz_euclidean",
        unit_square(),
        [128, 128],
        circle(),
        SolverConfig::new(0.1).with_snapshots(0.005),
    );
    sc.checks = vec![Check::Lipschitz { factor: Some(1.05), until: Some(0.1) }];
    sc
}

fn lipschitz_hyperboloid() -> Scenario {
    let band = InitialField::Band { axis: 0, lo: 0.0, hi: 1.0 };
    let mut sc = base(
        "lipschitz_hyperboloid",
        hyperboloid(),
        [129, 128],
        InitialField::DistanceTo { front: Box::new(band) },
        SolverConfig::new(0.3).with_snapshots(0.025),
    );
    sc.checks = vec![Check::Lipschitz { factor: None, until: None }];
    sc
}

/// Every built-in scenario.
pub fn registry() -> Vec<Scenario> {
    let mut all = vec![
        shrinking_circle(),
        stationary_equator(),
        distance_decay(),
        supersolution_sign(),
        gauss_convex(),
    ];
    all.extend(Relabel::ALL.iter().map(|&t| invariance_circle(t)));
    all.extend(Relabel::ALL.iter().map(|&t| invariance_revolution(t)));
    all.push(lipschitz_euclidean());
    all.push(lipschitz_hyperboloid());
    all
}

pub fn scenario_names() -> Vec<String> {
    registry().into_iter().map(|s| s.name).collect()
}

pub fn scenario(name: &str) -> Result<Scenario> {
    registry()
        .into_iter()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::UnknownName { kind: "scenario", name: name.to_string() })
}
