use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid manifold parameters: {0}")]
    InvalidManifold(String),

    #[error("metric is not positive definite at node {node} (eigenvalues {eigenvalues:?})")]
    NonPositiveDefinite { node: usize, eigenvalues: [f64; 2] },

    #[error("profile radius {min_radius:e} falls below the admissible floor")]
    ProfileTooSmall { min_radius: f64 },

    #[error("geodesic left the chart at {point:?}")]
    ChartExit { point: [f64; 2] },

    #[error("tangent vector of length {length} exceeds the injectivity budget {budget}")]
    InjectivityExceeded { length: f64, budget: f64 },

    #[error("radius {radius} exceeds the admissible bound {bound}")]
    RadiusTooLarge { radius: f64, bound: f64 },

    #[error("seed set is empty")]
    EmptySeeds,

    #[error("contour is empty")]
    EmptyContour,

    #[error("gradient norm {norm:e} is below the floor {floor:e}")]
    DegenerateGradient { norm: f64, floor: f64 },

    #[error("bilinear form is not symmetric (defect {defect:e})")]
    NonSymmetric { defect: f64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("solution blew up at node {node}, t = {time}: value {value}")]
    BlowUp { node: usize, time: f64, value: f64 },

    #[error("shooting did not converge to {target:?} (residual {residual:e})")]
    ShootingFailed { target: [f64; 2], residual: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown {kind} `{name}`")]
    UnknownName { kind: &'static str, name: String },

    #[error("format error at byte {offset}: {message}")]
    Format { offset: u64, message: String },

    #[error("interrupted at t = {time}")]
    Interrupted { time: f64 },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
