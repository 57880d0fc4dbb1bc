//! Differential-geometry kernel for 2-D charts.

pub mod distance;
pub mod geodesic;
pub mod grid;
pub mod metric;
pub mod sakai;
pub mod spec;
pub mod stencil;

pub use distance::{distance_field, shooting_distance, DistanceField};
pub use geodesic::{exp_map, geodesic_step, parallel_transport, transport_matrix, Geodesic};
pub use grid::ChartGrid;
pub use metric::{build_manifold, MetricField, Provenance};
pub use sakai::{sakai_bounds_check, SakaiOptions, SakaiReport};
pub use spec::{ManifoldSpec, Profile};
pub use stencil::{covariant_hessian, gradient, TangentData};
