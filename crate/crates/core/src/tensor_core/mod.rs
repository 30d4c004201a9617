//! Coordinate charts and a finite-difference Riemannian calculus.

mod calculus;
mod chart;
pub mod fd;
mod tensor;

pub use calculus::{
    christoffel, covariant_derivative, covariant_from_partials, curvature_bundle, divergence,
    divergence_from_nabla, divergence_identity_defect, divergence_in_order, metric_field,
    orthonormal_frame, raise, ricci_field, ricci_from_riemann, riemann_field, scalar_calculus,
    trace, weyl_field, weyl_from_bundle, CurvatureBundle, ScalarCalculus,
};
pub use chart::{ChartMetric, Domain, Interval, ScalarField, EIGENVALUE_FLOOR};
pub use fd::{FdConfig, Stencil};
pub use tensor::{interior_product, kulkarni_nomizu, SymmetryTag, TensorValue};
