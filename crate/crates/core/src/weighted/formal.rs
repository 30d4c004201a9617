use nalgebra::DMatrix;

use crate::error::{Result, SmmsError};
use crate::tensor_core::{ChartMetric, Domain, Interval};

use super::SmmsChart;

/// Conformally flat metric of constant curvature `mu` in dimension `dim`:
/// `δ_ij / (1 + (mu/4)|y|²)²`.
pub fn fiber_space_form_metric(y: &[f64], mu: f64) -> DMatrix<f64> {
    let r2: f64 = y.iter().map(|v| v * v).sum();
    let c = 1.0 + 0.25 * mu * r2;
    DMatrix::identity(y.len(), y.len()) / (c * c)
}

/// Fiber box `(-r, r)^k` lying inside the region where the conformal factor
/// is positive.
fn fiber_domain(k: usize, mu: f64) -> Domain {
    if mu < 0.0 {
        let r = 0.99 * (-4.0 / mu / k as f64).sqrt();
        Domain::new(vec![Interval { lo: -r, hi: r }; k])
    } else {
        Domain::unbounded(k)
    }
}

/// The chart of `M ×_v F^k(μ)` with `v = e^{-f/m}`, whose scalar curvature is
/// the weighted scalar curvature of `s`. Coordinates are base first, then fiber.
pub fn formal_warped_product(s: &SmmsChart, fiber_dim: usize) -> Result<ChartMetric> {
    let m = s.m();
    if fiber_dim == 0 || (m - fiber_dim as f64).abs() > 0.0 || m.fract() != 0.0 {
        return Err(SmmsError::NonIntegerM(m));
    }
    let n = s.n();
    let k = fiber_dim;
    let mu = s.mu();
    let base = s.chart().clone();
    let v = s.v_field();
    let domain = base.domain().product(&fiber_domain(k, mu));
    let mut names = base.coord_names().to_vec();
    names.extend((1..=k).map(|i| format!("y{i}")));
    ChartMetric::new(names, domain, move |p| {
        let mut g = DMatrix::zeros(n + k, n + k);
        let (x, y) = p.split_at(n);
        let gb = base
            .metric(x)
            .unwrap_or_else(|_| DMatrix::from_element(n, n, f64::NAN));
        g.view_mut((0, 0), (n, n)).copy_from(&gb);
        let v = v.eval(x).unwrap_or(f64::NAN);
        let h = fiber_space_form_metric(y, mu);
        g.view_mut((n, n), (k, k)).copy_from(&(h * (v * v)));
        g
    })
}
