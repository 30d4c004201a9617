//! Weighted curvature of smooth metric measure spaces on coordinate charts.

mod formal;
mod report;

use nalgebra::DMatrix;

use crate::error::{Result, SmmsError};
use crate::tensor_core::{
    covariant_from_partials, curvature_bundle, divergence, divergence_from_nabla, fd,
    interior_product, kulkarni_nomizu, orthonormal_frame, scalar_calculus, trace, ChartMetric,
    CurvatureBundle, FdConfig, ScalarCalculus, ScalarField, TensorValue,
};

pub use formal::{fiber_space_form_metric, formal_warped_product};
pub use report::{condition_report, Branch, ConditionReport, ReportOptions, SampleRecord};

/// A chart together with density `f`, dimensional parameter `m` and
/// auxiliary curvature parameter `mu`.
#[derive(Debug, Clone)]
pub struct SmmsChart {
    chart: ChartMetric,
    f: ScalarField,
    m: f64,
    mu: f64,
}

impl SmmsChart {
    pub fn new(chart: ChartMetric, f: ScalarField, m: f64, mu: f64) -> Result<Self> {
        let s = Self::with_constant_density(chart, f, m, mu)?;
        let probes = s.chart.domain().probe_points();
        let values = probes
            .iter()
            .map(|p| s.f.eval(p))
            .collect::<Result<Vec<_>>>()?;
        let spread = values.iter().fold(0.0f64, |acc, v| acc.max((v - values[0]).abs()));
        if spread <= 1e-12 * values[0].abs().max(1.0) {
            return Err(SmmsError::ConstantDensity);
        }
        Ok(s)
    }

    /// Skips the non-constant density check. Only meant for plumbing tests
    /// such as direct products in the formal warped product.
    pub fn with_constant_density(chart: ChartMetric, f: ScalarField, m: f64, mu: f64) -> Result<Self> {
        let n = chart.dim();
        if n < 3 {
            return Err(SmmsError::InvalidSmms(format!("dimension must be at least 3, got {n}")));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(SmmsError::InvalidSmms(format!("m must be positive, got {m}")));
        }
        if !mu.is_finite() {
            return Err(SmmsError::InvalidSmms(format!("mu must be finite, got {mu}")));
        }
        let nf = n as f64;
        if nf + m - 2.0 <= 0.0 || nf + m - 1.0 <= 0.0 {
            return Err(SmmsError::InvalidSmms("n + m - 2 must be positive".into()));
        }
        Ok(Self { chart, f, m, mu })
    }

    pub fn chart(&self) -> &ChartMetric {
        &self.chart
    }

    pub fn density(&self) -> &ScalarField {
        &self.f
    }

    pub fn n(&self) -> usize {
        self.chart.dim()
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    /// `v = e^{-f/m}`.
    pub fn v_field(&self) -> ScalarField {
        let m = self.m;
        self.f.map(move |f| (-f / m).exp())
    }
}

/// `τ_f^m`, `J_f^m`, `Y_f^m` and, once a `λ` is known, `α = (n+m-2)λ + J_f^m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightedScalars {
    pub tau_fm: f64,
    pub j_fm: f64,
    pub y_fm: f64,
    pub alpha: Option<f64>,
}

impl WeightedScalars {
    pub fn with_lambda(mut self, n: usize, m: f64, lambda: f64) -> Self {
        self.alpha = Some((n as f64 + m - 2.0) * lambda + self.j_fm);
        self
    }
}

#[derive(Debug, Clone)]
pub struct Schouten {
    pub p: TensorValue,
    pub scalars: WeightedScalars,
}

/// Every pointwise weighted quantity that needs at most second derivatives.
#[derive(Debug, Clone)]
pub struct WeightedPoint {
    pub g: DMatrix<f64>,
    pub ginv: DMatrix<f64>,
    pub curvature: CurvatureBundle,
    pub density: ScalarCalculus,
    pub rho_fm: TensorValue,
    pub schouten: Schouten,
    pub weyl: TensorValue,
}

fn weighted_scalar_from(s: &SmmsChart, curv: &CurvatureBundle, dens: &ScalarCalculus) -> f64 {
    let m = s.m;
    let mut tau = curv.scalar + 2.0 * dens.laplacian - (m + 1.0) / m * dens.grad_norm_sq;
    // μ is irrelevant for m = 1 and is never read in that case.
    if m != 1.0 {
        tau += m * (m - 1.0) * s.mu * (2.0 * dens.value / m).exp();
    }
    tau
}

pub fn weighted_point(s: &SmmsChart, p: &[f64], cfg: &FdConfig) -> Result<WeightedPoint> {
    let n = s.n();
    let nf = n as f64;
    let m = s.m;
    let (g, ginv) = s.chart.metric_and_inverse(p)?;
    let curvature = curvature_bundle(&s.chart, p, cfg)?;
    let density = scalar_calculus(&s.chart, &s.f, p, cfg)?;

    let mut rho = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let df = density.grad.components();
            rho[(i, j)] = curvature.ricci.get2(i, j) + density.hess.get2(i, j) - df[i] * df[j] / m;
        }
    }
    let rho_fm = TensorValue::sym2_from_matrix(&rho);
    let tau_fm = weighted_scalar_from(s, &curvature, &density);
    let j_fm = tau_fm / (2.0 * (nf + m - 1.0));
    let p_mat = (&rho - &g * j_fm) / (nf + m - 2.0);
    let p_tensor = TensorValue::sym2_from_matrix(&p_mat);
    let y_fm = j_fm - trace(&p_tensor, &ginv);
    let g_t = TensorValue::sym2_from_matrix(&g);
    let weyl = curvature.riemann.sub(&kulkarni_nomizu(&p_tensor, &g_t)?)?;
    Ok(WeightedPoint {
        g,
        ginv,
        curvature,
        density,
        rho_fm,
        schouten: Schouten {
            p: p_tensor,
            scalars: WeightedScalars {
                tau_fm,
                j_fm,
                y_fm,
                alpha: None,
            },
        },
        weyl,
    })
}

/// `ρ_f^m = ρ + Hes_f − (1/m) df⊗df`.
pub fn bakry_emery_ricci(s: &SmmsChart, p: &[f64], cfg: &FdConfig) -> Result<TensorValue> {
    Ok(weighted_point(s, p, cfg)?.rho_fm)
}

/// `τ_f^m = τ + 2Δf − ((m+1)/m)|∇f|² + m(m−1)μ e^{2f/m}`.
pub fn weighted_scalar_curvature(s: &SmmsChart, p: &[f64], cfg: &FdConfig) -> Result<f64> {
    let curv = curvature_bundle(&s.chart, p, cfg)?;
    let dens = scalar_calculus(&s.chart, &s.f, p, cfg)?;
    Ok(weighted_scalar_from(s, &curv, &dens))
}

pub fn weighted_schouten(s: &SmmsChart, p: &[f64], cfg: &FdConfig) -> Result<Schouten> {
    Ok(weighted_point(s, p, cfg)?.schouten)
}

/// `W_f^m = R − P_f^m ⊘ g`.
pub fn weighted_weyl(s: &SmmsChart, p: &[f64], cfg: &FdConfig) -> Result<TensorValue> {
    Ok(weighted_point(s, p, cfg)?.weyl)
}

/// Quantities that need third derivatives of the metric.
#[derive(Debug, Clone)]
pub struct WeightedDerivatives {
    pub point: WeightedPoint,
    /// Gram–Schmidt orthonormal frame at the point (columns).
    pub frame: DMatrix<f64>,
    /// `dP(X,Y,Z) = (∇_X P)(Y,Z) − (∇_Y P)(X,Z)`.
    pub cotton: TensorValue,
    /// `δW_f^m`.
    pub weyl_divergence: TensorValue,
    /// `δ_f W_f^m = δW_f^m − ι_{∇f} W_f^m`.
    pub weighted_weyl_divergence: TensorValue,
}

/// Computes `∇P` and `∇W` from a single finite-difference pass over the
/// concatenated components.
pub fn weighted_derivatives(s: &SmmsChart, p: &[f64], cfg: &FdConfig) -> Result<WeightedDerivatives> {
    let n = s.n();
    let point = weighted_point(s, p, cfg)?;
    let n2 = n * n;
    let partials = fd::gradient(
        &|q: &[f64]| {
            let wp = weighted_point(s, q, cfg)?;
            let mut v = wp.schouten.p.into_components();
            v.extend_from_slice(wp.weyl.components());
            Ok(v)
        },
        p,
        cfg,
        s.chart.domain(),
    )?;
    let dp: Vec<Vec<f64>> = partials.iter().map(|v| v[..n2].to_vec()).collect();
    let dw: Vec<Vec<f64>> = partials.iter().map(|v| v[n2..].to_vec()).collect();
    let gamma = crate::tensor_core::christoffel(&s.chart, p, cfg)?;
    let nabla_p = covariant_from_partials(&point.schouten.p, &dp, &gamma)?;
    let nabla_w = covariant_from_partials(&point.weyl, &dw, &gamma)?;

    let mut cotton = TensorValue::zeros(n, 3);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                cotton.set(&[x, y, z], nabla_p.get3(x, y, z) - nabla_p.get3(y, x, z));
            }
        }
    }
    let order: Vec<usize> = (0..n).collect();
    let frame = orthonormal_frame(&point.g, &order)?;
    let weyl_divergence = divergence_from_nabla(&nabla_w, &frame)?;
    let iota = interior_product(&point.density.grad_vector, &point.weyl)?;
    let weighted_weyl_divergence = weyl_divergence.sub(&iota)?;
    Ok(WeightedDerivatives {
        point,
        frame,
        cotton,
        weyl_divergence,
        weighted_weyl_divergence,
    })
}

pub fn weighted_cotton(s: &SmmsChart, p: &[f64], cfg: &FdConfig) -> Result<TensorValue> {
    Ok(weighted_derivatives(s, p, cfg)?.cotton)
}

pub fn weighted_weyl_divergence(s: &SmmsChart, p: &[f64], cfg: &FdConfig) -> Result<TensorValue> {
    Ok(weighted_derivatives(s, p, cfg)?.weighted_weyl_divergence)
}

/// `δ_f T = δT − ι_{∇f} T` for a tensor field of rank 2..=4.
pub fn weighted_divergence<F>(s: &SmmsChart, field: &F, p: &[f64], cfg: &FdConfig) -> Result<TensorValue>
where
    F: Fn(&[f64]) -> Result<TensorValue>,
{
    let div = divergence(&s.chart, field, p, cfg)?;
    let dens = scalar_calculus(&s.chart, &s.f, p, cfg)?;
    let iota = interior_product(&dens.grad_vector, &field(p)?)?;
    div.sub(&iota)
}

/// Right-hand side of the identity satisfied by `δ_f W_f^m` on a weighted
/// Einstein space with constant `λ`:
/// `(Y/m + λ){df(Y)g(X,Z) − df(Z)g(X,Y)} − (1/m){df(Y)Hes(X,Z) − df(Z)Hes(X,Y)}`.
pub fn weighted_einstein_divergence_rhs(point: &WeightedPoint, m: f64, lambda: f64) -> TensorValue {
    let n = point.g.nrows();
    let df = point.density.grad.components();
    let hess = &point.density.hess;
    let coef = point.schouten.scalars.y_fm / m + lambda;
    let mut out = TensorValue::zeros(n, 3);
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let v = coef * (df[y] * point.g[(x, z)] - df[z] * point.g[(x, y)])
                    - (df[y] * hess.get2(x, z) - df[z] * hess.get2(x, y)) / m;
                out.set(&[x, y, z], v);
            }
        }
    }
    out
}
