use nalgebra::DMatrix;

use crate::error::{Result, SmmsError};

use super::chart::{ChartMetric, ScalarField};
use super::fd::{self, FdConfig};
use super::tensor::{kulkarni_nomizu, TensorValue};

/// Curvature quantities at one point.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    /// `R_abcd` normalized so a space form of curvature `c` has `R = (c/2) g⊘g`.
    pub riemann: TensorValue,
    pub ricci: TensorValue,
    pub scalar: f64,
    /// Largest curvature-symmetry violation of the assembled tensor before
    /// projection, relative to its largest component.
    pub raw_symmetry_defect: f64,
}

/// Gradient, Hessian and Laplacian of a scalar field at one point.
#[derive(Debug, Clone)]
pub struct ScalarCalculus {
    pub value: f64,
    /// `df` as a covector.
    pub grad: TensorValue,
    /// `∇f` with raised index.
    pub grad_vector: TensorValue,
    pub hess: TensorValue,
    pub laplacian: f64,
    pub grad_norm_sq: f64,
}

fn metric_components(chart: &ChartMetric, p: &[f64]) -> Result<Vec<f64>> {
    Ok(chart.metric(p)?.as_slice().to_vec())
}

/// `Γ^k_ij` stored with index order `[k][i][j]`.
pub fn christoffel(chart: &ChartMetric, p: &[f64], cfg: &FdConfig) -> Result<TensorValue> {
    let n = chart.dim();
    let (_, ginv) = chart.metric_and_inverse(p)?;
    let dg = fd::gradient(&|q: &[f64]| metric_components(chart, q), p, cfg, chart.domain())?;
    // nalgebra is column-major; g_ij sits at j * n + i, symmetric anyway.
    let d = |l: usize, i: usize, j: usize| dg[l][j * n + i];
    let mut lowered = vec![0.0; n * n * n];
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                lowered[(l * n + i) * n + j] = 0.5 * (d(i, l, j) + d(j, l, i) - d(l, i, j));
            }
        }
    }
    let mut out = TensorValue::zeros(n, 3);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut acc = 0.0;
                for l in 0..n {
                    acc += ginv[(k, l)] * lowered[(l * n + i) * n + j];
                }
                out.set(&[k, i, j], acc);
                out.set(&[k, j, i], acc);
            }
        }
    }
    Ok(out)
}

pub fn curvature_bundle(chart: &ChartMetric, p: &[f64], cfg: &FdConfig) -> Result<CurvatureBundle> {
    let n = chart.dim();
    let (g, ginv) = chart.metric_and_inverse(p)?;
    let gamma = christoffel(chart, p, cfg)?;
    let dgamma = fd::gradient(
        &|q: &[f64]| christoffel(chart, q, cfg).map(TensorValue::into_components),
        p,
        cfg,
        chart.domain(),
    )?;
    let gam = |a: usize, b: usize, c: usize| gamma.get3(a, b, c);
    let dgam = |axis: usize, a: usize, b: usize, c: usize| dgamma[axis][(a * n + b) * n + c];

    // R^a_bcd = ∂_c Γ^a_db − ∂_d Γ^a_cb + Γ^a_ce Γ^e_db − Γ^a_de Γ^e_cb
    let mut up = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dgam(c, a, d, b) - dgam(d, a, c, b);
                    for e in 0..n {
                        v += gam(a, c, e) * gam(e, d, b) - gam(a, d, e) * gam(e, c, b);
                    }
                    up[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }
    let mut raw = TensorValue::zeros(n, 4);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = 0.0;
                    for e in 0..n {
                        v += g[(a, e)] * up[((e * n + b) * n + c) * n + d];
                    }
                    raw.set(&[a, b, c, d], v);
                }
            }
        }
    }
    let raw_symmetry_defect = if raw.max_abs() > 0.0 {
        raw.riemann_symmetry_defect()
    } else {
        0.0
    };
    let riemann = TensorValue::riemann_projection(&raw)?;
    let ricci = ricci_from_riemann(&riemann, &ginv);
    let scalar = trace(&ricci, &ginv);
    Ok(CurvatureBundle {
        riemann,
        ricci,
        scalar,
        raw_symmetry_defect,
    })
}

/// Unweighted Weyl tensor `W = R − P ⊘ g` with the classical Schouten tensor
/// `P = (ρ − τ/(2(n−1)) g)/(n−2)`.
pub fn weyl_from_bundle(bundle: &CurvatureBundle, g: &DMatrix<f64>) -> Result<TensorValue> {
    let n = g.nrows() as f64;
    if n < 3.0 {
        return Err(SmmsError::RankMismatch("weyl tensor needs dimension at least 3".into()));
    }
    let gt = TensorValue::sym2_from_matrix(g);
    let schouten = bundle
        .ricci
        .sub(&gt.scale(bundle.scalar / (2.0 * (n - 1.0))))?
        .scale(1.0 / (n - 2.0));
    bundle.riemann.sub(&kulkarni_nomizu(&schouten, &gt)?)
}

/// The unweighted Weyl tensor as a tensor field.
pub fn weyl_field<'a>(chart: &'a ChartMetric, cfg: &'a FdConfig) -> impl Fn(&[f64]) -> Result<TensorValue> + 'a {
    move |q| weyl_from_bundle(&curvature_bundle(chart, q, cfg)?, &chart.metric(q)?)
}

/// `ρ_bd = g^ac R_abcd`.
pub fn ricci_from_riemann(riemann: &TensorValue, ginv: &DMatrix<f64>) -> TensorValue {
    let n = riemann.dim();
    let mut m = DMatrix::zeros(n, n);
    for b in 0..n {
        for d in 0..n {
            let mut v = 0.0;
            for a in 0..n {
                for c in 0..n {
                    v += ginv[(a, c)] * riemann.get4(a, b, c, d);
                }
            }
            m[(b, d)] = v;
        }
    }
    TensorValue::sym2_from_matrix(&m)
}

/// `g^ij T_ij` for a rank-2 tensor.
pub fn trace(t: &TensorValue, ginv: &DMatrix<f64>) -> f64 {
    let n = t.dim();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += ginv[(i, j)] * t.get2(i, j);
        }
    }
    acc
}

/// Raises the index of a covector.
pub fn raise(covector: &TensorValue, ginv: &DMatrix<f64>) -> TensorValue {
    let n = covector.dim();
    let comps = (0..n)
        .map(|i| (0..n).map(|j| ginv[(i, j)] * covector.get(&[j])).sum())
        .collect();
    TensorValue::covector(comps)
}

fn scalar_gradient(chart: &ChartMetric, s: &ScalarField, p: &[f64], cfg: &FdConfig) -> Result<Vec<f64>> {
    let d = fd::gradient(&|q: &[f64]| Ok(vec![s.eval(q)?]), p, cfg, chart.domain())?;
    Ok(d.into_iter().map(|v| v[0]).collect())
}

pub fn scalar_calculus(
    chart: &ChartMetric,
    s: &ScalarField,
    p: &[f64],
    cfg: &FdConfig,
) -> Result<ScalarCalculus> {
    let n = chart.dim();
    let (_, ginv) = chart.metric_and_inverse(p)?;
    let value = s.eval(p)?;
    let df = scalar_gradient(chart, s, p, cfg)?;
    let ddf = fd::gradient(&|q: &[f64]| scalar_gradient(chart, s, q, cfg), p, cfg, chart.domain())?;
    let gamma = christoffel(chart, p, cfg)?;
    let mut hess = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut v = 0.5 * (ddf[i][j] + ddf[j][i]);
            for (k, dk) in df.iter().enumerate() {
                v -= gamma.get3(k, i, j) * dk;
            }
            hess[(i, j)] = v;
        }
    }
    let grad = TensorValue::covector(df);
    let grad_vector = raise(&grad, &ginv);
    let grad_norm_sq = grad
        .components()
        .iter()
        .zip(grad_vector.components())
        .map(|(a, b)| a * b)
        .sum::<f64>()
        .max(0.0);
    let hess = TensorValue::sym2_from_matrix(&hess);
    let laplacian = trace(&hess, &ginv);
    Ok(ScalarCalculus {
        value,
        grad,
        grad_vector,
        hess,
        laplacian,
        grad_norm_sq,
    })
}

/// `(∇T)_{e a1 .. ar} = ∂_e T_{a1..ar} − Σ_slots Γ^s_{e a_i} T_{..s..}`, with
/// partial derivatives of the components supplied by the caller.
pub fn covariant_from_partials(
    t: &TensorValue,
    partials: &[Vec<f64>],
    gamma: &TensorValue,
) -> Result<TensorValue> {
    let n = t.dim();
    let r = t.rank();
    let size = t.components().len();
    if partials.len() != n || partials.iter().any(|v| v.len() != size) {
        return Err(SmmsError::RankMismatch(
            "partial derivatives do not match tensor shape".into(),
        ));
    }
    let mut out = vec![0.0; n * size];
    let mut idx = vec![0usize; r];
    for e in 0..n {
        for k in 0..size {
            // decode multi-index of component k
            let mut rem = k;
            for slot in (0..r).rev() {
                idx[slot] = rem % n;
                rem /= n;
            }
            let mut v = partials[e][k];
            for slot in 0..r {
                let stride = n.pow((r - 1 - slot) as u32);
                let base = k - idx[slot] * stride;
                for s in 0..n {
                    v -= gamma.get3(s, e, idx[slot]) * t.components()[base + s * stride];
                }
            }
            out[e * size + k] = v;
        }
    }
    TensorValue::from_components(n, r + 1, out)
}

/// Covariant derivative of a tensor field; the derivative index comes first.
pub fn covariant_derivative<F>(chart: &ChartMetric, field: &F, p: &[f64], cfg: &FdConfig) -> Result<TensorValue>
where
    F: Fn(&[f64]) -> Result<TensorValue>,
{
    let t = field(p)?;
    if t.rank() > 4 {
        return Err(SmmsError::RankMismatch(format!(
            "covariant derivative supports rank <= 4, got {}",
            t.rank()
        )));
    }
    let partials = fd::gradient(
        &|q: &[f64]| field(q).map(TensorValue::into_components),
        p,
        cfg,
        chart.domain(),
    )?;
    let gamma = christoffel(chart, p, cfg)?;
    covariant_from_partials(&t, &partials, &gamma)
}

/// Gram–Schmidt orthonormalization of the coordinate frame, taken in the
/// given axis order. Columns are the frame vectors.
pub fn orthonormal_frame(g: &DMatrix<f64>, order: &[usize]) -> Result<DMatrix<f64>> {
    let n = g.nrows();
    let mut frame = DMatrix::zeros(n, n);
    let inner = |u: &[f64], v: &[f64]| {
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += u[i] * g[(i, j)] * v[j];
            }
        }
        acc
    };
    let mut done: Vec<Vec<f64>> = Vec::with_capacity(n);
    for (col, &axis) in order.iter().enumerate() {
        let mut v = vec![0.0; n];
        v[axis] = 1.0;
        for u in &done {
            let c = inner(&v, u);
            for i in 0..n {
                v[i] -= c * u[i];
            }
        }
        let norm = inner(&v, &v);
        if norm <= 0.0 || !norm.is_finite() {
            return Err(SmmsError::SingularMetric {
                point: vec![],
                min_eigenvalue: norm,
            });
        }
        let norm = norm.sqrt();
        for x in &mut v {
            *x /= norm;
        }
        for i in 0..n {
            frame[(i, col)] = v[i];
        }
        done.push(v);
    }
    Ok(frame)
}

/// First-slot contraction of `∇T` over an orthonormal frame built with the
/// given Gram–Schmidt order.
pub fn divergence_from_nabla(nabla: &TensorValue, frame: &DMatrix<f64>) -> Result<TensorValue> {
    let n = nabla.dim();
    let r = nabla.rank();
    if !(3..=5).contains(&r) {
        return Err(SmmsError::RankMismatch(format!(
            "divergence needs a tensor of rank 2..=4, got ∇T of rank {r}"
        )));
    }
    let tail = n.pow((r - 2) as u32);
    // Σ_i E_i ⊗ E_i
    let mut pair = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for e in 0..n {
            for a in 0..n {
                pair[(e, a)] += frame[(e, i)] * frame[(a, i)];
            }
        }
    }
    let comps = nabla.components();
    let mut out = vec![0.0; tail];
    for e in 0..n {
        for a in 0..n {
            let w = pair[(e, a)];
            if w == 0.0 {
                continue;
            }
            let base = (e * n + a) * tail;
            for (k, o) in out.iter_mut().enumerate() {
                *o += w * comps[base + k];
            }
        }
    }
    TensorValue::from_components(n, r - 2, out)
}

/// `δT(...) = Σ_i (∇_{E_i} T)(E_i, ...)`.
pub fn divergence<F>(chart: &ChartMetric, field: &F, p: &[f64], cfg: &FdConfig) -> Result<TensorValue>
where
    F: Fn(&[f64]) -> Result<TensorValue>,
{
    let order: Vec<usize> = (0..chart.dim()).collect();
    divergence_in_order(chart, field, p, cfg, &order)
}

pub fn divergence_in_order<F>(
    chart: &ChartMetric,
    field: &F,
    p: &[f64],
    cfg: &FdConfig,
    order: &[usize],
) -> Result<TensorValue>
where
    F: Fn(&[f64]) -> Result<TensorValue>,
{
    let nabla = covariant_derivative(chart, field, p, cfg)?;
    if !(3..=5).contains(&nabla.rank()) {
        return Err(SmmsError::RankMismatch(format!(
            "divergence needs a tensor of rank 2..=4, got rank {}",
            nabla.rank() - 1
        )));
    }
    let g = chart.metric(p)?;
    let frame = orthonormal_frame(&g, order)?;
    divergence_from_nabla(&nabla, &frame)
}

/// The metric as a tensor field, for compatibility checks.
pub fn metric_field(chart: &ChartMetric) -> impl Fn(&[f64]) -> Result<TensorValue> + '_ {
    move |q| Ok(TensorValue::sym2_from_matrix(&chart.metric(q)?))
}

/// The Riemann tensor as a tensor field.
pub fn riemann_field<'a>(chart: &'a ChartMetric, cfg: &'a FdConfig) -> impl Fn(&[f64]) -> Result<TensorValue> + 'a {
    move |q| Ok(curvature_bundle(chart, q, cfg)?.riemann)
}

/// The Ricci tensor as a tensor field.
pub fn ricci_field<'a>(chart: &'a ChartMetric, cfg: &'a FdConfig) -> impl Fn(&[f64]) -> Result<TensorValue> + 'a {
    move |q| Ok(curvature_bundle(chart, q, cfg)?.ricci)
}

/// Residual of `δR(X,Y,Z) = (∇_Y ρ)(X,Z) − (∇_Z ρ)(X,Y)`, max-abs over components.
pub fn divergence_identity_defect(chart: &ChartMetric, p: &[f64], cfg: &FdConfig) -> Result<f64> {
    let n = chart.dim();
    let div_r = divergence(chart, &riemann_field(chart, cfg), p, cfg)?;
    let nabla_ric = covariant_derivative(chart, &ricci_field(chart, cfg), p, cfg)?;
    let mut worst: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            for z in 0..n {
                let rhs = nabla_ric.get3(y, x, z) - nabla_ric.get3(z, x, y);
                worst = worst.max((div_r.get3(x, y, z) - rhs).abs());
            }
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::super::chart::{Domain, Interval};
    use super::*;
    use nalgebra::DVector;

    fn sphere2() -> ChartMetric {
        let dom = Domain::new(vec![
            Interval::new(0.0, std::f64::consts::PI).unwrap(),
            Interval::real_line(),
        ]);
        ChartMetric::new(vec!["theta".into(), "phi".into()], dom, |p| {
            DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, p[0].sin().powi(2)]))
        })
        .unwrap()
    }

    #[test]
    fn flat_christoffel_vanishes() {
        let c = ChartMetric::euclidean(3);
        let g = christoffel(&c, &[0.3, -1.0, 2.0], &FdConfig::default()).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn sphere_christoffel() {
        let t = std::f64::consts::FRAC_PI_3;
        let g = christoffel(&sphere2(), &[t, 0.4], &FdConfig::default()).unwrap();
        assert!((g.get3(0, 1, 1) + 3f64.sqrt() / 4.0).abs() < 1e-10);
        assert!((g.get3(1, 0, 1) - 1.0 / 3f64.sqrt()).abs() < 1e-10);
        assert!((g.get3(1, 1, 0) - 1.0 / 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn unit_sphere_scalar_is_two() {
        let b = curvature_bundle(&sphere2(), &[1.1, 0.0], &FdConfig::default()).unwrap();
        assert!((b.scalar - 2.0).abs() < 1e-7, "scalar {}", b.scalar);
    }

    #[test]
    fn gram_schmidt_is_orthonormal() {
        let g = DMatrix::from_row_slice(3, 3, &[2.0, 0.3, 0.1, 0.3, 1.5, -0.2, 0.1, -0.2, 1.0]);
        for order in [[0, 1, 2], [2, 0, 1]] {
            let e = orthonormal_frame(&g, &order).unwrap();
            let gram = e.transpose() * &g * &e;
            assert!((gram - DMatrix::identity(3, 3)).amax() < 1e-14);
        }
    }
}
