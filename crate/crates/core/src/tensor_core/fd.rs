//! Central finite differences on charts.
//!
//! Every derivative in the oracle is a nested application of [`partial`], so
//! the stencil, step rule and Richardson pass live in one place.

use crate::error::{Result, SmmsError};

use super::chart::Domain;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    ThreePoint,
    FivePoint,
}

impl Stencil {
    /// Formal order of the truncation error.
    pub fn order(self) -> i32 {
        match self {
            Stencil::ThreePoint => 2,
            Stencil::FivePoint => 4,
        }
    }

    fn reach(self) -> f64 {
        match self {
            Stencil::ThreePoint => 1.0,
            Stencil::FivePoint => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdConfig {
    /// Step relative to `max(1, |x_i|)`.
    pub rel_step: f64,
    pub stencil: Stencil,
    pub richardson: bool,
}

impl Default for FdConfig {
    fn default() -> Self {
        Self {
            rel_step: 4e-3,
            stencil: Stencil::FivePoint,
            richardson: true,
        }
    }
}

impl FdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rel_step > 0.0 && self.rel_step.is_finite() {
            Ok(())
        } else {
            Err(SmmsError::InvalidProblem(format!(
                "finite-difference step must be positive, got {}",
                self.rel_step
            )))
        }
    }

    pub fn step_at(&self, x: f64) -> f64 {
        self.rel_step * x.abs().max(1.0)
    }
}

fn shifted(p: &[f64], axis: usize, delta: f64) -> Vec<f64> {
    let mut q = p.to_vec();
    q[axis] += delta;
    q
}

fn axpy(acc: &mut [f64], a: f64, x: &[f64]) {
    for (s, v) in acc.iter_mut().zip(x) {
        *s += a * v;
    }
}

fn central<F>(f: &F, p: &[f64], axis: usize, h: f64, stencil: Stencil) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let (offsets, weights, denom): (&[f64], &[f64], f64) = match stencil {
        Stencil::ThreePoint => (&[-1.0, 1.0], &[-1.0, 1.0], 2.0 * h),
        Stencil::FivePoint => (&[-2.0, -1.0, 1.0, 2.0], &[1.0, -8.0, 8.0, -1.0], 12.0 * h),
    };
    let mut acc: Option<Vec<f64>> = None;
    for (o, w) in offsets.iter().zip(weights) {
        let v = f(&shifted(p, axis, o * h))?;
        match acc.as_mut() {
            None => {
                let mut a = vec![0.0; v.len()];
                axpy(&mut a, *w, &v);
                acc = Some(a);
            }
            Some(a) => {
                if a.len() != v.len() {
                    return Err(SmmsError::RankMismatch(
                        "field changed length across the stencil".into(),
                    ));
                }
                axpy(a, *w, &v);
            }
        }
    }
    let mut out = acc.unwrap_or_default();
    for v in &mut out {
        *v /= denom;
    }
    Ok(out)
}

/// Partial derivative along `axis` of a vector-valued function at `p`.
pub fn partial<F>(f: &F, p: &[f64], axis: usize, cfg: &FdConfig, domain: &Domain) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    cfg.validate()?;
    let h = cfg.step_at(p[axis]);
    let reach = cfg.stencil.reach() * h;
    let iv = domain.axis(axis);
    if !(iv.contains(p[axis] - reach) && iv.contains(p[axis] + reach)) {
        return Err(SmmsError::Domain {
            point: p.to_vec(),
            axis,
        });
    }
    let coarse = central(f, p, axis, h, cfg.stencil)?;
    if !cfg.richardson {
        return Ok(coarse);
    }
    let fine = central(f, p, axis, 0.5 * h, cfg.stencil)?;
    let k = 2f64.powi(cfg.stencil.order());
    Ok(fine
        .iter()
        .zip(&coarse)
        .map(|(fi, co)| (k * fi - co) / (k - 1.0))
        .collect())
}

/// All first partials: `out[axis]` is `∂_axis f`.
pub fn gradient<F>(f: &F, p: &[f64], cfg: &FdConfig, domain: &Domain) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    (0..p.len()).map(|axis| partial(f, p, axis, cfg, domain)).collect()
}

/// Seven-point first and second derivatives of a function of one variable,
/// with step `1e-4 * max(1, |t|)`.
pub fn derivatives_1d<F>(f: &F, t: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let h = 1e-4 * t.abs().max(1.0);
    let v: [f64; 7] = std::array::from_fn(|k| f(t + (k as f64 - 3.0) * h));
    let d1 = (-v[0] + 9.0 * v[1] - 45.0 * v[2] + 45.0 * v[4] - 9.0 * v[5] + v[6]) / (60.0 * h);
    let d2 = (2.0 * v[0] - 27.0 * v[1] + 270.0 * v[2] - 490.0 * v[3] + 270.0 * v[4] - 27.0 * v[5]
        + 2.0 * v[6])
        / (180.0 * h * h);
    (d1, d2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_richardson_on_exp() {
        let d = Domain::unbounded(1);
        let f = |p: &[f64]| Ok(vec![p[0].exp(), p[0].sin()]);
        let g = partial(&f, &[0.3], 0, &FdConfig::default(), &d).unwrap();
        assert!((g[0] - 0.3f64.exp()).abs() < 1e-12);
        assert!((g[1] - 0.3f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn stencil_leaving_domain_is_reported() {
        let d = Domain::new(vec![super::super::chart::Interval::new(0.0, 1.0).unwrap()]);
        let f = |p: &[f64]| Ok(vec![p[0]]);
        let r = partial(&f, &[0.001], 0, &FdConfig::default(), &d);
        assert!(matches!(r, Err(SmmsError::Domain { axis: 0, .. })));
    }

    #[test]
    fn non_positive_step_rejected() {
        let cfg = FdConfig {
            rel_step: 0.0,
            ..FdConfig::default()
        };
        let f = |p: &[f64]| Ok(vec![p[0]]);
        assert!(partial(&f, &[0.0], 0, &cfg, &Domain::unbounded(1)).is_err());
    }

    #[test]
    fn seven_point_1d() {
        let (d1, d2) = derivatives_1d(&|t: f64| t.powf(1.0 / 3.0), 1.0);
        assert!((d1 - 1.0 / 3.0).abs() < 1e-10);
        assert!((d2 + 2.0 / 9.0).abs() < 1e-7);
    }
}
