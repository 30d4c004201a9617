use rayon::prelude::*;

use crate::error::{Result, SmmsError};
use crate::tensor_core::{FdConfig, TensorValue};

use super::{weighted_derivatives, weighted_einstein_divergence_rhs, SmmsChart, WeightedDerivatives};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub fd: FdConfig,
    /// Overrides the fitted `λ` when set.
    pub lambda: Option<f64>,
    /// Below this Einstein residual the divergence identity is checked.
    pub einstein_tol: f64,
    /// Threshold used for the branch verdict.
    pub harmonic_tol: f64,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            fd: FdConfig::default(),
            lambda: None,
            einstein_tol: 1e-5,
            harmonic_tol: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// The underlying metric is Einstein.
    Einstein,
    /// Weighted Einstein with weighted harmonic Weyl tensor but not Einstein.
    NonEinsteinExample12,
    Indeterminate,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::Einstein => "einstein",
            Branch::NonEinsteinExample12 => "non-einstein-example-1-2",
            Branch::Indeterminate => "indeterminate",
        }
    }
}

/// Per-sample values, in sample order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub point: Vec<f64>,
    pub einstein: f64,
    pub harmonic: f64,
    pub cotton: f64,
    pub weyl: f64,
    pub j_fm: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport {
    pub lambda_fit: f64,
    /// sup over samples of `|P − λ g|` in an orthonormal frame.
    pub einstein_residual: f64,
    /// sup of `|δ_f W_f^m|`.
    pub harmonic_residual: f64,
    /// sup of `|dP_f^m|`.
    pub cotton_residual: f64,
    /// sup of `|W_f^m|`.
    pub weyl_norm: f64,
    /// sup of `|ρ − (τ/n) g|`; zero when the underlying metric is Einstein.
    pub ricci_einstein_residual: f64,
    /// sup of `|ρ_f^m − ᾱ g|` with `ᾱ` the sample mean of `tr ρ_f^m / n`.
    pub quasi_einstein_residual: f64,
    pub alpha_mean: f64,
    pub kappa: f64,
    pub kappa_spread: f64,
    /// Mismatch between `δ_f W_f^m` and the weighted Einstein identity,
    /// present only when the Einstein residual is below threshold.
    pub identity_residual: Option<f64>,
    pub branch: Branch,
    pub sample_points: Vec<Vec<f64>>,
    pub samples: Vec<SampleRecord>,
}

fn frame_norm(t: &TensorValue, d: &WeightedDerivatives) -> f64 {
    t.in_frame(&d.frame).max_abs()
}

pub fn condition_report(s: &SmmsChart, samples: &[Vec<f64>], opts: &ReportOptions) -> Result<ConditionReport> {
    if samples.len() < 3 {
        return Err(SmmsError::InsufficientSamples {
            needed: 3,
            got: samples.len(),
        });
    }
    let n = s.n();
    let nf = n as f64;
    let m = s.m();
    let derivs: Vec<WeightedDerivatives> = samples
        .par_iter()
        .map(|p| weighted_derivatives(s, p, &opts.fd))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<_>>()?;

    let lambda_fit = opts.lambda.unwrap_or_else(|| {
        derivs
            .iter()
            .map(|d| crate::tensor_core::trace(&d.point.schouten.p, &d.point.ginv) / nf)
            .sum::<f64>()
            / derivs.len() as f64
    });
    let alpha_mean = derivs
        .iter()
        .map(|d| crate::tensor_core::trace(&d.point.rho_fm, &d.point.ginv) / nf)
        .sum::<f64>()
        / derivs.len() as f64;

    let mut records = Vec::with_capacity(derivs.len());
    let mut identity: f64 = 0.0;
    let mut ricci_einstein: f64 = 0.0;
    let mut quasi: f64 = 0.0;
    for (p, d) in samples.iter().zip(&derivs) {
        let wp = &d.point;
        let g = TensorValue::sym2_from_matrix(&wp.g);
        let einstein = frame_norm(&wp.schouten.p.sub(&g.scale(lambda_fit))?, d);
        let traceless_ricci = wp.curvature.ricci.sub(&g.scale(wp.curvature.scalar / nf))?;
        ricci_einstein = ricci_einstein.max(frame_norm(&traceless_ricci, d));
        quasi = quasi.max(frame_norm(&wp.rho_fm.sub(&g.scale(alpha_mean))?, d));
        let rhs = weighted_einstein_divergence_rhs(wp, m, lambda_fit);
        identity = identity.max(frame_norm(&d.weighted_weyl_divergence.sub(&rhs)?, d));
        let j_fm = wp.schouten.scalars.j_fm;
        records.push(SampleRecord {
            point: p.clone(),
            einstein,
            harmonic: frame_norm(&d.weighted_weyl_divergence, d),
            cotton: frame_norm(&d.cotton, d),
            weyl: frame_norm(&wp.weyl, d),
            j_fm,
            kappa: ((m + nf) * lambda_fit - j_fm) * (-wp.density.value / m).exp() / m,
        });
    }

    let sup = |f: fn(&SampleRecord) -> f64| records.iter().map(f).fold(0.0, f64::max);
    let einstein_residual = sup(|r| r.einstein);
    let harmonic_residual = sup(|r| r.harmonic);
    let kappa = records.iter().map(|r| r.kappa).sum::<f64>() / records.len() as f64;
    let kappa_spread = records
        .iter()
        .map(|r| (r.kappa - kappa).abs())
        .fold(0.0, f64::max);

    let branch = if einstein_residual <= opts.einstein_tol && harmonic_residual <= opts.harmonic_tol {
        if ricci_einstein <= opts.harmonic_tol {
            Branch::Einstein
        } else {
            Branch::NonEinsteinExample12
        }
    } else {
        Branch::Indeterminate
    };

    Ok(ConditionReport {
        lambda_fit,
        einstein_residual,
        harmonic_residual,
        cotton_residual: sup(|r| r.cotton),
        weyl_norm: sup(|r| r.weyl),
        ricci_einstein_residual: ricci_einstein,
        quasi_einstein_residual: quasi,
        alpha_mean,
        kappa,
        kappa_spread,
        identity_residual: (einstein_residual <= opts.einstein_tol).then_some(identity),
        branch,
        sample_points: samples.to_vec(),
        samples: records,
    })
}
