//! Branch classification of weighted Einstein warped products, the
//! generalized Obata equation and global matching.

mod global;
mod obata;
pub mod ode;

pub use global::{
    blowup_probe, critical_points_of_v, geometric_samples, match_global, BlowupFit, Endpoint,
    GlobalCase, GlobalOptions, GlobalVerdict, IncompleteReason,
};
pub use obata::{obata_residual, solve_obata_ivp, Horizon, ObataOptions, ObataProblem, ObataSolution};
pub use ode::{integrate_ode, OdeOptions, Trajectory};

use crate::error::Result;
use crate::warped_closed::{BranchProbe, WarpedSmms};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BranchVerdict {
    /// `φ'' + 2λφ = 0`; the underlying metric is Einstein with `ρ = 2(n−1)λ g`.
    Einstein { lambda: f64, ricci_constant: f64 },
    /// `φ = A(Bt)^{1/(n−1)}`, `f = −log(Bt)` with `m = 1/2`, `μ = β = λ = 0`.
    NonEinsteinExample12 { a: f64, b: f64, fit_residual: f64 },
    Indeterminate,
}

impl BranchVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            BranchVerdict::Einstein { .. } => "einstein",
            BranchVerdict::NonEinsteinExample12 { .. } => "non-einstein-example-1-2",
            BranchVerdict::Indeterminate => "indeterminate",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchClassification {
    pub verdict: BranchVerdict,
    pub lambda_fit: f64,
    /// sup of the ODE residuals at the fitted `λ`.
    pub ode_residual: f64,
    pub probe: BranchProbe,
    /// Set when the second branch matched but the forced data did not.
    pub forced_data_mismatch: Option<String>,
}

/// Least-squares `(A, B)` of `φ = A(Bt)^{1/(n−1)}`, `f = −log(Bt)` in log
/// coordinates, and the relative sup mismatch of the fit.
pub fn fit_example12(w: &WarpedSmms, ts: &[f64]) -> (f64, f64, f64) {
    let e = 1.0 / (w.n() as f64 - 1.0);
    let k = ts.len() as f64;
    let log_b = ts.iter().map(|&t| -w.f().value(t) - t.ln()).sum::<f64>() / k;
    let b = log_b.exp();
    let log_a = ts
        .iter()
        .map(|&t| w.phi().value(t).ln() - e * (b * t).ln())
        .sum::<f64>()
        / k;
    let a = log_a.exp();
    let mut res: f64 = 0.0;
    for &t in ts {
        let phi = w.phi().value(t);
        res = res.max((phi - a * (b * t).powf(e)).abs() / phi.abs());
        res = res.max((w.f().value(t) + (b * t).ln()).abs());
    }
    (a, b, res)
}

/// Decides which of the two local models a weighted Einstein warped product
/// with weighted harmonic Weyl tensor follows. Evidence that fits neither is
/// reported as `Indeterminate` rather than as an error.
pub fn classify_branch(w: &WarpedSmms, ts: &[f64], tol: f64) -> Result<BranchClassification> {
    let lambda_fit = w.fit_lambda(ts)?;
    let ode_residual = ts
        .iter()
        .map(|&t| w.ode_residuals(lambda_fit, t).map(|r| r.max_abs()))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let probe = w.branch_probe(lambda_fit, ts)?;
    let mut out = BranchClassification {
        verdict: BranchVerdict::Indeterminate,
        lambda_fit,
        ode_residual,
        probe,
        forced_data_mismatch: None,
    };
    if !(ode_residual <= tol) {
        return Ok(out);
    }
    if probe.einstein_defect <= tol {
        out.verdict = BranchVerdict::Einstein {
            lambda: lambda_fit,
            ricci_constant: 2.0 * (w.n() as f64 - 1.0) * lambda_fit,
        };
    } else if probe.branch2_defect <= tol {
        let mut bad = Vec::new();
        if w.m() != 0.5 {
            bad.push(format!("m = {} (expected 1/2)", w.m()));
        }
        if w.mu() != 0.0 {
            bad.push(format!("mu = {} (expected 0)", w.mu()));
        }
        if w.fiber().beta() != 0.0 {
            bad.push(format!("beta = {} (expected 0)", w.fiber().beta()));
        }
        if lambda_fit.abs() > tol {
            bad.push(format!("lambda = {lambda_fit:e} (expected 0)"));
        }
        if bad.is_empty() {
            let (a, b, fit_residual) = fit_example12(w, ts);
            out.verdict = BranchVerdict::NonEinsteinExample12 { a, b, fit_residual };
        } else {
            out.forced_data_mismatch = Some(bad.join(", "));
        }
    }
    Ok(out)
}
