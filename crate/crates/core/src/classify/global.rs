use crate::catalog::{sample_ts, sample_window, FamilyObject, FamilyParams};
use crate::error::{Result, SmmsError};
use crate::warped_closed::WarpedSmms;
use crate::weighted::ConditionReport;

use super::{classify_branch, BranchVerdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlowupFit {
    pub diverges: bool,
    /// `k` in `ρ(∂t,∂t) ≈ c·d^{−k}`, with `d` the distance to the endpoint.
    pub rate_exponent: f64,
    pub coefficient: f64,
    pub distances: Vec<f64>,
    pub values: Vec<f64>,
}

fn endpoint_value(w: &WarpedSmms, end: Endpoint) -> f64 {
    match end {
        Endpoint::Lower => w.interval().lo,
        Endpoint::Upper => w.interval().hi,
    }
}

/// `count` values of `t` approaching a finite endpoint geometrically, at
/// distances from `min(0.1, width/4)` down to a thousandth of that.
pub fn geometric_samples(w: &WarpedSmms, end: Endpoint, count: usize) -> Result<Vec<f64>> {
    let iv = w.interval();
    let e = endpoint_value(w, end);
    if !e.is_finite() {
        return Err(SmmsError::InvalidProblem("endpoint is at infinity".into()));
    }
    if count < 2 {
        return Err(SmmsError::InsufficientSamples { needed: 2, got: count });
    }
    let d0 = if iv.is_bounded() { (0.25 * (iv.hi - iv.lo)).min(0.1) } else { 0.1 };
    let sign = if end == Endpoint::Lower { 1.0 } else { -1.0 };
    Ok((0..count)
        .map(|k| e + sign * d0 * 10f64.powf(-3.0 * k as f64 / (count - 1) as f64))
        .collect())
}

/// Log-log fit of `ρ(∂t,∂t)` against the distance to an endpoint.
pub fn blowup_probe(w: &WarpedSmms, end: Endpoint, ts: &[f64], tol: f64) -> Result<BlowupFit> {
    if ts.len() < 2 {
        return Err(SmmsError::InsufficientSamples { needed: 2, got: ts.len() });
    }
    let e = endpoint_value(w, end);
    let mut distances = Vec::with_capacity(ts.len());
    let mut values = Vec::with_capacity(ts.len());
    for &t in ts {
        if !w.interval().contains(t) {
            return Err(SmmsError::Domain { point: vec![t], axis: 0 });
        }
        distances.push((t - e).abs());
        values.push(w.warped_curvature_closed(t)?.ricci_tt);
    }
    let peak = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak < 1e-12 {
        return Ok(BlowupFit {
            diverges: false,
            rate_exponent: 0.0,
            coefficient: 0.0,
            distances,
            values,
        });
    }
    let xs: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.abs().max(1e-300).ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let nearest = distances
        .iter()
        .zip(&values)
        .min_by(|a, b| a.0.total_cmp(b.0))
        .map(|(_, v)| *v)
        .unwrap_or(0.0);
    let rate_exponent = -slope;
    Ok(BlowupFit {
        diverges: rate_exponent >= 1.0 && peak > 1.0 / tol,
        rate_exponent,
        coefficient: nearest.signum() * (my - slope * mx).exp(),
        distances,
        values,
    })
}

/// `v'` of `v = e^{−f/m}`.
fn v_prime(w: &WarpedSmms, t: f64) -> f64 {
    -w.f().jet(t)[1] * w.v(t) / w.m()
}

/// Range scanned for interior critical points: finite ends pulled in by a
/// small margin, infinite ends cut off 60 units away.
fn scan_range(w: &WarpedSmms) -> (f64, f64) {
    let iv = w.interval();
    let margin = |e: f64| 1e-6 * e.abs().max(1.0);
    let lo = if iv.lo.is_finite() { iv.lo + margin(iv.lo) } else { iv.hi.min(0.0) - 60.0 };
    let hi = if iv.hi.is_finite() { iv.hi - margin(iv.hi) } else { iv.lo.max(0.0) + 60.0 };
    (lo, hi)
}

/// Strict sign changes of `v'` in the interior, ignoring values inside a
/// dead band of `1e-9`.
pub fn critical_points_of_v(w: &WarpedSmms) -> usize {
    let (lo, hi) = scan_range(w);
    let steps = 4000;
    let mut last = 0.0f64;
    let mut count = 0;
    for k in 0..=steps {
        let t = lo + (hi - lo) * k as f64 / steps as f64;
        let d = v_prime(w, t);
        if !d.is_finite() || d.abs() <= 1e-9 {
            continue;
        }
        if last != 0.0 && d.signum() != last.signum() {
            count += 1;
        }
        last = d;
    }
    count
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IncompleteReason {
    RicciBlowup,
    /// `v = e^{−f/m}` tends to zero at a finite endpoint.
    DensityDegenerates,
    /// A finite endpoint that is neither a smooth pole nor a blowup.
    FiniteBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GlobalCase {
    Sphere,
    Euclidean,
    Hyperbolic,
    WarpedRicciFlat,
    Incomplete(IncompleteReason),
    Unmatched,
}

impl GlobalCase {
    pub fn label(self) -> &'static str {
        match self {
            GlobalCase::Sphere => "sphere",
            GlobalCase::Euclidean => "euclidean",
            GlobalCase::Hyperbolic => "hyperbolic",
            GlobalCase::WarpedRicciFlat => "warped-ricci-flat",
            GlobalCase::Incomplete(IncompleteReason::RicciBlowup) => "incomplete: ricci-blowup",
            GlobalCase::Incomplete(IncompleteReason::DensityDegenerates) => "incomplete: density-degenerates",
            GlobalCase::Incomplete(IncompleteReason::FiniteBoundary) => "incomplete: finite-boundary",
            GlobalCase::Unmatched => "unmatched",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalVerdict {
    pub case: GlobalCase,
    pub fitted_params: FamilyParams,
    /// sup-norm mismatch of the matched closed form; 0 when nothing was fitted.
    pub fit_residual: f64,
    pub quasi_einstein: bool,
    /// Interior critical points of `v` plus smooth poles where `v' = 0`.
    pub critical_points: usize,
    pub blowup: Option<BlowupFit>,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalOptions {
    /// Bound on the report's Einstein and harmonic residuals.
    pub report_tol: f64,
    /// Bound on the closed-form ODE residuals and branch defects.
    pub ode_tol: f64,
    pub fit_tol: f64,
    /// Ricci values above `1/blowup_tol` count as divergence.
    pub blowup_tol: f64,
}

impl Default for GlobalOptions {
    fn default() -> Self {
        Self {
            report_tol: 1e-4,
            ode_tol: 1e-8,
            fit_tol: 1e-6,
            blowup_tol: 1e-6,
        }
    }
}

enum EndKind {
    Open,
    CriticalPole,
    Incomplete(IncompleteReason, Option<BlowupFit>),
}

fn classify_end(w: &WarpedSmms, end: Endpoint, opts: &GlobalOptions) -> Result<EndKind> {
    let e = endpoint_value(w, end);
    if !e.is_finite() {
        return Ok(EndKind::Open);
    }
    let sign = if end == Endpoint::Lower { 1.0 } else { -1.0 };
    let t = e + sign * 1e-7 * e.abs().max(1.0);
    let phi = w.phi().jet(t);
    let v = w.v(t);
    let v_mid = w.v(w.interval().probe()).abs().max(1e-300);
    if phi[0].abs() <= 1e-5 && (phi[1].abs() - 1.0).abs() <= 1e-4 && v.abs() > 1e-5 * v_mid {
        if v_prime(w, t).abs() <= 1e-5 * v.abs().max(1.0) {
            return Ok(EndKind::CriticalPole);
        }
        return Ok(EndKind::Incomplete(IncompleteReason::FiniteBoundary, None));
    }
    let fit = blowup_probe(w, end, &geometric_samples(w, end, 9)?, opts.blowup_tol)?;
    if fit.diverges {
        return Ok(EndKind::Incomplete(IncompleteReason::RicciBlowup, Some(fit)));
    }
    if v.abs() <= 1e-5 * v_mid {
        return Ok(EndKind::Incomplete(IncompleteReason::DensityDegenerates, Some(fit)));
    }
    Ok(EndKind::Incomplete(IncompleteReason::FiniteBoundary, Some(fit)))
}

/// Least squares `y ≈ a·p(t) + b·q(t)`.
fn lsq2(ts: &[f64], ys: &[f64], p: impl Fn(f64) -> f64, q: impl Fn(f64) -> f64) -> (f64, f64) {
    let (mut spp, mut spq, mut sqq, mut spy, mut sqy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (&t, &y) in ts.iter().zip(ys) {
        let (a, b) = (p(t), q(t));
        spp += a * a;
        spq += a * b;
        sqq += b * b;
        spy += a * y;
        sqy += b * y;
    }
    let det = spp * sqq - spq * spq;
    ((spy * sqq - sqy * spq) / det, (sqy * spp - spy * spq) / det)
}

fn rel_sup(ys: &[f64], model: impl Fn(usize) -> f64) -> f64 {
    let scale = ys.iter().fold(0.0f64, |a, y| a.max(y.abs())).max(1e-300);
    ys.iter()
        .enumerate()
        .map(|(i, y)| (y - model(i)).abs())
        .fold(0.0, f64::max)
        / scale
}

fn mu_mismatch(w: &WarpedSmms, forced: f64) -> f64 {
    if w.m() == 1.0 {
        0.0
    } else {
        (w.mu() - forced).abs() / forced.abs().max(1.0)
    }
}

struct Fit {
    case: GlobalCase,
    params: FamilyParams,
    residual: f64,
    note: String,
}

fn fit_space_form(w: &WarpedSmms, lambda: f64, ts: &[f64]) -> Fit {
    let lo = w.interval().lo;
    let s: Vec<f64> = ts.iter().map(|t| t - lo).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| w.v(t)).collect();
    let phis: Vec<f64> = ts.iter().map(|&t| w.phi().value(t)).collect();
    let (case, (a, b), phi_model, mu_forced): (GlobalCase, (f64, f64), Box<dyn Fn(f64) -> f64>, Box<dyn Fn(f64, f64) -> f64>) =
        if lambda > 0.0 {
            let r = (2.0 * lambda).sqrt();
            (
                GlobalCase::Sphere,
                lsq2(&s, &vs, |_| 1.0, |x| (r * x).cos()),
                Box::new(move |x| (r * x).sin() / r),
                Box::new(move |a, b| 2.0 * lambda * (b * b - a * a)),
            )
        } else if lambda < 0.0 {
            let r = (-2.0 * lambda).sqrt();
            (
                GlobalCase::Hyperbolic,
                lsq2(&s, &vs, |_| 1.0, |x| (r * x).cosh()),
                Box::new(move |x| (r * x).sinh() / r),
                Box::new(move |a, b| 2.0 * lambda * (b * b - a * a)),
            )
        } else {
            (
                GlobalCase::Euclidean,
                lsq2(&s, &vs, |_| 1.0, |x| x * x),
                Box::new(|x| x),
                Box::new(|a, b| -4.0 * a * b),
            )
        };
    let basis = |x: f64| match case {
        GlobalCase::Sphere => ((2.0 * lambda).sqrt() * x).cos(),
        GlobalCase::Hyperbolic => ((-2.0 * lambda).sqrt() * x).cosh(),
        _ => x * x,
    };
    let residual = rel_sup(&vs, |i| a + b * basis(s[i]))
        + rel_sup(&phis, |i| phi_model(s[i]))
        + mu_mismatch(w, mu_forced(a, b));
    Fit {
        case,
        params: FamilyParams {
            n: Some(w.n()),
            m: Some(w.m()),
            lambda: Some(lambda),
            mu: Some(w.mu()),
            a: Some(a),
            b: Some(b),
            ..Default::default()
        },
        residual,
        note: String::new(),
    }
}

fn fit_warped_ricci_flat(w: &WarpedSmms, lambda: f64, ts: &[f64]) -> Fit {
    let r = (-2.0 * lambda).sqrt();
    let sign = w.phi().jet(0.0)[1].signum();
    let k = ts.len() as f64;
    let log_a = ts.iter().map(|&t| w.phi().value(t).ln() - sign * r * t).sum::<f64>() / k;
    let a = log_a.exp();
    let vs: Vec<f64> = ts.iter().map(|&t| w.v(t)).collect();
    let phis: Vec<f64> = ts.iter().map(|&t| w.phi().value(t)).collect();
    let (b, ac) = lsq2(ts, &vs, |_| 1.0, |t| (sign * r * t).exp() - 1.0);
    let c = ac / a;
    let residual = rel_sup(&vs, |i| b + ac * ((sign * r * ts[i]).exp() - 1.0))
        + rel_sup(&phis, |i| a * (sign * r * ts[i]).exp())
        + mu_mismatch(w, -2.0 * (b - ac).powi(2) * lambda);
    let note = if ac > b * (1.0 + 1e-9) {
        format!("constraint AC <= B fails: AC = {ac}, B = {b}")
    } else if sign < 0.0 {
        "matched after t -> -t".to_string()
    } else {
        String::new()
    };
    Fit {
        case: GlobalCase::WarpedRicciFlat,
        params: FamilyParams {
            n: Some(w.n()),
            m: Some(w.m()),
            lambda: Some(lambda),
            mu: Some(w.mu()),
            a: Some(a),
            b: Some(b),
            c: Some(c),
            ..Default::default()
        },
        residual,
        note,
    }
}

/// Identifies a weighted Einstein warped product with weighted harmonic Weyl
/// tensor with one of the complete models, or names the obstruction. Plain
/// charts carry no warped structure to fit and always come back unmatched.
pub fn match_global(obj: &FamilyObject, report: &ConditionReport, opts: &GlobalOptions) -> GlobalVerdict {
    let w = match obj {
        FamilyObject::Warped(w) => w,
        FamilyObject::Chart(_) => {
            let residuals_ok = report.einstein_residual <= opts.report_tol && report.harmonic_residual <= opts.report_tol;
            let note = if residuals_ok { "not a warped product" } else { "residuals above tolerance" };
            return unmatched(report, note.into());
        }
    };
    match match_global_inner(w, report, opts) {
        Ok(v) => v,
        Err(e) => unmatched(report, format!("evaluation failed: {e}")),
    }
}

fn unmatched(report: &ConditionReport, note: String) -> GlobalVerdict {
    GlobalVerdict {
        case: GlobalCase::Unmatched,
        fitted_params: FamilyParams::default(),
        fit_residual: report.einstein_residual.max(report.harmonic_residual),
        quasi_einstein: false,
        critical_points: 0,
        blowup: None,
        note,
    }
}

fn match_global_inner(w: &WarpedSmms, report: &ConditionReport, opts: &GlobalOptions) -> Result<GlobalVerdict> {
    if !(report.einstein_residual <= opts.report_tol && report.harmonic_residual <= opts.report_tol) {
        return Ok(unmatched(
            report,
            format!(
                "residuals above tolerance (einstein {:e}, harmonic {:e})",
                report.einstein_residual, report.harmonic_residual
            ),
        ));
    }
    let quasi_einstein = report.kappa.abs() <= 1e-6;
    let ts = sample_ts(w, 17);
    let branch = classify_branch(w, &ts, opts.ode_tol)?;
    let interior = critical_points_of_v(w);
    let mut verdict = GlobalVerdict {
        case: GlobalCase::Unmatched,
        fitted_params: FamilyParams::default(),
        fit_residual: 0.0,
        quasi_einstein,
        critical_points: interior,
        blowup: None,
        note: String::new(),
    };

    let lambda = match branch.verdict {
        BranchVerdict::Indeterminate => {
            verdict.note = "branch indeterminate".into();
            return Ok(verdict);
        }
        BranchVerdict::NonEinsteinExample12 { a, b, fit_residual } => {
            verdict.fitted_params = FamilyParams {
                n: Some(w.n()),
                m: Some(w.m()),
                lambda: Some(0.0),
                mu: Some(w.mu()),
                a: Some(a),
                b: Some(b),
                ..Default::default()
            };
            verdict.fit_residual = fit_residual;
            None
        }
        BranchVerdict::Einstein { lambda, .. } => Some(if lambda.abs() <= opts.ode_tol { 0.0 } else { lambda }),
    };

    let mut poles = 0;
    let mut worst: Option<(IncompleteReason, Option<BlowupFit>)> = None;
    for end in [Endpoint::Lower, Endpoint::Upper] {
        match classify_end(w, end, opts)? {
            EndKind::Open => {}
            EndKind::CriticalPole => poles += 1,
            EndKind::Incomplete(reason, fit) => {
                let rank = |r: IncompleteReason| match r {
                    IncompleteReason::RicciBlowup => 0,
                    IncompleteReason::DensityDegenerates => 1,
                    IncompleteReason::FiniteBoundary => 2,
                };
                if worst.as_ref().is_none_or(|(r, _)| rank(reason) < rank(*r)) {
                    worst = Some((reason, fit));
                }
            }
        }
    }
    verdict.critical_points = interior + poles;
    if let Some((reason, fit)) = worst {
        verdict.case = GlobalCase::Incomplete(reason);
        verdict.blowup = fit;
        return Ok(verdict);
    }
    let Some(lambda) = lambda else {
        verdict.note = "non-Einstein branch without a finite obstruction".into();
        return Ok(verdict);
    };

    let (a, b) = sample_window(w.interval());
    let fit_ts: Vec<f64> = (0..41).map(|k| a + (b - a) * k as f64 / 40.0).collect();
    let fit = if verdict.critical_points > 0 {
        let want_poles = if lambda > 0.0 { 2 } else { 1 };
        if interior != 0 || poles != want_poles {
            verdict.note = format!("{interior} interior critical points and {poles} poles");
            return Ok(verdict);
        }
        fit_space_form(w, lambda, &fit_ts)
    } else if lambda < 0.0 && !w.interval().lo.is_finite() && !w.interval().hi.is_finite() {
        fit_warped_ricci_flat(w, lambda, &fit_ts)
    } else {
        verdict.note = "no critical points of v and no complete warped model".into();
        return Ok(verdict);
    };
    verdict.fitted_params = fit.params;
    verdict.fit_residual = fit.residual;
    verdict.note = fit.note;
    let constraint_ok = !verdict.note.starts_with("constraint");
    if fit.residual <= opts.fit_tol && constraint_ok {
        verdict.case = fit.case;
    }
    Ok(verdict)
}
