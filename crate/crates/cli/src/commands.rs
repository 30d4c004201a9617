use std::f64::consts::PI;

use serde::Serialize;
use smms_core::catalog::{
    build_family, family_expected, golden_actual, sample_points, sample_ts, FamilyId, FamilyObject, FamilyParams,
};
use smms_core::classify::{
    classify_branch, match_global, obata_residual, solve_obata_ivp, GlobalOptions, GlobalVerdict, ObataOptions,
    ObataProblem,
};
use smms_core::tensor_core::FdConfig;
use smms_core::weighted::{condition_report, weighted_point, ConditionReport, ReportOptions};
use smms_core::SmmsError;

use crate::output::{fmt_float, Csv, Num};

#[derive(Debug, Serialize)]
pub struct Params {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<Num>,
    #[serde(rename = "A", skip_serializing_if = "Option::is_none")]
    pub a: Option<Num>,
    #[serde(rename = "B", skip_serializing_if = "Option::is_none")]
    pub b: Option<Num>,
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c3: Option<Num>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c4: Option<Num>,
}

impl From<&FamilyParams> for Params {
    fn from(p: &FamilyParams) -> Self {
        Params {
            n: p.n,
            m: p.m.map(Num),
            lambda: p.lambda.map(Num),
            mu: p.mu.map(Num),
            a: p.a.map(Num),
            b: p.b.map(Num),
            c: p.c.map(Num),
            c1: p.c1.map(Num),
            c2: p.c2.map(Num),
            c3: p.c3.map(Num),
            c4: p.c4.map(Num),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Residuals {
    pub einstein: Num,
    pub harmonic: Num,
    pub cotton: Num,
    /// `None` when the Obata preconditions do not hold.
    pub obata: Option<Num>,
}

#[derive(Debug, Serialize)]
pub struct GoldenCheck {
    pub name: String,
    pub expected: Num,
    pub actual: Num,
    pub pass: bool,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub family: String,
    pub params: Params,
    pub lambda_fit: Num,
    pub kappa: Num,
    pub kappa_spread: Num,
    pub residuals: Residuals,
    pub branch: String,
    pub global_case: String,
    pub golden_checks: Vec<GoldenCheck>,
}

/// Everything `verify` and `classify` compute, before rendering.
pub struct Analysis {
    pub report: Report,
    pub condition: ConditionReport,
    pub global: GlobalVerdict,
    pub object: FamilyObject,
}

impl Analysis {
    pub fn verified(&self, tol: f64) -> bool {
        let r = &self.report.residuals;
        let within = |x: Num| x.0.is_finite() && x.0 <= tol;
        within(r.einstein)
            && within(r.harmonic)
            && within(r.cotton)
            && r.obata.is_none_or(within)
            && self.report.golden_checks.iter().all(|g| g.pass)
    }

    pub fn classified(&self) -> bool {
        self.report.branch != "indeterminate" && self.report.global_case != "unmatched"
    }

    pub fn samples_csv(&self) -> Csv {
        let names: Vec<String> = match self.object.smms_chart() {
            Ok(s) => s.chart().coord_names().to_vec(),
            Err(_) => (0..self.object.n()).map(|i| format!("x{i}")).collect(),
        };
        let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
        header.extend(["einstein", "harmonic", "cotton", "weyl", "j_fm", "kappa"]);
        let mut csv = Csv::new(&header);
        for s in &self.condition.samples {
            let mut row = s.point.clone();
            row.extend([s.einstein, s.harmonic, s.cotton, s.weyl, s.j_fm, s.kappa]);
            csv.row(row);
        }
        csv
    }

    /// Blowup fit data when the global match found one, else the profiles.
    pub fn plot_csv(&self, samples: usize) -> Csv {
        if let Some(fit) = self.global.blowup.as_ref().filter(|b| b.diverges) {
            let mut csv = Csv::new(&["distance", "ricci_tt", "fit"]);
            for (d, v) in fit.distances.iter().zip(&fit.values) {
                csv.row([*d, *v, fit.coefficient * d.powf(-fit.rate_exponent)]);
            }
            return csv;
        }
        let mut csv = Csv::new(&["t", "phi", "f", "v"]);
        if let Some(w) = self.object.as_warped() {
            for t in sample_ts(w, samples) {
                csv.row([t, w.phi().value(t), w.f().value(t), w.v(t)]);
            }
        }
        csv
    }

    pub fn text(&self) -> String {
        let r = &self.report;
        let res = &r.residuals;
        let obata = res.obata.map_or("n/a".to_string(), |x| format!("{:.3e}", x.0));
        let mut out = format!(
            "family       {}\nlambda_fit   {:.12}\nkappa        {:.12} (spread {:.3e})\n\
             einstein     {:.3e}\nharmonic     {:.3e}\ncotton       {:.3e}\nobata        {obata}\n\
             branch       {}\nglobal_case  {}\n",
            r.family,
            r.lambda_fit.0,
            r.kappa.0,
            r.kappa_spread.0,
            res.einstein.0,
            res.harmonic.0,
            res.cotton.0,
            r.branch,
            r.global_case,
        );
        if !self.global.note.is_empty() {
            out.push_str(&format!("note         {}\n", self.global.note));
        }
        for g in &r.golden_checks {
            let mark = if g.pass { "ok  " } else { "FAIL" };
            out.push_str(&format!("golden {mark} {}: expected {:.10}, got {:.10}\n", g.name, g.expected.0, g.actual.0));
        }
        out
    }
}

pub fn analyze(id: FamilyId, p: &FamilyParams, samples: usize, tol: f64) -> smms_core::Result<Analysis> {
    let object = build_family(id, p)?;
    let expected = family_expected(id, p)?;
    let chart = object.smms_chart()?;
    let points = sample_points(&object, samples);
    let opts = ReportOptions::default();
    let condition = condition_report(&chart, &points, &opts)?;

    let obata = match obata_residual(&chart, condition.lambda_fit, condition.kappa, &points, &opts) {
        Ok(r) => Some(Num(r)),
        Err(SmmsError::PreconditionFailed(_)) => None,
        Err(e) => return Err(e),
    };
    let branch = match object.as_warped() {
        Some(w) => classify_branch(w, &sample_ts(w, samples), tol)?.verdict.label(),
        None => condition.branch.label(),
    };
    let global = match_global(&object, &condition, &GlobalOptions::default());

    let cfg = FdConfig::default();
    let mut golden_checks = Vec::with_capacity(expected.golden_components.len());
    for gc in &expected.golden_components {
        let actual = golden_actual(&chart, gc, &cfg)?;
        golden_checks.push(GoldenCheck {
            name: gc.name.clone(),
            expected: Num(gc.value),
            actual: Num(actual),
            pass: (actual - gc.value).abs() <= tol * gc.value.abs().max(1.0),
        });
    }

    let report = Report {
        family: id.id().to_string(),
        params: Params::from(p),
        lambda_fit: Num(condition.lambda_fit),
        kappa: Num(condition.kappa),
        kappa_spread: Num(condition.kappa_spread),
        residuals: Residuals {
            einstein: Num(condition.einstein_residual),
            harmonic: Num(condition.harmonic_residual),
            cotton: Num(condition.cotton_residual),
            obata,
        },
        branch: branch.to_string(),
        global_case: global.case.label().to_string(),
        golden_checks,
    };
    Ok(Analysis {
        report,
        condition,
        global,
        object,
    })
}

#[derive(Debug, Serialize)]
pub struct ObataReport {
    pub lambda: Num,
    pub kappa: Num,
    pub xi: Num,
    pub n: usize,
    /// First positive zero of `u'`, `null` when the solution never turns.
    pub horizon: Option<Num>,
    pub expected_horizon: Option<Num>,
    pub t_end: Num,
    pub closed_form_error: Num,
    pub steps: usize,
}

pub struct ObataRun {
    pub report: ObataReport,
    pub rows: Vec<[f64; 4]>,
}

impl ObataRun {
    pub fn passes(&self, tol: f64) -> bool {
        let r = &self.report;
        let horizon_ok = match (r.horizon, r.expected_horizon) {
            (Some(t), Some(e)) => (t.0 - e.0).abs() <= tol,
            (None, None) => true,
            _ => false,
        };
        horizon_ok && r.closed_form_error.0 <= tol
    }

    pub fn csv(&self) -> Csv {
        let mut csv = Csv::new(&["t", "u", "uprime", "warp"]);
        for row in &self.rows {
            csv.row(*row);
        }
        csv
    }

    pub fn text(&self) -> String {
        let r = &self.report;
        let horizon = r.horizon.map_or("none".to_string(), |t| format!("{:.12}", t.0));
        let expected = r.expected_horizon.map_or("none".to_string(), |t| format!("{:.12}", t.0));
        format!(
            "lambda {}  kappa {}  xi {}  n {}\nhorizon {horizon} (expected {expected})\n\
             t_end {:.6}  steps {}\nclosed-form error {:.3e}\n",
            r.lambda.0, r.kappa.0, r.xi.0, r.n, r.t_end.0, r.steps, r.closed_form_error.0,
        )
    }
}

pub fn obata(lambda: f64, kappa: f64, xi: f64, n: usize, t_max: f64) -> smms_core::Result<ObataRun> {
    let prob = ObataProblem::new(lambda, kappa, xi)?;
    let opts = ObataOptions {
        t_max,
        ..ObataOptions::default()
    };
    let sol = solve_obata_ivp(prob, n, &opts)?;
    let expected_horizon = (lambda > 0.0).then(|| PI / (2.0 * lambda).sqrt()).filter(|t| *t < t_max);
    Ok(ObataRun {
        report: ObataReport {
            lambda: Num(lambda),
            kappa: Num(kappa),
            xi: Num(xi),
            n,
            horizon: sol.horizon.finite().map(Num),
            expected_horizon: expected_horizon.map(Num),
            t_end: Num(sol.t_end()),
            closed_form_error: Num(sol.closed_form_error()),
            steps: sol.trajectory().ts.len() - 1,
        },
        rows: sol.rows(),
    })
}

#[derive(Debug, Serialize)]
pub struct CompareRow {
    pub t: Num,
    pub quantity: &'static str,
    pub oracle: Num,
    pub closed: Num,
    pub error: Num,
}

#[derive(Debug, Serialize)]
pub struct CompareReport {
    pub family: String,
    pub params: Params,
    /// Largest `|oracle − closed| / max(1, |closed|)`.
    pub max_error: Num,
    pub pass: bool,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn csv(&self) -> Csv {
        let mut csv = Csv::new(&["t", "quantity", "oracle", "closed", "error"]);
        for r in &self.rows {
            let t = fmt_float(r.t.0);
            let (o, c, e) = (fmt_float(r.oracle.0), fmt_float(r.closed.0), fmt_float(r.error.0));
            csv.text_row(&[&t, r.quantity, &o, &c, &e]);
        }
        csv
    }

    pub fn text(&self) -> String {
        let mut out = format!("family {}\n", self.family);
        for r in &self.rows {
            out.push_str(&format!(
                "t={:<10.6} {:<12} oracle {:>20.12} closed {:>20.12} err {:.2e}\n",
                r.t.0, r.quantity, r.oracle.0, r.closed.0, r.error.0
            ));
        }
        out.push_str(&format!("max error {:.3e} ({})\n", self.max_error.0, if self.pass { "pass" } else { "FAIL" }));
        out
    }
}

/// Finite-difference oracle against the warped-product closed forms.
pub fn oracle_compare(id: FamilyId, p: &FamilyParams, samples: usize, tol: f64) -> smms_core::Result<CompareReport> {
    let object = build_family(id, p)?;
    let Some(w) = object.as_warped() else {
        return Err(SmmsError::InvalidProblem(format!("{id} has no warped-product closed form")));
    };
    let chart = w.warped_chart()?;
    let cfg = FdConfig::default();
    let mut rows = Vec::new();
    let mut max_error: f64 = 0.0;
    for pt in sample_points(&object, samples) {
        let t = pt[0];
        let closed = w.warped_curvature_closed(t)?;
        let wp = weighted_point(&chart, &pt, &cfg)?;
        let g11 = wp.g[(1, 1)];
        let pairs = [
            ("ricci_tt", wp.curvature.ricci.get(&[0, 0]), closed.ricci_tt),
            ("ricci_fiber", wp.curvature.ricci.get(&[1, 1]) / g11, closed.ricci_fiber_coeff),
            ("hess_tt", wp.density.hess.get(&[0, 0]), closed.hess_tt),
            ("hess_fiber", wp.density.hess.get(&[1, 1]) / g11, closed.hess_fiber_coeff),
            ("j_fm", wp.schouten.scalars.j_fm, closed.j_closed),
            ("y_fm", wp.schouten.scalars.y_fm, closed.y_closed),
        ];
        for (quantity, oracle, closed) in pairs {
            let error = (oracle - closed).abs() / closed.abs().max(1.0);
            max_error = max_error.max(error);
            rows.push(CompareRow {
                t: Num(t),
                quantity,
                oracle: Num(oracle),
                closed: Num(closed),
                error: Num(error),
            });
        }
    }
    Ok(CompareReport {
        family: id.id().to_string(),
        params: Params::from(p),
        max_error: Num(max_error),
        pass: max_error <= tol,
        rows,
    })
}
