//! Generalized Obata equation `Hes_v + (2λv − κ) g = 0` and the rotationally
//! symmetric models built from its initial value problem.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Result, SmmsError};
use crate::tensor_core::{orthonormal_frame, scalar_calculus, ChartMetric, Domain, Interval, TensorValue};
use crate::weighted::{condition_report, ReportOptions, SmmsChart};

use super::ode::{integrate_ode, OdeOptions, Trajectory};

/// `u'' + 2λu − κ = 0`, `u(0) = ξ`, `u'(0) = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObataProblem {
    pub lambda: f64,
    pub kappa: f64,
    pub xi: f64,
}

impl ObataProblem {
    pub fn new(lambda: f64, kappa: f64, xi: f64) -> Result<Self> {
        if !(lambda.is_finite() && kappa.is_finite() && xi.is_finite()) {
            return Err(SmmsError::InvalidProblem("lambda, kappa and xi must be finite".into()));
        }
        let p = Self { lambda, kappa, xi };
        if p.f_xi() == 0.0 {
            return Err(SmmsError::InvalidProblem("2 lambda xi - kappa must be nonzero".into()));
        }
        Ok(p)
    }

    /// `f(v) = 2λv − κ`.
    pub fn f(&self, v: f64) -> f64 {
        2.0 * self.lambda * v - self.kappa
    }

    pub fn f_xi(&self) -> f64 {
        self.f(self.xi)
    }

    /// Exact `(u, u')` of the linear IVP.
    pub fn closed_form(&self, t: f64) -> (f64, f64) {
        let l = self.lambda;
        if l == 0.0 {
            return (self.xi + 0.5 * self.kappa * t * t, self.kappa * t);
        }
        let center = self.kappa / (2.0 * l);
        let amp = self.xi - center;
        let w = (2.0 * l.abs()).sqrt();
        if l > 0.0 {
            (center + amp * (w * t).cos(), -amp * w * (w * t).sin())
        } else {
            (center + amp * (w * t).cosh(), amp * w * (w * t).sinh())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    Finite(f64),
    Infinite,
}

impl Horizon {
    pub fn finite(self) -> Option<f64> {
        match self {
            Horizon::Finite(t) => Some(t),
            Horizon::Infinite => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObataOptions {
    pub ode: OdeOptions,
    /// End of integration when no closing event occurs.
    pub t_max: f64,
}

impl Default for ObataOptions {
    fn default() -> Self {
        Self {
            ode: OdeOptions::default(),
            t_max: 10.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ObataSolution {
    pub problem: ObataProblem,
    pub n: usize,
    /// First positive zero of `u'`, if any.
    pub horizon: Horizon,
    trajectory: Arc<Trajectory>,
}

impl ObataSolution {
    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    /// Right end of the computed range: `T`, or the integration limit.
    pub fn t_end(&self) -> f64 {
        self.trajectory.t_end()
    }

    /// `(u, u')` at `t` from the dense output.
    pub fn state(&self, t: f64) -> Option<(f64, f64)> {
        self.trajectory.eval(t).map(|y| (y[0], y[1]))
    }

    /// Warping factor `−u'(t)/f(ξ)`; positive near `t = 0` and `≈ t` there.
    pub fn warp(&self, t: f64) -> Option<f64> {
        self.state(t).map(|(_, up)| -up / self.problem.f_xi())
    }

    /// `(t, u, u', warp)` at every accepted step.
    pub fn rows(&self) -> Vec<[f64; 4]> {
        let fx = self.problem.f_xi();
        self.trajectory
            .ts
            .iter()
            .zip(&self.trajectory.ys)
            .map(|(&t, y)| [t, y[0], y[1], -y[1] / fx])
            .collect()
    }

    /// sup over accepted steps and midpoints of `|u − u_exact| + |u' − u'_exact|`,
    /// relative to `max(1, |u_exact|, |u'_exact|)` since the `λ < 0` solutions
    /// grow exponentially.
    pub fn closed_form_error(&self) -> f64 {
        let ts = &self.trajectory.ts;
        let mut probe: Vec<f64> = ts.clone();
        probe.extend(ts.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        probe
            .into_iter()
            .filter_map(|t| {
                let (u, up) = self.state(t)?;
                let (ue, upe) = self.problem.closed_form(t);
                Some(((u - ue).abs() + (up - upe).abs()) / ue.abs().max(upe.abs()).max(1.0))
            })
            .fold(0.0, f64::max)
    }

    /// `dt² + warp(t)² g_{S^{n−1}}` on `(0, t_end) × ℝ^{n−1}`, the round
    /// sphere written in conformally flat coordinates.
    pub fn chart(&self) -> Result<ChartMetric> {
        let n = self.n;
        let traj = Arc::clone(&self.trajectory);
        let fx = self.problem.f_xi();
        let domain = Domain::new(vec![Interval::new(0.0, self.t_end())?]).product(&Domain::unbounded(n - 1));
        let mut names = vec!["t".to_string()];
        names.extend((1..n).map(|i| format!("x{i}")));
        ChartMetric::new(names, domain, move |p| {
            let warp = traj.eval(p[0]).map(|y| -y[1] / fx).unwrap_or(f64::NAN);
            let mut g = DMatrix::zeros(n, n);
            g[(0, 0)] = 1.0;
            let h = crate::weighted::fiber_space_form_metric(&p[1..], 1.0);
            g.view_mut((1, 1), (n - 1, n - 1)).copy_from(&(h * (warp * warp)));
            g
        })
    }
}

pub fn solve_obata_ivp(prob: ObataProblem, n: usize, opts: &ObataOptions) -> Result<ObataSolution> {
    let prob = ObataProblem::new(prob.lambda, prob.kappa, prob.xi)?;
    if n < 2 {
        return Err(SmmsError::InvalidProblem(format!("dimension must be at least 2, got {n}")));
    }
    if !(opts.t_max > 0.0 && opts.t_max.is_finite()) {
        return Err(SmmsError::InvalidProblem("t_max must be positive".into()));
    }
    let rhs = move |_t: f64, y: &[f64]| vec![y[1], -prob.f(y[0])];
    let uprime = |_t: f64, y: &[f64]| y[1];
    let event: Option<&dyn Fn(f64, &[f64]) -> f64> = if prob.lambda > 0.0 { Some(&uprime) } else { None };
    let traj = integrate_ode(rhs, &[prob.xi, 0.0], (0.0, opts.t_max), &opts.ode, event)?;
    let horizon = match traj.event {
        Some((t, _)) => Horizon::Finite(t),
        None => Horizon::Infinite,
    };
    Ok(ObataSolution {
        problem: prob,
        n,
        horizon,
        trajectory: Arc::new(traj),
    })
}

/// sup over samples of `|Hes_v + (2λv − κ) g|` in an orthonormal frame, with
/// `v = e^{−f/m}`.
///
/// The equation is only implied for weighted Einstein spaces with weighted
/// harmonic Weyl tensor whose underlying metric is Einstein, so those
/// conditions are checked first.
pub fn obata_residual(s: &SmmsChart, lambda: f64, kappa: f64, samples: &[Vec<f64>], opts: &ReportOptions) -> Result<f64> {
    let report = condition_report(s, samples, &ReportOptions { lambda: Some(lambda), ..*opts })?;
    if report.einstein_residual > opts.einstein_tol {
        return Err(SmmsError::PreconditionFailed(format!(
            "not weighted Einstein with lambda = {lambda} (residual {:e})",
            report.einstein_residual
        )));
    }
    if report.harmonic_residual > opts.harmonic_tol {
        return Err(SmmsError::PreconditionFailed(format!(
            "weighted Weyl tensor is not harmonic (residual {:e})",
            report.harmonic_residual
        )));
    }
    if report.ricci_einstein_residual > opts.harmonic_tol {
        return Err(SmmsError::PreconditionFailed(format!(
            "underlying metric is not Einstein (residual {:e})",
            report.ricci_einstein_residual
        )));
    }
    let v = s.v_field();
    let n = s.n();
    let mut sup: f64 = 0.0;
    for p in samples {
        let calc = scalar_calculus(s.chart(), &v, p, &opts.fd)?;
        let g = s.chart().metric(p)?;
        let frame = orthonormal_frame(&g, &(0..n).collect::<Vec<_>>())?;
        let rhs = TensorValue::sym2_from_matrix(&g).scale(prob_f(lambda, kappa, calc.value));
        sup = sup.max(calc.hess.add(&rhs)?.in_frame(&frame).max_abs());
    }
    Ok(sup)
}

fn prob_f(lambda: f64, kappa: f64, v: f64) -> f64 {
    2.0 * lambda * v - kappa
}
