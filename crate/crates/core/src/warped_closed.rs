//! Closed-form curvature of warped products `I ×_φ N` over an Einstein fiber.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Result, SmmsError};
use crate::tensor_core::{fd, ChartMetric, Domain, Interval, ScalarField};
use crate::weighted::{fiber_space_form_metric, SmmsChart};

type JetFn = dyn Fn(f64) -> [f64; 3] + Send + Sync;
type ValueFn = dyn Fn(f64) -> f64 + Send + Sync;

/// Function of one variable with optional exact first and second derivatives.
#[derive(Clone)]
pub struct Profile {
    value: Arc<ValueFn>,
    jet: Option<Arc<JetFn>>,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Profile")
            .field("exact_jet", &self.jet.is_some())
            .finish()
    }
}

impl Profile {
    /// Derivatives will be taken by seven-point finite differences.
    pub fn new<F>(value: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            value: Arc::new(value),
            jet: None,
        }
    }

    /// `jet(t) = [h(t), h'(t), h''(t)]`.
    pub fn with_jet<J>(jet: J) -> Self
    where
        J: Fn(f64) -> [f64; 3] + Send + Sync + 'static,
    {
        let jet: Arc<JetFn> = Arc::new(jet);
        let j2 = Arc::clone(&jet);
        Self {
            value: Arc::new(move |t| j2(t)[0]),
            jet: Some(jet),
        }
    }

    pub fn has_exact_jet(&self) -> bool {
        self.jet.is_some()
    }

    /// Same values, derivatives by finite differences.
    pub fn without_jet(&self) -> Self {
        Self {
            value: Arc::clone(&self.value),
            jet: None,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    pub fn jet(&self, t: f64) -> [f64; 3] {
        match &self.jet {
            Some(j) => j(t),
            None => {
                let (d1, d2) = fd::derivatives_1d(&|s| (self.value)(s), t);
                [(self.value)(t), d1, d2]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FiberRealization {
    /// Conformally flat chart of constant sectional curvature.
    SpaceForm { curvature: f64 },
    Flat,
    /// Product of two surfaces of equal constant Gauss curvature.
    ProductOfSurfaces { gauss: f64 },
}

/// Einstein fiber with `ρ^N = β g^N`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    dim: usize,
    beta: f64,
    realization: FiberRealization,
}

impl FiberSpec {
    pub fn new(dim: usize, beta: f64, realization: FiberRealization) -> Result<Self> {
        if dim < 2 {
            return Err(SmmsError::UnrealizableFiber(format!(
                "fiber dimension must be at least 2, got {dim}"
            )));
        }
        let tol = 1e-12 * beta.abs().max(1.0);
        match realization {
            FiberRealization::SpaceForm { curvature } => {
                if (beta - (dim as f64 - 1.0) * curvature).abs() > tol {
                    return Err(SmmsError::UnrealizableFiber(format!(
                        "space form of curvature {curvature} in dimension {dim} has beta {}, not {beta}",
                        (dim as f64 - 1.0) * curvature
                    )));
                }
            }
            FiberRealization::Flat => {
                if beta != 0.0 {
                    return Err(SmmsError::UnrealizableFiber(format!(
                        "flat fiber needs beta = 0, got {beta}"
                    )));
                }
            }
            FiberRealization::ProductOfSurfaces { gauss } => {
                if dim != 4 {
                    return Err(SmmsError::UnrealizableFiber(format!(
                        "product of two surfaces has dimension 4, not {dim}"
                    )));
                }
                if (beta - gauss).abs() > tol {
                    return Err(SmmsError::UnrealizableFiber(format!(
                        "product of surfaces of Gauss curvature {gauss} has beta {gauss}, not {beta}"
                    )));
                }
            }
        }
        Ok(Self {
            dim,
            beta,
            realization,
        })
    }

    /// Space form fiber with the given Einstein constant.
    pub fn space_form(dim: usize, beta: f64) -> Result<Self> {
        let curvature = beta / (dim as f64 - 1.0);
        Self::new(dim, beta, FiberRealization::SpaceForm { curvature })
    }

    pub fn flat(dim: usize) -> Result<Self> {
        Self::new(dim, 0.0, FiberRealization::Flat)
    }

    pub fn product_of_surfaces(gauss: f64) -> Result<Self> {
        Self::new(4, gauss, FiberRealization::ProductOfSurfaces { gauss })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn realization(&self) -> FiberRealization {
        self.realization
    }

    pub fn metric(&self, y: &[f64]) -> DMatrix<f64> {
        match self.realization {
            FiberRealization::SpaceForm { curvature } => fiber_space_form_metric(y, curvature),
            FiberRealization::Flat => DMatrix::identity(y.len(), y.len()),
            FiberRealization::ProductOfSurfaces { gauss } => {
                let mut g = DMatrix::zeros(4, 4);
                g.view_mut((0, 0), (2, 2))
                    .copy_from(&fiber_space_form_metric(&y[..2], gauss));
                g.view_mut((2, 2), (2, 2))
                    .copy_from(&fiber_space_form_metric(&y[2..], gauss));
                g
            }
        }
    }

    /// Coordinate box on which the fiber chart is defined.
    pub fn domain(&self) -> Domain {
        let boxed = |curv: f64, k: usize| {
            if curv < 0.0 {
                let r = 0.99 * (-4.0 / curv / k as f64).sqrt();
                vec![Interval { lo: -r, hi: r }; k]
            } else {
                vec![Interval::real_line(); k]
            }
        };
        match self.realization {
            FiberRealization::SpaceForm { curvature } => Domain::new(boxed(curvature, self.dim)),
            FiberRealization::Flat => Domain::unbounded(self.dim),
            FiberRealization::ProductOfSurfaces { gauss } => {
                let mut axes = boxed(gauss, 2);
                axes.extend(boxed(gauss, 2));
                Domain::new(axes)
            }
        }
    }
}

/// Warped product SMMS `(I ×_φ N, dt² + φ² g^N, f(t), m, μ)`.
#[derive(Debug, Clone)]
pub struct WarpedSmms {
    n: usize,
    interval: Interval,
    phi: Profile,
    f: Profile,
    fiber: FiberSpec,
    m: f64,
    mu: f64,
    lambda_target: Option<f64>,
}

/// Closed-form curvature data at one value of `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpedCurvature {
    pub ricci_tt: f64,
    /// Ricci along a unit fiber direction.
    pub ricci_fiber_coeff: f64,
    pub hess_tt: f64,
    /// Hessian of `f` along a unit fiber direction.
    pub hess_fiber_coeff: f64,
    pub j_closed: f64,
    pub y_closed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeResiduals {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl OdeResiduals {
    pub fn max_abs(&self) -> f64 {
        self.r1.abs().max(self.r2.abs()).max(self.r3.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchProbe {
    /// `sup|φ'' + 2λφ| / sup|φ|`.
    pub einstein_defect: f64,
    /// `sup|φf' + (n−1)φ'|`, normalized by `sup(|φf'| + (n−1)|φ'|)`.
    pub branch2_defect: f64,
    /// `sup|(f')² − 2m(f'' − (n−1)λ)|`.
    pub fprime_sq_defect: f64,
}

impl WarpedSmms {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        interval: Interval,
        phi: Profile,
        f: Profile,
        fiber: FiberSpec,
        m: f64,
        mu: f64,
        lambda_target: Option<f64>,
    ) -> Result<Self> {
        if n < 3 {
            return Err(SmmsError::InvalidSmms(format!("dimension must be at least 3, got {n}")));
        }
        if fiber.dim() != n - 1 {
            return Err(SmmsError::InvalidSmms(format!(
                "fiber dimension {} does not match n - 1 = {}",
                fiber.dim(),
                n - 1
            )));
        }
        if !(m > 0.0 && m.is_finite()) {
            return Err(SmmsError::InvalidSmms(format!("m must be positive, got {m}")));
        }
        let w = Self {
            n,
            interval,
            phi,
            f,
            fiber,
            m,
            mu,
            lambda_target,
        };
        for t in w.probe_ts() {
            let v = w.phi.value(t);
            if !(v > 0.0) {
                return Err(SmmsError::NonPositiveWarp { t, value: v });
            }
        }
        Ok(w)
    }

    fn probe_ts(&self) -> Vec<f64> {
        let iv = self.interval;
        let (lo, hi) = match (iv.lo.is_finite(), iv.hi.is_finite()) {
            (true, true) => (iv.lo, iv.hi),
            (true, false) => (iv.lo, iv.lo + 10.0),
            (false, true) => (iv.hi - 10.0, iv.hi),
            (false, false) => (-5.0, 5.0),
        };
        (1..=9).map(|k| lo + (hi - lo) * k as f64 / 10.0).collect()
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn phi(&self) -> &Profile {
        &self.phi
    }

    pub fn f(&self) -> &Profile {
        &self.f
    }

    pub fn fiber(&self) -> &FiberSpec {
        &self.fiber
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn lambda_target(&self) -> Option<f64> {
        self.lambda_target
    }

    pub fn with_m(mut self, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(SmmsError::InvalidSmms(format!("m must be positive, got {m}")));
        }
        self.m = m;
        Ok(self)
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_lambda_target(mut self, lambda: Option<f64>) -> Self {
        self.lambda_target = lambda;
        self
    }

    /// `v = e^{-f/m}` at `t`.
    pub fn v(&self, t: f64) -> f64 {
        (-self.f.value(t) / self.m).exp()
    }

    fn check_t(&self, t: f64) -> Result<()> {
        if !self.interval.contains(t) {
            return Err(SmmsError::Domain {
                point: vec![t],
                axis: 0,
            });
        }
        Ok(())
    }

    fn jets(&self, t: f64) -> Result<([f64; 3], [f64; 3])> {
        self.check_t(t)?;
        let phi = self.phi.jet(t);
        if !(phi[0] > 0.0) {
            return Err(SmmsError::NonPositiveWarp { t, value: phi[0] });
        }
        let f = self.f.jet(t);
        if phi.iter().chain(&f).any(|x| !x.is_finite()) {
            return Err(SmmsError::NonFinite {
                point: vec![t],
                what: "warping or density jet".into(),
            });
        }
        Ok((phi, f))
    }

    fn j_from_jets(&self, phi: [f64; 3], f: [f64; 3]) -> f64 {
        let nf = self.n as f64;
        let m = self.m;
        let beta = self.fiber.beta();
        let [p, p1, p2] = phi;
        let [f0, f1, f2] = f;
        let mut two_k_j = (nf - 1.0) * (beta - (nf - 2.0) * p1 * p1) / (p * p)
            + 2.0 * (nf - 1.0) * (p1 * f1 - p2) / p
            + 2.0 * f2
            - (1.0 + m) / m * f1 * f1;
        if m != 1.0 {
            two_k_j += m * (m - 1.0) * (2.0 * f0 / m).exp() * self.mu;
        }
        two_k_j / (2.0 * (nf + m - 1.0))
    }

    pub fn warped_curvature_closed(&self, t: f64) -> Result<WarpedCurvature> {
        let (phi, f) = self.jets(t)?;
        let nf = self.n as f64;
        let m = self.m;
        let [p, p1, p2] = phi;
        let [_, f1, f2] = f;
        let ricci_tt = -(nf - 1.0) * p2 / p;
        let ricci_fiber_coeff = self.fiber.beta() / (p * p) - p2 / p - (nf - 2.0) * p1 * p1 / (p * p);
        let hess_fiber_coeff = p1 * f1 / p;
        let j_closed = self.j_from_jets(phi, f);
        // tr P = (tr ρ_f^m − n J)/(n+m−2)
        let rho_tt = ricci_tt + f2 - f1 * f1 / m;
        let rho_fiber = ricci_fiber_coeff + hess_fiber_coeff;
        let tr_p = (rho_tt + (nf - 1.0) * rho_fiber - nf * j_closed) / (nf + m - 2.0);
        Ok(WarpedCurvature {
            ricci_tt,
            ricci_fiber_coeff,
            hess_tt: f2,
            hess_fiber_coeff,
            j_closed,
            y_closed: j_closed - tr_p,
        })
    }

    /// Residuals of the ODE system for a weighted Einstein warped product with
    /// weighted harmonic Weyl tensor. `r2` and `r3` alone encode the weighted
    /// Einstein equations only once `r1` holds; a weighted Einstein space that
    /// is not weighted harmonic leaves all three nonzero.
    pub fn ode_residuals(&self, lambda: f64, t: f64) -> Result<OdeResiduals> {
        let (phi, f) = self.jets(t)?;
        let nf = self.n as f64;
        let m = self.m;
        let beta = self.fiber.beta();
        let [p, p1, p2] = phi;
        let [_, f1, f2] = f;
        let j = self.j_from_jets(phi, f);
        Ok(OdeResiduals {
            r1: beta - p2 * p - (nf - 2.0) * p1 * p1 - 2.0 * (nf - 1.0) * lambda * p * p,
            r2: f2 - (nf - 1.0) * p2 / p - f1 * f1 / m - p1 * f1 / p - 2.0 * (nf - 1.0) * lambda,
            r3: p1 * f1 / p + (nf - m) * lambda - j,
        })
    }

    /// Least-squares `λ` from the warping equation `r1 = 0`.
    pub fn fit_lambda(&self, ts: &[f64]) -> Result<f64> {
        let nf = self.n as f64;
        let beta = self.fiber.beta();
        let (mut num, mut den) = (0.0, 0.0);
        for &t in ts {
            let ([p, p1, p2], _) = self.jets(t)?;
            let a = 2.0 * (nf - 1.0) * p * p;
            let b = beta - p2 * p - (nf - 2.0) * p1 * p1;
            num += a * b;
            den += a * a;
        }
        if ts.is_empty() || den == 0.0 {
            return Err(SmmsError::InsufficientSamples {
                needed: 1,
                got: ts.len(),
            });
        }
        Ok(num / den)
    }

    pub fn branch_probe(&self, lambda: f64, ts: &[f64]) -> Result<BranchProbe> {
        if ts.len() < 3 {
            return Err(SmmsError::InsufficientSamples {
                needed: 3,
                got: ts.len(),
            });
        }
        let nf = self.n as f64;
        let m = self.m;
        let (mut e_num, mut e_den) = (0.0f64, 0.0f64);
        let (mut b_num, mut b_den) = (0.0f64, 0.0f64);
        let mut fsq = 0.0f64;
        for &t in ts {
            let ([p, p1, p2], [_, f1, f2]) = self.jets(t)?;
            e_num = e_num.max((p2 + 2.0 * lambda * p).abs());
            e_den = e_den.max(p.abs());
            b_num = b_num.max((p * f1 + (nf - 1.0) * p1).abs());
            b_den = b_den.max((p * f1).abs() + (nf - 1.0) * p1.abs());
            fsq = fsq.max((f1 * f1 - 2.0 * m * (f2 - (nf - 1.0) * lambda)).abs());
        }
        Ok(BranchProbe {
            einstein_defect: e_num / e_den,
            branch2_defect: if b_den > 0.0 { b_num / b_den } else { 0.0 },
            fprime_sq_defect: fsq,
        })
    }

    /// Coordinates `(t, y_1, .., y_{n-1})` with `g = dt² + φ(t)² g^N(y)`.
    pub fn warped_chart(&self) -> Result<SmmsChart> {
        let n = self.n;
        let fiber = self.fiber;
        let phi = self.phi.clone();
        let domain = Domain::new(vec![self.interval]).product(&fiber.domain());
        let mut names = vec!["t".to_string()];
        names.extend((1..n).map(|i| format!("x{i}")));
        let chart = ChartMetric::new(names, domain, move |p| {
            let mut g = DMatrix::zeros(n, n);
            g[(0, 0)] = 1.0;
            let w = phi.value(p[0]);
            g.view_mut((1, 1), (n - 1, n - 1))
                .copy_from(&(fiber.metric(&p[1..]) * (w * w)));
            g
        })?;
        let f = self.f.clone();
        SmmsChart::new(chart, ScalarField::new(move |p| f.value(p[0])), self.m, self.mu)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fiber_validation() {
        assert!(FiberSpec::space_form(3, 2.0).is_ok());
        assert!(FiberSpec::new(3, 1.0, FiberRealization::SpaceForm { curvature: 1.0 }).is_err());
        assert!(FiberSpec::new(3, 1.0, FiberRealization::Flat).is_err());
        assert!(FiberSpec::new(3, 1.0, FiberRealization::ProductOfSurfaces { gauss: 1.0 }).is_err());
        assert!(FiberSpec::product_of_surfaces(-0.5).is_ok());
    }

    #[test]
    fn constant_warp_linear_density() {
        let w = WarpedSmms::new(
            3,
            Interval::real_line(),
            Profile::with_jet(|_| [2.0, 0.0, 0.0]),
            Profile::with_jet(|t| [t, 1.0, 0.0]),
            FiberSpec::flat(2).unwrap(),
            1.0,
            0.0,
            None,
        )
        .unwrap();
        let c = w.warped_curvature_closed(0.3).unwrap();
        assert_eq!(c.ricci_tt, 0.0);
        assert_eq!(c.hess_fiber_coeff, 0.0);
    }

    #[test]
    fn fiber_einstein_rearrangement() {
        let w = WarpedSmms::new(
            4,
            Interval::new(0.0, 3.0).unwrap(),
            Profile::new(|t: f64| 1.0 + t * t),
            Profile::new(|t: f64| t.sin()),
            FiberSpec::space_form(3, 2.0).unwrap(),
            2.0,
            0.0,
            None,
        )
        .unwrap();
        for t in [0.5, 1.0, 2.5] {
            let c = w.warped_curvature_closed(t).unwrap();
            let [p, p1, p2] = w.phi().jet(t);
            let lhs = c.ricci_fiber_coeff * p * p + p2 * p + 2.0 * p1 * p1;
            assert!((lhs - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_non_positive_warp() {
        let r = WarpedSmms::new(
            3,
            Interval::new(-1.0, 1.0).unwrap(),
            Profile::new(|t: f64| t),
            Profile::new(|t: f64| t),
            FiberSpec::flat(2).unwrap(),
            1.0,
            0.0,
            None,
        );
        assert!(matches!(r, Err(SmmsError::NonPositiveWarp { .. })));
    }
}
