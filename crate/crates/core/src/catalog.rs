//! Constructors and expected values for the explicit model families.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SmmsError};
use crate::tensor_core::{weyl_from_bundle, ChartMetric, Domain, FdConfig, Interval, ScalarField};
use crate::warped_closed::{FiberSpec, Profile, WarpedSmms};
use crate::weighted::{weighted_derivatives, weighted_point, SmmsChart};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FamilyId {
    Example12,
    WeightedSphere,
    WeightedEuclidean,
    WeightedHyperbolic,
    Counterexample31,
    Counterexample32,
    Thm41Positive,
    Thm41Zero,
    Thm41Negative,
    Example43,
    Thm14_3b,
}

impl FamilyId {
    pub const ALL: [FamilyId; 11] = [
        FamilyId::Example12,
        FamilyId::WeightedSphere,
        FamilyId::WeightedEuclidean,
        FamilyId::WeightedHyperbolic,
        FamilyId::Counterexample31,
        FamilyId::Counterexample32,
        FamilyId::Thm41Positive,
        FamilyId::Thm41Zero,
        FamilyId::Thm41Negative,
        FamilyId::Example43,
        FamilyId::Thm14_3b,
    ];

    /// Stable string id used on the command line.
    pub fn id(self) -> &'static str {
        match self {
            FamilyId::Example12 => "example-1-2",
            FamilyId::WeightedSphere => "weighted-sphere",
            FamilyId::WeightedEuclidean => "weighted-euclidean",
            FamilyId::WeightedHyperbolic => "weighted-hyperbolic",
            FamilyId::Counterexample31 => "counterexample-3-1",
            FamilyId::Counterexample32 => "counterexample-3-2",
            FamilyId::Thm41Positive => "thm-4-1-positive",
            FamilyId::Thm41Zero => "thm-4-1-zero",
            FamilyId::Thm41Negative => "thm-4-1-negative",
            FamilyId::Example43 => "example-4-3",
            FamilyId::Thm14_3b => "thm-1-4-3b",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            FamilyId::Example12 => "non-Einstein warped product over a flat fiber, m = 1/2 (params: n, A, B)",
            FamilyId::WeightedSphere => "m-weighted n-sphere of curvature 2λ (params: n, m, lambda > 0, A, B)",
            FamilyId::WeightedEuclidean => "m-weighted n-Euclidean space (params: n, m, A, B)",
            FamilyId::WeightedHyperbolic => "m-weighted n-hyperbolic space of curvature 2λ (params: n, m, lambda < 0, A, B)",
            FamilyId::Counterexample31 => "weighted Einstein, not weighted harmonic unless m = 1/2 (params: m)",
            FamilyId::Counterexample32 => "3-dimensional weighted Einstein, not weighted harmonic, m = 1/2",
            FamilyId::Thm41Positive => "Einstein warped product, lambda > 0 (params: n, m, lambda, c1..c4)",
            FamilyId::Thm41Zero => "Einstein warped product, lambda = 0 (params: n, m, c1..c4)",
            FamilyId::Thm41Negative => "Einstein warped product, lambda < 0 (params: n, m, lambda, c1..c4)",
            FamilyId::Example43 => "n = 5 warped product over two surfaces, not conformally flat (params: m, lambda, c1..c4)",
            FamilyId::Thm14_3b => "complete Einstein warped product over a Ricci-flat fiber (params: n, m, lambda < 0, A, B, C)",
        }
    }
}

impl fmt::Display for FamilyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for FamilyId {
    type Err = SmmsError;

    fn from_str(s: &str) -> Result<Self> {
        FamilyId::ALL
            .into_iter()
            .find(|id| id.id() == s)
            .ok_or_else(|| SmmsError::UnknownFamily(s.to_string()))
    }
}

/// Parameter record; entries a family does not use stay `None`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FamilyParams {
    pub n: Option<usize>,
    pub m: Option<f64>,
    pub lambda: Option<f64>,
    pub mu: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub c1: Option<f64>,
    pub c2: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
}

impl FamilyParams {
    /// A valid parameter choice for every family, used by `list` and tests.
    pub fn canonical(id: FamilyId) -> Self {
        let base = FamilyParams::default();
        match id {
            FamilyId::Example12 => FamilyParams { n: Some(4), a: Some(1.0), b: Some(1.0), ..base },
            FamilyId::WeightedSphere => FamilyParams { n: Some(3), m: Some(2.0), lambda: Some(0.5), a: Some(2.0), b: Some(1.0), ..base },
            FamilyId::WeightedEuclidean => FamilyParams { n: Some(3), m: Some(2.0), a: Some(1.0), b: Some(0.5), ..base },
            FamilyId::WeightedHyperbolic => FamilyParams { n: Some(3), m: Some(2.0), lambda: Some(-0.5), a: Some(0.5), b: Some(1.0), ..base },
            FamilyId::Counterexample31 => FamilyParams { m: Some(1.0), ..base },
            FamilyId::Counterexample32 => base,
            FamilyId::Thm41Positive => FamilyParams {
                n: Some(4), m: Some(2.0), lambda: Some(0.5),
                c1: Some(1.0), c2: Some(0.3), c3: Some(2.0), c4: Some(0.5), ..base
            },
            FamilyId::Thm41Zero => FamilyParams {
                n: Some(4), m: Some(2.0),
                c1: Some(1.0), c2: Some(1.0), c3: Some(2.0), c4: Some(0.25), ..base
            },
            FamilyId::Thm41Negative => FamilyParams {
                n: Some(4), m: Some(2.0), lambda: Some(-0.5),
                c1: Some(1.0), c2: Some(0.5), c3: Some(2.0), c4: Some(0.25), ..base
            },
            FamilyId::Example43 => FamilyParams {
                m: Some(2.0), lambda: Some(0.5),
                c1: Some(1.0), c2: Some(0.3), c3: Some(2.0), c4: Some(0.5), ..base
            },
            FamilyId::Thm14_3b => FamilyParams {
                n: Some(4), m: Some(2.0), lambda: Some(-0.5), a: Some(1.0), b: Some(2.0), c: Some(1.0), ..base
            },
        }
    }
}

#[derive(Debug, Clone)]
pub enum FamilyObject {
    Warped(WarpedSmms),
    Chart(SmmsChart),
}

impl FamilyObject {
    pub fn smms_chart(&self) -> Result<SmmsChart> {
        match self {
            FamilyObject::Warped(w) => w.warped_chart(),
            FamilyObject::Chart(c) => Ok(c.clone()),
        }
    }

    pub fn as_warped(&self) -> Option<&WarpedSmms> {
        match self {
            FamilyObject::Warped(w) => Some(w),
            FamilyObject::Chart(_) => None,
        }
    }

    pub fn n(&self) -> usize {
        match self {
            FamilyObject::Warped(w) => w.n(),
            FamilyObject::Chart(c) => c.n(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GoldenQuantity {
    WeightedWeyl,
    WeightedWeylDivergence,
    /// Unweighted Weyl tensor.
    Weyl,
    ScalarCurvature,
    RicciTT,
}

/// A coordinate component with a known exact value.
#[derive(Debug, Clone, PartialEq)]
pub struct GoldenComponent {
    pub name: String,
    pub quantity: GoldenQuantity,
    pub indices: Vec<usize>,
    pub point: Vec<f64>,
    pub value: f64,
    /// Closed formula the value comes from.
    pub formula: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Marker {
    /// `A = B`: the punctured sphere.
    StandardSphere,
    /// `A = 0`: the upper hemisphere, quasi-Einstein.
    PositiveEllipticGaussian,
    /// Defined only on part of the model space.
    IncompleteDomain,
    /// Scale zero.
    QuasiEinstein,
    /// `δ_f W_f^m ≠ 0`.
    NotWeightedHarmonic,
    /// `m = 1` leaves `μ` free.
    MuFree,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilyExpected {
    pub lambda: f64,
    pub kappa: Option<f64>,
    pub kappa_formula: Option<&'static str>,
    pub mu_forced: Option<f64>,
    pub beta_forced: Option<f64>,
    pub weighted_harmonic: bool,
    pub golden_components: Vec<GoldenComponent>,
    pub markers: Vec<Marker>,
}

fn violation(id: FamilyId, clause: &str) -> SmmsError {
    SmmsError::ParamConstraintViolation {
        family: id.id().to_string(),
        clause: clause.to_string(),
    }
}

fn need<T: Copy>(id: FamilyId, v: Option<T>, name: &str) -> Result<T> {
    v.ok_or_else(|| SmmsError::MissingParam {
        family: id.id().to_string(),
        param: name.to_string(),
    })
}

fn need_finite(id: FamilyId, v: Option<f64>, name: &str) -> Result<f64> {
    let x = need(id, v, name)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(violation(id, &format!("{name} finite")))
    }
}

fn fixed(id: FamilyId, v: Option<f64>, want: f64, clause: &str) -> Result<f64> {
    match v {
        Some(x) if (x - want).abs() > 1e-14 => Err(violation(id, clause)),
        _ => Ok(want),
    }
}

fn fixed_n(id: FamilyId, n: Option<usize>, want: usize) -> Result<usize> {
    match n {
        Some(k) if k != want => Err(violation(id, &format!("n={want}"))),
        _ => Ok(want),
    }
}

fn dim(id: FamilyId, n: Option<usize>) -> Result<usize> {
    let n = need(id, n, "n")?;
    if n < 3 {
        return Err(violation(id, "n>=3"));
    }
    Ok(n)
}

fn positive_m(id: FamilyId, m: Option<f64>) -> Result<f64> {
    let m = need_finite(id, m, "m")?;
    if m <= 0.0 {
        return Err(violation(id, "m>0"));
    }
    Ok(m)
}

/// `μ` is forced unless `m = 1`, where it is free (default 0).
fn mu_for(m: f64, forced: f64, given: Option<f64>) -> (f64, Option<f64>) {
    if m == 1.0 {
        (given.unwrap_or(0.0), None)
    } else {
        (forced, Some(forced))
    }
}

/// Jet of `-m log v` from the jet of `v`.
fn log_density(m: f64, v: [f64; 3]) -> [f64; 3] {
    let [v0, v1, v2] = v;
    [-m * v0.ln(), -m * v1 / v0, -m * (v2 / v0 - v1 * v1 / (v0 * v0))]
}

fn unit_sphere_fiber(n: usize) -> Result<FiberSpec> {
    FiberSpec::space_form(n - 1, n as f64 - 2.0)
}

fn einstein_fiber(n: usize, beta: f64) -> Result<FiberSpec> {
    if beta == 0.0 {
        FiberSpec::flat(n - 1)
    } else {
        FiberSpec::space_form(n - 1, beta)
    }
}

/// Warping and `v` jets of the Einstein-case families, with `β` and `μ`.
struct EinsteinData {
    lambda: f64,
    phi: std::sync::Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>,
    v: std::sync::Arc<dyn Fn(f64) -> [f64; 3] + Send + Sync>,
    beta: f64,
    mu: f64,
    kappa: f64,
    kappa_formula: &'static str,
    interval: Interval,
}

fn largest_positive_interval(fs: &[&dyn Fn(f64) -> f64], scale: f64) -> Interval {
    let limit = 40.0 * scale;
    let h = 1e-3 * scale;
    let ok = |t: f64| fs.iter().all(|f| f(t) > 0.0);
    let edge = |dir: f64| -> f64 {
        let mut t = 0.0;
        while t < limit {
            let next = t + h;
            if !ok(dir * next) {
                let (mut a, mut b) = (t, next);
                for _ in 0..80 {
                    let mid = 0.5 * (a + b);
                    if ok(dir * mid) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                return dir * b;
            }
            t = next;
        }
        dir * f64::INFINITY
    };
    Interval {
        lo: edge(-1.0),
        hi: edge(1.0),
    }
}

fn thm41_data(id: FamilyId, sign: i8, n: usize, p: &FamilyParams) -> Result<EinsteinData> {
    let nf = n as f64;
    let c1 = need_finite(id, p.c1, "c1")?;
    let c2 = need_finite(id, p.c2, "c2")?;
    let c3 = need_finite(id, p.c3, "c3")?;
    let c4 = need_finite(id, p.c4, "c4")?;
    if c4 == 0.0 {
        return Err(violation(id, "c4!=0"));
    }
    let data = match sign {
        1 => {
            let lambda = need_finite(id, p.lambda, "lambda")?;
            if lambda <= 0.0 {
                return Err(violation(id, "lambda>0"));
            }
            if !(c1 > 0.0 && c3 > 0.0) {
                return Err(violation(id, "c1,c3>0"));
            }
            let w = (2.0 * lambda).sqrt();
            EinsteinData {
                lambda,
                phi: std::sync::Arc::new(move |t: f64| {
                    let (s, c) = (w * t).sin_cos();
                    [c1 * c + c2 * s, w * (c2 * c - c1 * s), -w * w * (c1 * c + c2 * s)]
                }),
                v: std::sync::Arc::new(move |t: f64| {
                    let (s, c) = (w * t).sin_cos();
                    [
                        c3 + c2 * c4 * (c - 1.0) - c1 * c4 * s,
                        -w * c4 * (c2 * s + c1 * c),
                        -w * w * c4 * (c2 * c - c1 * s),
                    ]
                }),
                beta: 2.0 * (c1 * c1 + c2 * c2) * (nf - 2.0) * lambda,
                mu: 2.0 * (c1 * c1 * c4 * c4 + 2.0 * c2 * c3 * c4 - c3 * c3) * lambda,
                kappa: 2.0 * lambda * (c3 - c2 * c4),
                kappa_formula: "kappa = 2 lambda (c3 - c2 c4)",
                interval: Interval::real_line(),
            }
        }
        0 => {
            fixed(id, p.lambda, 0.0, "lambda=0")?;
            if !(c2 > 0.0 && c3 > 0.0) {
                return Err(violation(id, "c2,c3>0"));
            }
            EinsteinData {
                lambda: 0.0,
                phi: std::sync::Arc::new(move |t: f64| [c1 * t + c2, c1, 0.0]),
                v: std::sync::Arc::new(move |t: f64| {
                    [c3 - c4 * (c1 * t * t + 2.0 * c2 * t), -c4 * (2.0 * c1 * t + 2.0 * c2), -2.0 * c4 * c1]
                }),
                beta: c1 * c1 * (nf - 2.0),
                mu: 4.0 * c4 * (c1 * c3 + c2 * c2 * c4),
                kappa: -2.0 * c1 * c4,
                kappa_formula: "kappa = -2 c1 c4",
                interval: Interval::real_line(),
            }
        }
        _ => {
            let lambda = need_finite(id, p.lambda, "lambda")?;
            if lambda >= 0.0 {
                return Err(violation(id, "lambda<0"));
            }
            if !(c1 + c2 > 0.0 && c3 > 0.0) {
                return Err(violation(id, "c1+c2>0, c3>0"));
            }
            let w = (-2.0 * lambda).sqrt();
            EinsteinData {
                lambda,
                phi: std::sync::Arc::new(move |t: f64| {
                    let (ep, em) = ((w * t).exp(), (-w * t).exp());
                    [c1 * ep + c2 * em, w * (c1 * ep - c2 * em), w * w * (c1 * ep + c2 * em)]
                }),
                v: std::sync::Arc::new(move |t: f64| {
                    let (ep, em) = ((w * t).exp(), (-w * t).exp());
                    [
                        c3 + c2 * c4 * (em - 1.0) - c1 * c4 * (ep - 1.0),
                        -w * c4 * (c2 * em + c1 * ep),
                        w * w * c4 * (c2 * em - c1 * ep),
                    ]
                }),
                beta: 8.0 * c1 * c2 * (nf - 2.0) * lambda,
                mu: -2.0 * (2.0 * (c1 - c2) * c3 * c4 + (c1 + c2).powi(2) * c4 * c4 + c3 * c3) * lambda,
                kappa: 2.0 * lambda * (c3 + c4 * (c1 - c2)),
                kappa_formula: "kappa = 2 lambda (c3 + c4 (c1 - c2))",
                interval: Interval::real_line(),
            }
        }
    };
    let interval = if sign == 0 {
        // φ = c1 t + c2 and v = c3 − c4(c1 t² + 2 c2 t): roots are explicit.
        let mut roots = Vec::new();
        if c1 != 0.0 {
            roots.push(-c2 / c1);
        }
        let (qa, qb, qc) = (-c4 * c1, -2.0 * c4 * c2, c3);
        if qa == 0.0 {
            roots.push(-qc / qb);
        } else {
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let s = disc.sqrt();
                roots.push((-qb - s) / (2.0 * qa));
                roots.push((-qb + s) / (2.0 * qa));
            }
        }
        Interval {
            lo: roots.iter().copied().filter(|r| *r < 0.0).fold(f64::NEG_INFINITY, f64::max),
            hi: roots.iter().copied().filter(|r| *r > 0.0).fold(f64::INFINITY, f64::min),
        }
    } else {
        let scale = 1.0 / (2.0 * data.lambda.abs()).sqrt();
        let (phi, v) = (data.phi.clone(), data.v.clone());
        largest_positive_interval(&[&|t| phi(t)[0], &|t| v(t)[0]], scale)
    };
    Ok(EinsteinData { interval, ..data })
}

fn einstein_warped(id: FamilyId, n: usize, m: f64, data: &EinsteinData, fiber: FiberSpec, mu_given: Option<f64>) -> Result<WarpedSmms> {
    let (mu, _) = mu_for(m, data.mu, mu_given);
    let phi = data.phi.clone();
    let v = data.v.clone();
    let w = WarpedSmms::new(
        n,
        data.interval,
        Profile::with_jet(move |t| phi(t)),
        Profile::with_jet(move |t| log_density(m, v(t))),
        fiber,
        m,
        mu,
        Some(data.lambda),
    );
    w.map_err(|e| match e {
        SmmsError::NonPositiveWarp { .. } => violation(id, "phi>0 on the interval"),
        other => other,
    })
}

fn ex43_lambda_sign(id: FamilyId, p: &FamilyParams) -> Result<i8> {
    let lambda = need_finite(id, p.lambda, "lambda")?;
    Ok(if lambda > 0.0 {
        1
    } else if lambda < 0.0 {
        -1
    } else {
        0
    })
}

/// Conformally flat chart `x_1^{2a} δ_ij` on `x_1 > 0` with density `-k log x_1`.
fn power_chart(n: usize, exponent: f64, k: f64, m: f64, mu: f64) -> Result<SmmsChart> {
    let mut axes = vec![Interval::positive_half_line()];
    axes.extend(vec![Interval::real_line(); n - 1]);
    let chart = ChartMetric::with_default_names(Domain::new(axes), move |p| {
        DMatrix::from_diagonal(&DVector::from_element(n, p[0].powf(2.0 * exponent)))
    })?;
    SmmsChart::new(chart, ScalarField::new(move |p| -k * p[0].ln()), m, mu)
}

pub fn build_family(id: FamilyId, p: &FamilyParams) -> Result<FamilyObject> {
    match id {
        FamilyId::Example12 => {
            let n = dim(id, p.n)?;
            let m = fixed(id, p.m, 0.5, "m=1/2")?;
            fixed(id, p.mu, 0.0, "mu=0")?;
            fixed(id, p.lambda, 0.0, "lambda=0")?;
            let a = need_finite(id, p.a, "A")?;
            let b = need_finite(id, p.b, "B")?;
            if !(a > 0.0 && b > 0.0) {
                return Err(violation(id, "A,B>0"));
            }
            let e = 1.0 / (n as f64 - 1.0);
            let phi = Profile::with_jet(move |t| {
                let v = a * (b * t).powf(e);
                [v, e * v / t, e * (e - 1.0) * v / (t * t)]
            });
            let f = Profile::with_jet(move |t| [-(b * t).ln(), -1.0 / t, 1.0 / (t * t)]);
            Ok(FamilyObject::Warped(WarpedSmms::new(
                n,
                Interval::positive_half_line(),
                phi,
                f,
                FiberSpec::flat(n - 1)?,
                m,
                0.0,
                Some(0.0),
            )?))
        }
        FamilyId::WeightedSphere => {
            let n = dim(id, p.n)?;
            let m = positive_m(id, p.m)?;
            let lambda = need_finite(id, p.lambda, "lambda")?;
            let a = need_finite(id, p.a, "A")?;
            let b = need_finite(id, p.b, "B")?;
            if lambda <= 0.0 {
                return Err(violation(id, "lambda>0"));
            }
            let w = (2.0 * lambda).sqrt();
            let standard = a == b && a > 0.0;
            let gaussian = a == 0.0 && b > 0.0;
            let interval = if gaussian {
                Interval::new(0.0, 0.5 * PI / w)?
            } else if standard {
                Interval::new(0.0, PI / w)?
            } else {
                if b == 0.0 {
                    return Err(violation(id, "B!=0"));
                }
                if !(a > 0.0) || !(a > b.abs()) {
                    return Err(violation(id, "A>|B|"));
                }
                Interval::new(0.0, PI / w)?
            };
            let (mu, _) = mu_for(m, 2.0 * lambda * (b * b - a * a), p.mu);
            let phi = Profile::with_jet(move |t| {
                let (s, c) = (w * t).sin_cos();
                [s / w, c, -w * s]
            });
            let f = Profile::with_jet(move |t| {
                let (s, c) = (w * t).sin_cos();
                log_density(m, [a + b * c, -b * w * s, -b * w * w * c])
            });
            Ok(FamilyObject::Warped(WarpedSmms::new(
                n,
                interval,
                phi,
                f,
                unit_sphere_fiber(n)?,
                m,
                mu,
                Some(lambda),
            )?))
        }
        FamilyId::WeightedEuclidean => {
            let n = dim(id, p.n)?;
            let m = positive_m(id, p.m)?;
            fixed(id, p.lambda, 0.0, "lambda=0")?;
            let a = need_finite(id, p.a, "A")?;
            let b = need_finite(id, p.b, "B")?;
            if !(a > 0.0 && b > 0.0) {
                return Err(violation(id, "A,B>0"));
            }
            let (mu, _) = mu_for(m, -4.0 * a * b, p.mu);
            Ok(FamilyObject::Warped(WarpedSmms::new(
                n,
                Interval::positive_half_line(),
                Profile::with_jet(|t| [t, 1.0, 0.0]),
                Profile::with_jet(move |t| log_density(m, [a + b * t * t, 2.0 * b * t, 2.0 * b])),
                unit_sphere_fiber(n)?,
                m,
                mu,
                Some(0.0),
            )?))
        }
        FamilyId::WeightedHyperbolic => {
            let n = dim(id, p.n)?;
            let m = positive_m(id, p.m)?;
            let lambda = need_finite(id, p.lambda, "lambda")?;
            let a = need_finite(id, p.a, "A")?;
            let b = need_finite(id, p.b, "B")?;
            if lambda >= 0.0 {
                return Err(violation(id, "lambda<0"));
            }
            if !(b > 0.0) {
                return Err(violation(id, "B>0"));
            }
            if !(a > -b) {
                return Err(violation(id, "A>-B"));
            }
            let w = (-2.0 * lambda).sqrt();
            let (mu, _) = mu_for(m, 2.0 * lambda * (b * b - a * a), p.mu);
            Ok(FamilyObject::Warped(WarpedSmms::new(
                n,
                Interval::positive_half_line(),
                Profile::with_jet(move |t| {
                    let (s, c) = ((w * t).sinh(), (w * t).cosh());
                    [s / w, c, w * s]
                }),
                Profile::with_jet(move |t| {
                    let (s, c) = ((w * t).sinh(), (w * t).cosh());
                    log_density(m, [a + b * c, b * w * s, b * w * w * c])
                }),
                unit_sphere_fiber(n)?,
                m,
                mu,
                Some(lambda),
            )?))
        }
        FamilyId::Counterexample31 => {
            fixed_n(id, p.n, 4)?;
            let m = positive_m(id, p.m)?;
            fixed(id, p.mu, 0.0, "mu=0")?;
            Ok(FamilyObject::Chart(power_chart(4, m, 2.0 * m * (m + 1.0), m, 0.0)?))
        }
        FamilyId::Counterexample32 => {
            fixed_n(id, p.n, 3)?;
            let m = fixed(id, p.m, 0.5, "m=1/2")?;
            fixed(id, p.mu, 0.0, "mu=0")?;
            let exponent = (3.0 - 6f64.sqrt()) / 3.0;
            Ok(FamilyObject::Chart(power_chart(3, exponent, (2.0f64 / 3.0).sqrt(), m, 0.0)?))
        }
        FamilyId::Thm41Positive | FamilyId::Thm41Zero | FamilyId::Thm41Negative => {
            let n = dim(id, p.n)?;
            let m = positive_m(id, p.m)?;
            let sign = match id {
                FamilyId::Thm41Positive => 1,
                FamilyId::Thm41Zero => 0,
                _ => -1,
            };
            let data = thm41_data(id, sign, n, p)?;
            let fiber = einstein_fiber(n, data.beta)?;
            Ok(FamilyObject::Warped(einstein_warped(id, n, m, &data, fiber, p.mu)?))
        }
        FamilyId::Example43 => {
            let n = fixed_n(id, p.n, 5)?;
            let m = positive_m(id, p.m)?;
            let data = thm41_data(id, ex43_lambda_sign(id, p)?, n, p)?;
            if data.beta == 0.0 {
                return Err(violation(id, "beta!=0"));
            }
            let fiber = FiberSpec::product_of_surfaces(data.beta)?;
            Ok(FamilyObject::Warped(einstein_warped(id, n, m, &data, fiber, p.mu)?))
        }
        FamilyId::Thm14_3b => {
            let n = dim(id, p.n)?;
            let m = positive_m(id, p.m)?;
            let lambda = need_finite(id, p.lambda, "lambda")?;
            let a = need_finite(id, p.a, "A")?;
            let b = need_finite(id, p.b, "B")?;
            let c = need_finite(id, p.c, "C")?;
            if lambda >= 0.0 {
                return Err(violation(id, "lambda<0"));
            }
            if !(a > 0.0 && b > 0.0 && c > 0.0) {
                return Err(violation(id, "A,B,C>0"));
            }
            if a * c > b {
                return Err(violation(id, "AC<=B"));
            }
            let w = (-2.0 * lambda).sqrt();
            let (mu, _) = mu_for(m, -2.0 * (b - a * c).powi(2) * lambda, p.mu);
            Ok(FamilyObject::Warped(WarpedSmms::new(
                n,
                Interval::real_line(),
                Profile::with_jet(move |t| {
                    let e = (w * t).exp();
                    [a * e, a * w * e, a * w * w * e]
                }),
                Profile::with_jet(move |t| {
                    let e = (w * t).exp();
                    log_density(m, [b + a * c * (e - 1.0), a * c * w * e, a * c * w * w * e])
                }),
                FiberSpec::flat(n - 1)?,
                m,
                mu,
                Some(lambda),
            )?))
        }
    }
}

fn golden(name: &str, quantity: GoldenQuantity, indices: &[usize], point: Vec<f64>, value: f64, formula: &'static str) -> GoldenComponent {
    GoldenComponent {
        name: name.to_string(),
        quantity,
        indices: indices.to_vec(),
        point,
        value,
        formula,
    }
}

/// Fiber point used for the product-of-surfaces Weyl components.
pub const EXAMPLE43_FIBER_POINT: [f64; 4] = [0.1, -0.2, 0.15, 0.05];

pub fn family_expected(id: FamilyId, p: &FamilyParams) -> Result<FamilyExpected> {
    let obj = build_family(id, p)?;
    let m = match &obj {
        FamilyObject::Warped(w) => w.m(),
        FamilyObject::Chart(c) => c.m(),
    };
    let n = obj.n();
    let nf = n as f64;
    let mut markers = Vec::new();
    if m == 1.0 {
        markers.push(Marker::MuFree);
    }
    let mut exp = FamilyExpected {
        lambda: 0.0,
        kappa: None,
        kappa_formula: None,
        mu_forced: None,
        beta_forced: None,
        weighted_harmonic: true,
        golden_components: Vec::new(),
        markers: Vec::new(),
    };
    let forced = |mu: f64| if m == 1.0 { None } else { Some(mu) };
    match id {
        FamilyId::Example12 => {
            let (a, b) = (p.a.unwrap_or_default(), p.b.unwrap_or_default());
            let phi = a * b.powf(1.0 / (nf - 1.0));
            let mut at = vec![1.0];
            at.extend(vec![0.0; n - 1]);
            let d = (nf - 1.0) * (nf - 1.0);
            exp.golden_components = vec![
                golden("W(dt,dx1,dt,dx1)", GoldenQuantity::WeightedWeyl, &[0, 1, 0, 1], at.clone(), (nf - 2.0) * phi * phi / d, "(n-2) phi^2 / ((n-1)^2 t^2)"),
                golden("W(dx1,dx2,dx1,dx2)", GoldenQuantity::WeightedWeyl, &[1, 2, 1, 2], at.clone(), -phi.powi(4) / d, "-phi^4 / ((n-1)^2 t^2)"),
                golden("tau", GoldenQuantity::ScalarCurvature, &[], at.clone(), (nf - 2.0) / (nf - 1.0), "(n-2) / ((n-1) t^2)"),
                golden("Ric(dt,dt)", GoldenQuantity::RicciTT, &[0, 0], at, (nf - 2.0) / (nf - 1.0), "(n-2) / ((n-1) t^2)"),
            ];
            exp.kappa = Some(2.0 * b * b / (nf - 1.0));
            exp.kappa_formula = Some("kappa = 2 B^2 / (n-1)");
            exp.mu_forced = Some(0.0);
            exp.beta_forced = Some(0.0);
            markers.push(Marker::IncompleteDomain);
        }
        FamilyId::WeightedSphere => {
            let (lambda, a, b) = (p.lambda.unwrap_or_default(), p.a.unwrap_or_default(), p.b.unwrap_or_default());
            exp.lambda = lambda;
            exp.kappa = Some(2.0 * lambda * a);
            exp.kappa_formula = Some("kappa = 2 lambda A");
            exp.mu_forced = forced(2.0 * lambda * (b * b - a * a));
            exp.beta_forced = Some(nf - 2.0);
            if a == b {
                markers.push(Marker::StandardSphere);
                markers.push(Marker::IncompleteDomain);
            }
            if a == 0.0 {
                markers.push(Marker::PositiveEllipticGaussian);
                markers.push(Marker::IncompleteDomain);
                markers.push(Marker::QuasiEinstein);
            }
        }
        FamilyId::WeightedEuclidean => {
            let (a, b) = (p.a.unwrap_or_default(), p.b.unwrap_or_default());
            exp.kappa = Some(2.0 * b);
            exp.kappa_formula = Some("kappa = 2 B");
            exp.mu_forced = forced(-4.0 * a * b);
            exp.beta_forced = Some(nf - 2.0);
        }
        FamilyId::WeightedHyperbolic => {
            let (lambda, a, b) = (p.lambda.unwrap_or_default(), p.a.unwrap_or_default(), p.b.unwrap_or_default());
            exp.lambda = lambda;
            exp.kappa = Some(2.0 * lambda * a);
            exp.kappa_formula = Some("kappa = 2 lambda A");
            exp.mu_forced = forced(2.0 * lambda * (b * b - a * a));
            exp.beta_forced = Some(nf - 2.0);
            if a == 0.0 {
                markers.push(Marker::QuasiEinstein);
            }
        }
        FamilyId::Counterexample31 => {
            let value = 2.0 * m * (2.0 * m * m + m - 1.0);
            exp.golden_components = vec![golden(
                "dfW(dx2,dx1,dx2)",
                GoldenQuantity::WeightedWeylDivergence,
                &[1, 0, 1],
                vec![1.0, 0.0, 0.0, 0.0],
                value,
                "2m(2m^2+m-1) / x1^3",
            )];
            exp.mu_forced = Some(0.0);
            exp.weighted_harmonic = value == 0.0;
            if value != 0.0 {
                markers.push(Marker::NotWeightedHarmonic);
            }
        }
        FamilyId::Counterexample32 => {
            exp.golden_components = vec![golden(
                "dfW(dx2,dx1,dx2)",
                GoldenQuantity::WeightedWeylDivergence,
                &[1, 0, 1],
                vec![1.0, 0.0, 0.0],
                4.0 * (6f64.sqrt() - 3.0) / 9.0,
                "4(sqrt(6)-3) / (9 x1^3)",
            )];
            exp.mu_forced = Some(0.0);
            exp.weighted_harmonic = false;
            markers.push(Marker::NotWeightedHarmonic);
        }
        FamilyId::Thm41Positive | FamilyId::Thm41Zero | FamilyId::Thm41Negative | FamilyId::Example43 => {
            let sign = match id {
                FamilyId::Thm41Positive => 1,
                FamilyId::Thm41Zero => 0,
                FamilyId::Thm41Negative => -1,
                _ => ex43_lambda_sign(id, p)?,
            };
            let data = thm41_data(id, sign, n, p)?;
            exp.lambda = data.lambda;
            exp.kappa = Some(data.kappa);
            exp.kappa_formula = Some(data.kappa_formula);
            exp.mu_forced = forced(data.mu);
            exp.beta_forced = Some(data.beta);
            if data.kappa.abs() <= 1e-14 {
                markers.push(Marker::QuasiEinstein);
            }
            if !(data.interval.lo == f64::NEG_INFINITY && data.interval.hi == f64::INFINITY) {
                markers.push(Marker::IncompleteDomain);
            }
            if id == FamilyId::Example43 {
                let beta = data.beta;
                let phi0 = (data.phi)(0.0)[0];
                let y = EXAMPLE43_FIBER_POINT;
                let mut at = vec![0.0];
                at.extend_from_slice(&y);
                let q12 = 4.0 + beta * (y[0] * y[0] + y[1] * y[1]);
                let q34 = 4.0 + beta * (y[2] * y[2] + y[3] * y[3]);
                let k = beta * phi0 * phi0;
                let cross = -256.0 * k / (3.0 * q12 * q12 * q34 * q34);
                exp.golden_components = vec![
                    golden("W(dx1,dx2,dx1,dx2)", GoldenQuantity::Weyl, &[1, 2, 1, 2], at.clone(), 512.0 * k / (3.0 * q12.powi(4)), "512 beta phi^2 / (3 (4 + beta (x1^2+x2^2))^4)"),
                    golden("W(dx3,dx4,dx3,dx4)", GoldenQuantity::Weyl, &[3, 4, 3, 4], at.clone(), 512.0 * k / (3.0 * q34.powi(4)), "512 beta phi^2 / (3 (4 + beta (x3^2+x4^2))^4)"),
                    golden("W(dx1,dx3,dx1,dx3)", GoldenQuantity::Weyl, &[1, 3, 1, 3], at.clone(), cross, "-256 beta phi^2 / (3 (4 + beta r12^2)^2 (4 + beta r34^2)^2)"),
                    golden("W(dx2,dx4,dx2,dx4)", GoldenQuantity::Weyl, &[2, 4, 2, 4], at, cross, "-256 beta phi^2 / (3 (4 + beta r12^2)^2 (4 + beta r34^2)^2)"),
                ];
            }
        }
        FamilyId::Thm14_3b => {
            let (lambda, a, b, c) = (
                p.lambda.unwrap_or_default(),
                p.a.unwrap_or_default(),
                p.b.unwrap_or_default(),
                p.c.unwrap_or_default(),
            );
            exp.lambda = lambda;
            exp.kappa = Some(2.0 * lambda * (b - a * c));
            exp.kappa_formula = Some("kappa = 2 lambda (B - A C)");
            exp.mu_forced = forced(-2.0 * (b - a * c).powi(2) * lambda);
            exp.beta_forced = Some(0.0);
        }
    }
    exp.markers = markers;
    Ok(exp)
}

/// Oracle value of a golden component on the family's chart.
pub fn golden_actual(s: &SmmsChart, gc: &GoldenComponent, cfg: &FdConfig) -> Result<f64> {
    let wp = || weighted_point(s, &gc.point, cfg);
    Ok(match gc.quantity {
        GoldenQuantity::WeightedWeyl => wp()?.weyl.get(&gc.indices),
        GoldenQuantity::WeightedWeylDivergence => {
            weighted_derivatives(s, &gc.point, cfg)?.weighted_weyl_divergence.get(&gc.indices)
        }
        GoldenQuantity::Weyl => {
            let wp = wp()?;
            weyl_from_bundle(&wp.curvature, &wp.g)?.get(&gc.indices)
        }
        GoldenQuantity::ScalarCurvature => wp()?.curvature.scalar,
        GoldenQuantity::RicciTT => wp()?.curvature.ricci.get(&gc.indices),
    })
}

/// Interior window of an interval used for sampling.
///
/// On half-lines the clearance from the finite end grows with `max(1, |end|)`,
/// matching the finite-difference step rule.
pub fn sample_window(iv: Interval) -> (f64, f64) {
    let clearance = |e: f64| 0.3 * e.abs().max(1.0);
    match (iv.lo.is_finite(), iv.hi.is_finite()) {
        (true, true) => {
            let w = iv.hi - iv.lo;
            (iv.lo + 0.1 * w, iv.hi - 0.1 * w)
        }
        (true, false) => (iv.lo + clearance(iv.lo), iv.lo + clearance(iv.lo) + 2.2),
        (false, true) => (iv.hi - clearance(iv.hi) - 2.2, iv.hi - clearance(iv.hi)),
        (false, false) => (-1.5, 1.5),
    }
}

/// Evenly spaced values of `t` inside the sample window.
pub fn sample_ts(w: &WarpedSmms, count: usize) -> Vec<f64> {
    let (a, b) = sample_window(w.interval());
    if count == 1 {
        return vec![0.5 * (a + b)];
    }
    (0..count)
        .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
        .collect()
}

fn fiber_offset(k: usize, i: usize) -> f64 {
    0.15 * (0.7 + 1.9 * k as f64 + 2.3 * i as f64).sin()
}

/// Sample points for the chart of a family object, in a fixed order.
pub fn sample_points(obj: &FamilyObject, count: usize) -> Vec<Vec<f64>> {
    match obj {
        FamilyObject::Warped(w) => sample_ts(w, count)
            .into_iter()
            .enumerate()
            .map(|(k, t)| {
                let mut p = vec![t];
                p.extend((0..w.n() - 1).map(|i| fiber_offset(k, i)));
                p
            })
            .collect(),
        FamilyObject::Chart(c) => (0..count)
            .map(|k| {
                let x1 = if count == 1 {
                    1.2
                } else {
                    0.7 + 1.3 * k as f64 / (count - 1) as f64
                };
                let mut p = vec![x1];
                p.extend((0..c.n() - 1).map(|i| fiber_offset(k, i)));
                p
            })
            .collect(),
    }
}

/// The power-law chart rewritten in arc length `t = x^{m+1}/(m+1)`:
/// `φ(t) = ((m+1)t)^{m/(m+1)}`, `f(t) = -2m log((m+1)t)`, flat fiber.
pub fn counterexample_31_as_warped(m: f64) -> Result<WarpedSmms> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(violation(FamilyId::Counterexample31, "m>0"));
    }
    let e = m / (m + 1.0);
    let k = m + 1.0;
    WarpedSmms::new(
        4,
        Interval::positive_half_line(),
        Profile::with_jet(move |t| {
            let v = (k * t).powf(e);
            [v, e * v / t, e * (e - 1.0) * v / (t * t)]
        }),
        Profile::with_jet(move |t| [-2.0 * m * (k * t).ln(), -2.0 * m / t, 2.0 * m / (t * t)]),
        FiberSpec::flat(3)?,
        m,
        0.0,
        Some(0.0),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in FamilyId::ALL {
            assert_eq!(id.id().parse::<FamilyId>().unwrap(), id);
        }
        assert!(matches!("nope".parse::<FamilyId>(), Err(SmmsError::UnknownFamily(_))));
    }

    #[test]
    fn sphere_constraint_is_named() {
        let p = FamilyParams {
            n: Some(3),
            m: Some(2.0),
            lambda: Some(0.5),
            a: Some(1.0),
            b: Some(2.0),
            ..Default::default()
        };
        match build_family(FamilyId::WeightedSphere, &p) {
            Err(SmmsError::ParamConstraintViolation { clause, .. }) => assert_eq!(clause, "A>|B|"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_param_is_reported() {
        let p = FamilyParams {
            n: Some(3),
            m: Some(2.0),
            ..Default::default()
        };
        assert!(matches!(
            build_family(FamilyId::WeightedSphere, &p),
            Err(SmmsError::MissingParam { .. })
        ));
    }

    #[test]
    fn positive_interval_of_quasi_einstein_choice() {
        let iv = largest_positive_interval(&[&|t: f64| t.cos() + t.sin(), &|t: f64| t.cos() - t.sin()], 1.0);
        assert!((iv.lo + PI / 4.0).abs() < 1e-10);
        assert!((iv.hi - PI / 4.0).abs() < 1e-10);
    }
}
