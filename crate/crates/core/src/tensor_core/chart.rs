use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Result, SmmsError};

/// Smallest eigenvalue a metric may have before it is reported as singular.
pub const EIGENVALUE_FLOOR: f64 = 1e-12;

/// Open interval `(lo, hi)`; either bound may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(SmmsError::InvalidProblem(format!(
                "interval ({lo}, {hi}) is empty"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn real_line() -> Self {
        Self {
            lo: f64::NEG_INFINITY,
            hi: f64::INFINITY,
        }
    }

    pub fn positive_half_line() -> Self {
        Self {
            lo: 0.0,
            hi: f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lo && x < self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    /// A representative interior point, used to probe fields for constancy.
    pub fn probe(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.5 * (self.lo + self.hi),
            (true, false) => self.lo + 1.0,
            (false, true) => self.hi - 1.0,
            (false, false) => 0.0,
        }
    }

    /// Half-width of the probe neighbourhood that stays inside the interval.
    fn probe_radius(&self) -> f64 {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => 0.25 * (self.hi - self.lo),
            _ => 0.5,
        }
    }
}

/// Open axis-aligned box in coordinate space.
#[derive(Debug, Clone, PartialEq)]
pub struct Domain {
    axes: Vec<Interval>,
}

impl Domain {
    pub fn new(axes: Vec<Interval>) -> Self {
        Self { axes }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self {
            axes: vec![Interval::real_line(); dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axis(&self, i: usize) -> Interval {
        self.axes[i]
    }

    pub fn axes(&self) -> &[Interval] {
        &self.axes
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &Domain) -> Domain {
        let mut axes = self.axes.clone();
        axes.extend_from_slice(&other.axes);
        Domain { axes }
    }

    pub fn check(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.axes.len() {
            return Err(SmmsError::RankMismatch(format!(
                "point has {} coordinates, domain has {}",
                p.len(),
                self.axes.len()
            )));
        }
        for (axis, (x, iv)) in p.iter().zip(&self.axes).enumerate() {
            if !iv.contains(*x) {
                return Err(SmmsError::Domain {
                    point: p.to_vec(),
                    axis,
                });
            }
        }
        Ok(())
    }

    /// A handful of distinct interior points.
    pub fn probe_points(&self) -> Vec<Vec<f64>> {
        let center: Vec<f64> = self.axes.iter().map(Interval::probe).collect();
        let mut pts = vec![center.clone()];
        for (k, sign) in [(0.37, 1.0), (0.61, -1.0), (0.83, 1.0)] {
            let p = self
                .axes
                .iter()
                .enumerate()
                .map(|(i, iv)| {
                    let wobble = if i % 2 == 0 { sign } else { -sign };
                    iv.probe() + wobble * k * iv.probe_radius()
                })
                .collect();
            pts.push(p);
        }
        pts
    }
}

type MetricFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// A coordinate chart carrying a Riemannian metric `g(p)`.
#[derive(Clone)]
pub struct ChartMetric {
    coord_names: Vec<String>,
    domain: Domain,
    g: Arc<MetricFn>,
}

impl fmt::Debug for ChartMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMetric")
            .field("coord_names", &self.coord_names)
            .field("domain", &self.domain)
            .finish_non_exhaustive()
    }
}

impl ChartMetric {
    /// Builds a chart. Dimension 2 is accepted so surfaces can be used as
    /// oracle fixtures; weighted spaces enforce `n >= 3` themselves.
    pub fn new<G>(coord_names: Vec<String>, domain: Domain, g: G) -> Result<Self>
    where
        G: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        if coord_names.len() != domain.dim() {
            return Err(SmmsError::RankMismatch(format!(
                "{} coordinate names for a {}-dimensional domain",
                coord_names.len(),
                domain.dim()
            )));
        }
        if domain.dim() < 2 {
            return Err(SmmsError::InvalidProblem(
                "chart dimension must be at least 2".into(),
            ));
        }
        Ok(Self {
            coord_names,
            domain,
            g: Arc::new(g),
        })
    }

    /// Chart with coordinates named `x1, x2, ...`.
    pub fn with_default_names<G>(domain: Domain, g: G) -> Result<Self>
    where
        G: Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    {
        let names = (1..=domain.dim()).map(|i| format!("x{i}")).collect();
        Self::new(names, domain, g)
    }

    /// Flat metric on the whole coordinate space.
    pub fn euclidean(dim: usize) -> Self {
        Self::with_default_names(Domain::unbounded(dim), move |_| DMatrix::identity(dim, dim))
            .expect("euclidean chart is well formed")
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn coord_names(&self) -> &[String] {
        &self.coord_names
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Metric at `p`, symmetrized and checked for positive definiteness.
    pub fn metric(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        self.domain.check(p)?;
        let raw = (self.g)(p);
        let n = self.dim();
        if raw.nrows() != n || raw.ncols() != n {
            return Err(SmmsError::RankMismatch(format!(
                "metric function returned {}x{} at a point of a {n}-dimensional chart",
                raw.nrows(),
                raw.ncols()
            )));
        }
        if raw.iter().any(|x| !x.is_finite()) {
            return Err(SmmsError::NonFinite {
                point: p.to_vec(),
                what: "metric component".into(),
            });
        }
        let g = (&raw + raw.transpose()) * 0.5;
        let min_eigenvalue = SymmetricEigen::new(g.clone()).eigenvalues.min();
        if min_eigenvalue <= EIGENVALUE_FLOOR {
            return Err(SmmsError::SingularMetric {
                point: p.to_vec(),
                min_eigenvalue,
            });
        }
        Ok(g)
    }

    /// Metric and its inverse at `p`.
    pub fn metric_and_inverse(&self, p: &[f64]) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        let g = self.metric(p)?;
        let ginv = g
            .clone()
            .cholesky()
            .ok_or_else(|| SmmsError::SingularMetric {
                point: p.to_vec(),
                min_eigenvalue: 0.0,
            })?
            .inverse();
        Ok((g, ginv))
    }

}

/// Smooth real function on a chart (density, warping or weight function).
#[derive(Clone)]
pub struct ScalarField {
    eval: Arc<ScalarFn>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("ScalarField")
    }
}

impl ScalarField {
    pub fn new<F>(eval: F) -> Self
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let v = (self.eval)(p);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(SmmsError::NonFinite {
                point: p.to_vec(),
                what: "scalar field value".into(),
            })
        }
    }

    /// `x -> h(self(x))`.
    pub fn map<H>(&self, h: H) -> ScalarField
    where
        H: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let inner = Arc::clone(&self.eval);
        ScalarField::new(move |p| h(inner(p)))
    }
}
