//! Adaptive Dormand–Prince 5(4) integrator with dense output and a single
//! terminal event.

use crate::error::{Result, SmmsError};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order solution minus embedded fourth-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
/// Dense output weights (Hairer, Nørsett & Wanner).
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; a small fraction of the span when absent.
    pub h0: Option<f64>,
    pub max_steps: usize,
    /// Event times are located to this absolute accuracy.
    pub event_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol: 1e-12,
            h0: None,
            max_steps: 1_000_000,
            event_tol: 1e-14,
        }
    }
}

/// Quartic interpolant over one accepted step.
#[derive(Debug, Clone)]
struct DenseStep {
    t0: f64,
    h: f64,
    /// Where the step was accepted; differs from `t0 + h` when an event cut it short.
    end: f64,
    r: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval(&self, t: f64) -> Vec<f64> {
        let th = (t - self.t0) / self.h;
        let th1 = 1.0 - th;
        let [r1, r2, r3, r4, r5] = &self.r;
        (0..r1.len())
            .map(|i| r1[i] + th * (r2[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i]))))
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Accepted step times, starting with `t0`.
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    /// Time and state of the terminal event, if it fired.
    pub event: Option<(f64, Vec<f64>)>,
    steps: Vec<DenseStep>,
}

impl Trajectory {
    pub fn t_start(&self) -> f64 {
        self.ts[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.ts.last().expect("trajectory has at least one point")
    }

    pub fn y_end(&self) -> &[f64] {
        self.ys.last().expect("trajectory has at least one point")
    }

    /// Dense-output state at `t`, or `None` outside the integrated range.
    pub fn eval(&self, t: f64) -> Option<Vec<f64>> {
        let (lo, hi) = (self.t_start(), self.t_end());
        if !(t >= lo.min(hi) && t <= lo.max(hi)) {
            return None;
        }
        if self.steps.is_empty() {
            return Some(self.ys[0].clone());
        }
        let forward = hi >= lo;
        let k = self
            .steps
            .partition_point(|s| if forward { s.end < t } else { s.end > t });
        Some(self.steps[k.min(self.steps.len() - 1)].eval(t))
    }
}

fn stages<F>(rhs: &F, t: f64, y: &[f64], h: f64, k1: &[f64]) -> Result<[Vec<f64>; 7]>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let dim = y.len();
    let mut k: [Vec<f64>; 7] = Default::default();
    k[0] = k1.to_vec();
    for s in 1..7 {
        let ys: Vec<f64> = (0..dim)
            .map(|i| y[i] + h * (0..s).map(|j| A[s][j] * k[j][i]).sum::<f64>())
            .collect();
        k[s] = rhs(t + C[s] * h, &ys);
        if k[s].len() != dim {
            return Err(SmmsError::InvalidProblem("right-hand side changed dimension".into()));
        }
    }
    Ok(k)
}

/// Integrates `y' = rhs(t, y)` from `span.0` towards `span.1`. When `event`
/// is given, integration stops at the first strict sign change of
/// `event(t, y)` after the initial point.
pub fn integrate_ode<F>(
    rhs: F,
    y0: &[f64],
    span: (f64, f64),
    opts: &OdeOptions,
    event: Option<&dyn Fn(f64, &[f64]) -> f64>,
) -> Result<Trajectory>
where
    F: Fn(f64, &[f64]) -> Vec<f64>,
{
    let (t0, t1) = span;
    if !(t0.is_finite() && t1.is_finite()) || t0 == t1 {
        return Err(SmmsError::InvalidProblem(format!("bad time span ({t0}, {t1})")));
    }
    if !(opts.rtol > 0.0 && opts.atol > 0.0) {
        return Err(SmmsError::InvalidProblem("tolerances must be positive".into()));
    }
    if y0.iter().any(|v| !v.is_finite()) {
        return Err(SmmsError::NonFiniteState { t: t0 });
    }
    let dir = (t1 - t0).signum();
    let span_len = (t1 - t0).abs();
    let mut h = opts.h0.map(f64::abs).unwrap_or(1e-3 * span_len.min(1.0)) * dir;
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k1 = rhs(t, &y);
    let mut traj = Trajectory {
        ts: vec![t0],
        ys: vec![y.clone()],
        event: None,
        steps: Vec::new(),
    };
    let mut g_prev = event.map(|g| g(t, &y));
    let mut rejected = false;

    for _ in 0..opts.max_steps {
        if (t1 - t) * dir <= 0.0 {
            return Ok(traj);
        }
        if (t + h - t1) * dir > 0.0 {
            h = t1 - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(SmmsError::StepSizeUnderflow { t, h: h.abs() });
        }
        let k = stages(&rhs, t, &y, h, &k1)?;
        let dim = y.len();
        let y_new: Vec<f64> = (0..dim)
            .map(|i| y[i] + h * (0..6).map(|j| A[6][j] * k[j][i]).sum::<f64>())
            .collect();
        let mut err = 0.0;
        for i in 0..dim {
            let e = h * (0..7).map(|j| E[j] * k[j][i]).sum::<f64>();
            let sc = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err += (e / sc).powi(2);
        }
        let err = (err / dim as f64).sqrt();
        if !err.is_finite() {
            if y_new.iter().any(|v| !v.is_finite()) && h.abs() < 1e-10 {
                return Err(SmmsError::NonFiniteState { t });
            }
            h *= 0.2;
            rejected = true;
            continue;
        }
        let mut factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err > 1.0 {
            h *= factor.min(1.0);
            rejected = true;
            continue;
        }
        if rejected {
            factor = factor.min(1.0);
            rejected = false;
        }

        let ydiff: Vec<f64> = (0..dim).map(|i| y_new[i] - y[i]).collect();
        let bspl: Vec<f64> = (0..dim).map(|i| h * k[0][i] - ydiff[i]).collect();
        let t_new = t + h;
        let step = DenseStep {
            t0: t,
            h,
            end: t_new,
            r: [
                y.clone(),
                ydiff.clone(),
                bspl.clone(),
                (0..dim).map(|i| ydiff[i] - h * k[6][i] - bspl[i]).collect(),
                (0..dim)
                    .map(|i| h * (0..7).map(|j| D[j] * k[j][i]).sum::<f64>())
                    .collect(),
            ],
        };

        if let (Some(g), Some(gp)) = (event, g_prev) {
            let g_new = g(t_new, &y_new);
            if gp != 0.0 && (g_new == 0.0 || g_new.signum() != gp.signum()) {
                let (mut a, mut b) = (t, t_new);
                let mut ga = gp;
                while (b - a).abs() > opts.event_tol {
                    let mid = 0.5 * (a + b);
                    if mid == a || mid == b {
                        break;
                    }
                    let gm = g(mid, &step.eval(mid));
                    if gm == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if gm.signum() == ga.signum() {
                        a = mid;
                        ga = gm;
                    } else {
                        b = mid;
                    }
                }
                let te = 0.5 * (a + b);
                let ye = step.eval(te);
                traj.steps.push(DenseStep { end: te, ..step });
                traj.ts.push(te);
                traj.ys.push(ye.clone());
                traj.event = Some((te, ye));
                return Ok(traj);
            }
            g_prev = Some(g_new);
        }

        if y_new.iter().any(|v| !v.is_finite()) {
            return Err(SmmsError::NonFiniteState { t: t_new });
        }
        traj.steps.push(step);
        traj.ts.push(t_new);
        traj.ys.push(y_new.clone());
        t = t_new;
        y = y_new;
        k1 = k[6].clone();
        h *= factor;
    }
    Err(SmmsError::InvalidProblem(format!(
        "step budget of {} exhausted at t = {t}",
        opts.max_steps
    )))
}
