//! The three iteration schemes, with full trajectory recording.
//!
//! All schemes make exactly one projection call per iteration; the
//! projected point feeds the convex combination z_n and is never
//! re-projected. The gradient-step arithmetic is shared between schemes so
//! that mod-RED with lambda = 1 follows the bit-identical path of GPGD.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{MeasurementOperator, Signal};
use crate::model::Projector;

/// Iteration scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Scheme {
    /// x_{n+1} = P(x_n) - mu A^T (A P(x_n) - y)
    Gpgd,
    /// x_{n+1} = x_n - mu A^T (A x_n - y) - lambda (x_n - P(x_n))
    Red,
    /// z_n = (1-lambda) x_n + lambda P(x_n); x_{n+1} = z_n - mu A^T (A z_n - y)
    ModRed,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::Gpgd => "gpgd",
            Scheme::Red => "red",
            Scheme::ModRed => "mod_red",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gpgd" => Ok(Scheme::Gpgd),
            "red" => Ok(Scheme::Red),
            "mod_red" => Ok(Scheme::ModRed),
            other => Err(Error::InvalidParameter(format!(
                "unknown scheme '{other}' (expected gpgd, red or mod_red)"
            ))),
        }
    }
}

/// Solver parameters. `tol_err` stops the run once the measurement
/// residual ||A x_n - y||_2 drops below it (0 disables early stopping).
#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub mu: f64,
    pub lam: f64,
    pub max_iter: usize,
    pub tol_err: f64,
    pub scheme: Scheme,
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive, got {}",
                self.mu
            )));
        }
        if !(0.0..=1.0).contains(&self.lam) {
            return Err(Error::InvalidParameter(format!(
                "lambda must lie in [0, 1], got {}",
                self.lam
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidParameter("max_iter must be >= 1".into()));
        }
        if !(self.tol_err >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tol_err must be nonnegative, got {}",
                self.tol_err
            )));
        }
        Ok(())
    }
}

fn check_dims(x: &Signal, a: &MeasurementOperator, y: &Signal) -> Result<()> {
    if x.len() != a.cols() {
        return Err(Error::DimensionMismatch {
            context: "solver step: iterate length vs operator columns",
            expected: a.cols(),
            found: x.len(),
        });
    }
    if y.len() != a.rows() {
        return Err(Error::DimensionMismatch {
            context: "solver step: measurement length vs operator rows",
            expected: a.rows(),
            found: y.len(),
        });
    }
    Ok(())
}

// Shared arithmetic path: z - mu A^T (A z - y).
fn gradient_step(z: &DVector<f64>, a: &MeasurementOperator, y: &Signal, mu: f64) -> DVector<f64> {
    let resid = a.entries() * z - y.as_vector();
    z - (a.entries().transpose() * resid) * mu
}

/// One GPGD step: the gradient is evaluated at the projected point.
pub fn gpgd_step(
    x: &Signal,
    a: &MeasurementOperator,
    y: &Signal,
    mu: f64,
    projector: &mut dyn Projector,
) -> Result<Signal> {
    check_dims(x, a, y)?;
    let z = projector.project(x);
    Ok(Signal::from_vector_unchecked(gradient_step(
        z.as_vector(),
        a,
        y,
        mu,
    )))
}

/// One RED step: the gradient is evaluated at x_n, then the projection
/// residual is subtracted. Written as z_n - mu A^T (A x_n - y) with
/// z_n = (1-lambda) x_n + lambda P(x_n).
pub fn red_step(
    x: &Signal,
    a: &MeasurementOperator,
    y: &Signal,
    mu: f64,
    lam: f64,
    projector: &mut dyn Projector,
) -> Result<Signal> {
    check_dims(x, a, y)?;
    let p = projector.project(x);
    let z = x.as_vector() * (1.0 - lam) + p.as_vector() * lam;
    let resid = a.entries() * x.as_vector() - y.as_vector();
    Ok(Signal::from_vector_unchecked(
        z - (a.entries().transpose() * resid) * mu,
    ))
}

/// One modified-RED step: same z_n, but the gradient is evaluated at z_n.
pub fn mod_red_step(
    x: &Signal,
    a: &MeasurementOperator,
    y: &Signal,
    mu: f64,
    lam: f64,
    projector: &mut dyn Projector,
) -> Result<Signal> {
    check_dims(x, a, y)?;
    let p = projector.project(x);
    let z = x.as_vector() * (1.0 - lam) + p.as_vector() * lam;
    Ok(Signal::from_vector_unchecked(gradient_step(&z, a, y, mu)))
}

/// Per-iteration record of a solver run. Index n covers the states
/// x_0 .. x_T, so a run of T steps stores T + 1 entries.
#[derive(Clone, Debug)]
pub struct IterationTrace {
    err: Option<Vec<f64>>,
    resid: Vec<f64>,
    bound: Option<Vec<f64>>,
}

impl IterationTrace {
    pub(crate) fn new(err: Option<Vec<f64>>, resid: Vec<f64>) -> Self {
        if let Some(e) = &err {
            assert_eq!(e.len(), resid.len(), "trace length mismatch");
        }
        IterationTrace {
            err,
            resid,
            bound: None,
        }
    }

    /// Number of recorded states (iterations + 1).
    pub fn states(&self) -> usize {
        self.resid.len()
    }

    /// Number of steps taken.
    pub fn iters(&self) -> usize {
        self.resid.len() - 1
    }

    pub fn has_truth(&self) -> bool {
        self.err.is_some()
    }

    pub fn err_l2(&self, n: usize) -> Option<f64> {
        self.err.as_ref().map(|e| e[n])
    }

    pub fn errors(&self) -> Option<&[f64]> {
        self.err.as_deref()
    }

    pub fn resid_l2(&self, n: usize) -> f64 {
        self.resid[n]
    }

    pub fn final_err(&self) -> Option<f64> {
        self.err.as_ref().map(|e| *e.last().unwrap())
    }

    /// err_{n+1} / err_n; None without truth, at the last state, or when
    /// err_n is zero.
    pub fn ratio(&self, n: usize) -> Option<f64> {
        let e = self.err.as_ref()?;
        if n + 1 >= e.len() || e[n] == 0.0 {
            return None;
        }
        Some(e[n + 1] / e[n])
    }

    /// Attach a bound column: bound[n] = theorem bound at iteration n.
    pub fn set_bounds(&mut self, bound: Vec<f64>) {
        assert_eq!(bound.len(), self.resid.len(), "bound length mismatch");
        self.bound = Some(bound);
    }

    pub fn bounds(&self) -> Option<&[f64]> {
        self.bound.as_deref()
    }

    /// CSV with header `iter,err_l2,resid_l2,bound,ratio`. Missing truth
    /// leaves err_l2 and ratio empty; a missing bound column is empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iter,err_l2,resid_l2,bound,ratio\n");
        for n in 0..self.states() {
            let err = self
                .err_l2(n)
                .map(|v| format!("{v}"))
                .unwrap_or_default();
            let bound = self
                .bound
                .as_ref()
                .map(|b| format!("{}", b[n]))
                .unwrap_or_default();
            let ratio = self
                .ratio(n)
                .map(|v| format!("{v}"))
                .unwrap_or_default();
            out.push_str(&format!("{n},{err},{},{bound},{ratio}\n", self.resid[n]));
        }
        out
    }
}

/// Iterate the configured scheme from `x0` until `max_iter` steps or the
/// residual tolerance, recording the trace. Aborts with the iteration
/// index if an iterate goes non-finite or its norm exceeds
/// 10^12 max(1, ||x0||).
pub fn run(
    cfg: &SolverConfig,
    x0: &Signal,
    a: &MeasurementOperator,
    y: &Signal,
    projector: &mut dyn Projector,
    truth: Option<&Signal>,
) -> Result<IterationTrace> {
    cfg.validate()?;
    check_dims(x0, a, y)?;
    if let Some(t) = truth {
        if t.len() != a.cols() {
            return Err(Error::DimensionMismatch {
                context: "solver run: truth length vs operator columns",
                expected: a.cols(),
                found: t.len(),
            });
        }
    }

    let guard = 1e12 * x0.norm().max(1.0);
    let mut errs = truth.map(|_| Vec::with_capacity(cfg.max_iter + 1));
    let mut resids = Vec::with_capacity(cfg.max_iter + 1);

    let record = |x: &Signal, errs: &mut Option<Vec<f64>>, resids: &mut Vec<f64>| {
        if let (Some(es), Some(t)) = (errs.as_mut(), truth) {
            es.push((x.as_vector() - t.as_vector()).norm());
        }
        resids.push((a.entries() * x.as_vector() - y.as_vector()).norm());
    };

    let mut x = x0.clone();
    record(&x, &mut errs, &mut resids);

    for iter in 0..cfg.max_iter {
        if *resids.last().unwrap() < cfg.tol_err {
            break;
        }
        x = match cfg.scheme {
            Scheme::Gpgd => gpgd_step(&x, a, y, cfg.mu, projector)?,
            Scheme::Red => red_step(&x, a, y, cfg.mu, cfg.lam, projector)?,
            Scheme::ModRed => mod_red_step(&x, a, y, cfg.mu, cfg.lam, projector)?,
        };
        let norm = x.norm();
        if !norm.is_finite() || norm > guard {
            return Err(Error::Diverged { iter });
        }
        record(&x, &mut errs, &mut resids);
    }

    Ok(IterationTrace::new(errs, resids))
}
