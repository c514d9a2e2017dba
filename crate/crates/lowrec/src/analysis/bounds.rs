//! Convergence-rate and error-bound checks for the modified-RED theorem.

use crate::constants::ConstantsReport;
use crate::error::{Error, Result};
use crate::solvers::IterationTrace;

/// Relative slack applied to every bound comparison; absorbs rounding
/// accumulated over hundreds of iterations.
pub const BOUND_SLACK: f64 = 1e-9;

/// Inputs of the closed-form error bound.
#[derive(Clone, Copy, Debug)]
pub struct BoundParams {
    /// Contraction factor r = delta * beta + |1 - lambda| * q.
    pub rate_r: f64,
    /// Initial error ||x_0 - xhat||_2.
    pub e0: f64,
    /// |1 - lambda| * q * eta.
    pub offset_eta: f64,
    /// mu * ||A^T e||_2.
    pub offset_noise: f64,
}

impl BoundParams {
    pub fn new(rate_r: f64, e0: f64, offset_eta: f64, offset_noise: f64) -> Result<Self> {
        for (name, v) in [
            ("rate_r", rate_r),
            ("e0", e0),
            ("offset_eta", offset_eta),
            ("offset_noise", offset_noise),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(BoundParams {
            rate_r,
            e0,
            offset_eta,
            offset_noise,
        })
    }

    /// Assemble the bound inputs from a constants report, the initial
    /// error, and ||A^T e||_2.
    pub fn from_report(report: &ConstantsReport, e0: f64, adjoint_noise_norm: f64) -> Result<Self> {
        Self::new(
            report.rate_r,
            e0,
            (1.0 - report.lam).abs() * report.q * report.eta,
            report.mu * adjoint_noise_norm,
        )
    }

    fn offsets(&self) -> f64 {
        self.offset_eta + self.offset_noise
    }
}

/// r = delta * beta + |1 - lambda| * q.
pub fn theorem_rate(delta: f64, beta: f64, lam: f64, q: f64) -> f64 {
    debug_assert!(delta >= 0.0 && beta >= 0.0 && q >= 0.0);
    debug_assert!((0.0..=1.0).contains(&lam));
    delta * beta + (1.0 - lam).abs() * q
}

/// Closed-form bound r^n e0 + (offset_eta + offset_noise) / (1 - r).
/// Requires r < 1.
pub fn theorem_bound(n: usize, p: &BoundParams) -> Result<f64> {
    if p.rate_r >= 1.0 {
        return Err(Error::HypothesisViolated { rate: p.rate_r });
    }
    let decay = p.rate_r.powi(i32::try_from(n).unwrap_or(i32::MAX));
    Ok(decay * p.e0 + p.offsets() / (1.0 - p.rate_r))
}

/// Bound column for a trace with the given number of recorded states.
pub fn bound_column(states: usize, p: &BoundParams) -> Result<Vec<f64>> {
    (0..states).map(|n| theorem_bound(n, p)).collect()
}

/// One per-step comparison of err_{n+1} against
/// r err_n + offset_eta + offset_noise (+ slack).
#[derive(Clone, Copy, Debug)]
pub struct PerStepCheck {
    pub index: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct PerStepReport {
    pub checks: Vec<PerStepCheck>,
    pub all_pass: bool,
    pub first_violation: Option<usize>,
}

/// Check the proof's per-step inequality on every consecutive pair of the
/// trace. Meaningful even when r >= 1.
pub fn verify_per_step(trace: &IterationTrace, p: &BoundParams) -> Result<PerStepReport> {
    let errs = trace.errors().ok_or(Error::MissingTruth)?;
    let mut checks = Vec::with_capacity(errs.len().saturating_sub(1));
    let mut first_violation = None;
    for n in 0..errs.len().saturating_sub(1) {
        let lhs = errs[n + 1];
        let rhs = p.rate_r * errs[n] + p.offsets() + BOUND_SLACK * (1.0 + errs[n]);
        let pass = lhs <= rhs;
        if !pass && first_violation.is_none() {
            first_violation = Some(n);
        }
        checks.push(PerStepCheck {
            index: n,
            lhs,
            rhs,
            pass,
        });
    }
    Ok(PerStepReport {
        all_pass: first_violation.is_none(),
        checks,
        first_violation,
    })
}

/// Whether every recorded error sits below the closed-form bound with the
/// standard slack 1e-9 (1 + e0).
pub fn bound_satisfied(trace: &IterationTrace, p: &BoundParams) -> Result<bool> {
    let errs = trace.errors().ok_or(Error::MissingTruth)?;
    let slack = BOUND_SLACK * (1.0 + p.e0);
    for (n, &e) in errs.iter().enumerate() {
        if e > theorem_bound(n, p)? + slack {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::IterationTrace;

    fn synthetic_trace(errs: Vec<f64>) -> IterationTrace {
        let resid = vec![0.0; errs.len()];
        IterationTrace::new(Some(errs), resid)
    }

    #[test]
    fn rate_examples() {
        assert_eq!(theorem_rate(0.3, 2.0, 1.0, 7.3), 0.6);
        assert_eq!(theorem_rate(0.0, 2.0, 0.0, 1.0), 1.0);
        assert!((theorem_rate(0.25, 2.0, 0.9, 1.0) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn bound_examples() {
        // Zero offsets: pure geometric decay.
        let p = BoundParams::new(0.5, 2.0, 0.0, 0.0).unwrap();
        assert_eq!(theorem_bound(4, &p).unwrap(), 0.5f64.powi(4) * 2.0);

        // n = 0 evaluates to e0 + offsets / (1 - r) >= e0.
        let p = BoundParams::new(0.5, 2.0, 0.03, 0.07).unwrap();
        let b0 = theorem_bound(0, &p).unwrap();
        assert!(b0 >= 2.0);
        assert!((b0 - (2.0 + 0.1 / 0.5)).abs() < 1e-15);

        // r = 0.5, e0 = 1, offsets = 0.1: bound(3) = 0.125 + 0.2.
        let p = BoundParams::new(0.5, 1.0, 0.1, 0.0).unwrap();
        assert!((theorem_bound(3, &p).unwrap() - 0.325).abs() < 1e-15);
    }

    #[test]
    fn bound_rejects_rate_at_least_one() {
        let p = BoundParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            theorem_bound(1, &p),
            Err(Error::HypothesisViolated { .. })
        ));
    }

    fn geometric(r: f64, n: usize) -> f64 {
        r.powi(n as i32)
    }

    #[test]
    fn per_step_geometric_trace_passes() {
        let r = 0.8;
        let errs: Vec<f64> = (0..40).map(|n| geometric(r, n)).collect();
        let trace = synthetic_trace(errs);
        let p = BoundParams::new(r, 1.0, 0.0, 0.0).unwrap();
        let report = verify_per_step(&trace, &p).unwrap();
        assert!(report.all_pass);
        assert_eq!(report.checks.len(), 39);
    }

    #[test]
    fn per_step_flags_injected_violation() {
        let r = 0.8;
        let mut errs: Vec<f64> = (0..20).map(|n| geometric(r, n)).collect();
        errs[7] = 2.0 * errs[6]; // break the contraction at step 6 -> 7
        let trace = synthetic_trace(errs);
        let p = BoundParams::new(r, 1.0, 0.0, 0.0).unwrap();
        let report = verify_per_step(&trace, &p).unwrap();
        assert!(!report.all_pass);
        assert_eq!(report.first_violation, Some(6));
        assert!(!report.checks[6].pass);
        assert!(report.checks[5].pass);
    }

    #[test]
    fn per_step_requires_truth() {
        let trace = IterationTrace::new(None, vec![1.0, 0.5]);
        let p = BoundParams::new(0.5, 1.0, 0.0, 0.0).unwrap();
        assert!(matches!(
            verify_per_step(&trace, &p),
            Err(Error::MissingTruth)
        ));
    }

    /// Per-step passing implies the closed-form bound by induction on the
    /// recorded trace itself.
    #[test]
    fn per_step_implies_closed_form() {
        let p = BoundParams::new(0.7, 1.0, 0.02, 0.01).unwrap();
        // Any trace respecting the per-step recursion exactly:
        let mut errs = vec![1.0];
        for n in 0..60 {
            let prev = errs[n];
            errs.push(0.65 * prev + 0.02); // contraction stronger than r
        }
        let trace = synthetic_trace(errs.clone());
        assert!(verify_per_step(&trace, &p).unwrap().all_pass);

        // Induction: B_{n+1} = r B_n + offsets dominates err, and the
        // closed form dominates B_n.
        let mut b = p.e0;
        for (n, &e) in errs.iter().enumerate() {
            assert!(e <= b + BOUND_SLACK * (n as f64 + 1.0) * (1.0 + e));
            assert!(b <= theorem_bound(n, &p).unwrap() + 1e-12);
            b = p.rate_r * b + p.offset_eta + p.offset_noise;
        }
        assert!(bound_satisfied(&trace, &p).unwrap());
    }

    #[test]
    fn params_validation() {
        assert!(BoundParams::new(-0.1, 1.0, 0.0, 0.0).is_err());
        assert!(BoundParams::new(0.5, -1.0, 0.0, 0.0).is_err());
        assert!(BoundParams::new(0.5, 1.0, -0.1, 0.0).is_err());
    }
}
