//! Averaged-operator rewrite of classical RED and its
//! quasi-nonexpansiveness apparatus.
//!
//! Classical RED with noiseless data y = A xhat factors as
//! x_{n+1} = (1 - lambda - theta) x_n + (lambda + theta) T(x_n), with
//! T: u -> (lambda P(u) + theta u - mu A^T A (u - xhat)) / (lambda + theta)
//! for any theta with 0 < lambda + theta <= 1. The truth xhat is a fixed
//! point of T, so quasi-nonexpansiveness of T around xhat is the classical
//! route to fixed-point convergence.

use crate::error::{Error, Result};
use crate::linalg::{MeasurementOperator, Signal};
use crate::model::Projector;
use crate::rng::Rng;

/// Ratio tolerance for the quasi-nonexpansiveness verdict.
pub const QUASI_TOL: f64 = 1e-9;

/// The operator T of the averaged rewrite, bound to one configuration.
pub struct RedOperator<'a> {
    a: &'a MeasurementOperator,
    xhat: &'a Signal,
    mu: f64,
    lam: f64,
    theta: f64,
}

impl<'a> RedOperator<'a> {
    pub fn new(
        a: &'a MeasurementOperator,
        xhat: &'a Signal,
        mu: f64,
        lam: f64,
        theta: f64,
    ) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        if !(theta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "theta must be positive, got {theta}"
            )));
        }
        if !(lam >= 0.0) || !(lam + theta > 0.0 && lam + theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need lambda >= 0 and 0 < lambda + theta <= 1, got lambda={lam}, theta={theta}"
            )));
        }
        if xhat.len() != a.cols() {
            return Err(Error::DimensionMismatch {
                context: "RedOperator: truth length vs operator columns",
                expected: a.cols(),
                found: xhat.len(),
            });
        }
        Ok(RedOperator {
            a,
            xhat,
            mu,
            lam,
            theta,
        })
    }

    fn check_input(&self, u: &Signal) -> Result<()> {
        if u.len() != self.a.cols() {
            return Err(Error::DimensionMismatch {
                context: "RedOperator: input length vs operator columns",
                expected: self.a.cols(),
                found: u.len(),
            });
        }
        Ok(())
    }

    /// T(u) = (lambda P(u) + theta u - mu A^T A (u - xhat)) / (lambda + theta).
    pub fn apply(&self, u: &Signal, projector: &mut dyn Projector) -> Result<Signal> {
        self.check_input(u)?;
        let p = projector.project(u);
        let diff = u.as_vector() - self.xhat.as_vector();
        let gram_diff = self.a.entries().transpose() * (self.a.entries() * diff);
        let combo =
            p.as_vector() * self.lam + u.as_vector() * self.theta - gram_diff * self.mu;
        Ok(Signal::from_vector_unchecked(combo / (self.lam + self.theta)))
    }

    /// The averaged operator T_{lambda+theta}(u) =
    /// (1 - lambda - theta) u + (lambda + theta) T(u). With noiseless data
    /// this equals one classical RED step from u.
    pub fn apply_averaged(&self, u: &Signal, projector: &mut dyn Projector) -> Result<Signal> {
        let t = self.apply(u, projector)?;
        let s = self.lam + self.theta;
        Ok(Signal::from_vector_unchecked(
            u.as_vector() * (1.0 - s) + t.as_vector() * s,
        ))
    }
}

/// Outcome of a quasi-nonexpansiveness sampling run.
#[derive(Clone, Debug)]
pub struct QuasiReport {
    pub max_ratio: f64,
    /// Sample index attaining the maximum (recoverable from the rng seed).
    pub argmax_index: usize,
    pub samples: usize,
    /// max_ratio <= 1 + QUASI_TOL.
    pub passed: bool,
}

/// Sample u in the ball of `radius` around xhat and measure the largest
/// ratio ||T(u) - xhat|| / ||u - xhat||.
#[allow(clippy::too_many_arguments)]
pub fn quasi_nonexpansive_check(
    a: &MeasurementOperator,
    mu: f64,
    lam: f64,
    theta: f64,
    projector: &mut dyn Projector,
    xhat: &Signal,
    trials: usize,
    radius: f64,
    rng: &mut Rng,
) -> Result<QuasiReport> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let op = RedOperator::new(a, xhat, mu, lam, theta)?;
    let n = xhat.len();
    let mut max_ratio = 0.0f64;
    let mut argmax_index = 0;
    for t in 0..trials {
        let dist = radius * rng.open_uniform();
        let u = Signal::from_vector_unchecked(
            xhat.as_vector() + rng.unit_vector(n) * dist,
        );
        let tu = op.apply(&u, projector)?;
        let ratio = (tu.as_vector() - xhat.as_vector()).norm() / dist;
        if ratio > max_ratio {
            max_ratio = ratio;
            argmax_index = t;
        }
    }
    Ok(QuasiReport {
        max_ratio,
        argmax_index,
        samples: trials,
        passed: max_ratio <= 1.0 + QUASI_TOL,
    })
}

/// The scalars of the sufficient condition for quasi-nonexpansiveness.
///
/// condition_value = delta_scaled_1 * beta
///                 + theta / (lambda + theta) * delta_scaled_2 * c_sigma,
/// where delta_scaled_1 is the RIC of (mu / (lambda + theta)) A^T A and
/// delta_scaled_2 the RIC of (mu / theta) A^T A.
#[derive(Clone, Copy, Debug)]
pub struct Section4Params {
    pub theta: f64,
    pub lam: f64,
    pub beta: f64,
    pub c_sigma: f64,
    pub delta_scaled_1: f64,
    pub delta_scaled_2: f64,
    pub condition_value: f64,
}

impl Section4Params {
    pub fn new(
        theta: f64,
        lam: f64,
        beta: f64,
        c_sigma: f64,
        delta_scaled_1: f64,
        delta_scaled_2: f64,
    ) -> Result<Self> {
        if !(theta > 0.0) || !(lam >= 0.0) || !(lam + theta > 0.0 && lam + theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "need theta > 0, lambda >= 0 and lambda + theta <= 1, got lambda={lam}, theta={theta}"
            )));
        }
        if !(c_sigma >= 1.0 - 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "c_sigma must be >= 1, got {c_sigma}"
            )));
        }
        if !(delta_scaled_1 >= 0.0) || !(delta_scaled_2 >= 0.0) || !(beta >= 0.0) {
            return Err(Error::InvalidParameter(
                "RIC and beta values must be nonnegative".into(),
            ));
        }
        let condition_value =
            delta_scaled_1 * beta + theta / (lam + theta) * delta_scaled_2 * c_sigma;
        Ok(Section4Params {
            theta,
            lam,
            beta,
            c_sigma,
            delta_scaled_1,
            delta_scaled_2,
            condition_value,
        })
    }
}

/// Evaluate the sufficient condition with a caller-supplied RIC evaluator
/// `ric(scale)` for the RIC of scale * A^T A.
///
/// Limiting arithmetic as theta -> 0+ (with lambda + theta <= 1 fixed):
/// the first term tends to delta(mu / lambda) * beta, while the second
/// does not vanish; it tends to (mu / lambda) * L * C_Sigma with L the
/// largest secant-restricted eigenvalue of A^T A, because
/// delta((mu/theta) A^T A) grows like (mu/theta) L - 1.
pub fn section4_condition(
    _a: &MeasurementOperator,
    mu: f64,
    lam: f64,
    theta: f64,
    beta: f64,
    c_sigma: f64,
    ric: impl Fn(f64) -> Result<f64>,
) -> Result<Section4Params> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    if !(theta > 0.0) || !(lam >= 0.0) || lam + theta > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "need theta > 0, lambda >= 0 and lambda + theta <= 1, got lambda={lam}, theta={theta}"
        )));
    }
    let delta_scaled_1 = ric(mu / (lam + theta))?;
    let delta_scaled_2 = ric(mu / theta)?;
    Section4Params::new(theta, lam, beta, c_sigma, delta_scaled_1, delta_scaled_2)
}
