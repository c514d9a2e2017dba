//! Dense vectors, measurement operators and spectral utilities.
//!
//! Everything is 64-bit floating point; decompositions are exact dense
//! factorizations, sized for ambient dimensions up to a few hundred.

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Maximum dimension accepted by the exact symmetric eigendecomposition.
pub const MAX_EXACT_DIM: usize = 512;

/// Dense real vector of length N >= 1 with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    values: DVector<f64>,
}

impl Signal {
    pub fn new(values: DVector<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter(
                "signal length must be >= 1".into(),
            ));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("signal entries".into()));
        }
        Ok(Signal { values })
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(values))
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "signal length must be >= 1");
        Signal {
            values: DVector::zeros(n),
        }
    }

    /// Wrap without the finiteness scan; used on hot iteration paths where
    /// the caller checks finiteness itself.
    pub(crate) fn from_vector_unchecked(values: DVector<f64>) -> Self {
        debug_assert!(!values.is_empty());
        Signal { values }
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.values
    }
}

impl Deref for Signal {
    type Target = DVector<f64>;

    fn deref(&self) -> &DVector<f64> {
        &self.values
    }
}

/// Dense m x N measurement operator with eagerly computed singular values.
///
/// Singular values are computed once at construction (nonincreasing order),
/// so spectral queries like [`MeasurementOperator::residual_opnorm`] are
/// O(1) afterwards.
#[derive(Clone, Debug)]
pub struct MeasurementOperator {
    entries: DMatrix<f64>,
    singular_values: Vec<f64>,
}

impl MeasurementOperator {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if entries.nrows() == 0 || entries.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "operator dimensions must be >= 1".into(),
            ));
        }
        if !entries.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("operator entries".into()));
        }
        let svd = entries
            .clone()
            .try_svd(false, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::NonFinite("SVD of operator did not converge".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&i, &j| {
            svd.singular_values[j]
                .partial_cmp(&svd.singular_values[i])
                .unwrap()
        });
        let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();

        // Consistency: the top right singular vector must map to a vector of
        // norm sigma_max, within 1e-10 relative.
        let sigma_max = singular_values[0];
        if sigma_max > 0.0 {
            let vt = svd.v_t.as_ref().expect("v_t requested");
            let v0 = vt.row(order[0]).transpose();
            let mapped = &entries * v0;
            if (mapped.norm() - sigma_max).abs() > 1e-10 * sigma_max {
                return Err(Error::NonFinite(
                    "singular values inconsistent with entries".into(),
                ));
            }
        }
        Ok(MeasurementOperator {
            entries,
            singular_values,
        })
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is valid")
    }

    /// Number of measurements m.
    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    /// Ambient dimension N.
    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    /// Singular values, nonincreasing, length min(m, N).
    pub fn singular_values(&self) -> &[f64] {
        &self.singular_values
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values[0]
    }

    /// Smallest eigenvalue of A^T A is sigma_min(A)^2 when m >= N and 0
    /// otherwise (rank deficiency adds null directions).
    pub fn sigma_min_eff(&self) -> f64 {
        if self.rows() >= self.cols() {
            *self.singular_values.last().unwrap()
        } else {
            0.0
        }
    }

    /// y = A x.
    pub fn apply(&self, x: &Signal) -> Result<Signal> {
        if x.len() != self.cols() {
            return Err(Error::DimensionMismatch {
                context: "apply: signal length vs operator columns",
                expected: self.cols(),
                found: x.len(),
            });
        }
        Ok(Signal::from_vector_unchecked(&self.entries * x.as_vector()))
    }

    /// x = A^T r.
    pub fn apply_adjoint(&self, r: &Signal) -> Result<Signal> {
        if r.len() != self.rows() {
            return Err(Error::DimensionMismatch {
                context: "apply_adjoint: signal length vs operator rows",
                expected: self.rows(),
                found: r.len(),
            });
        }
        Ok(Signal::from_vector_unchecked(
            self.entries.transpose() * r.as_vector(),
        ))
    }

    /// Operator norm of I - mu A^T A.
    ///
    /// Equals max(|1 - mu sigma_max^2|, |1 - mu sigma_min_eff^2|): the
    /// spectrum of I - mu A^T A is {1 - mu sigma_i^2} plus the eigenvalue 1
    /// on the null space when m < N. Consequence: for m < N the result is
    /// always >= 1.
    pub fn residual_opnorm(&self, mu: f64) -> Result<f64> {
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "mu must be positive, got {mu}"
            )));
        }
        let hi = (1.0 - mu * self.sigma_max() * self.sigma_max()).abs();
        let lo = (1.0 - mu * self.sigma_min_eff() * self.sigma_min_eff()).abs();
        Ok(hi.max(lo))
    }

    /// The N x N matrix I - mu A^T A.
    pub fn residual_matrix(&self, mu: f64) -> DMatrix<f64> {
        let n = self.cols();
        DMatrix::identity(n, n) - (self.entries.transpose() * &self.entries) * mu
    }
}

/// Largest |eigenvalue| of a symmetric matrix, by exact symmetric
/// eigendecomposition. Dimensions above [`MAX_EXACT_DIM`] are rejected.
pub fn symmetric_opnorm(m: &DMatrix<f64>) -> Result<f64> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            context: "symmetric_opnorm: rows vs cols",
            expected: n,
            found: m.ncols(),
        });
    }
    if n > MAX_EXACT_DIM {
        return Err(Error::TooLarge {
            dim: n,
            max: MAX_EXACT_DIM,
        });
    }
    const SYM_TOL: f64 = 1e-12;
    for i in 0..n {
        for j in (i + 1)..n {
            if (m[(i, j)] - m[(j, i)]).abs() > SYM_TOL {
                return Err(Error::Asymmetric { tol: SYM_TOL });
            }
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    let eig = m.clone().symmetric_eigen();
    Ok(eig.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v.abs())))
}

/// Largest singular value of a (not necessarily square) dense matrix,
/// via the symmetric eigendecomposition of the smaller Gram matrix.
pub(crate) fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    let gram = if m.ncols() <= m.nrows() {
        m.transpose() * m
    } else {
        m * m.transpose()
    };
    let eig = gram.symmetric_eigen();
    eig.eigenvalues
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v))
        .max(0.0)
        .sqrt()
}
