//! Restricted isometry constants, restricted Lipschitz estimates, and step
//! size tuning: the hypothesis side of the convergence theorem.
//!
//! Exact RIC values come from support or subspace-pair enumeration and are
//! valid upper bounds over the whole secant set. The Monte Carlo estimator
//! is a lower bound only; reports carry flags so a sampled value is never
//! silently used where certification needs exactness.

use itertools::Itertools;
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, MeasurementOperator};
use crate::model::{ModelSet, Projector, SubspaceUnionModel};
use crate::rng::Rng;

/// Supports (or subspace pairs) enumerated before the exact RIC bails out.
pub const ENUMERATION_BUDGET: u64 = 1_000_000;

/// Restricted Lipschitz constant asserted for exact orthogonal projections.
pub const BETA_ORTHOGONAL: f64 = 2.0;

/// All scalars of the convergence theorem for one configuration.
///
/// `rate_r` always equals `delta * beta + |1 - lam| * q`. The flags record
/// whether `delta` came from exact enumeration (an upper bound valid for
/// certification) or Monte Carlo (a lower bound), and whether `beta` is the
/// asserted orthogonal-projection constant or a sampled estimate.
#[derive(Clone, Debug)]
pub struct ConstantsReport {
    pub delta: f64,
    pub beta: f64,
    pub q: f64,
    pub mu: f64,
    pub lam: f64,
    pub eta: f64,
    pub rate_r: f64,
    pub delta_exact: bool,
    pub beta_asserted: bool,
}

impl ConstantsReport {
    pub fn new(
        delta: f64,
        beta: f64,
        q: f64,
        mu: f64,
        lam: f64,
        eta: f64,
        delta_exact: bool,
        beta_asserted: bool,
    ) -> Result<Self> {
        if !(delta >= 0.0) {
            return Err(Error::InvalidParameter(format!("delta must be >= 0, got {delta}")));
        }
        if !(beta >= 1.0 - 1e-9) {
            return Err(Error::InvalidParameter(format!(
                "beta must be >= 1 for a projection fixing the model set, got {beta}"
            )));
        }
        if !(q >= 0.0) {
            return Err(Error::InvalidParameter(format!("q must be >= 0, got {q}")));
        }
        if !(mu > 0.0) {
            return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
        }
        if !(0.0..=1.0).contains(&lam) {
            return Err(Error::InvalidParameter(format!("lambda must lie in [0, 1], got {lam}")));
        }
        if !(eta >= 0.0) {
            return Err(Error::InvalidParameter(format!("eta must be >= 0, got {eta}")));
        }
        let rate_r = delta * beta + (1.0 - lam).abs() * q;
        Ok(ConstantsReport {
            delta,
            beta,
            q,
            mu,
            lam,
            eta,
            rate_r,
            delta_exact,
            beta_asserted,
        })
    }

    pub fn exact_flags(&self) -> String {
        format!(
            "delta:{};beta:{}",
            if self.delta_exact { "exact" } else { "mc" },
            if self.beta_asserted { "asserted" } else { "estimated" }
        )
    }

    /// Single CSV line: delta,beta,q,mu,lambda,eta,rate_r,exact_flags.
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.delta,
            self.beta,
            self.q,
            self.mu,
            self.lam,
            self.eta,
            self.rate_r,
            self.exact_flags()
        )
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
        if acc > u128::from(u64::MAX) {
            return u128::MAX;
        }
    }
    acc
}

fn validate_mu(mu: f64) -> Result<()> {
    if !(mu > 0.0) {
        return Err(Error::InvalidParameter(format!("mu must be positive, got {mu}")));
    }
    Ok(())
}

/// Exact RIC of mu A^T A over s-sparse secants: the maximum over all
/// supports S with |S| = s of the largest singular value of the N x s
/// column submatrix of I - mu A^T A. Supports are enumerated in
/// lexicographic order; C(N, s) above [`ENUMERATION_BUDGET`] is rejected.
///
/// The result may be >= 1; callers check the RIC definition range.
pub fn ric_exact_sparse(a: &MeasurementOperator, mu: f64, s: usize) -> Result<f64> {
    validate_mu(mu)?;
    let n = a.cols();
    if s < 1 || s > n {
        return Err(Error::InvalidParameter(format!(
            "support size s must satisfy 1 <= s <= N, got s={s}, N={n}"
        )));
    }
    let count = binomial(n, s);
    if count > u128::from(ENUMERATION_BUDGET) {
        return Err(Error::BudgetExceeded {
            needed: count,
            budget: ENUMERATION_BUDGET,
        });
    }
    let m = a.residual_matrix(mu);
    // ||M v||^2 for v on support S depends only on the S x S block of
    // M^T M, so precompute the full Gram once.
    let gram = m.transpose() * &m;
    let mut best = 0.0f64;
    let mut sub = DMatrix::zeros(s, s);
    for support in (0..n).combinations(s) {
        for (bi, &i) in support.iter().enumerate() {
            for (bj, &j) in support.iter().enumerate() {
                sub[(bi, bj)] = gram[(i, j)];
            }
        }
        let eig = sub.clone().symmetric_eigen();
        let lam_max = eig.eigenvalues.iter().fold(0.0f64, |acc, &v| acc.max(v));
        best = best.max(lam_max.max(0.0).sqrt());
    }
    Ok(best)
}

/// Exact RIC of mu A^T A over the secants of a subspace union: the maximum
/// over subspace pairs (i, j) of the largest singular value of
/// (I - mu A^T A) U_ij, where U_ij spans V_i + V_j.
pub fn ric_exact_union(
    a: &MeasurementOperator,
    mu: f64,
    model: &SubspaceUnionModel,
) -> Result<f64> {
    validate_mu(mu)?;
    if model.ambient_dim() != a.cols() {
        return Err(Error::DimensionMismatch {
            context: "ric_exact_union: model dimension vs operator columns",
            expected: a.cols(),
            found: model.ambient_dim(),
        });
    }
    let p = model.bases().len();
    let pairs = (p as u128) * (p as u128 + 1) / 2;
    if pairs > u128::from(ENUMERATION_BUDGET) {
        return Err(Error::BudgetExceeded {
            needed: pairs,
            budget: ENUMERATION_BUDGET,
        });
    }
    let m = a.residual_matrix(mu);
    let mut best = 0.0f64;
    for i in 0..p {
        for j in i..p {
            let u = pairwise_sum_basis(&model.bases()[i], &model.bases()[j]);
            best = best.max(spectral_norm(&(&m * &u)));
        }
    }
    Ok(best)
}

/// Orthonormal basis of the column span of [b1 | b2], via SVD with a rank
/// cutoff at 1e-10.
pub(crate) fn pairwise_sum_basis(b1: &DMatrix<f64>, b2: &DMatrix<f64>) -> DMatrix<f64> {
    let n = b1.nrows();
    let mut stacked = DMatrix::zeros(n, b1.ncols() + b2.ncols());
    stacked.view_mut((0, 0), (n, b1.ncols())).copy_from(b1);
    stacked
        .view_mut((0, b1.ncols()), (n, b2.ncols()))
        .copy_from(b2);
    let svd = stacked
        .try_svd(true, false, f64::EPSILON, 0)
        .expect("SVD of a finite matrix");
    let u = svd.u.expect("u requested");
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * svd.singular_values.max())
        .count();
    // Columns of u are ordered like singular_values; keep the significant ones.
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&x, &y| {
        svd.singular_values[y]
            .partial_cmp(&svd.singular_values[x])
            .unwrap()
    });
    let mut out = DMatrix::zeros(n, rank);
    for (c, &idx) in order[..rank].iter().enumerate() {
        out.set_column(c, &u.column(idx));
    }
    out
}

/// Monte Carlo lower bound on the RIC: the maximum of
/// ||(I - mu A^T A) v|| / ||v|| over sampled secants. Deterministic for a
/// fixed rng substream.
pub fn ric_monte_carlo(
    a: &MeasurementOperator,
    mu: f64,
    model: &dyn ModelSet,
    trials: usize,
    rng: &mut Rng,
) -> Result<f64> {
    validate_mu(mu)?;
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let m = a.residual_matrix(mu);
    let mut best: Option<f64> = None;
    for _ in 0..trials {
        let v = model.sample_secant(rng);
        let norm = v.norm();
        if norm < 1e-15 {
            continue;
        }
        let mapped = (&m * v.as_vector()).norm();
        let ratio = mapped / norm;
        best = Some(best.map_or(ratio, |b| b.max(ratio)));
    }
    best.ok_or_else(|| Error::NoValidSamples("all sampled secants were zero".into()))
}

/// Sampled lower bound on the restricted Lipschitz constant of a
/// projection: max over (z ambient in the ball, x in Sigma) of
/// ||P(z) - x|| / ||z - x||, skipping near-coincident pairs.
pub fn beta_estimate(
    projector: &mut dyn Projector,
    model: &dyn ModelSet,
    trials: usize,
    radius: f64,
    rng: &mut Rng,
) -> Result<f64> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    if !(radius > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radius must be positive, got {radius}"
        )));
    }
    let n = model.ambient_dim();
    let mut best: Option<f64> = None;
    for _ in 0..trials {
        let z_scale = radius * rng.open_uniform();
        let z = crate::linalg::Signal::from_vector_unchecked(rng.unit_vector(n) * z_scale);
        let x_scale = radius * rng.open_uniform();
        let x = model.sample(rng, x_scale);
        let dist = (z.as_vector() - x.as_vector()).norm();
        if dist < 1e-12 {
            continue;
        }
        let p = projector.project(&z);
        let ratio = (p.as_vector() - x.as_vector()).norm() / dist;
        best = Some(best.map_or(ratio, |b| b.max(ratio)));
    }
    best.ok_or_else(|| Error::NoValidSamples("no pair with ||z - x|| >= 1e-12".into()))
}

/// Golden-section search for the step size minimizing delta(mu) over a
/// subinterval of (0, 2 / sigma_max(A)^2]. Valid because delta(mu) is a
/// maximum of norms affine in mu, hence convex. Returns the best evaluated
/// (mu, delta) with mu resolved to 1e-6.
pub fn tune_mu(
    a: &MeasurementOperator,
    ric: impl Fn(f64) -> Result<f64>,
    interval: (f64, f64),
) -> Result<(f64, f64)> {
    let (lo, hi) = interval;
    let cap = 2.0 / (a.sigma_max() * a.sigma_max());
    if !(lo > 0.0) || !(hi > lo) || hi > cap * (1.0 + 1e-12) {
        return Err(Error::InvalidParameter(format!(
            "interval must satisfy 0 < lo < hi <= 2/sigma_max^2 = {cap}, got ({lo}, {hi})"
        )));
    }
    const TOL: f64 = 1e-6;
    let inv_phi = (5.0f64.sqrt() - 1.0) / 2.0;

    let mut best = (lo, ric(lo)?);
    let consider = |mu: f64, val: f64, best: &mut (f64, f64)| {
        if val < best.1 {
            *best = (mu, val);
        }
    };
    let hi_val = ric(hi)?;
    consider(hi, hi_val, &mut best);

    let (mut a0, mut b0) = (lo, hi);
    let mut c = b0 - inv_phi * (b0 - a0);
    let mut d = a0 + inv_phi * (b0 - a0);
    let mut fc = ric(c)?;
    consider(c, fc, &mut best);
    let mut fd = ric(d)?;
    consider(d, fd, &mut best);
    while b0 - a0 > TOL {
        if fc < fd {
            b0 = d;
            d = c;
            fd = fc;
            c = b0 - inv_phi * (b0 - a0);
            fc = ric(c)?;
            consider(c, fc, &mut best);
        } else {
            a0 = c;
            c = d;
            fc = fd;
            d = a0 + inv_phi * (b0 - a0);
            fd = ric(d)?;
            consider(d, fd, &mut best);
        }
    }
    let mid = 0.5 * (a0 + b0);
    let fmid = ric(mid)?;
    consider(mid, fmid, &mut best);
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Signal;
    use crate::model::{hard_threshold, ExactProjector, SparseModel};
    use nalgebra::DVector;

    fn gaussian_operator(seed: u64, m: usize, n: usize) -> MeasurementOperator {
        let mut rng = Rng::new(seed).substream("matrix");
        MeasurementOperator::new(rng.normal_matrix(m, n) / (m as f64).sqrt()).unwrap()
    }

    fn axes_union(n: usize) -> SubspaceUnionModel {
        let bases = (0..n)
            .map(|i| {
                let mut b = DMatrix::zeros(n, 1);
                b[(i, 0)] = 1.0;
                b
            })
            .collect();
        SubspaceUnionModel::new(bases).unwrap()
    }

    #[test]
    fn ric_identity_is_zero() {
        let a = MeasurementOperator::identity(6);
        for s in 1..=4 {
            assert!(ric_exact_sparse(&a, 1.0, s).unwrap() < 1e-14);
        }
    }

    #[test]
    fn ric_tiny_mu_is_one() {
        let a = gaussian_operator(1, 10, 12);
        let d = ric_exact_sparse(&a, 1e-300, 2).unwrap();
        assert_eq!(d, 1.0);
    }

    /// Enumeration vs an independent sampling oracle: 10^6 random unit
    /// 2-sparse vectors lower-bound the exact value within 1e-3.
    #[test]
    fn ric_exact_matches_sampling_oracle() {
        let a = gaussian_operator(2, 10, 12);
        let mu = 0.5;
        let exact = ric_exact_sparse(&a, mu, 2).unwrap();
        let m = a.residual_matrix(mu);
        let mut rng = Rng::new(3).substream("sampling");
        let mut sampled = 0.0f64;
        for _ in 0..1_000_000 {
            let support = rng.subset(12, 2);
            let mut v = DVector::zeros(12);
            for &i in &support {
                v[i] = rng.standard_normal();
            }
            let norm = v.norm();
            if norm == 0.0 {
                continue;
            }
            sampled = sampled.max((&m * v).norm() / norm);
        }
        assert!(sampled <= exact + 1e-12, "sampled {sampled} > exact {exact}");
        assert!(exact - sampled <= 1e-3, "gap {} too large", exact - sampled);
    }

    #[test]
    fn ric_budget_exceeded() {
        let a = gaussian_operator(4, 10, 40);
        match ric_exact_sparse(&a, 0.5, 10) {
            Err(Error::BudgetExceeded { needed, .. }) => {
                assert!(needed > u128::from(ENUMERATION_BUDGET));
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn ric_union_whole_space_identity() {
        let n = 4;
        let basis = DMatrix::identity(n, n);
        let model = SubspaceUnionModel::new(vec![basis]).unwrap();
        let a = MeasurementOperator::identity(n);
        assert!(ric_exact_union(&a, 1.0, &model).unwrap() < 1e-14);
    }

    #[test]
    fn ric_union_diagonal_example() {
        let model = axes_union(2);
        let (aa, bb) = (0.9, 1.3);
        let a = MeasurementOperator::new(DMatrix::from_diagonal(
            &DVector::from_column_slice(&[aa, bb]),
        ))
        .unwrap();
        let got = ric_exact_union(&a, 1.0, &model).unwrap();
        let expected = (1.0 - aa * aa).abs().max((1.0 - bb * bb).abs());
        assert!((got - expected).abs() < 1e-12);
    }

    /// Coordinate-axes union with s = 2 must agree with the sparse
    /// enumeration: the secant sets coincide.
    #[test]
    fn ric_union_cross_oracle_with_sparse() {
        let a = gaussian_operator(5, 10, 12);
        let model = axes_union(12);
        let union = ric_exact_union(&a, 0.6, &model).unwrap();
        let sparse = ric_exact_sparse(&a, 0.6, 2).unwrap();
        assert!((union - sparse).abs() < 1e-12, "union {union}, sparse {sparse}");
    }

    #[test]
    fn ric_monte_carlo_identity_and_dominance() {
        let a = MeasurementOperator::identity(6);
        let model = SparseModel::new(6, 1).unwrap();
        let mut rng = Rng::new(6).substream("sampling");
        assert!(ric_monte_carlo(&a, 1.0, &model, 100, &mut rng).unwrap() < 1e-14);

        let a = gaussian_operator(7, 10, 12);
        let model = SparseModel::new(12, 1).unwrap();
        for mu in [0.2, 0.5, 0.7] {
            let mut rng = Rng::new(8).substream("sampling");
            let mc = ric_monte_carlo(&a, mu, &model, 20_000, &mut rng).unwrap();
            let exact = ric_exact_sparse(&a, mu, 2).unwrap();
            assert!(mc <= exact + 1e-12, "mc {mc} > exact {exact} at mu {mu}");
        }
    }

    #[test]
    fn ric_monte_carlo_close_to_exact() {
        let a = gaussian_operator(9, 10, 12);
        let model = SparseModel::new(12, 1).unwrap();
        let mut rng = Rng::new(10).substream("sampling");
        let mc = ric_monte_carlo(&a, 0.5, &model, 100_000, &mut rng).unwrap();
        let exact = ric_exact_sparse(&a, 0.5, 2).unwrap();
        assert!(exact - mc <= 0.05, "gap {}", exact - mc);
    }

    #[test]
    fn ric_monotone_in_support_size() {
        let a = gaussian_operator(11, 10, 12);
        let mut prev = 0.0;
        for s in 1..=4 {
            let d = ric_exact_sparse(&a, 0.5, s).unwrap();
            assert!(d >= prev - 1e-12, "s={s}: {d} < {prev}");
            prev = d;
        }
    }

    #[test]
    fn delta_of_mu_is_convex_on_grid() {
        let a = gaussian_operator(12, 10, 12);
        let hi = 2.0 / (a.sigma_max() * a.sigma_max());
        let vals: Vec<f64> = (1..=50)
            .map(|i| ric_exact_sparse(&a, hi * i as f64 / 50.0, 2).unwrap())
            .collect();
        for w in vals.windows(3) {
            assert!(w[0] - 2.0 * w[1] + w[2] >= -1e-9);
        }
    }

    #[test]
    fn beta_identity_projection_is_one() {
        // k = N makes hard thresholding the identity and Sigma the whole
        // space: every ratio is exactly 1.
        let model = SparseModel::new(5, 5).unwrap();
        let mut proj = ExactProjector(&model);
        let mut rng = Rng::new(13).substream("sampling");
        let est = beta_estimate(&mut proj, &model, 1000, 2.0, &mut rng).unwrap();
        assert!((est - 1.0).abs() < 1e-12);
    }

    #[test]
    fn beta_hard_threshold_at_most_two() {
        let model = SparseModel::new(8, 2).unwrap();
        let mut proj = ExactProjector(&model);
        let mut rng = Rng::new(14).substream("sampling");
        let est = beta_estimate(&mut proj, &model, 10_000, 2.0, &mut rng).unwrap();
        assert!(est <= 2.0, "estimate {est}");
        assert!(est > 1.0, "estimate {est} suspiciously small");
    }

    /// Direct evaluation near the thresholding tie: z = (1+eps, 1),
    /// x = e2, k = 1 gives ratio -> sqrt(2) as eps -> 0.
    #[test]
    fn beta_ratio_near_tie_region() {
        let eps = 1e-9;
        let z = Signal::from_slice(&[1.0 + eps, 1.0]).unwrap();
        let x = Signal::from_slice(&[0.0, 1.0]).unwrap();
        let p = hard_threshold(&z, 1).unwrap();
        assert_eq!(p[1], 0.0);
        let ratio = (p.as_vector() - x.as_vector()).norm()
            / (z.as_vector() - x.as_vector()).norm();
        assert!((ratio - 2.0f64.sqrt()).abs() < 1e-6, "ratio {ratio}");
    }

    #[test]
    fn tune_mu_identity() {
        let a = MeasurementOperator::identity(4);
        let (mu, delta) = tune_mu(&a, |mu| ric_exact_sparse(&a, mu, 2), (1e-6, 2.0)).unwrap();
        assert!((mu - 1.0).abs() < 1e-5, "mu {mu}");
        assert!(delta < 1e-5);
    }

    #[test]
    fn tune_mu_scaled_identity() {
        let c = 3.0;
        let a = MeasurementOperator::new(DMatrix::identity(4, 4) * c).unwrap();
        let hi = 2.0 / (c * c);
        let (mu, delta) =
            tune_mu(&a, |mu| ric_exact_sparse(&a, mu, 2), (1e-9, hi)).unwrap();
        assert!((mu - 1.0 / (c * c)).abs() < 1e-5, "mu {mu}");
        assert!(delta < 1e-4);
    }

    #[test]
    fn tune_mu_beats_grid() {
        let a = gaussian_operator(15, 10, 12);
        let hi = 2.0 / (a.sigma_max() * a.sigma_max());
        let (_, best) = tune_mu(&a, |mu| ric_exact_sparse(&a, mu, 2), (1e-9, hi)).unwrap();
        for i in 1..=50 {
            let mu = hi * i as f64 / 50.0;
            let d = ric_exact_sparse(&a, mu, 2).unwrap();
            assert!(best <= d + 1e-9, "grid mu {mu} beats tuned: {d} < {best}");
        }
    }

    #[test]
    fn tune_mu_rejects_bad_interval() {
        let a = MeasurementOperator::identity(3);
        assert!(tune_mu(&a, |mu| ric_exact_sparse(&a, mu, 1), (0.0, 1.0)).is_err());
        assert!(tune_mu(&a, |mu| ric_exact_sparse(&a, mu, 1), (0.5, 3.0)).is_err());
    }

    #[test]
    fn report_rate_identity_and_flags() {
        let r = ConstantsReport::new(0.3, 2.0, 0.9, 0.5, 0.9, 0.01, true, true).unwrap();
        let expected = 0.3 * 2.0 + (1.0f64 - 0.9).abs() * 0.9;
        assert!((r.rate_r - expected).abs() <= 1e-15);
        assert_eq!(r.exact_flags(), "delta:exact;beta:asserted");
        let line = r.csv_line();
        assert_eq!(line.split(',').count(), 8);

        assert!(ConstantsReport::new(-0.1, 2.0, 1.0, 0.5, 1.0, 0.0, true, true).is_err());
        assert!(ConstantsReport::new(0.1, 0.5, 1.0, 0.5, 1.0, 0.0, true, true).is_err());
        assert!(ConstantsReport::new(0.1, 2.0, 1.0, 0.5, 1.5, 0.0, true, true).is_err());
    }
}
