//! Low-dimensional model sets, their projections, and the eta-perturbed
//! projection used to exercise the approximate-projection hypothesis.
//!
//! Projections are single-valued selections of the possibly set-valued
//! maps; every tie is broken toward the lowest index so results are
//! reproducible.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::Signal;
use crate::rng::Rng;

/// Default absolute per-entry tolerance for membership tests.
pub const CONTAINS_TOL: f64 = 1e-9;

/// A model set Sigma: projection, membership, and seeded sampling.
pub trait ModelSet {
    fn ambient_dim(&self) -> usize;

    /// Selected element of the generalized projection; always a member.
    fn project(&self, z: &Signal) -> Signal;

    fn contains(&self, x: &Signal, tol: f64) -> bool;

    /// Member of Sigma with norm exactly `radius` (zero vector for 0).
    fn sample(&self, rng: &mut Rng, radius: f64) -> Signal;

    /// Two independent members, for secant construction.
    fn sample_secant_pair(&self, rng: &mut Rng) -> (Signal, Signal);

    /// Element of the secant set Sigma - Sigma.
    fn sample_secant(&self, rng: &mut Rng) -> Signal {
        let (a, b) = self.sample_secant_pair(rng);
        Signal::from_vector_unchecked(a.as_vector() - b.as_vector())
    }

    /// A member at distance exactly `norm` from the member `w`, staying
    /// inside Sigma. Used by [`PerturbedProjection`].
    fn perturb_member(&self, w: &Signal, norm: f64, rng: &mut Rng) -> Signal;
}

/// Vectors with at most k nonzero entries.
#[derive(Clone, Debug)]
pub struct SparseModel {
    n: usize,
    k: usize,
}

impl SparseModel {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 1 || k < 1 || k > n {
            return Err(Error::InvalidParameter(format!(
                "sparsity k must satisfy 1 <= k <= N, got k={k}, N={n}"
            )));
        }
        Ok(SparseModel { n, k })
    }

    pub fn sparsity(&self) -> usize {
        self.k
    }

    /// Secant elements are s-sparse with s = min(2k, N).
    pub fn secant_sparsity(&self) -> usize {
        (2 * self.k).min(self.n)
    }

    /// Support of `w` extended to size k with the lowest unused indices.
    fn support_superset(&self, w: &Signal) -> Vec<usize> {
        let mut support: Vec<usize> = (0..self.n).filter(|&i| w[i] != 0.0).collect();
        let mut next = 0;
        while support.len() < self.k {
            if !support.contains(&next) {
                support.push(next);
            }
            next += 1;
        }
        support.sort_unstable();
        support.truncate(self.k);
        support
    }

    fn raw_member(&self, rng: &mut Rng) -> Signal {
        let support = rng.subset(self.n, self.k);
        let mut v = Signal::zeros(self.n).into_vector();
        for &i in &support {
            v[i] = rng.standard_normal();
        }
        Signal::from_vector_unchecked(v)
    }
}

/// Keep the k entries of largest magnitude, zero the rest. Ties are broken
/// toward the lowest index. The result attains min_{x k-sparse} ||x - z||_2.
pub fn hard_threshold(z: &Signal, k: usize) -> Result<Signal> {
    let n = z.len();
    if k < 1 || k > n {
        return Err(Error::InvalidParameter(format!(
            "sparsity k must satisfy 1 <= k <= N, got k={k}, N={n}"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort on descending magnitude keeps the lowest index first
    // among ties.
    order.sort_by(|&i, &j| z[j].abs().partial_cmp(&z[i].abs()).unwrap());
    let mut out = Signal::zeros(n).into_vector();
    for &i in &order[..k] {
        out[i] = z[i];
    }
    Ok(Signal::from_vector_unchecked(out))
}

impl ModelSet for SparseModel {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn project(&self, z: &Signal) -> Signal {
        hard_threshold(z, self.k).expect("k validated at construction")
    }

    fn contains(&self, x: &Signal, tol: f64) -> bool {
        x.len() == self.n && x.iter().filter(|v| v.abs() > tol).count() <= self.k
    }

    fn sample(&self, rng: &mut Rng, radius: f64) -> Signal {
        if radius == 0.0 {
            return Signal::zeros(self.n);
        }
        loop {
            let raw = self.raw_member(rng);
            let norm = raw.norm();
            if norm > 0.0 {
                return Signal::from_vector_unchecked(raw.as_vector() * (radius / norm));
            }
        }
    }

    fn sample_secant_pair(&self, rng: &mut Rng) -> (Signal, Signal) {
        (self.raw_member(rng), self.raw_member(rng))
    }

    fn perturb_member(&self, w: &Signal, norm: f64, rng: &mut Rng) -> Signal {
        if norm == 0.0 {
            return w.clone();
        }
        let support = self.support_superset(w);
        let mut dir = vec![0.0; support.len()];
        loop {
            let mut sq = 0.0;
            for d in dir.iter_mut() {
                *d = rng.standard_normal();
                sq += *d * *d;
            }
            if sq > 0.0 {
                let scale = norm / sq.sqrt();
                let mut out = w.as_vector().clone();
                for (&i, &d) in support.iter().zip(dir.iter()) {
                    out[i] += d * scale;
                }
                return Signal::from_vector_unchecked(out);
            }
        }
    }
}

/// Finite union of linear subspaces, each given by an orthonormal basis.
#[derive(Clone, Debug)]
pub struct SubspaceUnionModel {
    n: usize,
    bases: Vec<DMatrix<f64>>,
}

impl SubspaceUnionModel {
    pub fn new(bases: Vec<DMatrix<f64>>) -> Result<Self> {
        if bases.is_empty() {
            return Err(Error::InvalidParameter("empty subspace basis list".into()));
        }
        let n = bases[0].nrows();
        for (idx, b) in bases.iter().enumerate() {
            if b.nrows() != n {
                return Err(Error::DimensionMismatch {
                    context: "subspace bases must share the ambient dimension",
                    expected: n,
                    found: b.nrows(),
                });
            }
            if b.ncols() == 0 || b.ncols() > n {
                return Err(Error::InvalidParameter(format!(
                    "basis {idx} has invalid column count {}",
                    b.ncols()
                )));
            }
            let gram = b.transpose() * b;
            let identity = DMatrix::identity(b.ncols(), b.ncols());
            if (gram - identity).iter().any(|v| v.abs() > 1e-10) {
                return Err(Error::InvalidParameter(format!(
                    "basis {idx} does not have orthonormal columns within 1e-10"
                )));
            }
        }
        Ok(SubspaceUnionModel { n, bases })
    }

    pub fn bases(&self) -> &[DMatrix<f64>] {
        &self.bases
    }

    fn project_onto(&self, idx: usize, z: &Signal) -> Signal {
        let b = &self.bases[idx];
        Signal::from_vector_unchecked(b * (b.transpose() * z.as_vector()))
    }

    /// Index of the best subspace (lowest index among ties) and the
    /// projection onto it.
    fn best_projection(&self, z: &Signal) -> (usize, Signal) {
        let mut best_idx = 0;
        let mut best = self.project_onto(0, z);
        let mut best_dist = (z.as_vector() - best.as_vector()).norm();
        for i in 1..self.bases.len() {
            let p = self.project_onto(i, z);
            let d = (z.as_vector() - p.as_vector()).norm();
            if d < best_dist {
                best_dist = d;
                best = p;
                best_idx = i;
            }
        }
        (best_idx, best)
    }
}

/// Orthogonal projection onto a union of subspaces: project onto each and
/// keep the closest, ties toward the lowest subspace index.
pub fn project_subspace_union(z: &Signal, model: &SubspaceUnionModel) -> Signal {
    model.best_projection(z).1
}

impl ModelSet for SubspaceUnionModel {
    fn ambient_dim(&self) -> usize {
        self.n
    }

    fn project(&self, z: &Signal) -> Signal {
        project_subspace_union(z, self)
    }

    fn contains(&self, x: &Signal, tol: f64) -> bool {
        if x.len() != self.n {
            return false;
        }
        (0..self.bases.len()).any(|i| {
            let p = self.project_onto(i, x);
            x.iter().zip(p.iter()).all(|(a, b)| (a - b).abs() <= tol)
        })
    }

    fn sample(&self, rng: &mut Rng, radius: f64) -> Signal {
        if radius == 0.0 {
            return Signal::zeros(self.n);
        }
        let i = rng.index(self.bases.len());
        let b = &self.bases[i];
        loop {
            let coeffs = rng.normal_vector(b.ncols());
            let v = b * coeffs;
            let norm = v.norm();
            if norm > 0.0 {
                return Signal::from_vector_unchecked(v * (radius / norm));
            }
        }
    }

    fn sample_secant_pair(&self, rng: &mut Rng) -> (Signal, Signal) {
        let draw = |rng: &mut Rng| {
            let i = rng.index(self.bases.len());
            let b = &self.bases[i];
            Signal::from_vector_unchecked(b * rng.normal_vector(b.ncols()))
        };
        (draw(rng), draw(rng))
    }

    fn perturb_member(&self, w: &Signal, norm: f64, rng: &mut Rng) -> Signal {
        if norm == 0.0 {
            return w.clone();
        }
        // Perturb inside the first subspace containing w, so the result
        // stays a member.
        let idx = (0..self.bases.len())
            .find(|&i| {
                let p = self.project_onto(i, w);
                (w.as_vector() - p.as_vector()).norm() <= CONTAINS_TOL * (1.0 + w.norm())
            })
            .unwrap_or_else(|| self.best_projection(w).0);
        let b = &self.bases[idx];
        loop {
            let coeffs = rng.normal_vector(b.ncols());
            let v = b * coeffs;
            let nv = v.norm();
            if nv > 0.0 {
                return Signal::from_vector_unchecked(w.as_vector() + v * (norm / nv));
            }
        }
    }
}

/// Config-selectable model.
#[derive(Clone, Debug)]
pub enum Model {
    Sparse(SparseModel),
    Subspaces(SubspaceUnionModel),
}

impl Model {
    pub fn as_dyn(&self) -> &dyn ModelSet {
        match self {
            Model::Sparse(m) => m,
            Model::Subspaces(m) => m,
        }
    }
}

impl ModelSet for Model {
    fn ambient_dim(&self) -> usize {
        self.as_dyn().ambient_dim()
    }
    fn project(&self, z: &Signal) -> Signal {
        self.as_dyn().project(z)
    }
    fn contains(&self, x: &Signal, tol: f64) -> bool {
        self.as_dyn().contains(x, tol)
    }
    fn sample(&self, rng: &mut Rng, radius: f64) -> Signal {
        self.as_dyn().sample(rng, radius)
    }
    fn sample_secant_pair(&self, rng: &mut Rng) -> (Signal, Signal) {
        self.as_dyn().sample_secant_pair(rng)
    }
    fn perturb_member(&self, w: &Signal, norm: f64, rng: &mut Rng) -> Signal {
        self.as_dyn().perturb_member(w, norm, rng)
    }
}

/// A projection step, possibly stateful (perturbed projections consume
/// their own random substream).
pub trait Projector {
    fn project(&mut self, z: &Signal) -> Signal;
}

/// The exact orthogonal projection of a model.
pub struct ExactProjector<'a, M: ModelSet + ?Sized>(pub &'a M);

impl<M: ModelSet + ?Sized> Projector for ExactProjector<'_, M> {
    fn project(&mut self, z: &Signal) -> Signal {
        self.0.project(z)
    }
}

/// Orthogonal projection followed by a random in-model nudge of norm
/// eta * u with u ~ uniform(0, 1], so that ||output - P_perp(z)|| <= eta
/// for every input while the output remains a member of Sigma.
pub struct PerturbedProjection<M: ModelSet> {
    inner: M,
    eta: f64,
    rng: Rng,
}

impl<M: ModelSet> PerturbedProjection<M> {
    pub fn new(inner: M, eta: f64, rng: Rng) -> Result<Self> {
        if !(eta >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be nonnegative, got {eta}"
            )));
        }
        Ok(PerturbedProjection { inner, eta, rng })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<M: ModelSet> Projector for PerturbedProjection<M> {
    fn project(&mut self, z: &Signal) -> Signal {
        let w = self.inner.project(z);
        if self.eta == 0.0 {
            return w;
        }
        let norm = self.eta * self.rng.open_uniform();
        self.inner.perturb_member(&w, norm, &mut self.rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;
    use proptest::prelude::*;

    fn sig(v: &[f64]) -> Signal {
        Signal::from_slice(v).unwrap()
    }

    fn axis_basis(n: usize, axes: &[usize]) -> DMatrix<f64> {
        let mut b = DMatrix::zeros(n, axes.len());
        for (c, &i) in axes.iter().enumerate() {
            b[(i, c)] = 1.0;
        }
        b
    }

    #[test]
    fn hard_threshold_examples() {
        let z = sig(&[3.0, -1.0, 2.0]);
        assert_eq!(hard_threshold(&z, 2).unwrap().as_slice(), &[3.0, 0.0, 2.0]);

        let z = sig(&[0.0, 5.0, 0.0]);
        assert_eq!(hard_threshold(&z, 1).unwrap().as_slice(), z.as_slice());

        // Tie rule: lowest index wins.
        let z = sig(&[1.0, 1.0]);
        assert_eq!(hard_threshold(&z, 1).unwrap().as_slice(), &[1.0, 0.0]);

        assert!(hard_threshold(&z, 0).is_err());
        assert!(hard_threshold(&z, 3).is_err());
    }

    #[test]
    fn subspace_projection_examples() {
        let model =
            SubspaceUnionModel::new(vec![axis_basis(2, &[0]), axis_basis(2, &[1])]).unwrap();
        // Member maps to itself.
        let z = sig(&[4.0, 0.0]);
        assert_eq!(model.project(&z).as_slice(), z.as_slice());
        // Coordinate projection.
        assert_eq!(model.project(&sig(&[3.0, 1.0])).as_slice(), &[3.0, 0.0]);
        // Tie toward the lowest subspace index.
        assert_eq!(model.project(&sig(&[1.0, 1.0])).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn subspace_union_rejects_bad_bases() {
        assert!(SubspaceUnionModel::new(vec![]).is_err());
        let skew = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        assert!(SubspaceUnionModel::new(vec![skew]).is_err());
    }

    #[test]
    fn orthogonal_projection_is_optimal() {
        let mut rng = Rng::new(3);
        let sparse = SparseModel::new(8, 2).unwrap();
        let union =
            SubspaceUnionModel::new(vec![axis_basis(8, &[0, 1]), axis_basis(8, &[2, 5])]).unwrap();
        for _ in 0..200 {
            let z = Signal::new(rng.normal_vector(8)).unwrap();
            for model in [&sparse as &dyn ModelSet, &union] {
                let p = model.project(&z);
                let dp = (z.as_vector() - p.as_vector()).norm();
                for _ in 0..10 {
                    let radius = rng.open_uniform() * 3.0;
                    let x = model.sample(&mut rng, radius);
                    let dx = (z.as_vector() - x.as_vector()).norm();
                    assert!(dp <= dx + 1e-12);
                }
            }
        }
    }

    #[test]
    fn projection_membership_and_idempotence() {
        let mut rng = Rng::new(4);
        let sparse = SparseModel::new(10, 3).unwrap();
        let union =
            SubspaceUnionModel::new(vec![axis_basis(10, &[0, 3]), axis_basis(10, &[7])]).unwrap();
        for _ in 0..100 {
            let z = Signal::new(rng.normal_vector(10)).unwrap();
            for model in [&sparse as &dyn ModelSet, &union] {
                let p = model.project(&z);
                assert!(model.contains(&p, CONTAINS_TOL));
                let pp = model.project(&p);
                assert_eq!(p.as_slice(), pp.as_slice());
            }
        }
    }

    #[test]
    fn perturbed_projection_zero_eta_is_exact() {
        let model = SparseModel::new(6, 2).unwrap();
        let mut pp =
            PerturbedProjection::new(model.clone(), 0.0, Rng::new(0).substream("sampling"))
                .unwrap();
        let z = sig(&[1.0, -3.0, 0.5, 0.0, 2.0, 0.1]);
        assert_eq!(pp.project(&z).as_slice(), model.project(&z).as_slice());
    }

    /// Monte Carlo check of the construction: membership always, and the
    /// measured sup of ||output - P_perp(z)|| stays below eta.
    #[test]
    fn perturbed_projection_respects_eta_and_membership() {
        let model = SparseModel::new(8, 3).unwrap();
        let eta = 0.05;
        let mut pp =
            PerturbedProjection::new(model.clone(), eta, Rng::new(9).substream("sampling"))
                .unwrap();
        let mut draw = Rng::new(10);
        let mut sup: f64 = 0.0;
        for _ in 0..10_000 {
            let z = Signal::new(draw.normal_vector(8)).unwrap();
            let w = model.project(&z);
            let out = pp.project(&z);
            assert!(model.contains(&out, CONTAINS_TOL));
            sup = sup.max((out.as_vector() - w.as_vector()).norm());
        }
        assert!(sup <= eta * (1.0 + 1e-12), "sup = {sup}");
        assert!(sup > 0.5 * eta, "perturbation suspiciously small: {sup}");
    }

    #[test]
    fn perturbed_projection_with_deficient_support() {
        // z has a single nonzero but k = 3: the perturbation support is
        // extended to a 3-superset and the output stays 3-sparse.
        let model = SparseModel::new(6, 3).unwrap();
        let mut pp =
            PerturbedProjection::new(model.clone(), 0.1, Rng::new(1).substream("sampling"))
                .unwrap();
        let z = sig(&[0.0, 0.0, 2.0, 0.0, 0.0, 0.0]);
        for _ in 0..100 {
            let out = pp.project(&z);
            assert!(model.contains(&out, CONTAINS_TOL));
        }
    }

    #[test]
    fn secant_samples_are_secants() {
        let mut rng = Rng::new(6);
        let model = SparseModel::new(4, 1).unwrap();
        for _ in 0..500 {
            let (x1, x2) = model.sample_secant_pair(&mut rng);
            assert!(model.contains(&x1, 0.0));
            assert!(model.contains(&x2, 0.0));
            let v = model.sample_secant(&mut rng);
            let nnz = v.iter().filter(|t| **t != 0.0).count();
            assert!(nnz <= 2);
        }
    }

    /// Support-pair coverage: all C(4,1)^2 = 16 ordered pairs appear with
    /// roughly uniform frequency over 10^4 draws.
    #[test]
    fn secant_support_pairs_cover_uniformly() {
        let mut rng = Rng::new(7);
        let model = SparseModel::new(4, 1).unwrap();
        let mut counts = [[0usize; 4]; 4];
        let draws = 10_000;
        for _ in 0..draws {
            let (x1, x2) = model.sample_secant_pair(&mut rng);
            let i = (0..4).find(|&i| x1[i] != 0.0).unwrap();
            let j = (0..4).find(|&j| x2[j] != 0.0).unwrap();
            counts[i][j] += 1;
        }
        let expected = draws as f64 / 16.0;
        for row in &counts {
            for &c in row {
                assert!(
                    (c as f64) > 0.5 * expected && (c as f64) < 1.5 * expected,
                    "count {c} vs expected {expected}"
                );
            }
        }
    }

    #[test]
    fn sample_norm_is_exact() {
        let mut rng = Rng::new(8);
        let model = SparseModel::new(9, 2).unwrap();
        let x = model.sample(&mut rng, 2.5);
        assert!((x.norm() - 2.5).abs() < 1e-12);
        assert_eq!(model.sample(&mut rng, 0.0).norm(), 0.0);
    }

    #[test]
    fn union_model_membership_tolerance() {
        let model = SubspaceUnionModel::new(vec![axis_basis(3, &[0, 1])]).unwrap();
        assert!(model.contains(&sig(&[1.0, 2.0, 0.0]), CONTAINS_TOL));
        assert!(model.contains(&sig(&[1.0, 2.0, 5e-10]), CONTAINS_TOL));
        assert!(!model.contains(&sig(&[1.0, 2.0, 1e-3]), CONTAINS_TOL));
    }

    proptest! {
        #[test]
        fn hard_threshold_is_a_projection(seed in 0u64..300, k in 1usize..5) {
            let mut rng = Rng::new(seed);
            let z = Signal::new(rng.normal_vector(8)).unwrap();
            let p = hard_threshold(&z, k).unwrap();
            let model = SparseModel::new(8, k).unwrap();
            prop_assert!(model.contains(&p, 0.0));
            // Optimality against the best support of the projection itself.
            let dist = (z.as_vector() - p.as_vector()).norm();
            let x = model.sample(&mut rng, z.norm());
            let dx = (z.as_vector() - x.as_vector()).norm();
            prop_assert!(dist <= dx + 1e-12);
        }
    }

}
