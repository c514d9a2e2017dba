//! Atomic norm induced by the secant set, and the equivalence constant
//! against the Euclidean norm.
//!
//! The norm is the infimum of sqrt(sum_i lambda_i ||z_i||^2) over convex
//! decompositions z = sum_i lambda_i z_i with secant atoms z_i. Weights are
//! restricted to the simplex (lambda_i >= 0); reported values are upper
//! bounds on that infimum except in the single-atom case, where they are
//! exact.
//!
//! For sparse models the atoms are the s-sparse vectors, s = min(2k, N).
//! Over a fixed family of atom supports, the optimal decomposition is
//! closed-form: assigning each coordinate j the value z_j / L_j on every
//! atom covering it, where L_j is the total weight covering j, gives
//! sum_i lambda_i ||z_i||^2 = sum_j z_j^2 / L_j (Cauchy-Schwarz per
//! coordinate). Disjoint partitions specialize to sum_S ||z_S||_2 with
//! weights proportional to the block norms. The search therefore runs the
//! exact partition enumeration first and then a randomized overlapping
//! search: multiplicative-weight updates of lambda over random support
//! families seeded with the best partition.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::Signal;
use crate::model::{Model, ModelSet, SparseModel, SubspaceUnionModel};
use crate::rng::Rng;

/// Largest support size handled by exhaustive partition enumeration.
pub const MAX_PARTITION_NONZEROS: usize = 10;

/// How the decomposition search is allowed to proceed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AtomicSearch {
    /// Exact disjoint-partition enumeration plus the randomized overlap
    /// search; errors above [`MAX_PARTITION_NONZEROS`] nonzeros.
    Exhaustive,
    /// Randomized search only (greedy partition seed); any support size.
    OverlapOnly,
}

/// One atom of the certificate.
#[derive(Clone, Debug)]
pub struct Atom {
    pub weight: f64,
    pub vector: Signal,
}

/// Value plus achieving decomposition. `exact` is set only where the
/// certificate attains the infimum (zero or a single atom); otherwise the
/// value is an upper bound over nonnegative-weight decompositions.
#[derive(Clone, Debug)]
pub struct AtomicNormResult {
    pub value: f64,
    pub atoms: Vec<Atom>,
    pub exact: bool,
    /// Best disjoint-partition value (sparse models, when enumerated).
    pub disjoint_value: Option<f64>,
    /// Best value reached by the randomized overlap search.
    pub overlap_value: Option<f64>,
}

/// Atomic norm with the default exhaustive search.
pub fn atomic_norm(z: &Signal, model: &Model, budget: usize) -> Result<AtomicNormResult> {
    atomic_norm_with_mode(z, model, budget, AtomicSearch::Exhaustive)
}

pub fn atomic_norm_with_mode(
    z: &Signal,
    model: &Model,
    budget: usize,
    mode: AtomicSearch,
) -> Result<AtomicNormResult> {
    if z.len() != model.ambient_dim() {
        return Err(Error::DimensionMismatch {
            context: "atomic_norm: vector length vs model dimension",
            expected: model.ambient_dim(),
            found: z.len(),
        });
    }
    match model {
        Model::Sparse(m) => sparse_atomic_norm(z, m, budget, mode),
        Model::Subspaces(m) => union_atomic_norm(z, m, budget),
    }
}

// ---------------------------------------------------------------------------
// Sparse models
// ---------------------------------------------------------------------------

fn sparse_atomic_norm(
    z: &Signal,
    model: &SparseModel,
    budget: usize,
    mode: AtomicSearch,
) -> Result<AtomicNormResult> {
    let support: Vec<usize> = (0..z.len()).filter(|&i| z[i] != 0.0).collect();
    let s_atom = model.secant_sparsity();

    if support.is_empty() {
        return Ok(AtomicNormResult {
            value: 0.0,
            atoms: Vec::new(),
            exact: true,
            disjoint_value: Some(0.0),
            overlap_value: None,
        });
    }
    if support.len() <= s_atom {
        // z is itself a secant atom; the one-atom decomposition meets the
        // ||z||_2 lower bound.
        let value = z.norm();
        return Ok(AtomicNormResult {
            value,
            atoms: vec![Atom {
                weight: 1.0,
                vector: z.clone(),
            }],
            exact: true,
            disjoint_value: Some(value),
            overlap_value: None,
        });
    }

    let (disjoint_value, best_partition) = match mode {
        AtomicSearch::Exhaustive => {
            if support.len() > MAX_PARTITION_NONZEROS {
                return Err(Error::InvalidParameter(format!(
                    "{} nonzeros exceed the partition-enumeration limit {}; \
                     use AtomicSearch::OverlapOnly",
                    support.len(),
                    MAX_PARTITION_NONZEROS
                )));
            }
            let (v, p) = best_disjoint_partition(z, &support, s_atom);
            (Some(v), p)
        }
        AtomicSearch::OverlapOnly => (None, greedy_partition(z, &support, s_atom)),
    };

    // Value of the seed partition under the optimal block weights.
    let seed_value: f64 = best_partition
        .iter()
        .map(|block| block_norm(z, block))
        .sum();

    let (overlap_value, family, weights) =
        overlap_search(z, &support, s_atom, &best_partition, seed_value, budget);

    let atoms = certificate_from_family(z, &family, &weights);
    let value = match disjoint_value {
        Some(d) => d.min(overlap_value),
        None => overlap_value,
    };
    Ok(AtomicNormResult {
        value,
        atoms,
        exact: false,
        disjoint_value,
        overlap_value: Some(overlap_value),
    })
}

fn block_norm(z: &Signal, block: &[usize]) -> f64 {
    block.iter().map(|&i| z[i] * z[i]).sum::<f64>().sqrt()
}

/// Exhaustive enumeration of set partitions of the support into blocks of
/// size <= cap, minimizing sum of block norms. Canonical recursive growth:
/// each element joins an existing block or opens a new one.
fn best_disjoint_partition(z: &Signal, support: &[usize], cap: usize) -> (f64, Vec<Vec<usize>>) {
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut best = (f64::INFINITY, Vec::new());
    recurse_partitions(z, support, cap, 0, &mut blocks, &mut best);
    best
}

fn recurse_partitions(
    z: &Signal,
    support: &[usize],
    cap: usize,
    pos: usize,
    blocks: &mut Vec<Vec<usize>>,
    best: &mut (f64, Vec<Vec<usize>>),
) {
    if pos == support.len() {
        let value: f64 = blocks.iter().map(|b| block_norm(z, b)).sum();
        if value < best.0 {
            *best = (value, blocks.clone());
        }
        return;
    }
    let item = support[pos];
    for i in 0..blocks.len() {
        if blocks[i].len() < cap {
            blocks[i].push(item);
            recurse_partitions(z, support, cap, pos + 1, blocks, best);
            blocks[i].pop();
        }
    }
    blocks.push(vec![item]);
    recurse_partitions(z, support, cap, pos + 1, blocks, best);
    blocks.pop();
}

/// Descending-magnitude greedy partition into blocks of size <= cap, used
/// to seed the overlap search when enumeration is skipped.
fn greedy_partition(z: &Signal, support: &[usize], cap: usize) -> Vec<Vec<usize>> {
    let mut order = support.to_vec();
    order.sort_by(|&i, &j| z[j].abs().partial_cmp(&z[i].abs()).unwrap());
    order
        .chunks(cap)
        .map(|c| {
            let mut b = c.to_vec();
            b.sort_unstable();
            b
        })
        .collect()
}

/// Objective over a support family: g(lambda) = sum_j z_j^2 / L_j with
/// L_j the total weight covering coordinate j; the atomic-norm candidate
/// is sqrt(g). Minimized over the simplex by multiplicative-weight
/// updates; the returned value starts at the seed partition's closed-form
/// value, so the search never reports worse than its seed.
fn overlap_search(
    z: &Signal,
    support: &[usize],
    s_atom: usize,
    seed_partition: &[Vec<usize>],
    seed_value: f64,
    budget: usize,
) -> (f64, Vec<Vec<usize>>, Vec<f64>) {
    let mut family: Vec<Vec<usize>> = seed_partition.to_vec();
    let mut seen: BTreeSet<Vec<usize>> = family.iter().cloned().collect();
    let mut rng = Rng::new(0).substream("atomic-overlap");

    // A few random extra supports inside supp(z) widen the family beyond
    // the partition.
    let extras = (support.len() / s_atom + 4).min(24);
    for _ in 0..extras {
        let size = 1 + rng.index(s_atom.min(support.len()));
        let picks = rng.subset(support.len(), size);
        let sup: Vec<usize> = picks.iter().map(|&p| support[p]).collect();
        if seen.insert(sup.clone()) {
            family.push(sup);
        }
    }

    let seed_weights: Vec<f64> = {
        let total: f64 = seed_partition.iter().map(|b| block_norm(z, b)).sum();
        family
            .iter()
            .enumerate()
            .map(|(i, _)| {
                if i < seed_partition.len() {
                    block_norm(z, &seed_partition[i]) / total
                } else {
                    0.0
                }
            })
            .collect()
    };

    let objective = |weights: &[f64]| -> f64 {
        let mut g = 0.0;
        for &j in support {
            let mut cover = 0.0;
            for (i, sup) in family.iter().enumerate() {
                if sup.binary_search(&j).is_ok() {
                    cover += weights[i];
                }
            }
            g += z[j] * z[j] / cover;
        }
        g
    };

    let mut best_value = seed_value;
    let mut best_weights = seed_weights;

    let iters = budget.max(50);
    let p = family.len();
    let mut weights = vec![1.0 / p as f64; p];
    for t in 0..iters {
        // Gradient of g wrt lambda_i: -sum_{j in T_i} z_j^2 / L_j^2.
        let mut covers = vec![0.0f64; z.len()];
        for (i, sup) in family.iter().enumerate() {
            for &j in sup {
                covers[j] += weights[i];
            }
        }
        let mut grads = vec![0.0f64; p];
        for (i, sup) in family.iter().enumerate() {
            for &j in sup {
                grads[i] -= z[j] * z[j] / (covers[j] * covers[j]);
            }
        }
        let scale = grads.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-300);
        let step = 0.5 / (1.0 + (t as f64).sqrt());
        let mut total = 0.0;
        for (w, g) in weights.iter_mut().zip(&grads) {
            *w = (*w * (-step * g / scale).exp()).max(1e-12);
            total += *w;
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
        let value = objective(&weights).sqrt();
        if value < best_value {
            best_value = value;
            best_weights = weights.clone();
        }
    }

    (best_value, family, best_weights)
}

/// Decomposition certificate: each covered coordinate carries z_j / L_j on
/// every atom covering it, so sum_i lambda_i z_i reconstructs z.
fn certificate_from_family(z: &Signal, family: &[Vec<usize>], weights: &[f64]) -> Vec<Atom> {
    let mut covers = vec![0.0f64; z.len()];
    for (i, sup) in family.iter().enumerate() {
        for &j in sup {
            covers[j] += weights[i];
        }
    }
    family
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(sup, &w)| {
            let mut v = DVector::zeros(z.len());
            for &j in sup {
                v[j] = z[j] / covers[j];
            }
            Atom {
                weight: w,
                vector: Signal::from_vector_unchecked(v),
            }
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Subspace unions
// ---------------------------------------------------------------------------

/// Atoms of a subspace union live in the pairwise sums V_i + V_j. For a
/// fixed weight vector the optimal decomposition value is
/// z^T (sum_p lambda_p Pi_p)^{-1} z with Pi_p the orthogonal projectors
/// onto the pairwise sums; that quantity is convex in lambda and minimized
/// over the simplex with the same multiplicative-weight scheme.
fn union_atomic_norm(
    z: &Signal,
    model: &SubspaceUnionModel,
    budget: usize,
) -> Result<AtomicNormResult> {
    let n = z.len();
    let norm_z = z.norm();
    if norm_z == 0.0 {
        return Ok(AtomicNormResult {
            value: 0.0,
            atoms: Vec::new(),
            exact: true,
            disjoint_value: None,
            overlap_value: None,
        });
    }

    let bases = model.bases();
    let mut projectors: Vec<DMatrix<f64>> = Vec::new();
    for i in 0..bases.len() {
        for j in i..bases.len() {
            let u = crate::constants::pairwise_sum_basis(&bases[i], &bases[j]);
            projectors.push(&u * u.transpose());
        }
    }

    // Single atom: z already lies in one pairwise sum.
    for pi in &projectors {
        if (pi * z.as_vector() - z.as_vector()).norm() <= 1e-10 * norm_z {
            return Ok(AtomicNormResult {
                value: norm_z,
                atoms: vec![Atom {
                    weight: 1.0,
                    vector: z.clone(),
                }],
                exact: true,
                disjoint_value: None,
                overlap_value: None,
            });
        }
    }

    // The decomposition exists only if the atoms span the ambient space.
    let span: DMatrix<f64> = projectors.iter().fold(DMatrix::zeros(n, n), |acc, p| acc + p);
    let min_eig = span
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(f64::INFINITY, |m, &v| m.min(v));
    if min_eig <= 1e-10 {
        return Err(Error::UnsupportedModel(
            "subspace union does not span the ambient space; the atomic norm is undefined".into(),
        ));
    }

    let p = projectors.len();
    let mut weights = vec![1.0 / p as f64; p];
    let mut best_value = f64::INFINITY;
    let mut best_nu: DVector<f64> = DVector::zeros(n);
    let mut best_weights = weights.clone();

    let iters = budget.max(50);
    for t in 0..iters {
        let mut q = DMatrix::zeros(n, n);
        for (pi, &w) in projectors.iter().zip(&weights) {
            q += pi * w;
        }
        let chol = match q.clone().cholesky() {
            Some(c) => c,
            None => break,
        };
        let nu = chol.solve(z.as_vector());
        let value = z.dot(&nu).max(0.0).sqrt();
        if value < best_value {
            best_value = value;
            best_nu = nu.clone();
            best_weights = weights.clone();
        }
        // d/dlambda_p of z^T Q^{-1} z is -||Pi_p nu||^2... descent on the
        // negative gradient.
        let grads: Vec<f64> = projectors.iter().map(|pi| -(pi * &nu).norm_squared()).collect();
        let scale = grads.iter().fold(0.0f64, |m, g| m.max(g.abs())).max(1e-300);
        let step = 0.5 / (1.0 + (t as f64).sqrt());
        let mut total = 0.0;
        for (w, g) in weights.iter_mut().zip(&grads) {
            *w = (*w * (-step * g / scale).exp()).max(1e-12);
            total += *w;
        }
        for w in weights.iter_mut() {
            *w /= total;
        }
    }

    let atoms: Vec<Atom> = projectors
        .iter()
        .zip(&best_weights)
        .filter(|(_, &w)| w > 1e-12)
        .map(|(pi, &w)| Atom {
            weight: w,
            vector: Signal::from_vector_unchecked(pi * &best_nu),
        })
        .collect();

    Ok(AtomicNormResult {
        value: best_value,
        atoms,
        exact: false,
        disjoint_value: None,
        overlap_value: Some(best_value),
    })
}

// ---------------------------------------------------------------------------

/// Sampled lower bound on the equivalence constant C_Sigma between the
/// Euclidean and atomic norms: the maximum atomic norm over unit vectors.
/// The normalized all-ones direction is always evaluated first (it is the
/// extremal direction for sparse models when 2k divides N), then `trials`
/// random unit directions. Always >= 1.
pub fn c_sigma_estimate(model: &Model, trials: usize, rng: &mut Rng) -> Result<f64> {
    if trials < 1 {
        return Err(Error::InvalidParameter("trials must be >= 1".into()));
    }
    let n = model.ambient_dim();
    let ones = Signal::from_vector_unchecked(
        DVector::from_element(n, 1.0) / (n as f64).sqrt(),
    );
    let budget = 500;
    let mut best = atomic_norm(&ones, model, budget)?.value;
    for _ in 0..trials {
        let z = Signal::from_vector_unchecked(rng.unit_vector(n));
        best = best.max(atomic_norm(&z, model, budget)?.value);
    }
    Ok(best)
}
