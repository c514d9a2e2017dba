//! Deterministic, splittable pseudo-randomness.
//!
//! All randomness in the crate flows through [`Rng`], a counter-based
//! generator (ChaCha8) whose 256-bit key is derived from a 64-bit seed and a
//! chain of stream labels. Substreams obtained from the same root with
//! distinct labels are independent by construction: the label is hashed into
//! the key, so "matrix", "signal", "noise" and "sampling" streams never
//! overlap even for equal seeds. Equal (seed, label path) pairs reproduce the
//! exact same byte stream on every run.
//!
//! A substream derives from the parent's *key*, not its consumed state, so
//! the order in which sibling streams are drawn from never matters. Parallel
//! work partitions take indexed substreams and own them exclusively.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use nalgebra::{DMatrix, DVector};

/// Seeded deterministic generator with named substreams.
#[derive(Clone, Debug)]
pub struct Rng {
    key: u64,
    stream: ChaCha8Rng,
}

const FNV_OFFSET: u64 = 0xcbf29ce484222325;
const FNV_PRIME: u64 = 0x00000100000001b3;

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h = FNV_OFFSET;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

// SplitMix64 finalizer; used both to mix label hashes into keys and to
// expand a 64-bit key into the 256-bit ChaCha seed.
fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

fn chacha_from_key(key: u64) -> ChaCha8Rng {
    let mut seed = [0u8; 32];
    let mut s = key;
    for chunk in seed.chunks_exact_mut(8) {
        s = splitmix(s);
        chunk.copy_from_slice(&s.to_le_bytes());
    }
    ChaCha8Rng::from_seed(seed)
}

impl Rng {
    /// Root generator for a 64-bit seed.
    pub fn new(seed: u64) -> Self {
        let key = splitmix(seed);
        Rng {
            key,
            stream: chacha_from_key(key),
        }
    }

    /// Named substream, derived from this generator's key and `label`.
    pub fn substream(&self, label: &str) -> Self {
        let key = splitmix(self.key ^ fnv1a(label.as_bytes()));
        Rng {
            key,
            stream: chacha_from_key(key),
        }
    }

    /// Indexed substream for partitioned work (trial `index` of `label`).
    pub fn substream_indexed(&self, label: &str, index: u64) -> Self {
        let key = splitmix(self.key ^ fnv1a(label.as_bytes()) ^ splitmix(index));
        Rng {
            key,
            stream: chacha_from_key(key),
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.stream.next_u64()
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.stream.gen::<f64>()
    }

    /// Uniform in (0, 1].
    pub fn open_uniform(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Uniform integer in 0..n.
    pub fn index(&mut self, n: usize) -> usize {
        self.stream.gen_range(0..n)
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.stream.sample(StandardNormal)
    }

    pub fn normal_vector(&mut self, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| self.standard_normal())
    }

    /// Row-major i.i.d. standard normal entries.
    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> DMatrix<f64> {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.standard_normal()).collect();
        DMatrix::from_row_slice(rows, cols, &data)
    }

    /// Uniformly random unit vector (normalized Gaussian; redraws the
    /// zero vector, which has probability zero).
    pub fn unit_vector(&mut self, n: usize) -> DVector<f64> {
        loop {
            let v = self.normal_vector(n);
            let norm = v.norm();
            if norm > 0.0 {
                return v / norm;
            }
        }
    }

    /// Uniformly random k-subset of 0..n, ascending. Partial Fisher-Yates.
    pub fn subset(&mut self, n: usize, k: usize) -> Vec<usize> {
        assert!(k <= n, "subset size {k} exceeds range {n}");
        let mut pool: Vec<usize> = (0..n).collect();
        for i in 0..k {
            let j = i + self.index(n - i);
            pool.swap(i, j);
        }
        let mut out = pool[..k].to_vec();
        out.sort_unstable();
        out
    }
}
