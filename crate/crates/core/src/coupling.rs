//! Ising coupling matrices and the spin-flip transformation.

use std::fmt;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trap::ModeData;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Symmetric, zero-diagonal matrix of accumulated Ising angles `J_ij t`.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix {
    entries: DMatrix<f64>,
}

impl CouplingMatrix {
    pub fn zeros(n: usize) -> Self {
        Self {
            entries: DMatrix::zeros(n, n),
        }
    }

    /// Builds the matrix from `f(i, j)` evaluated for `i < j`.
    pub fn from_upper_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                m.set(i, j, f(i, j));
            }
        }
        m
    }

    /// Accepts a symmetric matrix; the diagonal is discarded.
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                actual: matrix.ncols(),
            });
        }
        let asym = (&matrix - matrix.transpose()).amax();
        if asym > SYMMETRY_TOLERANCE {
            return Err(Error::NotSymmetric(asym));
        }
        let n = matrix.nrows();
        Ok(Self::from_upper_fn(n, |i, j| matrix[(i, j)]))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Sets both `(i, j)` and `(j, i)`. Diagonal writes are ignored.
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        if i != j {
            self.entries[(i, j)] = value;
            self.entries[(j, i)] = value;
        }
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            entries: &self.entries * factor,
        }
    }

    /// Infinity norm of the entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.entries - &other.entries).amax()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.amax()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|&x| x == 0.0)
    }

    /// Upper-triangular entries, row-major: `(J01, J02, .., J12, ..)`.
    pub fn vectorize(&self) -> Vec<f64> {
        upper_triangle(&self.entries)
    }

    pub fn devectorize(values: &[f64], n: usize) -> Result<Self> {
        if values.len() != pair_count(n) {
            return Err(Error::DimensionMismatch {
                expected: pair_count(n),
                actual: values.len(),
            });
        }
        let mut it = values.iter();
        Ok(Self::from_upper_fn(n, |_, _| *it.next().unwrap()))
    }

    /// Like [`devectorize`](Self::devectorize) but infers `n`.
    pub fn from_upper(values: &[f64]) -> Result<Self> {
        let n = size_from_pairs(values.len()).ok_or(Error::NotTriangular(values.len()))?;
        Self::devectorize(values, n)
    }

    /// Number of upper-triangular entries with `|J_ij| > tol`.
    pub fn nonzero_pairs(&self, tol: f64) -> usize {
        self.vectorize().iter().filter(|x| x.abs() > tol).count()
    }

    /// `sum_{i<j} |J_ij|`.
    pub fn total_angle(&self) -> f64 {
        self.vectorize().iter().map(|x| x.abs()).sum()
    }

    /// Relabels ions: entry `(perm[i], perm[j])` of the result is `(i, j)` here.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: perm.len(),
            });
        }
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in (i + 1)..n {
                out.set(perm[i], perm[j], self.get(i, j));
            }
        }
        Ok(out)
    }
}

impl std::ops::Add for &CouplingMatrix {
    type Output = CouplingMatrix;

    fn add(self, rhs: Self) -> CouplingMatrix {
        CouplingMatrix {
            entries: &self.entries + &rhs.entries,
        }
    }
}

impl std::ops::AddAssign<&CouplingMatrix> for CouplingMatrix {
    fn add_assign(&mut self, rhs: &CouplingMatrix) {
        self.entries += &rhs.entries;
    }
}

pub fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

pub fn size_from_pairs(len: usize) -> Option<usize> {
    let n = ((1.0 + (1.0 + 8.0 * len as f64).sqrt()) / 2.0).round() as usize;
    (pair_count(n) == len && n >= 1).then_some(n)
}

/// Row-major upper triangle (excluding the diagonal) of a square matrix.
pub fn upper_triangle(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut v = Vec::with_capacity(pair_count(n));
    for i in 0..n {
        for j in (i + 1)..n {
            v.push(m[(i, j)]);
        }
    }
    v
}

/// `(i, j)` pairs in vectorization order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
}

/// Qubits whose spins are inverted for the duration of one drive block.
///
/// Indices are zero-based and kept sorted and unique.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FlipPattern(Vec<usize>);

impl FlipPattern {
    pub fn none() -> Self {
        Self(Vec::new())
    }

    pub fn new(mut qubits: Vec<usize>) -> Self {
        qubits.sort_unstable();
        qubits.dedup();
        Self(qubits)
    }

    pub fn single(q: usize) -> Self {
        Self(vec![q])
    }

    pub fn qubits(&self) -> &[usize] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, q: usize) -> bool {
        self.0.binary_search(&q).is_ok()
    }

    pub fn check(&self, n: usize) -> Result<()> {
        match self.0.iter().find(|&&q| q >= n) {
            Some(&q) => Err(Error::IndexOutOfRange { index: q, n }),
            None => Ok(()),
        }
    }

    /// The diagonal of `S_P`: `-1` on flipped qubits, `+1` elsewhere.
    pub fn signs(&self, n: usize) -> Vec<f64> {
        let mut s = vec![1.0; n];
        for &q in &self.0 {
            s[q] = -1.0;
        }
        s
    }
}

impl fmt::Display for FlipPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (i, q) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{q}")?;
        }
        write!(f, "}}")
    }
}

/// `S_P J S_P`: every coupling touching exactly one flipped qubit changes sign.
pub fn apply_flip(j: &CouplingMatrix, pattern: &FlipPattern) -> Result<CouplingMatrix> {
    let n = j.n();
    pattern.check(n)?;
    let s = pattern.signs(n);
    Ok(CouplingMatrix::from_upper_fn(n, |a, b| s[a] * s[b] * j.get(a, b)))
}

/// `sum_k weights[k] * Jhat^(k)` with the diagonal dropped.
pub fn couplings_from_weights(modes: &ModeData, weights: &[f64]) -> Result<CouplingMatrix> {
    let n = modes.n();
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: weights.len(),
        });
    }
    let v = &modes.scaled_vectors;
    Ok(CouplingMatrix::from_upper_fn(n, |a, b| {
        weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w != 0.0)
            .map(|(k, &w)| w * v[(a, k)] * v[(b, k)])
            .sum()
    }))
}
