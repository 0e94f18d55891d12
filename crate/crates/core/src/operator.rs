//! Bipartite operators on `C^d ⊗ C^d` and their matrix rearrangements.
//!
//! Entries are addressed by `((i, j), (k, l))` with every index in `1..=d`.
//! The flat row of `(i, j)` is `d·(i−1) + j` (1-based), so a `d²×d²` matrix
//! stores `⟨ij|M|kl⟩` at row `d·(i−1)+j`, column `d·(k−1)+l`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::OperatorError;

pub type C64 = Complex64;

/// Zero-based flat index of the 1-based pair `(i, j)`.
#[inline]
pub fn flat_index(d: usize, i: usize, j: usize) -> usize {
    debug_assert!((1..=d).contains(&i) && (1..=d).contains(&j));
    d * (i - 1) + (j - 1)
}

/// Inverse of [`flat_index`]: zero-based flat index to the 1-based pair.
#[inline]
pub fn split_index(d: usize, flat: usize) -> (usize, usize) {
    (flat / d + 1, flat % d + 1)
}

/// A square operator of order `d²` acting on two qudits of local dimension `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteOperator {
    d: usize,
    mat: DMatrix<C64>,
}

impl BipartiteOperator {
    pub fn zeros(d: usize) -> Self {
        assert!(d >= 1, "local dimension must be positive");
        Self { d, mat: DMatrix::zeros(d * d, d * d) }
    }

    pub fn identity(d: usize) -> Self {
        Self { d, mat: DMatrix::identity(d * d, d * d) }
    }

    /// The SWAP gate, `⟨iα|S|jβ⟩ = δ_{iβ} δ_{αj}`.
    pub fn swap(d: usize) -> Self {
        Self::from_fn(d, |(i, a), (j, b)| if i == b && a == j { C64::one() } else { C64::zero() })
    }

    /// Controlled shift `|i⟩|α⟩ → |i⟩|α + i − 1 mod d⟩`; for `d = 2` this is CNOT.
    pub fn controlled_shift(d: usize) -> Self {
        Self::from_fn(d, |(i, a), (j, b)| if i == j && a == (b - 1 + i - 1) % d + 1 { C64::one() } else { C64::zero() })
    }

    /// Builds an operator from a function of 1-based `((row pair), (column pair))`.
    pub fn from_fn(d: usize, mut f: impl FnMut((usize, usize), (usize, usize)) -> C64) -> Self {
        let n = d * d;
        let mat = DMatrix::from_fn(n, n, |r, c| f(split_index(d, r), split_index(d, c)));
        Self { d, mat }
    }

    pub fn from_matrix(d: usize, mat: DMatrix<C64>) -> Result<Self, OperatorError> {
        if d == 0 || mat.nrows() != d * d || mat.ncols() != d * d {
            return Err(OperatorError::Shape { d, rows: mat.nrows(), cols: mat.ncols() });
        }
        Ok(Self { d, mat })
    }

    /// Local product `a ⊗ b` of two `d×d` matrices.
    pub fn local(a: &DMatrix<C64>, b: &DMatrix<C64>) -> Result<Self, OperatorError> {
        let d = a.nrows();
        if a.ncols() != d || b.nrows() != d || b.ncols() != d {
            return Err(OperatorError::Shape { d, rows: b.nrows(), cols: b.ncols() });
        }
        Ok(Self { d, mat: a.kronecker(b) })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Matrix order `d²`.
    #[inline]
    pub fn order(&self) -> usize {
        self.d * self.d
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.mat
    }

    /// `⟨ij|M|kl⟩` with 1-based indices.
    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> C64 {
        self.mat[(flat_index(self.d, i, j), flat_index(self.d, k, l))]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, value: C64) {
        let (r, c) = (flat_index(self.d, i, j), flat_index(self.d, k, l));
        self.mat[(r, c)] = value;
    }

    /// Realignment: `⟨ij|Mᴿ|αβ⟩ = ⟨iα|M|jβ⟩`.
    pub fn realign(&self) -> Self {
        let d = self.d;
        let mut out = DMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for a in 0..d {
                for j in 0..d {
                    for b in 0..d {
                        out[(i * d + j, a * d + b)] = self.mat[(i * d + a, j * d + b)];
                    }
                }
            }
        }
        Self { d, mat: out }
    }

    /// Blockwise partial transpose: `⟨iβ|M^Γ|jα⟩ = ⟨iα|M|jβ⟩`.
    pub fn partial_transpose(&self) -> Self {
        let d = self.d;
        let mut out = DMatrix::zeros(d * d, d * d);
        for i in 0..d {
            for a in 0..d {
                for j in 0..d {
                    for b in 0..d {
                        out[(i * d + b, j * d + a)] = self.mat[(i * d + a, j * d + b)];
                    }
                }
            }
        }
        Self { d, mat: out }
    }

    pub fn adjoint(&self) -> Self {
        Self { d: self.d, mat: self.mat.adjoint() }
    }

    /// Matrix product `self · rhs`.
    pub fn compose(&self, rhs: &Self) -> Self {
        assert_eq!(self.d, rhs.d, "local dimensions differ");
        Self { d: self.d, mat: &self.mat * &rhs.mat }
    }

    /// `(a ⊗ b) · self · (c ⊗ e)` for local `d×d` factors.
    pub fn dress(&self, a: &DMatrix<C64>, b: &DMatrix<C64>, c: &DMatrix<C64>, e: &DMatrix<C64>) -> Self {
        let left = a.kronecker(b);
        let right = c.kronecker(e);
        Self { d: self.d, mat: left * &self.mat * right }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { d: self.d, mat: &self.mat * z }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.mat.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖M − other‖_F`.
    pub fn distance(&self, other: &Self) -> f64 {
        assert_eq!(self.d, other.d, "local dimensions differ");
        self.mat.iter().zip(other.mat.iter()).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt()
    }

    /// `‖M†M − I‖_F`.
    pub fn unitarity_deficit(&self) -> f64 {
        unitarity_deficit(&self.mat)
    }

    /// Number of entries with modulus above `tol`.
    pub fn nnz(&self, tol: f64) -> usize {
        self.mat.iter().filter(|z| z.norm() > tol).count()
    }

    pub fn classify(&self, tol: f64) -> UnitarityReport {
        UnitarityReport::new(
            self.unitarity_deficit(),
            self.realign().unitarity_deficit(),
            self.partial_transpose().unitarity_deficit(),
            tol,
        )
    }

    /// Entries with modulus above `tol`, sorted by `(i, j, k, l)`.
    pub fn support(&self, tol: f64) -> Vec<SparseEntry> {
        let d = self.d;
        let n = d * d;
        let mut out = Vec::new();
        for r in 0..n {
            for c in 0..n {
                let v = self.mat[(r, c)];
                if v.norm() > tol {
                    let (i, j) = split_index(d, r);
                    let (k, l) = split_index(d, c);
                    out.push(SparseEntry { i, j, k, l, value: v });
                }
            }
        }
        out
    }

    pub fn to_sparse(&self) -> SparseOperator {
        SparseOperator { d: self.d, entries: self.support(0.0) }
    }
}

/// `‖M†M − I‖_F` for a square matrix.
pub fn unitarity_deficit(m: &DMatrix<C64>) -> f64 {
    let g = m.adjoint() * m;
    let n = g.nrows();
    let mut acc = 0.0;
    for r in 0..n {
        for c in 0..n {
            let target = if r == c { C64::one() } else { C64::zero() };
            acc += (g[(r, c)] - target).norm_sqr();
        }
    }
    acc.sqrt()
}

/// Deficits of `M`, `Mᴿ` and `M^Γ` with flags thresholded at `tol`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitarityReport {
    pub deficit_u: f64,
    pub deficit_r: f64,
    pub deficit_g: f64,
    pub tol: f64,
    pub is_unitary: bool,
    pub is_dual: bool,
    pub is_tdual: bool,
    pub is_two_unitary: bool,
}

impl UnitarityReport {
    pub fn new(deficit_u: f64, deficit_r: f64, deficit_g: f64, tol: f64) -> Self {
        let is_unitary = deficit_u < tol;
        let is_dual = is_unitary && deficit_r < tol;
        let is_tdual = is_unitary && deficit_g < tol;
        Self {
            deficit_u,
            deficit_r,
            deficit_g,
            tol,
            is_unitary,
            is_dual,
            is_tdual,
            is_two_unitary: is_dual && is_tdual,
        }
    }

    pub fn max_deficit(&self) -> f64 {
        self.deficit_u.max(self.deficit_r).max(self.deficit_g)
    }
}

/// One stored entry `⟨ij|M|kl⟩ = value`, 1-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparseEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub value: C64,
}

impl SparseEntry {
    #[inline]
    pub fn key(&self) -> (usize, usize, usize, usize) {
        (self.i, self.j, self.k, self.l)
    }
}

/// Sparse storage: no explicit zeros, entries sorted by `(i, j, k, l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    d: usize,
    entries: Vec<SparseEntry>,
}

impl SparseOperator {
    /// Drops zero entries and sorts; duplicate addresses are rejected.
    pub fn new(d: usize, mut entries: Vec<SparseEntry>) -> Result<Self, OperatorError> {
        for e in &entries {
            for idx in [e.i, e.j, e.k, e.l] {
                if idx == 0 || idx > d {
                    return Err(OperatorError::IndexOutOfRange { index: idx, d });
                }
            }
        }
        entries.retain(|e| e.value != C64::zero());
        entries.sort_by_key(|e| e.key());
        if let Some(w) = entries.windows(2).find(|w| w[0].key() == w[1].key()) {
            let (i, j, k, l) = w[0].key();
            return Err(OperatorError::DuplicateEntry { i, j, k, l });
        }
        Ok(Self { d, entries })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[SparseEntry] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn to_dense(&self) -> BipartiteOperator {
        let mut op = BipartiteOperator::zeros(self.d);
        for e in &self.entries {
            op.set(e.i, e.j, e.k, e.l, e.value);
        }
        op
    }
}

impl From<&BipartiteOperator> for SparseOperator {
    fn from(op: &BipartiteOperator) -> Self {
        op.to_sparse()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn flat_index_round_trips() {
        for d in 2..=6 {
            for f in 0..d * d {
                let (i, j) = split_index(d, f);
                assert_eq!(flat_index(d, i, j), f);
            }
        }
    }

    #[test]
    fn swap_realigns_to_a_permutation() {
        let s = BipartiteOperator::swap(2);
        let r = s.realign();
        assert_eq!(r.unitarity_deficit(), 0.0);
        assert_eq!(r.nnz(0.0), 4);
        for row in 0..4 {
            assert_eq!(r.matrix().row(row).iter().filter(|z| z.norm() > 0.0).count(), 1);
        }
    }

    #[test]
    fn identity_realigns_to_rank_one() {
        let r = BipartiteOperator::identity(2).realign();
        let nz: Vec<_> = r.support(0.0).iter().map(|e| e.key()).collect();
        assert_eq!(nz, vec![(1, 1, 1, 1), (1, 1, 2, 2), (2, 2, 1, 1), (2, 2, 2, 2)]);
        let rank = r.matrix().clone().svd(false, false).singular_values.iter().filter(|s| **s > 1e-12).count();
        assert_eq!(rank, 1);
    }

    #[test]
    fn identity_is_fixed_by_partial_transpose() {
        let id = BipartiteOperator::identity(3);
        assert_eq!(id.partial_transpose(), id);
    }

    #[test]
    fn swap_partial_transpose_is_rank_one() {
        for d in 2..=4 {
            let g = BipartiteOperator::swap(d).partial_transpose();
            assert!(g.unitarity_deficit() > 0.5);
            let sv = g.matrix().clone().svd(false, false).singular_values;
            // Σ|ii⟩⟨jj| is d times a projector
            assert_eq!(sv.iter().filter(|s| **s > 1e-9).count(), 1);
            assert!((sv.max() - d as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn cnot_is_t_dual_but_not_dual() {
        let cnot = BipartiteOperator::controlled_shift(2);
        // rows/cols in order 11,12,21,22: CNOT flips the target when control = 2
        assert_eq!(cnot.get(2, 1, 2, 2), c(1.0));
        assert_eq!(cnot.get(1, 2, 1, 2), c(1.0));
        let rep = cnot.classify(1e-12);
        assert!(rep.is_unitary);
        assert!(rep.is_tdual);
        assert!(!rep.is_dual);
        assert!(rep.deficit_g < 1e-15);
    }

    #[test]
    fn swap_classification() {
        let rep = BipartiteOperator::swap(3).classify(1e-10);
        assert!(rep.is_unitary && rep.is_dual && !rep.is_tdual && !rep.is_two_unitary);
    }

    #[test]
    fn sparse_rejects_duplicates_and_drops_zeros() {
        let e = |i, j, k, l, v: f64| SparseEntry { i, j, k, l, value: c(v) };
        let s = SparseOperator::new(2, vec![e(2, 2, 1, 1, 1.0), e(1, 1, 1, 1, 0.0), e(1, 2, 1, 1, 1.0)]).unwrap();
        assert_eq!(s.nnz(), 2);
        assert_eq!(s.entries()[0].key(), (1, 2, 1, 1));
        assert!(matches!(
            SparseOperator::new(2, vec![e(1, 1, 1, 1, 1.0), e(1, 1, 1, 1, 2.0)]),
            Err(OperatorError::DuplicateEntry { .. })
        ));
        assert!(matches!(SparseOperator::new(2, vec![e(3, 1, 1, 1, 1.0)]), Err(OperatorError::IndexOutOfRange { .. })));
    }
}
