//! Polar factors, rank-one product approximations and related SVD helpers.

use nalgebra::{DMatrix, DVector};
use num_traits::Zero;

use crate::error::DecompError;
use crate::operator::{BipartiteOperator, C64};

/// Singular value decomposition with values sorted in descending order.
pub struct SortedSvd {
    pub u: DMatrix<C64>,
    pub singular_values: Vec<f64>,
    pub v_t: DMatrix<C64>,
}

pub fn sorted_svd(m: &DMatrix<C64>) -> Result<SortedSvd, DecompError> {
    let svd = m.clone().try_svd(true, true, 5.0 * f64::EPSILON, 0).ok_or(DecompError::SvdFailed)?;
    let u = svd.u.ok_or(DecompError::SvdFailed)?;
    let v_t = svd.v_t.ok_or(DecompError::SvdFailed)?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    // stable sort keeps the routine's own order among ties
    order.sort_by(|&a, &b| s[b].partial_cmp(&s[a]).unwrap_or(std::cmp::Ordering::Equal));
    let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v_t = DMatrix::from_fn(order.len(), v_t.ncols(), |r, c| v_t[(order[r], c)]);
    Ok(SortedSvd { u, singular_values: order.iter().map(|&i| s[i]).collect(), v_t })
}

/// Frobenius-nearest unitary `W·V†` of a square matrix `M = W·Σ·V†`.
pub fn polar_unitary(m: &DMatrix<C64>) -> Result<DMatrix<C64>, DecompError> {
    let svd = sorted_svd(m)?;
    let largest = svd.singular_values.first().copied().unwrap_or(0.0);
    let smallest = svd.singular_values.last().copied().unwrap_or(0.0);
    if smallest.is_nan() || smallest <= largest * f64::EPSILON * m.nrows() as f64 || largest == 0.0 {
        return Err(DecompError::RankDeficient { smallest });
    }
    Ok(svd.u * svd.v_t)
}

/// Nearest unitary operator; errors when the polar factor is not unique.
pub fn nearest_unitary(m: &BipartiteOperator) -> Result<BipartiteOperator, DecompError> {
    let w = polar_unitary(m.matrix())?;
    Ok(BipartiteOperator::from_matrix(m.dim(), w).expect("shape preserved"))
}

/// Best product approximation `a ⊗ b` of a bipartite vector.
#[derive(Clone, Debug)]
pub struct ProductApprox {
    pub a: DVector<C64>,
    pub b: DVector<C64>,
    /// `|⟨a⊗b|v⟩| / ‖v‖`, the largest Schmidt coefficient of `v/‖v‖`.
    pub overlap: f64,
    /// The top Schmidt coefficient is (numerically) repeated.
    pub degenerate: bool,
}

/// Reshapes `v` (length `d²`, index `d·(i−1)+j`) into the `d×d` matrix `C_ij`.
pub fn coefficient_matrix(v: &[C64], d: usize) -> Result<DMatrix<C64>, DecompError> {
    if v.len() != d * d {
        return Err(DecompError::Length { len: v.len(), d });
    }
    Ok(DMatrix::from_fn(d, d, |i, j| v[i * d + j]))
}

pub fn nearest_product(v: &[C64], d: usize) -> Result<ProductApprox, DecompError> {
    let c = coefficient_matrix(v, d)?;
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(DecompError::ZeroVector);
    }
    let svd = sorted_svd(&c)?;
    let s = &svd.singular_values;
    let a = svd.u.column(0).into_owned();
    // C ≈ s₀ · a · (row 0 of V†), so b is that row read as a column vector
    let b = DVector::from_iterator(d, svd.v_t.row(0).iter().copied());
    let degenerate = s.len() > 1 && s[0] - s[1] <= 1e-10 * s[0];
    Ok(ProductApprox { a, b, overlap: s[0] / norm, degenerate })
}

/// `a ⊗ b` as a flat vector of length `d²`.
pub fn kron_vec(a: &DVector<C64>, b: &DVector<C64>) -> DVector<C64> {
    a.kronecker(b)
}

/// A unitary whose first column is the unit vector `x`, completed by
/// Gram–Schmidt against the standard basis in index order.
pub fn complete_to_unitary(x: &DVector<C64>) -> DMatrix<C64> {
    let n = x.len();
    let mut cols: Vec<DVector<C64>> = vec![x.normalize()];
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut v = DVector::from_fn(n, |r, _| if r == e { C64::new(1.0, 0.0) } else { C64::zero() });
        for _ in 0..2 {
            for q in &cols {
                let proj = q.dotc(&v);
                v -= q * proj;
            }
        }
        let nv = v.norm();
        if nv > 1e-6 {
            cols.push(v / C64::new(nv, 0.0));
        }
    }
    DMatrix::from_columns(&cols)
}
