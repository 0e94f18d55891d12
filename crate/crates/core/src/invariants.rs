//! Local-unitary invariants built from permutation-indexed contractions,
//! the four-party operator `L[U]` and its moments.
//!
//! For permutations `σ, τ, ρ, λ` of `[n]` the invariant is
//!
//! ```text
//! V = Σ Π_m A^{i_m j_m}_{k_m l_m} · Π_m conj(A^{i_σ(m) j_τ(m)}_{k_ρ(m) l_λ(m)})
//! ```
//!
//! summed over all index vectors `i, j, k, l ∈ [d]^n`.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{InvariantError, LatinError};
use crate::latin::{enphase, gate_from_ols, OlsPair, PermutationGate};
use crate::operator::{BipartiteOperator, C64};

/// Four permutations of `[n]` in one-line notation (`sigma[m−1] = σ(m)`).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PermTuple {
    sigma: Vec<usize>,
    tau: Vec<usize>,
    rho: Vec<usize>,
    lambda: Vec<usize>,
}

fn check_perm(name: &'static str, p: &[usize]) -> Result<(), InvariantError> {
    let n = p.len();
    let mut seen = vec![false; n + 1];
    for &x in p {
        if x == 0 || x > n || std::mem::replace(&mut seen[x], true) {
            return Err(InvariantError::NotPermutation { name, n });
        }
    }
    Ok(())
}

fn compose(p: &[usize], q: &[usize]) -> Vec<usize> {
    q.iter().map(|&x| p[x - 1]).collect()
}

fn inverse(p: &[usize]) -> Vec<usize> {
    let mut out = vec![0; p.len()];
    for (m, &x) in p.iter().enumerate() {
        out[x - 1] = m + 1;
    }
    out
}

impl PermTuple {
    pub fn new(
        sigma: Vec<usize>,
        tau: Vec<usize>,
        rho: Vec<usize>,
        lambda: Vec<usize>,
    ) -> Result<Self, InvariantError> {
        let n = sigma.len();
        if tau.len() != n || rho.len() != n || lambda.len() != n || n == 0 {
            return Err(InvariantError::LengthMismatch);
        }
        check_perm("sigma", &sigma)?;
        check_perm("tau", &tau)?;
        check_perm("rho", &rho)?;
        check_perm("lambda", &lambda)?;
        Ok(Self { sigma, tau, rho, lambda })
    }

    /// `σ = (1 2 3 4)`, `τ = (2 1 4 3)`, `ρ = (3 4 1 2)`, `λ = (4 3 2 1)`.
    pub fn canonical_n4() -> Self {
        Self::new(vec![1, 2, 3, 4], vec![2, 1, 4, 3], vec![3, 4, 1, 2], vec![4, 3, 2, 1]).unwrap()
    }

    pub fn identity(n: usize) -> Self {
        let id: Vec<usize> = (1..=n).collect();
        Self::new(id.clone(), id.clone(), id.clone(), id).unwrap()
    }

    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[usize] {
        &self.sigma
    }

    pub fn tau(&self) -> &[usize] {
        &self.tau
    }

    pub fn rho(&self) -> &[usize] {
        &self.rho
    }

    pub fn lambda(&self) -> &[usize] {
        &self.lambda
    }

    pub fn rows(&self) -> [&[usize]; 4] {
        [&self.sigma, &self.tau, &self.rho, &self.lambda]
    }

    /// All four composed on the right with `π`; the invariant is unchanged.
    pub fn right_compose(&self, pi: &[usize]) -> Result<Self, InvariantError> {
        check_perm("pi", pi)?;
        if pi.len() != self.n() {
            return Err(InvariantError::LengthMismatch);
        }
        Ok(Self {
            sigma: compose(&self.sigma, pi),
            tau: compose(&self.tau, pi),
            rho: compose(&self.rho, pi),
            lambda: compose(&self.lambda, pi),
        })
    }

    /// The equivalent tuple whose row `row` (0 = σ … 3 = λ) is the identity.
    pub fn with_identity_row(&self, row: usize) -> Self {
        let pi = inverse(self.rows()[row]);
        self.right_compose(&pi).expect("inverse is a permutation of the same length")
    }

    /// Componentwise inverses; the invariant becomes its complex conjugate.
    pub fn inverse(&self) -> Self {
        Self {
            sigma: inverse(&self.sigma),
            tau: inverse(&self.tau),
            rho: inverse(&self.rho),
            lambda: inverse(&self.lambda),
        }
    }
}

/// Whether every column `(σ(m), τ(m), ρ(m), λ(m))` holds four distinct symbols.
pub fn latin_rectangle_check(p: &PermTuple) -> bool {
    (0..p.n()).all(|m| {
        let col = [p.sigma[m], p.tau[m], p.rho[m], p.lambda[m]];
        (0..4).all(|a| (a + 1..4).all(|b| col[a] != col[b]))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Sparse enumeration when the support is small enough, otherwise the network.
    Auto,
    /// Enumerates `n`-tuples of support entries with zero pruning.
    Sparse,
    /// Pairwise tensor-network contraction with dense intermediates.
    Network,
    /// Full loop over all `d^{4n}` index vectors; guarded by the budget.
    Dense,
}

#[derive(Clone, Copy, Debug)]
pub struct ContractOptions {
    pub method: Method,
    /// Largest number of terms the dense loop may visit.
    pub dense_budget: f64,
    /// Entries of the support below this modulus count as zero.
    pub support_tol: f64,
    /// Largest intermediate tensor the network path may allocate.
    pub network_budget: usize,
}

impl Default for ContractOptions {
    fn default() -> Self {
        Self { method: Method::Auto, dense_budget: 1e9, support_tol: 0.0, network_budget: 1 << 26 }
    }
}

const SPARSE_AUTO_LIMIT: f64 = 4e8;

pub fn contract_invariant(a: &BipartiteOperator, perms: &PermTuple) -> Result<C64, InvariantError> {
    contract_with(a, perms, &ContractOptions::default())
}

pub fn contract_with(a: &BipartiteOperator, perms: &PermTuple, opts: &ContractOptions) -> Result<C64, InvariantError> {
    match opts.method {
        Method::Sparse => Ok(contract_sparse(a, perms, opts.support_tol)),
        Method::Dense => contract_dense(a, perms, opts.dense_budget),
        Method::Network => contract_network(a, perms, opts.network_budget),
        Method::Auto => {
            let nnz = a.nnz(opts.support_tol) as f64;
            if nnz.powi(perms.n() as i32) <= SPARSE_AUTO_LIMIT {
                Ok(contract_sparse(a, perms, opts.support_tol))
            } else {
                contract_network(a, perms, opts.network_budget)
            }
        }
    }
}

struct SparseWalk<'a> {
    d: usize,
    n: usize,
    entries: Vec<([usize; 4], C64)>,
    conj: &'a [C64],
    perms: [Vec<usize>; 4],
    // conjugate factors whose indices are all fixed once depth t is reached
    ready: Vec<Vec<usize>>,
}

impl SparseWalk<'_> {
    #[inline]
    fn conj_factor(&self, m: usize, idx: &[[usize; 4]]) -> C64 {
        let d = self.d;
        let i = idx[self.perms[0][m]][0];
        let j = idx[self.perms[1][m]][1];
        let k = idx[self.perms[2][m]][2];
        let l = idx[self.perms[3][m]][3];
        self.conj[((i * d + j) * d + k) * d + l]
    }

    fn walk(&self, depth: usize, idx: &mut [[usize; 4]], acc: C64) -> C64 {
        if depth == self.n {
            return acc;
        }
        let mut sum = C64::zero();
        'entries: for (quad, value) in &self.entries {
            idx[depth] = *quad;
            let mut v = acc * value;
            for &m in &self.ready[depth + 1] {
                let c = self.conj_factor(m, idx);
                if c.is_zero() {
                    continue 'entries;
                }
                v *= c;
            }
            sum += self.walk(depth + 1, idx, v);
        }
        sum
    }
}

/// Enumerates support tuples in lexicographic order. Work is split over the
/// first entry and the partial sums are added in entry order, so the result
/// does not depend on the thread count.
pub fn contract_sparse(a: &BipartiteOperator, perms: &PermTuple, tol: f64) -> C64 {
    let d = a.dim();
    let n = perms.n();
    let entries: Vec<([usize; 4], C64)> =
        a.support(tol).iter().map(|e| ([e.i - 1, e.j - 1, e.k - 1, e.l - 1], e.value)).collect();
    let conj: Vec<C64> = a.matrix().transpose().iter().map(|z| z.conj()).collect();
    let zero_based = |p: &[usize]| p.iter().map(|x| x - 1).collect::<Vec<_>>();
    let perms0 =
        [zero_based(perms.sigma()), zero_based(perms.tau()), zero_based(perms.rho()), zero_based(perms.lambda())];
    let mut ready = vec![Vec::new(); n + 1];
    for m in 0..n {
        let depth = perms0.iter().map(|p| p[m]).max().unwrap() + 1;
        ready[depth].push(m);
    }
    let walk = SparseWalk { d, n, entries, conj: &conj, perms: perms0, ready };
    let partial: Vec<C64> = (0..walk.entries.len())
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![[0usize; 4]; n];
            let (quad, value) = walk.entries[first];
            idx[0] = quad;
            let mut v = value;
            for &m in &walk.ready[1] {
                v *= walk.conj_factor(m, &idx);
            }
            if v.is_zero() {
                return C64::zero();
            }
            walk.walk(1, &mut idx, v)
        })
        .collect();
    partial.into_iter().fold(C64::zero(), |s, x| s + x)
}

/// The literal sum over all `d^{4n}` index vectors.
pub fn contract_dense(a: &BipartiteOperator, perms: &PermTuple, budget: f64) -> Result<C64, InvariantError> {
    let d = a.dim();
    let n = perms.n();
    let terms = (d as f64).powi(4 * n as i32);
    if terms > budget {
        return Err(InvariantError::OverBudget { terms, budget });
    }
    let m = a.matrix();
    let entry = |i: usize, j: usize, k: usize, l: usize| m[(i * d + j, k * d + l)];
    let (s, t, r, la) = (perms.sigma(), perms.tau(), perms.rho(), perms.lambda());
    let mut digits = vec![0usize; 4 * n];
    let mut total = C64::zero();
    for _ in 0..terms as u64 {
        let (i, rest) = digits.split_at(n);
        let (j, rest) = rest.split_at(n);
        let (k, l) = rest.split_at(n);
        let mut term = C64::one();
        for q in 0..n {
            term *= entry(i[q], j[q], k[q], l[q]);
            term *= entry(i[s[q] - 1], j[t[q] - 1], k[r[q] - 1], l[la[q] - 1]).conj();
        }
        total += term;
        for digit in digits.iter_mut().rev() {
            *digit += 1;
            if *digit < d {
                break;
            }
            *digit = 0;
        }
    }
    Ok(total)
}

#[derive(Clone, Debug)]
struct Tensor {
    labels: Vec<usize>,
    data: Vec<C64>,
}

impl Tensor {
    /// Data reordered so that `order` lists the labels from most to least significant.
    fn permuted(&self, order: &[usize], d: usize) -> Vec<C64> {
        let rank = self.labels.len();
        let pos: Vec<usize> = order.iter().map(|l| self.labels.iter().position(|x| x == l).unwrap()).collect();
        let mut strides = vec![1usize; rank];
        for a in (0..rank.saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * d;
        }
        let src_strides: Vec<usize> = pos.iter().map(|&p| strides[p]).collect();
        let mut out = Vec::with_capacity(self.data.len());
        let mut digits = vec![0usize; rank];
        let mut offset = 0usize;
        for _ in 0..self.data.len() {
            out.push(self.data[offset]);
            for a in (0..rank).rev() {
                digits[a] += 1;
                offset += src_strides[a];
                if digits[a] < d {
                    break;
                }
                offset -= src_strides[a] * d;
                digits[a] = 0;
            }
        }
        out
    }
}

fn contract_pair(x: &Tensor, y: &Tensor, d: usize) -> Tensor {
    let shared: Vec<usize> = x.labels.iter().copied().filter(|l| y.labels.contains(l)).collect();
    let fx: Vec<usize> = x.labels.iter().copied().filter(|l| !shared.contains(l)).collect();
    let fy: Vec<usize> = y.labels.iter().copied().filter(|l| !shared.contains(l)).collect();
    let rows = d.pow(fx.len() as u32);
    let inner = d.pow(shared.len() as u32);
    let cols = d.pow(fy.len() as u32);
    let ox: Vec<usize> = fx.iter().chain(&shared).copied().collect();
    let oy: Vec<usize> = shared.iter().chain(&fy).copied().collect();
    // row-major data read as the transpose of a column-major matrix
    let mx = DMatrix::from_vec(inner, rows, x.permuted(&ox, d));
    let my = DMatrix::from_vec(cols, inner, y.permuted(&oy, d));
    let product = my * mx; // (cols × rows), column-major = row-major (rows × cols)
    let labels = fx.into_iter().chain(fy).collect();
    Tensor { labels, data: product.data.as_vec().clone() }
}

/// Greedy pairwise contraction: repeatedly joins the two connected tensors
/// with the smallest result.
pub fn contract_network(a: &BipartiteOperator, perms: &PermTuple, budget: usize) -> Result<C64, InvariantError> {
    let d = a.dim();
    let n = perms.n();
    let m = a.matrix();
    let plain: Vec<C64> = m.transpose().iter().copied().collect();
    let conj: Vec<C64> = plain.iter().map(|z| z.conj()).collect();
    let label = |family: usize, slot: usize| family * n + slot;
    let mut tensors = Vec::with_capacity(2 * n);
    for q in 0..n {
        tensors.push(Tensor { labels: (0..4).map(|f| label(f, q)).collect(), data: plain.clone() });
    }
    for q in 0..n {
        let labels = perms.rows().iter().enumerate().map(|(f, p)| label(f, p[q] - 1)).collect();
        tensors.push(Tensor { labels, data: conj.clone() });
    }
    // a label repeated inside one tensor is a trace over that pair of slots
    for t in &mut tensors {
        *t = take_internal_traces(t, d);
    }
    let mut scalars = C64::one();
    loop {
        tensors.retain(|t| {
            if t.labels.is_empty() {
                scalars *= t.data[0];
                false
            } else {
                true
            }
        });
        if tensors.is_empty() {
            break;
        }
        let mut best: Option<(usize, usize, usize)> = None;
        for x in 0..tensors.len() {
            for y in x + 1..tensors.len() {
                let shared = tensors[x].labels.iter().filter(|l| tensors[y].labels.contains(l)).count();
                if shared == 0 {
                    continue;
                }
                let rank = tensors[x].labels.len() + tensors[y].labels.len() - 2 * shared;
                if best.is_none_or(|(_, _, r)| rank < r) {
                    best = Some((x, y, rank));
                }
            }
        }
        let (x, y, rank) = best.expect("every label is shared by exactly two tensors");
        let size = d.pow(rank as u32);
        if size > budget {
            return Err(InvariantError::OverBudget { terms: size as f64, budget: budget as f64 });
        }
        let ty = tensors.remove(y);
        let tx = tensors.remove(x);
        tensors.push(contract_pair(&tx, &ty, d));
    }
    Ok(scalars)
}

fn take_internal_traces(t: &Tensor, d: usize) -> Tensor {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in &t.labels {
        *counts.entry(l).or_default() += 1;
    }
    if counts.values().all(|&c| c == 1) {
        return t.clone();
    }
    let rank = t.labels.len();
    let free: Vec<usize> = counts.iter().filter(|(_, &c)| c == 1).map(|(&l, _)| l).collect();
    let free: Vec<usize> = t.labels.iter().copied().filter(|l| free.contains(l)).collect();
    let traced: Vec<usize> = counts.iter().filter(|(_, &c)| c > 1).map(|(&l, _)| l).collect();
    let mut out = vec![C64::zero(); d.pow(free.len() as u32)];
    for flat in 0..t.data.len() {
        let mut digits = vec![0usize; rank];
        let mut rem = flat;
        for a in (0..rank).rev() {
            digits[a] = rem % d;
            rem /= d;
        }
        let consistent = traced.iter().all(|l| {
            let mut vals = t.labels.iter().zip(&digits).filter(|(x, _)| *x == l).map(|(_, v)| *v);
            let first = vals.next().unwrap();
            vals.all(|v| v == first)
        });
        if !consistent {
            continue;
        }
        let target = free.iter().fold(0, |acc, l| {
            let p = t.labels.iter().position(|x| x == l).unwrap();
            acc * d + digits[p]
        });
        out[target] += t.data[flat];
    }
    Tensor { labels: free, data: out }
}

/// `L[U] = (S_BD ⊗ I_AC)(U† ⊗ U†)(S_BD ⊗ I_AC)(U ⊗ U)` on parties `A B C D`,
/// basis `|a b c e⟩` with flat index `((a·d + b)·d + c)·d + e`.
#[derive(Clone, Debug, PartialEq)]
pub struct LOperator {
    d: usize,
    mat: DMatrix<C64>,
}

impl LOperator {
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.mat
    }

    pub fn trace(&self) -> C64 {
        self.mat.trace()
    }

    /// `Tr L^k` by explicit products; `k = 2` uses `Σ L_xy L_yx`.
    pub fn trace_power(&self, k: usize) -> C64 {
        assert!(k >= 1, "moment order must be positive");
        match k {
            1 => self.trace(),
            2 => {
                let m = &self.mat;
                let n = m.nrows();
                (0..n)
                    .into_par_iter()
                    .map(|x| (0..n).map(|y| m[(x, y)] * m[(y, x)]).fold(C64::zero(), |s, v| s + v))
                    .collect::<Vec<_>>()
                    .into_iter()
                    .fold(C64::zero(), |s, v| s + v)
            }
            _ => {
                let mut p = self.mat.clone();
                for _ in 1..k - 1 {
                    p = &p * &self.mat;
                }
                let m = &self.mat;
                let n = m.nrows();
                (0..n).flat_map(|x| (0..n).map(move |y| (x, y))).map(|(x, y)| p[(x, y)] * m[(y, x)]).sum()
            }
        }
    }
}

pub fn build_l(u: &BipartiteOperator) -> LOperator {
    let d = u.dim();
    let n2 = d * d;
    let n4 = n2 * n2;
    let um = u.matrix();
    let ud = um.adjoint();
    let y = um.kronecker(um);
    let mut mat = DMatrix::zeros(n4, n4);
    let mut tmp = vec![C64::zero(); n4];
    for col in 0..n4 {
        // U† on parties (A, D)
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let mut s = C64::zero();
                        for a2 in 0..d {
                            for e2 in 0..d {
                                s += ud[(a * d + e, a2 * d + e2)] * y[(((a2 * d + b) * d + c) * d + e2, col)];
                            }
                        }
                        tmp[((a * d + b) * d + c) * d + e] = s;
                    }
                }
            }
        }
        // U† on parties (C, B)
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let mut s = C64::zero();
                        for c2 in 0..d {
                            for b2 in 0..d {
                                s += ud[(c * d + b, c2 * d + b2)] * tmp[((a * d + b2) * d + c2) * d + e];
                            }
                        }
                        mat[(((a * d + b) * d + c) * d + e, col)] = s;
                    }
                }
            }
        }
    }
    LOperator { d, mat }
}

/// `Tr L[U]^k`.
pub fn moment(u: &BipartiteOperator, k: usize) -> C64 {
    build_l(u).trace_power(k)
}

/// A weighted subset of `[d]⁴`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiSubset {
    d: usize,
    counts: BTreeMap<[usize; 4], usize>,
}

impl MultiSubset {
    pub fn new(d: usize, counts: BTreeMap<[usize; 4], usize>) -> Self {
        Self { d, counts }
    }

    /// Each element with multiplicity one.
    pub fn from_elements(d: usize, elements: impl IntoIterator<Item = [usize; 4]>) -> Self {
        let mut counts = BTreeMap::new();
        for e in elements {
            *counts.entry(e).or_insert(0) += 1;
        }
        Self { d, counts }
    }

    pub fn elements(&self) -> Vec<[usize; 4]> {
        self.counts.keys().copied().collect()
    }

    pub fn count(&self, s: &[usize; 4]) -> usize {
        self.counts.get(s).copied().unwrap_or(0)
    }

    /// `p ↦ Σ_{s: s_component = p} count(s)` for `component ∈ 0..4`, indexed by `p − 1`.
    pub fn counting(&self, component: usize) -> Vec<usize> {
        let mut out = vec![0; self.d];
        for (s, &c) in &self.counts {
            out[s[component] - 1] += c;
        }
        out
    }

    /// All four counting functions are identically one.
    pub fn is_transversal(&self) -> bool {
        (0..4).all(|c| self.counting(c).iter().all(|&x| x == 1))
    }
}

/// Diagonal and back-diagonal multisets of a diagonal pair and the tuple they induce.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OdlsMultisets {
    pub x: MultiSubset,
    pub y: MultiSubset,
    pub perms: PermTuple,
}

/// `X = {(i, i, K_ii, L_ii)}`, `Y = {(i, d+1−i, K_{i,d+1−i}, L_{i,d+1−i})}`;
/// `σ` is the identity, `τ` the reversal, and `ρ(m) = p` where `K_pp = K_{m,d+1−m}`
/// (`λ` likewise for `L`).
pub fn multisets_from_odls(pair: &OlsPair) -> Result<OdlsMultisets, InvariantError> {
    if !pair.is_diagonal() {
        return Err(LatinError::NotDiagonal.into());
    }
    let d = pair.order();
    let (k, l) = (pair.k(), pair.l());
    let x = MultiSubset::from_elements(d, (1..=d).map(|i| [i, i, k.get(i, i), l.get(i, i)]));
    let y = MultiSubset::from_elements(d, (1..=d).map(|i| [i, d + 1 - i, k.get(i, d + 1 - i), l.get(i, d + 1 - i)]));
    let matching = |sq: &crate::latin::LatinSquare| -> Vec<usize> {
        (1..=d)
            .map(|m| {
                let target = sq.get(m, d + 1 - m);
                (1..=d).find(|&p| sq.get(p, p) == target).expect("diagonal is a transversal")
            })
            .collect()
    };
    let perms = PermTuple::new((1..=d).collect(), (1..=d).rev().collect(), matching(k), matching(l))?;
    Ok(OdlsMultisets { x, y, perms })
}

/// The permutation gate of a diagonal pair with phase `alpha` on row `(1, 1)`.
pub fn odls_phase_gate(pair: &OlsPair, alpha: C64) -> Result<BipartiteOperator, InvariantError> {
    let gate = gate_from_ols(pair);
    let phases = [((1, 1), alpha)].into_iter().collect();
    Ok(enphase(&gate, &phases)?)
}

/// The contraction with the tuple of [`multisets_from_odls`] (`n = d`).
pub fn odls_invariant(p_enphased: &BipartiteOperator, pair: &OlsPair) -> Result<C64, InvariantError> {
    if p_enphased.dim() != pair.order() {
        return Err(InvariantError::Dimension { expected: pair.order(), got: p_enphased.dim() });
    }
    let sets = multisets_from_odls(pair)?;
    contract_invariant(p_enphased, &sets.perms)
}

/// Images of the order-16 permutation, rows in lexicographic `(i, j)` order.
pub const P16_IMAGES: [(usize, usize); 16] = [
    (1, 1),
    (4, 4),
    (2, 2),
    (3, 3),
    (4, 3),
    (1, 2),
    (3, 4),
    (2, 1),
    (2, 4),
    (3, 1),
    (1, 3),
    (4, 2),
    (3, 2),
    (2, 3),
    (4, 1),
    (1, 4),
];

pub fn p16() -> PermutationGate {
    PermutationGate::from_images(4, P16_IMAGES.to_vec()).expect("embedded images form a bijection")
}

/// `P₁₆` with its entry `((1,1),(1,1))` replaced by `e^{iθ}`.
pub fn p16_theta(theta: f64) -> BipartiteOperator {
    let mut op = p16().operator();
    op.set(1, 1, 1, 1, C64::from_polar(1.0, theta));
    op
}

/// Closed form of the canonical invariant on `P₁₆(θ)`: `8(29 + 3 cos θ)`.
pub fn p16_closed_form(theta: f64) -> f64 {
    8.0 * (29.0 + 3.0 * theta.cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::random_unitary;
    use crate::latin::odls4;

    fn random_op(d: usize, seed: u64) -> BipartiteOperator {
        BipartiteOperator::from_matrix(d, random_unitary(d * d, seed)).unwrap()
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm().max(1e-300)
    }

    #[test]
    fn tuple_validation() {
        assert!(PermTuple::new(vec![1, 1], vec![1, 2], vec![1, 2], vec![1, 2]).is_err());
        assert_eq!(PermTuple::new(vec![1], vec![1, 2], vec![1], vec![1]), Err(InvariantError::LengthMismatch));
    }

    #[test]
    fn canonical_tuple_is_a_latin_rectangle() {
        let p = PermTuple::canonical_n4();
        assert_eq!(p.n(), 4);
        assert!(latin_rectangle_check(&p));
        assert!(!latin_rectangle_check(&PermTuple::identity(3)));
        let q = p.with_identity_row(1);
        assert_eq!(q.tau(), &[1, 2, 3, 4]);
        assert!(latin_rectangle_check(&q));
    }

    #[test]
    fn single_copy_is_frobenius_norm() {
        let u = random_op(3, 1);
        let v = contract_invariant(&u, &PermTuple::identity(1)).unwrap();
        assert!((v - C64::new(9.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn three_methods_agree() {
        let u = random_op(2, 7);
        for p in [PermTuple::canonical_n4(), PermTuple::canonical_n4().with_identity_row(2)] {
            let dense = contract_dense(&u, &p, 1e9).unwrap();
            let sparse = contract_sparse(&u, &p, 0.0);
            let net = contract_network(&u, &p, 1 << 20).unwrap();
            assert!(rel(sparse, dense) < 1e-12);
            assert!(rel(net, dense) < 1e-12);
        }
    }

    #[test]
    fn identity_row_option_preserves_the_value() {
        let u = random_op(2, 3);
        let p = PermTuple::canonical_n4();
        let v = contract_sparse(&u, &p, 0.0);
        for row in 0..4 {
            let w = contract_sparse(&u, &p.with_identity_row(row), 0.0);
            assert!(rel(w, v) < 1e-12);
        }
    }

    #[test]
    fn inverse_tuple_conjugates() {
        let u = random_op(2, 9);
        let p = PermTuple::new(vec![2, 3, 1], vec![1, 3, 2], vec![3, 1, 2], vec![2, 1, 3]).unwrap();
        let v = contract_sparse(&u, &p, 0.0);
        let w = contract_sparse(&u, &p.inverse(), 0.0);
        assert!((v - w.conj()).norm() < 1e-12);
    }

    #[test]
    fn dense_budget_guard() {
        let u = random_op(3, 2);
        let err = contract_dense(&u, &PermTuple::canonical_n4(), 1e6).unwrap_err();
        assert!(matches!(err, InvariantError::OverBudget { .. }));
    }

    #[test]
    fn p16_closed_form_holds() {
        for theta in [0.0, 1.0, std::f64::consts::PI] {
            let v = contract_invariant(&p16_theta(theta), &PermTuple::canonical_n4()).unwrap();
            assert!(rel(v, C64::new(p16_closed_form(theta), 0.0)) < 1e-12, "θ = {theta}: {v}");
        }
    }

    #[test]
    fn trace_of_l_is_realigned_fourth_power() {
        for (d, seed) in [(2, 1), (3, 2)] {
            let u = random_op(d, seed);
            let r = u.realign();
            let rr = r.matrix() * r.matrix().adjoint();
            let expected = (&rr * &rr).trace();
            assert!(rel(moment(&u, 1), expected) < 1e-12);
        }
    }

    #[test]
    fn l_is_unitary_and_swap_symmetric() {
        let u = random_op(2, 4);
        let l = build_l(&u);
        assert!(crate::operator::unitarity_deficit(l.matrix()) < 1e-12);
        let s = BipartiteOperator::swap(2);
        let sus = s.compose(&u).compose(&s);
        // equal after relabelling A<->B and C<->D, so all moments agree
        let t = s.matrix().kronecker(s.matrix());
        assert!((build_l(&sus).matrix() - &t * l.matrix() * &t).norm() < 1e-12);
        for k in 1..=3 {
            assert!((moment(&sus, k) - moment(&u, k)).norm() < 1e-10);
        }
    }

    #[test]
    fn second_moment_matches_canonical_contraction() {
        let u = random_op(2, 5);
        let v = contract_invariant(&u, &PermTuple::canonical_n4()).unwrap();
        assert!(rel(moment(&u, 2), v) < 1e-10);
        let l = build_l(&u);
        let explicit = (l.matrix() * l.matrix() * l.matrix()).trace();
        assert!(rel(l.trace_power(3), explicit) < 1e-12);
    }

    #[test]
    fn odls4_multisets() {
        let sets = multisets_from_odls(&odls4()).unwrap();
        assert_eq!(sets.x.elements(), vec![[1, 1, 1, 2], [2, 2, 2, 1], [3, 3, 3, 4], [4, 4, 4, 3]]);
        assert_eq!(sets.y.elements(), vec![[1, 4, 2, 4], [2, 3, 1, 3], [3, 2, 4, 2], [4, 1, 3, 1]]);
        assert!(sets.x.is_transversal() && sets.y.is_transversal());
        assert_eq!(sets.perms.tau(), &[4, 3, 2, 1]);
        assert_eq!(sets.perms.rho(), &[2, 1, 4, 3]);
        assert_eq!(sets.perms.lambda(), &[3, 4, 1, 2]);
        assert!(latin_rectangle_check(&sets.perms));
    }

    #[test]
    fn non_diagonal_pair_is_rejected() {
        let pair = crate::latin::construct_ols(3).unwrap();
        assert!(matches!(multisets_from_odls(&pair), Err(InvariantError::Latin(LatinError::NotDiagonal))));
    }
}
