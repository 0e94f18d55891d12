//! Explicit local unitaries taking any two-qutrit 2-unitary to `P₉`.
//!
//! The pipeline anchors a product state that `U` maps to a product state,
//! then removes the remaining freedom with `2×2` unitaries on the second
//! qudit (right and left), the first qudit (right), the first qudit (left),
//! and finally diagonal phases.

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decomp::{complete_to_unitary, kron_vec, nearest_product, polar_unitary, sorted_svd};
use crate::error::ReductionError;
use crate::latin::PermutationGate;
use crate::operator::{unitarity_deficit, BipartiteOperator, C64};

/// Images of `(11, 12, 13, 21, 22, 23, 31, 32, 33)` under `P₉`.
pub const P9_IMAGES: [(usize, usize); 9] = [(1, 1), (2, 3), (3, 2), (3, 3), (1, 2), (2, 1), (2, 2), (3, 1), (1, 3)];

/// `P₉ |ij⟩ = |image(ij)⟩`. As a gate keyed by rows this is the inverse map.
pub fn p9() -> PermutationGate {
    let mut rows = vec![(0, 0); 9];
    for (f, &(k, l)) in P9_IMAGES.iter().enumerate() {
        rows[(k - 1) * 3 + (l - 1)] = (f / 3 + 1, f % 3 + 1);
    }
    PermutationGate::from_images(3, rows).expect("P9 is a bijection")
}

pub fn p9_operator() -> BipartiteOperator {
    p9().operator()
}

/// Rows (1-based) and the columns allowed to be nonzero in them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZeroPattern {
    allowed: [[bool; 9]; 9],
}

impl ZeroPattern {
    fn from_rows(rows: [&[usize]; 9]) -> Self {
        let mut allowed = [[false; 9]; 9];
        for (r, cols) in rows.iter().enumerate() {
            for &c in *cols {
                allowed[r][c - 1] = true;
            }
        }
        Self { allowed }
    }

    /// Anchored 2-unitary: 33 entries may be nonzero.
    pub fn anchored() -> Self {
        let a: &[usize] = &[5, 6, 8, 9];
        let b: &[usize] = &[2, 3, 4, 7];
        Self::from_rows([&[1], a, a, a, b, b, a, b, b])
    }

    /// After diagonalizing the blocks of rows 2 and 3.
    pub fn diagonal_blocks() -> Self {
        let a: &[usize] = &[5, 6, 8, 9];
        Self::from_rows([&[1], &[5, 8], &[6, 9], a, &[3, 4, 7], &[2, 4, 7], a, &[3, 4, 7], &[2, 4, 7]])
    }

    /// After rotating the first qudit on the right.
    pub fn unentangled_columns() -> Self {
        let c: &[usize] = &[6, 8];
        Self::from_rows([&[1], &[5], &[9], c, &[3, 7], &[2, 4], c, &[3, 7], &[2, 4]])
    }

    /// An enphased `P₉`.
    pub fn permutation() -> Self {
        Self::from_rows([&[1], &[5], &[9], &[6], &[7], &[2], &[8], &[3], &[4]])
    }

    pub fn allows(&self, row: usize, col: usize) -> bool {
        self.allowed[row - 1][col - 1]
    }

    pub fn allowed_count(&self) -> usize {
        self.allowed.iter().flatten().filter(|&&a| a).count()
    }

    /// Largest modulus among the entries that must vanish.
    pub fn violation(&self, m: &DMatrix<C64>) -> f64 {
        let mut worst: f64 = 0.0;
        for r in 0..9 {
            for c in 0..9 {
                if !self.allowed[r][c] {
                    worst = worst.max(m[(r, c)].norm());
                }
            }
        }
        worst
    }
}

/// `(left1 ⊗ left2) · U · (right1 ⊗ right2) ≈ P₉`.
#[derive(Clone, Debug, PartialEq)]
pub struct LuFactorization {
    pub left1: DMatrix<C64>,
    pub left2: DMatrix<C64>,
    pub right1: DMatrix<C64>,
    pub right2: DMatrix<C64>,
    pub residual: f64,
    pub stage_log: Vec<StageRecord>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StageRecord {
    pub stage: &'static str,
    /// Largest modulus among entries the stage's pattern requires to vanish.
    pub violation: f64,
}

impl LuFactorization {
    pub fn apply(&self, u: &BipartiteOperator) -> BipartiteOperator {
        u.dress(&self.left1, &self.left2, &self.right1, &self.right2)
    }

    /// `(left1† ⊗ left2†) · P₉ · (right1† ⊗ right2†)`, which should reproduce the input.
    pub fn reconstruct(&self) -> BipartiteOperator {
        p9_operator().dress(
            &self.left1.adjoint(),
            &self.left2.adjoint(),
            &self.right1.adjoint(),
            &self.right2.adjoint(),
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CubeRootBranch {
    /// Phases `−(arg α₁ + arg α₂)/3` etc. from one consistent set of arguments;
    /// exact for every input.
    Consistent,
    /// Principal cube root (argument in `[0, 2π)`) of each product separately.
    Principal,
}

#[derive(Clone, Copy, Debug)]
pub struct PairSearchOptions {
    pub iterations: usize,
    pub restarts: usize,
    /// Accept when `1 − overlap` falls below this.
    pub tol: f64,
}

impl Default for PairSearchOptions {
    fn default() -> Self {
        Self { iterations: 200, restarts: 50, tol: 1e-12 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReductionOptions {
    pub pair: PairSearchOptions,
    /// Largest allowed entry where a stage pattern demands zero.
    pub stage_tol: f64,
    /// Input must be 2-unitary with every deficit below this.
    pub input_tol: f64,
    pub branch: CubeRootBranch,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            pair: PairSearchOptions::default(),
            stage_tol: 1e-9,
            input_tol: 1e-8,
            branch: CubeRootBranch::Consistent,
        }
    }
}

/// `U (x ⊗ y) = x' ⊗ y'`, the global phase folded into `x'`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPair {
    pub x: DVector<C64>,
    pub y: DVector<C64>,
    pub x_out: DVector<C64>,
    pub y_out: DVector<C64>,
}

impl ProductPair {
    pub fn residual(&self, u: &BipartiteOperator) -> f64 {
        let image = u.matrix() * kron_vec(&self.x, &self.y);
        (image - kron_vec(&self.x_out, &self.y_out)).norm()
    }
}

fn basis_vec(d: usize, k: usize) -> DVector<C64> {
    DVector::from_fn(d, |r, _| if r == k { C64::one() } else { C64::zero() })
}

fn random_unit(d: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let v = DVector::from_fn(d, |_, _| C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)));
    v.normalize()
}

struct Climb {
    x: DVector<C64>,
    y: DVector<C64>,
    xo: DVector<C64>,
    yo: DVector<C64>,
    overlap: f64,
}

/// Alternately fits the best product to `U(x⊗y)` and to `U†(x'⊗y')`.
fn climb(
    u: &DMatrix<C64>,
    ud: &DMatrix<C64>,
    d: usize,
    x: DVector<C64>,
    y: DVector<C64>,
    iterations: usize,
    tol: f64,
) -> Climb {
    let (mut x, mut y) = (x, y);
    let mut xo = x.clone();
    let mut yo = y.clone();
    let mut overlap = 0.0;
    let mut prev = kron_vec(&x, &y);
    for _ in 0..iterations {
        let fwd = u * &prev;
        let Ok(p) = nearest_product(fwd.as_slice(), d) else { break };
        xo = p.a;
        yo = p.b;
        let back = ud * kron_vec(&xo, &yo);
        let Ok(q) = nearest_product(back.as_slice(), d) else { break };
        overlap = q.overlap;
        x = q.a;
        y = q.b;
        let next = kron_vec(&x, &y);
        // compare up to the phase the SVD is free to choose
        let phase = next.dotc(&prev);
        let aligned = if phase.norm() > 0.0 { &next * (phase / phase.norm()) } else { next.clone() };
        let change = (&aligned - &prev).norm();
        prev = next;
        if 1.0 - overlap < tol && change < 1e-14 {
            break;
        }
    }
    Climb { x, y, xo, yo, overlap }
}

/// Searches for a product state mapped to a product state: first from the
/// computational basis kets, then from seeded random products.
pub fn find_fixed_product_pair(
    u: &BipartiteOperator,
    seed: u64,
    opts: &PairSearchOptions,
) -> Result<ProductPair, ReductionError> {
    let d = u.dim();
    let um = u.matrix();
    let ud = um.adjoint();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best_overlap: f64 = 0.0;
    let starts = d * d + opts.restarts;
    for attempt in 0..starts {
        let (x0, y0) = if attempt < d * d {
            (basis_vec(d, attempt / d), basis_vec(d, attempt % d))
        } else {
            (random_unit(d, &mut rng), random_unit(d, &mut rng))
        };
        let c = climb(um, &ud, d, x0, y0, opts.iterations, opts.tol);
        best_overlap = best_overlap.max(c.overlap);
        if 1.0 - c.overlap < opts.tol {
            // polish far inside the basin, then fold the phase into x'
            let c = climb(um, &ud, d, c.x, c.y, 10 * opts.iterations, 0.0);
            let image = um * kron_vec(&c.x, &c.y);
            let phase = kron_vec(&c.xo, &c.yo).dotc(&image);
            let xo = &c.xo * (phase / phase.norm());
            let pair = ProductPair { x: c.x, y: c.y, x_out: xo, y_out: c.yo };
            return Ok(pair);
        }
    }
    Err(ReductionError::NoProductPair { restarts: starts, best_overlap })
}

fn direct_sum_one(m: &DMatrix<C64>) -> DMatrix<C64> {
    let mut out = DMatrix::identity(3, 3);
    for r in 0..2 {
        for c in 0..2 {
            out[(r + 1, c + 1)] = m[(r, c)];
        }
    }
    out
}

fn block(m: &DMatrix<C64>, rows: [usize; 2], cols: [usize; 2]) -> DMatrix<C64> {
    DMatrix::from_fn(2, 2, |r, c| m[(rows[r] - 1, cols[c] - 1)])
}

struct Factors {
    left1: DMatrix<C64>,
    left2: DMatrix<C64>,
    right1: DMatrix<C64>,
    right2: DMatrix<C64>,
}

impl Factors {
    fn apply(&self, u: &BipartiteOperator) -> DMatrix<C64> {
        u.dress(&self.left1, &self.left2, &self.right1, &self.right2).into_matrix()
    }
}

/// `U₁ = (a₂ ⊗ b₂)† · U · (a₁ ⊗ b₁)` with first columns `x, y` (right) and
/// `x', y'` (left); afterwards `⟨11|U₁|11⟩ = 1`.
pub fn anchor(u: &BipartiteOperator, pair: &ProductPair, tol: f64) -> Result<BipartiteOperator, ReductionError> {
    let f = anchor_factors(u, pair, tol)?;
    Ok(BipartiteOperator::from_matrix(u.dim(), f.apply(u)).unwrap())
}

fn anchor_factors(u: &BipartiteOperator, pair: &ProductPair, tol: f64) -> Result<Factors, ReductionError> {
    let residual = pair.residual(u);
    if residual > tol {
        return Err(ReductionError::PairNotFixed { residual });
    }
    let a1 = complete_to_unitary(&pair.x);
    let b1 = complete_to_unitary(&pair.y);
    let a2 = complete_to_unitary(&pair.x_out);
    let b2 = complete_to_unitary(&pair.y_out);
    let mut f = Factors { left1: a2.adjoint(), left2: b2.adjoint(), right1: a1, right2: b1 };
    let corner = f.apply(u)[(0, 0)];
    f.left1 *= (corner / corner.norm()).conj();
    Ok(f)
}

fn check(
    stage: &'static str,
    pattern: &ZeroPattern,
    m: &DMatrix<C64>,
    tol: f64,
    log: &mut Vec<StageRecord>,
) -> Result<(), ReductionError> {
    let violation = pattern.violation(m);
    log.push(StageRecord { stage, violation });
    if violation > tol {
        return Err(ReductionError::ZeroPattern { stage, violation, tol });
    }
    Ok(())
}

/// Residual of the block relations `PP† + QQ† = I`, `P†P + Q†Q = I`,
/// `Tr P†P = Tr Q†Q = 1`, `Tr P†Q = 0`.
pub fn block_relations(p: &DMatrix<C64>, q: &DMatrix<C64>) -> f64 {
    let id = DMatrix::<C64>::identity(2, 2);
    let one = C64::one();
    let r1 = (p * p.adjoint() + q * q.adjoint() - &id).norm();
    let r2 = (p.adjoint() * p + q.adjoint() * q - &id).norm();
    let r3 = ((p.adjoint() * p).trace() - one).norm();
    let r4 = ((q.adjoint() * q).trace() - one).norm();
    let r5 = (p.adjoint() * q).trace().norm();
    r1.max(r2).max(r3).max(r4).max(r5)
}

/// Unitaries `V, W` with `V†PW` real diagonal and `V†QW` diagonal.
fn common_singular_bases(p: &DMatrix<C64>, q: &DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>), ReductionError> {
    // P and Q share singular vectors, so a generic combination exposes them
    let candidates = [C64::new(0.37, 0.61), C64::new(-0.83, 0.29), C64::new(0.11, -1.7), C64::new(2.3, 0.9)];
    let mut best: Option<(f64, DMatrix<C64>, DMatrix<C64>)> = None;
    for z in candidates {
        let m = p + q * z;
        let svd = sorted_svd(&m)?;
        let s = &svd.singular_values;
        let gap = (s[0] - s[1]).abs() / s[0].max(1e-300);
        let v = svd.u.clone();
        let w = svd.v_t.adjoint();
        if best.as_ref().is_none_or(|(g, _, _)| gap > *g) {
            best = Some((gap, v, w));
        }
    }
    let (_, v, mut w) = best.unwrap();
    let dp = v.adjoint() * p * &w;
    for k in 0..2 {
        let z = dp[(k, k)];
        if z.norm() > 1e-14 {
            let phase = (z / z.norm()).conj();
            for r in 0..2 {
                w[(r, k)] *= phase;
            }
        }
    }
    Ok((v, w))
}

fn phase_factors(alpha: [C64; 4], branch: CubeRootBranch) -> [DMatrix<C64>; 4] {
    let diag = |a: C64, b: C64| DMatrix::from_diagonal(&DVector::from_vec(vec![C64::one(), a, b]));
    match branch {
        CubeRootBranch::Consistent => {
            let a: Vec<f64> = alpha.iter().map(|z| z.arg().rem_euclid(std::f64::consts::TAU)).collect();
            let e = |t: f64| C64::from_polar(1.0, t / 3.0);
            [
                diag(e(-a[0] - a[1]), e(-a[2] - a[3])),
                diag(e(-a[1] - a[2]), e(-a[0] - a[3])),
                diag(e(a[0] + a[2] - a[3]), e(a[0] + a[2] - a[1])),
                diag(e(a[1] + a[3] - a[0]), e(a[1] + a[3] - a[2])),
            ]
        }
        CubeRootBranch::Principal => {
            let root = |z: C64| C64::from_polar(1.0, z.arg().rem_euclid(std::f64::consts::TAU) / 3.0);
            let c = |z: C64| z.conj();
            let [a1, a2, a3, a4] = alpha;
            [
                diag(root(c(a1) * c(a2)), root(c(a3) * c(a4))),
                diag(root(c(a2) * c(a3)), root(c(a1) * c(a4))),
                diag(root(a1 * a3 * c(a4)), root(a1 * a3 * c(a2))),
                diag(root(a2 * a4 * c(a1)), root(a2 * a4 * c(a3))),
            ]
        }
    }
}

/// Runs the full pipeline and returns the accumulated local factors.
pub fn reduce_to_p9(u: &BipartiteOperator, seed: u64) -> Result<LuFactorization, ReductionError> {
    reduce_with(u, seed, &ReductionOptions::default())
}

pub fn reduce_with(
    u: &BipartiteOperator,
    seed: u64,
    opts: &ReductionOptions,
) -> Result<LuFactorization, ReductionError> {
    if u.dim() != 3 {
        return Err(ReductionError::Dimension(u.dim()));
    }
    let rep = u.classify(opts.input_tol);
    if !rep.is_two_unitary {
        return Err(ReductionError::NotTwoUnitary { deficit: rep.max_deficit() });
    }
    let tol = opts.stage_tol;
    let mut log = Vec::new();

    let pair = find_fixed_product_pair(u, seed, &opts.pair)?;
    let mut f = anchor_factors(u, &pair, tol.max(1e-10))?;
    let u1 = f.apply(u);
    check("anchor", &ZeroPattern::anchored(), &u1, tol, &mut log)?;

    let p = block(&u1, [2, 3], [5, 6]);
    let q = block(&u1, [2, 3], [8, 9]);
    let relations = block_relations(&p, &q);
    log.push(StageRecord { stage: "block relations", violation: relations });
    if relations > tol {
        return Err(ReductionError::ZeroPattern { stage: "block relations", violation: relations, tol });
    }
    let (v1, w1) = common_singular_bases(&p, &q)?;
    f.left2 = direct_sum_one(&v1.adjoint()) * &f.left2;
    f.right2 = &f.right2 * direct_sum_one(&w1);
    let u2 = f.apply(u);
    check("diagonal blocks", &ZeroPattern::diagonal_blocks(), &u2, tol, &mut log)?;

    // [[σ₁, σ′₁], [σ₂, σ′₂]] sits at (2,5), (2,8), (3,6), (3,9)
    let sigma = DMatrix::from_row_slice(2, 2, &[u2[(1, 4)], u2[(1, 7)], u2[(2, 5)], u2[(2, 8)]]);
    let sigma = polar_unitary(&sigma)?;
    f.right1 = &f.right1 * direct_sum_one(&sigma.adjoint());
    let u3 = f.apply(u);
    check("unentangled columns", &ZeroPattern::unentangled_columns(), &u3, tol, &mut log)?;

    let c = polar_unitary(&block(&u3, [4, 7], [6, 8]))?;
    f.left1 = direct_sum_one(&c.adjoint()) * &f.left1;
    let u4 = f.apply(u);
    check("enphased permutation", &ZeroPattern::permutation(), &u4, tol, &mut log)?;

    let alpha = [u4[(5, 1)], u4[(4, 6)], u4[(7, 2)], u4[(8, 3)]];
    let [phi1, phi2, phi3, phi4] = phase_factors(alpha, opts.branch);
    f.left1 = phi1 * &f.left1;
    f.left2 = phi2 * &f.left2;
    f.right1 = &f.right1 * phi3;
    f.right2 = &f.right2 * phi4;
    let u5 = f.apply(u);
    let residual = (&u5 - p9_operator().matrix()).norm();
    log.push(StageRecord { stage: "phases", violation: residual });
    Ok(LuFactorization { left1: f.left1, left2: f.left2, right1: f.right1, right2: f.right2, residual, stage_log: log })
}

/// Recomputes the transformed operator and checks it against `P₉` and the
/// factors for unitarity, all at `tol`.
pub fn verify_factorization(u: &BipartiteOperator, f: &LuFactorization, tol: f64) -> bool {
    if u.dim() != 3 {
        return false;
    }
    let factors = [&f.left1, &f.left2, &f.right1, &f.right2];
    if factors.iter().any(|m| m.shape() != (3, 3) || unitarity_deficit(m) > tol) {
        return false;
    }
    f.apply(u).distance(&p9_operator()) <= tol
}
