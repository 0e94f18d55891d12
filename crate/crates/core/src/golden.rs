//! The golden order-36 2-unitary: constants, loading and validation, the
//! one-parameter row-phase family, and the homogeneous phase system whose
//! integer kernel parameterizes 2-unitary enphasings.
//!
//! The entry table is not bundled. [`load_u36`] reads it from
//! `$AME_U36_PATH` or from `data/u36.mat` in this crate, in the sparse
//! operator format.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use crate::error::GoldenError;
use crate::io::parse_sparse;
use crate::operator::{BipartiteOperator, SparseEntry, C64};

/// `a = (5+√5)^{−1/2}`, `b = φ·a`, `c = 1/√2`, `ω = e^{2πi/20}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GoldenConstants {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub phi: f64,
    pub omega: C64,
}

impl GoldenConstants {
    pub fn new() -> Self {
        let s5 = 5f64.sqrt();
        let a = 1.0 / (5.0 + s5).sqrt();
        let phi = (1.0 + s5) / 2.0;
        Self { a, b: phi * a, c: std::f64::consts::FRAC_1_SQRT_2, phi, omega: C64::from_polar(1.0, TAU / 20.0) }
    }

    pub fn magnitude(&self, tag: Magnitude) -> f64 {
        match tag {
            Magnitude::A => self.a,
            Magnitude::B => self.b,
            Magnitude::C => self.c,
        }
    }
}

impl Default for GoldenConstants {
    fn default() -> Self {
        Self::new()
    }
}

/// `C₀ = 3(202 + √5 + 2√(5 − 2√5))/4`.
pub fn c0() -> f64 {
    let s5 = 5f64.sqrt();
    3.0 * (202.0 + s5 + 2.0 * (5.0 - 2.0 * s5).sqrt()) / 4.0
}

/// The canonical invariant of the one-parameter family: `C₀ + 6 cos θ`.
pub fn u36_closed_form(theta: f64) -> f64 {
    c0() + 6.0 * theta.cos()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Magnitude {
    A,
    B,
    C,
}

/// One nonzero entry as `ω^power · magnitude`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GoldenEntry {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub l: usize,
    pub power: u8,
    pub magnitude: Magnitude,
}

impl GoldenEntry {
    pub fn value(&self, g: &GoldenConstants) -> C64 {
        C64::from_polar(g.magnitude(self.magnitude), TAU * self.power as f64 / 20.0)
    }
}

pub const U36_NONZEROS: usize = 112;

/// A validated table and its rendered operator.
#[derive(Clone, Debug, PartialEq)]
pub struct U36 {
    pub entries: Vec<GoldenEntry>,
    pub operator: BipartiteOperator,
}

/// Snaps one numeric entry to `ω^power · {a, b, c}`.
pub fn snap_entry(e: &SparseEntry, g: &GoldenConstants) -> Result<GoldenEntry, GoldenError> {
    let modulus = e.value.norm();
    let tag = [Magnitude::A, Magnitude::B, Magnitude::C]
        .into_iter()
        .find(|&t| (modulus - g.magnitude(t)).abs() < 1e-9)
        .ok_or(GoldenError::Magnitude { i: e.i, j: e.j, k: e.k, l: e.l, modulus })?;
    let steps = e.value.arg().rem_euclid(TAU) / (TAU / 20.0);
    let power = steps.round();
    if (steps - power).abs() > 1e-6 {
        return Err(GoldenError::Phase { i: e.i, j: e.j, k: e.k, l: e.l });
    }
    Ok(GoldenEntry { i: e.i, j: e.j, k: e.k, l: e.l, power: (power as u32 % 20) as u8, magnitude: tag })
}

/// Parses, snaps and checks a table: `d = 6`, 112 nonzeros, and all three
/// unitarity deficits of the snapped operator below `1e−12`.
pub fn load_u36_from_str(text: &str) -> Result<U36, GoldenError> {
    let sparse = parse_sparse(text)?;
    if sparse.dim() != 6 {
        return Err(GoldenError::Dimension(sparse.dim()));
    }
    if sparse.nnz() != U36_NONZEROS {
        return Err(GoldenError::NonzeroCount { expected: U36_NONZEROS, found: sparse.nnz() });
    }
    let g = GoldenConstants::new();
    let entries = sparse.entries().iter().map(|e| snap_entry(e, &g)).collect::<Result<Vec<_>, _>>()?;
    let mut operator = BipartiteOperator::zeros(6);
    for e in &entries {
        operator.set(e.i, e.j, e.k, e.l, e.value(&g));
    }
    let threshold = 1e-12;
    let deficit = operator.classify(threshold).max_deficit();
    if deficit >= threshold {
        return Err(GoldenError::Deficit { deficit, threshold });
    }
    Ok(U36 { entries, operator })
}

/// `$AME_U36_PATH` when set, otherwise `data/u36.mat` in this crate.
pub fn u36_path() -> PathBuf {
    match std::env::var_os("AME_U36_PATH") {
        Some(p) => PathBuf::from(p),
        None => PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data/u36.mat")),
    }
}

pub fn load_u36_file(path: &std::path::Path) -> Result<U36, GoldenError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GoldenError::Io { path: path.display().to_string(), message: e.to_string() })?;
    load_u36_from_str(&text)
}

pub fn load_u36() -> Result<U36, GoldenError> {
    load_u36_file(&u36_path())
}

/// `Diag` with `e^{iθ}` at the listed 1-based positions and 1 elsewhere.
pub fn phase_diagonal(n: usize, positions: &[usize], theta: f64) -> DMatrix<C64> {
    let mut diag = DVector::from_element(n, C64::one());
    for &p in positions {
        diag[p - 1] = C64::from_polar(1.0, theta);
    }
    DMatrix::from_diagonal(&diag)
}

/// Rows of the left phase `D(θ)`.
pub const D_ROWS: [usize; 4] = [1, 4, 7, 10];
/// Columns of `D′(θ)` acting on the realigned matrix from the right.
pub const D_PRIME_COLS: [usize; 4] = [1, 2, 19, 20];
/// Rows of `D″(θ)` acting on the partially transposed matrix from the left.
pub const D_DOUBLE_PRIME_ROWS: [usize; 4] = [1, 2, 7, 8];

/// `D(θ) · U` with `D(θ)` carrying `e^{iθ}` on rows 1, 4, 7 and 10.
pub fn u36_theta(u: &BipartiteOperator, theta: f64) -> BipartiteOperator {
    let d = phase_diagonal(u.order(), &D_ROWS, theta);
    BipartiteOperator::from_matrix(u.dim(), d * u.matrix()).unwrap()
}

/// Largest entrywise gaps `‖[U(θ)]ᴿ − Uᴿ D′(θ)‖` and `‖[U(θ)]^Γ − D″(θ) U^Γ‖`.
pub fn family_rearrangement_gaps(u: &BipartiteOperator, theta: f64) -> (f64, f64) {
    let ut = u36_theta(u, theta);
    let n = u.order();
    let r = u.realign().matrix() * phase_diagonal(n, &D_PRIME_COLS, theta);
    let g = phase_diagonal(n, &D_DOUBLE_PRIME_ROWS, theta) * u.partial_transpose().matrix();
    let gap =
        |a: &DMatrix<C64>, b: &DMatrix<C64>| a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    (gap(ut.realign().matrix(), &r), gap(ut.partial_transpose().matrix(), &g))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Frame {
    Plain,
    Realigned,
    Transposed,
}

impl Frame {
    pub fn label(self) -> &'static str {
        match self {
            Frame::Plain => "U",
            Frame::Realigned => "U^R",
            Frame::Transposed => "U^Gamma",
        }
    }

    /// Position of `((i,α),(j,β))` after the rearrangement, all 1-based.
    fn place(self, (i, a, j, b): (usize, usize, usize, usize)) -> ((usize, usize), (usize, usize)) {
        match self {
            Frame::Plain => ((i, a), (j, b)),
            Frame::Realigned => ((i, j), (a, b)),
            Frame::Transposed => ((i, b), (j, a)),
        }
    }
}

/// Where an equation came from: a frame, a pair of its rows, and the two
/// shared columns compared.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Provenance {
    pub frame: Frame,
    pub rows: (usize, usize),
    pub pivot_col: usize,
    pub col: usize,
}

/// Homogeneous integer equations in one phase per support entry.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSystem {
    /// Support entries `(i, j, k, l)` in sorted order; variable `v` is `variables[v]`.
    pub variables: Vec<(usize, usize, usize, usize)>,
    pub rows: Vec<Vec<i64>>,
    pub provenance: Vec<Provenance>,
}

impl PhaseSystem {
    pub fn from_rows(nvars: usize, rows: Vec<Vec<i64>>) -> Self {
        assert!(rows.iter().all(|r| r.len() == nvars), "row length must equal the variable count");
        Self { variables: Vec::new(), rows, provenance: Vec::new() }.with_nvars(nvars)
    }

    fn with_nvars(mut self, nvars: usize) -> Self {
        if self.variables.is_empty() {
            self.variables = (0..nvars).map(|v| (v + 1, 0, 0, 0)).collect();
        }
        self
    }

    pub fn nvars(&self) -> usize {
        self.variables.len()
    }

    /// Number of equations contributed by each frame.
    pub fn count(&self, frame: Frame) -> usize {
        self.provenance.iter().filter(|p| p.frame == frame).count()
    }
}

/// For each of `U`, `Uᴿ`, `U^Γ` and each pair of rows sharing `m ≥ 2`
/// support columns, emits `m − 1` equations
/// `θ(r₁,c₁) − θ(r₂,c₁) − θ(r₁,c) + θ(r₂,c) = 0` pivoted on the first shared column.
pub fn build_phase_system(u: &BipartiteOperator, tol: f64) -> PhaseSystem {
    let d = u.dim();
    let support = u.support(tol);
    let variables: Vec<_> = support.iter().map(|e| e.key()).collect();
    let nvars = variables.len();
    let mut rows = Vec::new();
    let mut provenance = Vec::new();
    for frame in [Frame::Plain, Frame::Transposed, Frame::Realigned] {
        // row -> sorted (column, variable)
        let mut by_row: Vec<Vec<(usize, usize)>> = vec![Vec::new(); d * d];
        for (v, &key) in variables.iter().enumerate() {
            let ((r1, r2), (c1, c2)) = frame.place(key);
            by_row[(r1 - 1) * d + (r2 - 1)].push(((c1 - 1) * d + (c2 - 1), v));
        }
        for r in &mut by_row {
            r.sort_unstable();
        }
        for ra in 0..d * d {
            for rb in ra + 1..d * d {
                let shared: Vec<(usize, usize, usize)> = by_row[ra]
                    .iter()
                    .filter_map(|&(c, va)| by_row[rb].iter().find(|&&(cb, _)| cb == c).map(|&(_, vb)| (c, va, vb)))
                    .collect();
                if shared.len() < 2 {
                    continue;
                }
                let (pc, pa, pb) = shared[0];
                for &(c, va, vb) in &shared[1..] {
                    let mut row = vec![0i64; nvars];
                    row[pa] += 1;
                    row[pb] -= 1;
                    row[va] -= 1;
                    row[vb] += 1;
                    rows.push(row);
                    provenance.push(Provenance { frame, rows: (ra + 1, rb + 1), pivot_col: pc + 1, col: c + 1 });
                }
            }
        }
    }
    PhaseSystem { variables, rows, provenance }
}

fn to_big(rows: &[Vec<i64>]) -> Vec<Vec<BigInt>> {
    rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect()
}

/// Rank over the rationals by fraction-free (Bareiss) elimination.
pub fn exact_rank(sys: &PhaseSystem) -> usize {
    rank_of(&sys.rows, sys.nvars())
}

pub fn rank_of(rows: &[Vec<i64>], ncols: usize) -> usize {
    let mut m = to_big(rows);
    let nrows = m.len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, p);
        let pivot_row = m[rank].clone();
        let pivot = pivot_row[col].clone();
        for row in &mut m[rank + 1..] {
            let factor = row[col].clone();
            for (x, p) in row.iter_mut().zip(&pivot_row).skip(col + 1) {
                *x = (&pivot * &*x - &factor * p) / &prev;
            }
            row[col] = BigInt::zero();
        }
        prev = pivot;
        rank += 1;
    }
    rank
}

fn normalize(row: &mut [BigInt]) {
    let g = row.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    if !g.is_zero() && !g.is_one() {
        for x in row.iter_mut() {
            *x = &*x / &g;
        }
    }
}

/// Integer basis of the rational kernel, one vector per free variable, each
/// with coprime entries.
pub fn nullspace_basis(sys: &PhaseSystem) -> Vec<Vec<BigInt>> {
    kernel_of(&sys.rows, sys.nvars())
}

pub fn kernel_of(rows: &[Vec<i64>], ncols: usize) -> Vec<Vec<BigInt>> {
    let mut m = to_big(rows);
    let nrows = m.len();
    let mut pivots: Vec<usize> = Vec::new();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(rank, p);
        normalize(&mut m[rank]);
        let pivot_row = m[rank].clone();
        let a = pivot_row[col].clone();
        for (r, row) in m.iter_mut().enumerate() {
            if r == rank || row[col].is_zero() {
                continue;
            }
            let b = row[col].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                *x = &a * &*x - &b * y;
            }
            normalize(row);
        }
        pivots.push(col);
        rank += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let scale = pivots
                .iter()
                .enumerate()
                .filter(|(r, _)| !m[*r][f].is_zero())
                .fold(BigInt::one(), |l, (r, &pc)| l.lcm(&m[r][pc].abs()));
            let mut v = vec![BigInt::zero(); ncols];
            v[f] = scale.clone();
            for (r, &pc) in pivots.iter().enumerate() {
                if !m[r][f].is_zero() {
                    v[pc] = -(&m[r][f] * &scale) / &m[r][pc];
                }
            }
            normalize(&mut v);
            v
        })
        .collect()
}

/// The kernel of a phase system, ready to enphase the operator it came from.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseFamily {
    pub variables: Vec<(usize, usize, usize, usize)>,
    pub basis: Vec<Vec<BigInt>>,
}

impl PhaseFamily {
    pub fn from_system(sys: &PhaseSystem) -> Self {
        Self { variables: sys.variables.clone(), basis: nullspace_basis(sys) }
    }

    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    fn basis_f64(&self) -> DMatrix<f64> {
        let n = self.variables.len();
        DMatrix::from_fn(n, self.basis.len(), |v, b| {
            let x = &self.basis[b][v];
            x.to_string().parse::<f64>().unwrap_or(f64::NAN)
        })
    }

    /// Phase angle per variable for the given coefficients.
    pub fn angles(&self, coeffs: &[f64]) -> Result<Vec<f64>, GoldenError> {
        if coeffs.len() != self.dimension() {
            return Err(GoldenError::CoefficientLength { expected: self.dimension(), got: coeffs.len() });
        }
        let c = DVector::from_column_slice(coeffs);
        Ok((self.basis_f64() * c).iter().copied().collect())
    }

    /// Least-squares coefficients reproducing `angles`, if the residual is below `tol`.
    pub fn coefficients_for(&self, angles: &[f64], tol: f64) -> Option<Vec<f64>> {
        let b = self.basis_f64();
        let target = DVector::from_column_slice(angles);
        if b.ncols() == 0 {
            return (target.norm() < tol).then(Vec::new);
        }
        // kernel bases have full column rank, so a thin QR solve suffices
        let qr = b.clone().qr();
        let x = qr.r().solve_upper_triangular(&(qr.q().transpose() * &target))?;
        let residual = (&b * &x - &target).norm();
        (residual < tol).then(|| x.iter().copied().collect())
    }

    /// Whether an integer direction lies in the span of the basis (exact).
    pub fn contains(&self, direction: &[i64]) -> bool {
        let mut rows: Vec<Vec<i64>> = Vec::with_capacity(self.basis.len() + 1);
        for v in &self.basis {
            match v.iter().map(i64::try_from).collect::<Result<Vec<_>, _>>() {
                Ok(r) => rows.push(r),
                Err(_) => return false,
            }
        }
        let n = self.variables.len();
        let base = rank_of(&rows, n);
        rows.push(direction.to_vec());
        rank_of(&rows, n) == base
    }
}

/// Multiplies each support entry by `exp(i Σ_b coeffs[b] · basis[b][entry])`.
pub fn enphase_solution(
    u: &BipartiteOperator,
    family: &PhaseFamily,
    coeffs: &[f64],
) -> Result<BipartiteOperator, GoldenError> {
    let angles = family.angles(coeffs)?;
    let mut out = u.clone();
    for (&(i, j, k, l), &t) in family.variables.iter().zip(&angles) {
        out.set(i, j, k, l, u.get(i, j, k, l) * C64::from_polar(1.0, t));
    }
    Ok(out)
}

/// Integer direction of the row-phase family `D(θ)` on the given variables.
pub fn row_phase_direction(variables: &[(usize, usize, usize, usize)], d: usize, rows: &[usize]) -> Vec<i64> {
    variables.iter().map(|&(i, j, _, _)| i64::from(rows.contains(&((i - 1) * d + j)))).collect()
}

/// A point of the family for reporting: angles wrapped to `(−π, π]`.
pub fn wrap_angle(t: f64) -> f64 {
    let w = t.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}
