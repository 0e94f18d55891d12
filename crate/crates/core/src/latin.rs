//! Latin squares, orthogonal pairs and the permutation gates they define.

use std::collections::HashMap;

use num_traits::One;

use crate::error::LatinError;
use crate::operator::{flat_index, split_index, BipartiteOperator, C64};
use crate::state::{vectorize, StateVector};

/// A `d×d` array over `1..=d`. Construction only checks the symbol range;
/// the Latin property is queried with [`LatinSquare::is_latin`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LatinSquare {
    d: usize,
    cells: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Line {
    Row(usize),
    Column(usize),
}

/// A symbol occurring more than once in a row or column.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Violation {
    pub line: Line,
    pub symbol: usize,
    pub count: usize,
}

impl LatinSquare {
    /// `cells` in row-major order.
    pub fn new(d: usize, cells: Vec<usize>) -> Result<Self, LatinError> {
        if cells.len() != d * d || d == 0 {
            return Err(LatinError::Shape { expected: d * d, got: cells.len() });
        }
        if let Some(pos) = cells.iter().position(|&s| s == 0 || s > d) {
            return Err(LatinError::SymbolOutOfRange { row: pos / d + 1, col: pos % d + 1, symbol: cells[pos], d });
        }
        Ok(Self { d, cells })
    }

    pub fn from_rows(rows: &[&[usize]]) -> Result<Self, LatinError> {
        let d = rows.len();
        let cells: Vec<usize> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        if rows.iter().any(|r| r.len() != d) {
            return Err(LatinError::Shape { expected: d * d, got: cells.len() });
        }
        Self::new(d, cells)
    }

    /// `((i−1) + (j−1) mod d) + 1`.
    pub fn cyclic(d: usize) -> Self {
        Self::linear(d, 1, 1)
    }

    /// `((a(i−1) + b(j−1)) mod d) + 1`; Latin iff `a` and `b` are units mod `d`.
    pub fn linear(d: usize, a: usize, b: usize) -> Self {
        let cells = (0..d * d).map(|f| (a * (f / d) + b * (f % d)) % d + 1).collect();
        Self { d, cells }
    }

    pub fn order(&self) -> usize {
        self.d
    }

    /// Symbol at 1-based `(row, col)`.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> usize {
        self.cells[(row - 1) * self.d + (col - 1)]
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn violations(&self) -> Vec<Violation> {
        let d = self.d;
        let mut out = Vec::new();
        for line in (1..=d).map(Line::Row).chain((1..=d).map(Line::Column)) {
            let mut counts = vec![0usize; d + 1];
            for t in 1..=d {
                let s = match line {
                    Line::Row(r) => self.get(r, t),
                    Line::Column(c) => self.get(t, c),
                };
                counts[s] += 1;
            }
            for (symbol, &count) in counts.iter().enumerate().skip(1) {
                if count > 1 {
                    out.push(Violation { line, symbol, count });
                }
            }
        }
        out
    }

    pub fn is_latin(&self) -> bool {
        self.violations().is_empty()
    }

    /// Both the main diagonal and the back diagonal are transversals.
    pub fn is_diagonal(&self) -> Result<bool, LatinError> {
        if !self.is_latin() {
            return Err(LatinError::NotLatin);
        }
        let d = self.d;
        let distinct = |f: &dyn Fn(usize) -> usize| {
            let mut seen = vec![false; d + 1];
            (1..=d).all(|i| !std::mem::replace(&mut seen[f(i)], true))
        };
        Ok(distinct(&|i| self.get(i, i)) && distinct(&|i| self.get(i, d + 1 - i)))
    }

    pub fn main_diagonal(&self) -> Vec<usize> {
        (1..=self.d).map(|i| self.get(i, i)).collect()
    }

    pub fn back_diagonal(&self) -> Vec<usize> {
        (1..=self.d).map(|i| self.get(i, self.d + 1 - i)).collect()
    }
}

/// Whether the `d²` ordered pairs `(K_ij, L_ij)` are pairwise distinct.
pub fn are_orthogonal(k: &LatinSquare, l: &LatinSquare) -> Result<bool, LatinError> {
    if k.d != l.d {
        return Err(LatinError::OrderMismatch(k.d, l.d));
    }
    if !k.is_latin() || !l.is_latin() {
        return Err(LatinError::NotLatin);
    }
    let d = k.d;
    let mut seen = vec![false; d * d];
    for (a, b) in k.cells.iter().zip(&l.cells) {
        let f = (a - 1) * d + (b - 1);
        if std::mem::replace(&mut seen[f], true) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// An orthogonal pair of Latin squares.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OlsPair {
    k: LatinSquare,
    l: LatinSquare,
    diagonal: bool,
}

impl OlsPair {
    pub fn new(k: LatinSquare, l: LatinSquare) -> Result<Self, LatinError> {
        if !are_orthogonal(&k, &l)? {
            return Err(LatinError::NotOrthogonal);
        }
        let diagonal = k.is_diagonal()? && l.is_diagonal()?;
        Ok(Self { k, l, diagonal })
    }

    pub fn k(&self) -> &LatinSquare {
        &self.k
    }

    pub fn l(&self) -> &LatinSquare {
        &self.l
    }

    pub fn order(&self) -> usize {
        self.k.d
    }

    /// Both squares are diagonal Latin squares.
    pub fn is_diagonal(&self) -> bool {
        self.diagonal
    }
}

/// The orthogonal diagonal pair of order four used throughout the docs.
pub fn odls4() -> OlsPair {
    let k = LatinSquare::from_rows(&[&[1, 3, 4, 2], &[4, 2, 1, 3], &[2, 4, 3, 1], &[3, 1, 2, 4]]).unwrap();
    let l = LatinSquare::from_rows(&[&[2, 3, 1, 4], &[4, 1, 3, 2], &[3, 2, 4, 1], &[1, 4, 2, 3]]).unwrap();
    OlsPair::new(k, l).expect("embedded pair is an ODLS")
}

fn gcd(a: usize, b: usize) -> usize {
    num_integer::gcd(a, b)
}

/// Orthogonal diagonal Latin squares for `d = 4` and odd `d` coprime to 3.
///
/// Odd orders use `K = (i−1) + 2(j−1)`, `L = (i−1) + 3(j−1)` mod `d`.
pub fn construct_odls(d: usize) -> Result<OlsPair, LatinError> {
    match d {
        2 | 3 | 6 => Err(LatinError::NoOdls(d)),
        1 => OlsPair::new(LatinSquare::cyclic(1), LatinSquare::cyclic(1)),
        4 => Ok(odls4()),
        _ if d % 2 == 1 && gcd(d, 3) == 1 => OlsPair::new(LatinSquare::linear(d, 1, 2), LatinSquare::linear(d, 1, 3)),
        _ => Err(LatinError::UnsupportedOrder(d)),
    }
}

/// Orthogonal Latin squares (not necessarily diagonal): every odd order via
/// `K = i + j`, `L = i + 2j`, and the order-four pair.
pub fn construct_ols(d: usize) -> Result<OlsPair, LatinError> {
    match d {
        2 | 6 => Err(LatinError::NoOdls(d)),
        4 => Ok(odls4()),
        _ if d % 2 == 1 => OlsPair::new(LatinSquare::linear(d, 1, 1), LatinSquare::linear(d, 1, 2)),
        _ => Err(LatinError::UnsupportedOrder(d)),
    }
}

/// A bijection of `[d]²`, read as the operator `Σ |ij⟩⟨image(ij)|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PermutationGate {
    d: usize,
    images: Vec<(usize, usize)>,
}

impl PermutationGate {
    /// `images[flat(i,j)]` is the column cell carrying the unit entry of row `(i,j)`.
    pub fn from_images(d: usize, images: Vec<(usize, usize)>) -> Result<Self, LatinError> {
        if images.len() != d * d {
            return Err(LatinError::Shape { expected: d * d, got: images.len() });
        }
        let mut seen = vec![false; d * d];
        for (f, &(k, l)) in images.iter().enumerate() {
            if k == 0 || k > d || l == 0 || l > d {
                let (row, col) = split_index(d, f);
                return Err(LatinError::SymbolOutOfRange { row, col, symbol: k.max(l), d });
            }
            if std::mem::replace(&mut seen[flat_index(d, k, l)], true) {
                return Err(LatinError::NotOrthogonal);
            }
        }
        Ok(Self { d, images })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Column cell of the unit entry in row `(i, j)`.
    pub fn image(&self, i: usize, j: usize) -> (usize, usize) {
        self.images[flat_index(self.d, i, j)]
    }

    pub fn images(&self) -> &[(usize, usize)] {
        &self.images
    }

    pub fn operator(&self) -> BipartiteOperator {
        let mut op = BipartiteOperator::zeros(self.d);
        for (f, &(k, l)) in self.images.iter().enumerate() {
            let (i, j) = split_index(self.d, f);
            op.set(i, j, k, l, C64::one());
        }
        op
    }

    /// Support quadruples `(i, j, k, l)` in row order.
    pub fn support(&self) -> Vec<[usize; 4]> {
        self.images
            .iter()
            .enumerate()
            .map(|(f, &(k, l))| {
                let (i, j) = split_index(self.d, f);
                [i, j, k, l]
            })
            .collect()
    }
}

/// `P = Σ |ij⟩⟨K_ij L_ij|`.
pub fn gate_from_ols(pair: &OlsPair) -> PermutationGate {
    let d = pair.order();
    let images = (0..d * d).map(|f| (pair.k.cells[f], pair.l.cells[f])).collect();
    PermutationGate::from_images(d, images).expect("orthogonality makes the map a bijection")
}

/// Multiplies the unit entry of each listed row `(i, j)` by its phase.
/// Rows not listed keep phase 1.
pub fn enphase(gate: &PermutationGate, phases: &HashMap<(usize, usize), C64>) -> Result<BipartiteOperator, LatinError> {
    let d = gate.d;
    let mut op = gate.operator();
    let mut keys: Vec<_> = phases.keys().copied().collect();
    keys.sort_unstable();
    for (i, j) in keys {
        if i == 0 || i > d || j == 0 || j > d {
            return Err(LatinError::PhaseOffSupport { i, j });
        }
        let z = phases[&(i, j)];
        if (z.norm() - 1.0).abs() > 1e-12 {
            return Err(LatinError::PhaseNotUnimodular { i, j, modulus: z.norm() });
        }
        let (k, l) = gate.image(i, j);
        op.set(i, j, k, l, z);
    }
    Ok(op)
}

/// Phases `e^{iθ}` on all rows, `thetas` in row order.
pub fn enphase_all(gate: &PermutationGate, thetas: &[f64]) -> Result<BipartiteOperator, LatinError> {
    let d = gate.d;
    if thetas.len() != d * d {
        return Err(LatinError::Shape { expected: d * d, got: thetas.len() });
    }
    let phases = thetas.iter().enumerate().map(|(f, &t)| (split_index(d, f), C64::from_polar(1.0, t))).collect();
    enphase(gate, &phases)
}

/// `(1/d) Σ |ij⟩|K_ij L_ij⟩`.
pub fn ame_from_ols(pair: &OlsPair) -> StateVector {
    vectorize(&gate_from_ols(pair).operator())
}

impl std::fmt::Display for LatinSquare {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for r in 1..=self.d {
            let row: Vec<String> = (1..=self.d).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::Bipartition;

    #[test]
    fn cyclic_squares_are_latin() {
        for d in 1..=9 {
            assert!(LatinSquare::cyclic(d).is_latin());
        }
    }

    #[test]
    fn repeated_cell_gives_one_violation() {
        let sq = LatinSquare::from_rows(&[&[1, 1], &[2, 1]]).unwrap();
        let v = sq.violations();
        assert!(v.contains(&Violation { line: Line::Row(1), symbol: 1, count: 2 }));
        assert!(v.contains(&Violation { line: Line::Column(2), symbol: 1, count: 2 }));
        let row_only = LatinSquare::from_rows(&[&[1, 1, 3], &[2, 3, 1], &[3, 2, 2]]).unwrap();
        assert!(!row_only.is_latin());
    }

    #[test]
    fn out_of_range_symbol() {
        assert!(matches!(
            LatinSquare::new(2, vec![1, 2, 3, 1]),
            Err(LatinError::SymbolOutOfRange { row: 2, col: 1, symbol: 3, d: 2 })
        ));
    }

    #[test]
    fn diagonal_checks() {
        let pair = odls4();
        assert!(pair.k().is_diagonal().unwrap());
        assert!(pair.l().is_diagonal().unwrap());
        assert!(!LatinSquare::cyclic(3).is_diagonal().unwrap());
        assert!(LatinSquare::linear(5, 1, 2).is_diagonal().unwrap());
        let bad = LatinSquare::new(2, vec![1, 1, 1, 1]).unwrap();
        assert_eq!(bad.is_diagonal(), Err(LatinError::NotLatin));
    }

    #[test]
    fn orthogonality() {
        let pair = odls4();
        assert!(are_orthogonal(pair.k(), pair.l()).unwrap());
        assert!(!are_orthogonal(pair.k(), pair.k()).unwrap());
        assert!(are_orthogonal(&LatinSquare::linear(5, 1, 2), &LatinSquare::linear(5, 1, 3)).unwrap());
        assert_eq!(
            are_orthogonal(&LatinSquare::cyclic(3), &LatinSquare::cyclic(4)),
            Err(LatinError::OrderMismatch(3, 4))
        );
    }

    #[test]
    fn odls_constructions() {
        for d in [2, 3, 6] {
            assert_eq!(construct_odls(d), Err(LatinError::NoOdls(d)));
        }
        assert_eq!(construct_odls(9), Err(LatinError::UnsupportedOrder(9)));
        for d in [5, 7, 11, 13] {
            let p = construct_odls(d).unwrap();
            assert!(p.is_diagonal(), "d = {d}");
        }
        assert_eq!(construct_odls(4).unwrap(), odls4());
    }

    #[test]
    fn gates_are_two_unitary() {
        for d in [3, 4, 5] {
            let op = gate_from_ols(&construct_ols(d).unwrap()).operator();
            let rep = op.classify(1e-14);
            assert_eq!(rep.max_deficit(), 0.0);
            assert!(rep.is_two_unitary);
        }
    }

    #[test]
    fn enphasing() {
        let gate = gate_from_ols(&odls4());
        let same = enphase(&gate, &HashMap::new()).unwrap();
        assert_eq!(same, gate.operator());
        let mut phases = HashMap::new();
        phases.insert((1, 1), C64::from_polar(1.0, 0.7));
        let op = enphase(&gate, &phases).unwrap();
        let (k, l) = gate.image(1, 1);
        assert!((op.get(1, 1, k, l) - C64::from_polar(1.0, 0.7)).norm() < 1e-16);
        assert!(op.classify(1e-14).is_two_unitary);
        phases.insert((5, 1), C64::one());
        assert_eq!(enphase(&gate, &phases), Err(LatinError::PhaseOffSupport { i: 5, j: 1 }));
        phases.remove(&(5, 1));
        phases.insert((2, 2), C64::new(2.0, 0.0));
        assert!(matches!(enphase(&gate, &phases), Err(LatinError::PhaseNotUnimodular { .. })));
    }

    #[test]
    fn ame_states_have_uniform_marginals() {
        for d in [3, 4, 5] {
            let psi = ame_from_ols(&construct_ols(d).unwrap());
            assert_eq!(psi.nonzero_count(0.0), d * d);
            for split in Bipartition::ALL {
                let s = psi.marginal_spectrum(split);
                let target = 1.0 / (d * d) as f64;
                assert!(s.iter().all(|x| (x - target).abs() < 1e-12), "d = {d}, {split:?}");
            }
        }
    }

    #[test]
    fn non_bijective_images_are_rejected() {
        assert!(PermutationGate::from_images(2, vec![(1, 1), (1, 1), (2, 1), (2, 2)]).is_err());
    }
}
