use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("matrix of shape {rows}x{cols} is not of order d^2 for d = {d}")]
    Shape { d: usize, rows: usize, cols: usize },
    #[error("index {index} outside 1..={d}")]
    IndexOutOfRange { index: usize, d: usize },
    #[error("duplicate entry at ({i},{j}),({k},{l})")]
    DuplicateEntry { i: usize, j: usize, k: usize, l: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DecompError {
    #[error("matrix is rank deficient (smallest singular value {smallest:e}); polar factor is not unique")]
    RankDeficient { smallest: f64 },
    #[error("vector is zero")]
    ZeroVector,
    #[error("vector length {len} is not d^2 for d = {d}")]
    Length { len: usize, d: usize },
    #[error("singular value decomposition failed to converge")]
    SvdFailed,
}

/// Text-format diagnostics carry 1-based line and column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub(crate) fn new(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self { line, column, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LatinError {
    #[error("symbol {symbol} at ({row},{col}) outside 1..={d}")]
    SymbolOutOfRange { row: usize, col: usize, symbol: usize, d: usize },
    #[error("expected {expected} cells, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("square is not Latin")]
    NotLatin,
    #[error("orders differ: {0} vs {1}")]
    OrderMismatch(usize, usize),
    #[error("squares are not orthogonal")]
    NotOrthogonal,
    #[error("pair is not a pair of diagonal Latin squares")]
    NotDiagonal,
    #[error("no orthogonal diagonal Latin squares exist of order {0}")]
    NoOdls(usize),
    #[error("order {0} is not covered by the built-in constructions")]
    UnsupportedOrder(usize),
    #[error("phase for cell ({i},{j}) is off the support of the gate")]
    PhaseOffSupport { i: usize, j: usize },
    #[error("phase for cell ({i},{j}) has modulus {modulus}, expected 1")]
    PhaseNotUnimodular { i: usize, j: usize, modulus: f64 },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InvariantError {
    #[error("permutation {name} is not a bijection of 1..={n}")]
    NotPermutation { name: &'static str, n: usize },
    #[error("permutations have different lengths")]
    LengthMismatch,
    #[error("dense contraction needs {terms:e} terms, above the budget of {budget:e}")]
    OverBudget { terms: f64, budget: f64 },
    #[error("operator must have d = {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error(transparent)]
    Latin(#[from] LatinError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReductionError {
    #[error("reduction is defined for d = 3 only, got d = {0}")]
    Dimension(usize),
    #[error("no product pair found after {restarts} restarts (best overlap {best_overlap})")]
    NoProductPair { restarts: usize, best_overlap: f64 },
    #[error("pair is not mapped product-to-product: residual {residual:e}")]
    PairNotFixed { residual: f64 },
    #[error("stage `{stage}` violates its zero pattern by {violation:e} (tolerance {tol:e})")]
    ZeroPattern { stage: &'static str, violation: f64, tol: f64 },
    #[error("input is not 2-unitary (max deficit {deficit:e})")]
    NotTwoUnitary { deficit: f64 },
    #[error(transparent)]
    Decomp(#[from] DecompError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GoldenError {
    #[error("expected {expected} nonzero entries, found {found}")]
    NonzeroCount { expected: usize, found: usize },
    #[error("operator must have d = 6, got {0}")]
    Dimension(usize),
    #[error("unitarity deficit {deficit:e} above {threshold:e}: the transcription is inconsistent")]
    Deficit { deficit: f64, threshold: f64 },
    #[error("entry ({i},{j}),({k},{l}) has modulus {modulus} outside {{a, b, c}}")]
    Magnitude { i: usize, j: usize, k: usize, l: usize, modulus: f64 },
    #[error("entry ({i},{j}),({k},{l}) has a phase that is not a 20th root of unity")]
    Phase { i: usize, j: usize, k: usize, l: usize },
    #[error("coefficient vector has length {got}, expected {expected}")]
    CoefficientLength { expected: usize, got: usize },
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Parse(#[from] ParseError),
}
