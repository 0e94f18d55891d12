//! Bipartite unitaries on qudits: 2-unitarity checks, Latin-square gates,
//! local-unitary invariants, the qutrit reduction to a fixed permutation,
//! and the golden order-36 example.

pub mod decomp;
pub mod error;
pub mod generator;
pub mod golden;
pub mod invariants;
pub mod io;
pub mod latin;
pub mod operator;
pub mod reduction;
pub mod state;

pub use error::{DecompError, GoldenError, InvariantError, LatinError, OperatorError, ParseError, ReductionError};
pub use invariants::{contract_invariant, ContractOptions, Method, PermTuple};
pub use latin::{LatinSquare, OlsPair, PermutationGate};
pub use operator::{BipartiteOperator, SparseEntry, SparseOperator, UnitarityReport, C64};
pub use reduction::{reduce_to_p9, LuFactorization};
pub use state::{Bipartition, StateVector};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/latin.md")]
    mod latin {}
    #[doc = include_str!("../../../book/src/invariants.md")]
    mod invariants {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/golden.md")]
    mod golden {}
    #[doc = include_str!("../../../book/src/generator.md")]
    mod generator {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
