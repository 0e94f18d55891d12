//! Four-party pure states `|ψ⟩ ∈ (C^d)^{⊗4}` and their two-party marginals.

use nalgebra::DMatrix;
use num_traits::Zero;

use crate::decomp::sorted_svd;
use crate::operator::{BipartiteOperator, C64};

/// The three ways of splitting parties `A B C D` into two pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Bipartition {
    AbCd,
    AcBd,
    AdBc,
}

impl Bipartition {
    pub const ALL: [Bipartition; 3] = [Bipartition::AbCd, Bipartition::AcBd, Bipartition::AdBc];

    pub fn label(self) -> &'static str {
        match self {
            Bipartition::AbCd => "AB|CD",
            Bipartition::AcBd => "AC|BD",
            Bipartition::AdBc => "AD|BC",
        }
    }
}

impl std::str::FromStr for Bipartition {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "AB|CD" | "ABCD" | "AB" => Ok(Bipartition::AbCd),
            "AC|BD" | "ACBD" | "AC" => Ok(Bipartition::AcBd),
            "AD|BC" | "ADBC" | "AD" => Ok(Bipartition::AdBc),
            _ => Err(format!("unknown bipartition `{s}`")),
        }
    }
}

/// Amplitudes indexed by `(a, b, c, e)`, flat `((a·d + b)·d + c)·d + e` (0-based).
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    d: usize,
    amps: Vec<C64>,
}

impl StateVector {
    pub fn new(d: usize, amps: Vec<C64>) -> Self {
        assert_eq!(amps.len(), d.pow(4), "state needs d^4 amplitudes");
        Self { d, amps }
    }

    /// The computational basis ket `|a b c e⟩`, 1-based labels.
    pub fn basis(d: usize, ket: [usize; 4]) -> Self {
        let mut amps = vec![C64::zero(); d.pow(4)];
        amps[Self::flat(d, ket)] = C64::new(1.0, 0.0);
        Self { d, amps }
    }

    fn flat(d: usize, ket: [usize; 4]) -> usize {
        ket.iter().fold(0, |acc, &x| acc * d + (x - 1))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    /// `⟨a b c e|ψ⟩` with 1-based labels.
    pub fn amplitude(&self, ket: [usize; 4]) -> C64 {
        self.amps[Self::flat(self.d, ket)]
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn nonzero_count(&self, tol: f64) -> usize {
        self.amps.iter().filter(|z| z.norm() > tol).count()
    }

    /// The amplitudes arranged as a `d²×d²` matrix with the given pair on the rows.
    pub fn coefficient_matrix(&self, split: Bipartition) -> DMatrix<C64> {
        let d = self.d;
        let n = d * d;
        let mut m = DMatrix::zeros(n, n);
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let v = self.amps[((a * d + b) * d + c) * d + e];
                        let (r, col) = match split {
                            Bipartition::AbCd => (a * d + b, c * d + e),
                            Bipartition::AcBd => (a * d + c, b * d + e),
                            Bipartition::AdBc => (a * d + e, b * d + c),
                        };
                        m[(r, col)] = v;
                    }
                }
            }
        }
        m
    }

    /// Eigenvalues of the reduced density matrix of the first pair, descending.
    pub fn marginal_spectrum(&self, split: Bipartition) -> Vec<f64> {
        let m = self.coefficient_matrix(split);
        let svd = sorted_svd(&m).expect("SVD of a finite matrix");
        svd.singular_values.iter().map(|s| s * s).collect()
    }

    /// Largest deviation of any marginal eigenvalue from `1/d²` over all three splits.
    pub fn ame_deviation(&self) -> f64 {
        let target = 1.0 / (self.d * self.d) as f64;
        Bipartition::ALL.iter().flat_map(|&s| self.marginal_spectrum(s)).map(|x| (x - target).abs()).fold(0.0, f64::max)
    }
}

/// `|Ψ_U⟩ = (1/d) Σ U^{iα}_{jβ} |iαjβ⟩`.
pub fn vectorize(u: &BipartiteOperator) -> StateVector {
    let d = u.dim();
    let n = d * d;
    let scale = 1.0 / d as f64;
    let m = u.matrix();
    let mut amps = Vec::with_capacity(n * n);
    for r in 0..n {
        for c in 0..n {
            amps.push(m[(r, c)] * scale);
        }
    }
    StateVector { d, amps }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_state_spectrum() {
        let psi = StateVector::basis(3, [1, 1, 1, 1]);
        for split in Bipartition::ALL {
            let s = psi.marginal_spectrum(split);
            assert!((s[0] - 1.0).abs() < 1e-15);
            assert!(s[1..].iter().all(|x| x.abs() < 1e-15));
        }
    }

    #[test]
    fn identity_vectorizes_to_paired_state() {
        let psi = vectorize(&BipartiteOperator::identity(2));
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        for i in 1..=2 {
            for a in 1..=2 {
                assert_eq!(psi.amplitude([i, a, i, a]), C64::new(0.5, 0.0));
            }
        }
        assert_eq!(psi.nonzero_count(0.0), 4);
    }

    #[test]
    fn swap_is_not_ame() {
        // vectorized SWAP: (1/2) Σ |iα α i⟩; AC|BD pairs (i,α) with (α,i)
        let psi = vectorize(&BipartiteOperator::swap(2));
        let ab = psi.marginal_spectrum(Bipartition::AbCd);
        assert!(ab.iter().all(|x| (x - 0.25).abs() < 1e-14));
        let ac = psi.marginal_spectrum(Bipartition::AcBd);
        assert!((ac[0] - 0.25).abs() < 1e-14);
        let ad = psi.marginal_spectrum(Bipartition::AdBc);
        assert!((ad[0] - 1.0).abs() < 1e-14, "AD|BC of vec(SWAP) is a product: {ad:?}");
        assert!(psi.ame_deviation() > 0.5);
    }

    #[test]
    fn bipartition_parsing() {
        assert_eq!("ac|bd".parse::<Bipartition>().unwrap(), Bipartition::AcBd);
        assert!("xy".parse::<Bipartition>().is_err());
    }
}
