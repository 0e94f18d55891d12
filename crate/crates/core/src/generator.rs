//! Seeded Haar sampling and the alternating-projection search for 2-unitaries.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::decomp::polar_unitary;
use crate::operator::{BipartiteOperator, C64};

/// Haar-random unitary of order `n`: QR of a complex Gaussian matrix with the
/// phases of `R`'s diagonal moved into `Q`.
pub fn random_unitary(n: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_unitary_with(n, &mut rng)
}

pub fn random_unitary_with(n: usize, rng: &mut impl rand::Rng) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..n {
        let rc = r[(c, c)];
        let phase = if rc.norm() > 0.0 { rc / rc.norm() } else { C64::new(1.0, 0.0) };
        for row in 0..n {
            q[(row, c)] *= phase;
        }
    }
    q
}

/// Single-qudit Haar unitary of order `d`.
pub fn random_local(d: usize, rng: &mut impl rand::Rng) -> DMatrix<C64> {
    random_unitary_with(d, rng)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Frame {
    Plain,
    Realigned,
    Transposed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FrameOrder {
    /// `U`, then `R`, then `Γ` in every sweep.
    Fixed,
    /// A seeded shuffle of the three frames per sweep.
    Shuffled,
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub order: FrameOrder,
    /// Sweeps without a relative improvement of `stall_improvement` before giving up.
    pub stall_window: usize,
    pub stall_improvement: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { max_iter: 2000, tol: 1e-12, order: FrameOrder::Fixed, stall_window: 200, stall_improvement: 1e-3 }
    }
}

/// Deficits `(u, r, g)` measured after a sweep.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Deficits {
    pub u: f64,
    pub r: f64,
    pub g: f64,
}

impl Deficits {
    pub fn of(m: &BipartiteOperator) -> Self {
        Self {
            u: m.unitarity_deficit(),
            r: m.realign().unitarity_deficit(),
            g: m.partial_transpose().unitarity_deficit(),
        }
    }

    pub fn combined(&self) -> f64 {
        self.u.max(self.r).max(self.g)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub u: BipartiteOperator,
    pub deficits: Vec<Deficits>,
    pub iterations: usize,
    pub converged: bool,
    /// Stopped early because the combined deficit stopped improving.
    pub stalled: bool,
    pub seed: u64,
}

impl SearchResult {
    pub fn final_deficits(&self) -> Deficits {
        self.deficits.last().copied().unwrap_or_else(|| Deficits::of(&self.u))
    }

    /// Smallest combined deficit seen over the run.
    pub fn best_combined(&self) -> f64 {
        self.deficits.iter().map(Deficits::combined).fold(f64::INFINITY, f64::min)
    }
}

fn project(m: &BipartiteOperator, frame: Frame) -> Option<BipartiteOperator> {
    let d = m.dim();
    let polar =
        |x: &BipartiteOperator| polar_unitary(x.matrix()).ok().map(|w| BipartiteOperator::from_matrix(d, w).unwrap());
    match frame {
        Frame::Plain => polar(m),
        Frame::Realigned => polar(&m.realign()).map(|w| w.realign()),
        Frame::Transposed => polar(&m.partial_transpose()).map(|w| w.partial_transpose()),
    }
}

pub fn search_two_unitary(d: usize, seed: u64, max_iter: usize, tol: f64) -> SearchResult {
    search_with(d, seed, &SearchOptions { max_iter, tol, ..SearchOptions::default() })
}

/// Repeats `U ← polar(U)`, `U ← R(polar(R(U)))`, `U ← Γ(polar(Γ(U)))` from a
/// Haar-random start until every deficit is below `tol`.
pub fn search_with(d: usize, seed: u64, opts: &SearchOptions) -> SearchResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = random_unitary_with(d * d, &mut rng);
    let mut u = BipartiteOperator::from_matrix(d, start).unwrap();
    let mut deficits = Vec::new();
    let mut best = f64::INFINITY;
    let mut since_improvement = 0;
    let mut frames = [Frame::Plain, Frame::Realigned, Frame::Transposed];
    let (mut converged, mut stalled) = (false, false);
    let mut iterations = 0;
    while iterations < opts.max_iter {
        if opts.order == FrameOrder::Shuffled {
            frames.shuffle(&mut rng);
        }
        let mut failed = false;
        for &f in &frames {
            match project(&u, f) {
                Some(next) => u = next,
                None => {
                    failed = true;
                    break;
                }
            }
        }
        iterations += 1;
        let def = Deficits::of(&u);
        deficits.push(def);
        if failed {
            stalled = true;
            break;
        }
        let c = def.combined();
        if c < opts.tol {
            converged = true;
            break;
        }
        if c < best * (1.0 - opts.stall_improvement) {
            best = c;
            since_improvement = 0;
        } else {
            since_improvement += 1;
            if since_improvement >= opts.stall_window {
                stalled = true;
                break;
            }
        }
    }
    SearchResult { u, deficits, iterations, converged, stalled, seed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::unitarity_deficit;

    #[test]
    fn haar_samples_are_unitary_and_reproducible() {
        let u = random_unitary(9, 42);
        assert!(unitarity_deficit(&u) < 1e-13);
        assert_eq!(u, random_unitary(9, 42));
        assert_ne!(u, random_unitary(9, 43));
        for c in 0..9 {
            assert!((u.column(c).norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn search_is_deterministic() {
        let a = search_two_unitary(3, 5, 50, 1e-12);
        let b = search_two_unitary(3, 5, 50, 1e-12);
        assert_eq!(a, b);
    }

    #[test]
    fn qubits_never_converge() {
        for seed in 0..5 {
            let r = search_two_unitary(2, seed, 500, 1e-10);
            assert!(!r.converged);
            assert!(r.best_combined() > 0.1);
        }
    }

    #[test]
    fn shuffled_order_is_seeded() {
        let opts = SearchOptions { max_iter: 30, order: FrameOrder::Shuffled, ..SearchOptions::default() };
        assert_eq!(search_with(3, 1, &opts), search_with(3, 1, &opts));
    }
}
