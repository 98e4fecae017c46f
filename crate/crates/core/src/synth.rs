//! Random instances for property sweeps.

use rand::seq::index;
use rand::Rng;

use crate::split::{Block, RankOneTerm, SplitOperator};
use crate::space::TwistedVector;

/// `n` blocks with iid entries uniform in `[−1, 1]`.
pub fn random_split<R: Rng>(n: usize, rng: &mut R) -> SplitOperator {
    let blocks = (0..n)
        .map(|_| {
            Block::new(
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
                rng.random_range(-1.0..=1.0),
            )
        })
        .collect();
    SplitOperator::new(blocks).expect("n >= 1")
}

/// `k` distinct indices from `0..n`, sorted.
pub fn random_subset<R: Rng>(n: usize, k: usize, rng: &mut R) -> Vec<usize> {
    let mut v = index::sample(rng, n, k).into_vec();
    v.sort_unstable();
    v
}

/// Vector with iid entries drawn from a mixture of scales, so that sweeps see
/// both tiny and large coordinates (and exact zeros).
pub fn random_vector<R: Rng>(n: usize, rng: &mut R) -> TwistedVector {
    let draw = |rng: &mut R| -> f64 {
        match rng.random_range(0..8) {
            0 => 0.0,
            1 => rng.random_range(-1e-6..1e-6),
            2 => rng.random_range(-1e3..1e3),
            _ => rng.random_range(-1.0..1.0),
        }
    };
    let a = (0..n).map(|_| draw(rng)).collect();
    let b = (0..n).map(|_| draw(rng)).collect();
    TwistedVector::new(a, b).expect("finite")
}

/// A rank-one decomposition satisfying the selection preconditions.
#[derive(Debug, Clone, PartialEq)]
pub struct RankOneInstance {
    pub terms: Vec<RankOneTerm>,
    pub k_bound: f64,
}

/// Random terms rescaled so that `Σ θ_i b_i = 1`, with `K = Σ|b_i|·(1 + s)`
/// for a random slack `s ∈ [0, 1)`. About a third of the terms are
/// lower-row (`θ = 1`).
pub fn random_rank_one<R: Rng>(max_terms: usize, rng: &mut R) -> RankOneInstance {
    loop {
        let m = rng.random_range(1..=max_terms.max(1));
        let mut terms: Vec<RankOneTerm> = (0..m)
            .map(|_| {
                let a = rng.random_range(-2.0..2.0);
                let b = rng.random_range(-2.0..2.0);
                if rng.random_range(0..3) == 0 {
                    RankOneTerm::lower_row(a, b)
                } else {
                    let theta = match rng.random_range(0..3) {
                        0 => rng.random_range(-0.05..0.05),
                        _ => rng.random_range(-3.0..3.0),
                    };
                    RankOneTerm::full(a, b, theta)
                }
            })
            .collect();
        let total: f64 = terms.iter().map(|t| t.theta * t.b).sum();
        if total.abs() < 1e-3 {
            continue;
        }
        // scaling (a, b) by 1/total keeps θ and the shape
        for t in &mut terms {
            t.a /= total;
            t.b /= total;
        }
        let abs_b: f64 = terms.iter().map(|t| t.b.abs()).sum();
        let k_bound = abs_b * (1.0 + rng.random_range(0.0..1.0));
        return RankOneInstance { terms, k_bound };
    }
}
