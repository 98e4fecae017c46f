//! Split operators: maps that preserve every block `E_j = span{e_j, f_j}`.
//!
//! Block `j` acts on `(a_j, b_j)` through the 2×2 matrix
//! `(α_j, β_j; γ_j, δ_j)`. Besides application and the entry bound, this
//! module carries the combinatorial selection procedures used to show that a
//! split operator with small norm must have small off-diagonal coupling `γ`
//! and nearly scalar diagonal on a large set of blocks.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_len, Error, Result};
use crate::linear::LinearMap;
use crate::space::{kp_norm, TwistedVector};

/// A block of a split operator, `(α, β; γ, δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl Block {
    pub const IDENTITY: Block = Block {
        alpha: 1.0,
        beta: 0.0,
        gamma: 0.0,
        delta: 1.0,
    };

    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Self {
        Self {
            alpha,
            beta,
            gamma,
            delta,
        }
    }

    fn as_array(&self) -> [f64; 4] {
        [self.alpha, self.beta, self.gamma, self.delta]
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.as_array().iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Largest singular value of the 2×2 block.
    pub fn spectral_norm(&self) -> f64 {
        let (p, q, r, s) = (self.alpha, self.beta, self.gamma, self.delta);
        0.5 * ((p + s).hypot(q - r) + (p - s).hypot(q + r))
    }
}

/// Split operator given by its `n` blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSplitOperator", into = "RawSplitOperator")]
pub struct SplitOperator {
    blocks: Vec<Block>,
}

#[derive(Serialize, Deserialize)]
struct RawSplitOperator {
    blocks: Vec<[f64; 4]>,
}

impl TryFrom<RawSplitOperator> for SplitOperator {
    type Error = Error;

    fn try_from(raw: RawSplitOperator) -> Result<Self> {
        SplitOperator::new(
            raw.blocks
                .into_iter()
                .map(|[a, b, c, d]| Block::new(a, b, c, d))
                .collect(),
        )
    }
}

impl From<SplitOperator> for RawSplitOperator {
    fn from(op: SplitOperator) -> Self {
        RawSplitOperator {
            blocks: op.blocks.iter().map(Block::as_array).collect(),
        }
    }
}

impl SplitOperator {
    pub fn new(blocks: Vec<Block>) -> Result<Self> {
        if blocks.is_empty() {
            return Err(Error::Input("split operator needs n >= 1 blocks".into()));
        }
        if let Some(j) = blocks
            .iter()
            .position(|b| b.as_array().iter().any(|v| !v.is_finite()))
        {
            return Err(Error::Input(format!("block {j} has a non-finite entry")));
        }
        Ok(Self { blocks })
    }

    pub fn identity(n: usize) -> Self {
        Self::uniform(n, Block::IDENTITY)
    }

    /// Every block equal to `block`.
    pub fn uniform(n: usize, block: Block) -> Self {
        assert!(n >= 1);
        Self {
            blocks: vec![block; n],
        }
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, j: usize) -> Block {
        self.blocks[j]
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            blocks: self
                .blocks
                .iter()
                .map(|b| Block::new(lambda * b.alpha, lambda * b.beta, lambda * b.gamma, lambda * b.delta))
                .collect(),
        }
    }

    /// Per block: `a′_j = α_j a_j + β_j b_j`, `b′_j = γ_j a_j + δ_j b_j`.
    pub fn apply(&self, x: &TwistedVector) -> Result<TwistedVector> {
        ensure_len(self.n(), x.dim())?;
        let mut out = vec![0.0; 2 * self.n()];
        self.apply_flat(&x.to_flat(), &mut out);
        TwistedVector::from_flat(&out)
    }

    /// `max_j max(|α_j|, |β_j|, |γ_j|, |δ_j|)`, a lower bound for the operator
    /// norm. It is certified by the unit vectors: `‖T e_j‖ = |α_j| + |γ_j|`
    /// and `‖T f_j‖ = |β_j| + |δ_j|`.
    pub fn entry_lower_bound(&self) -> f64 {
        let n = self.n();
        let mut entry = 0.0_f64;
        let mut witnessed = 0.0_f64;
        for (j, blk) in self.blocks.iter().enumerate() {
            entry = entry.max(blk.max_abs_entry());
            let te = self.apply(&TwistedVector::e(n, j)).expect("matching dims");
            let tf = self.apply(&TwistedVector::f(n, j)).expect("matching dims");
            witnessed = witnessed.max(kp_norm(&te)).max(kp_norm(&tf));
        }
        debug_assert!(entry <= witnessed + 1e-12 * witnessed.max(1.0));
        entry
    }
}

impl LinearMap for SplitOperator {
    fn dim(&self) -> usize {
        2 * self.n()
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        for (j, blk) in self.blocks.iter().enumerate() {
            let (a, b) = (x[j], x[n + j]);
            out[j] = blk.alpha * a + blk.beta * b;
            out[n + j] = blk.gamma * a + blk.delta * b;
        }
    }

    fn apply_transpose_flat(&self, y: &[f64], out: &mut [f64]) {
        let n = self.n();
        for (j, blk) in self.blocks.iter().enumerate() {
            let (a, b) = (y[j], y[n + j]);
            out[j] = blk.alpha * a + blk.gamma * b;
            out[n + j] = blk.beta * a + blk.delta * b;
        }
    }

    fn spectral_norm(&self) -> f64 {
        self.blocks
            .iter()
            .fold(0.0_f64, |m, b| m.max(b.spectral_norm()))
    }
}

fn check_subset(subset: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for &j in subset {
        if j >= n {
            return Err(Error::Input(format!("index {j} out of range 0..{n}")));
        }
        if seen[j] {
            return Err(Error::Input(format!("index {j} repeated in subset")));
        }
        seen[j] = true;
    }
    Ok(())
}

fn sorted(mut v: Vec<usize>) -> Vec<usize> {
    v.sort_unstable();
    v
}

/// The vector with `a_j = ln(1/√k)/√k`, `b_j = 1/√k` on `subset` (of size
/// `k ≥ 2`) and zero elsewhere. It is `(F(u), u)` for `u` uniform on the
/// subset, so its quasi-norm is 1.
pub fn uniform_curve_vector(subset: &[usize], n: usize) -> Result<TwistedVector> {
    check_subset(subset, n)?;
    let k = subset.len();
    if k < 2 {
        return Err(Error::Input(format!("subset needs at least 2 indices, got {k}")));
    }
    let s = (k as f64).sqrt();
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for &j in subset {
        a[j] = (1.0 / s).ln() / s;
        b[j] = 1.0 / s;
    }
    TwistedVector::new(a, b)
}

fn rms<I: Iterator<Item = f64>>(values: I) -> f64 {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v * v, c + 1));
    if count == 0 {
        0.0
    } else {
        (sum / count as f64).sqrt()
    }
}

/// Both sides of the chain bounding the RMS of `γ` over a subset.
///
/// `lhs = ln√k · (k⁻¹ Σ_{j∈A} γ_j²)^{1/2} − max_{j∈A} |δ_j|` and
/// `rhs = ‖T x‖` for `x = uniform_curve_vector(A)`. The inequality
/// `lhs ≤ rhs` always holds; since `‖x‖ = 1`, `rhs ≤ ‖T‖`.
pub fn gamma_rms_chain(op: &SplitOperator, subset: &[usize]) -> Result<(f64, f64)> {
    let x = uniform_curve_vector(subset, op.n())?;
    let k = subset.len() as f64;
    let gamma_rms = rms(subset.iter().map(|&j| op.block(j).gamma));
    let delta_max = subset
        .iter()
        .fold(0.0_f64, |m, &j| m.max(op.block(j).delta.abs()));
    let lhs = k.sqrt().ln() * gamma_rms - delta_max;
    let rhs = kp_norm(&op.apply(&x)?);
    Ok((lhs, rhs))
}

/// Outcome of one of the subset selections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    pub input_set: Vec<usize>,
    pub output_set: Vec<usize>,
    /// `(quantity, threshold)` for each thresholding stage.
    pub stage_thresholds: Vec<(String, f64)>,
    /// `(set name, size)` for each intermediate set.
    pub stage_sizes: Vec<(String, usize)>,
    pub achieved_max_gamma: f64,
    pub achieved_max_delta_minus_alpha: f64,
}

fn achieved(op: &SplitOperator, set: &[usize]) -> (f64, f64) {
    set.iter().fold((0.0_f64, 0.0_f64), |(g, d), &j| {
        let blk = op.block(j);
        (g.max(blk.gamma.abs()), d.max((blk.delta - blk.alpha).abs()))
    })
}

fn gamma_threshold(subset: &[usize], bound: f64) -> Result<f64> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::Input(format!("norm bound must be positive, got {bound}")));
    }
    let k = subset.len();
    if k < 2 {
        return Err(Error::Input(format!("subset needs at least 2 indices, got {k}")));
    }
    Ok(4.0 * std::f64::consts::SQRT_2 * bound / (k as f64).ln())
}

/// Keeps `j ∈ A` with `|γ_j| ≤ 4√2·M / ln k`.
///
/// When `M ≥ ‖T‖` at least `⌈k/2⌉` indices survive: the RMS of `γ` over `A`
/// is at most `4M / ln k`, and fewer than half the terms can exceed
/// `√2` times the RMS.
pub fn gamma_threshold_subset(op: &SplitOperator, subset: &[usize], norm_bound: f64) -> Result<SelectionReport> {
    check_subset(subset, op.n())?;
    let thr = gamma_threshold(subset, norm_bound)?;
    let kept = sorted(
        subset
            .iter()
            .copied()
            .filter(|&j| op.block(j).gamma.abs() <= thr)
            .collect(),
    );
    let (g, d) = achieved(op, &kept);
    Ok(SelectionReport {
        input_set: sorted(subset.to_vec()),
        stage_sizes: vec![("A'".into(), kept.len())],
        output_set: kept,
        stage_thresholds: vec![("gamma".into(), thr)],
        achieved_max_gamma: g,
        achieved_max_delta_minus_alpha: d,
    })
}

/// Smallest subset size accepted by [`nested_selection`] is `MIN_NESTED + 1`.
pub const MIN_NESTED: usize = 16;

/// Keeps the indices whose deviation `δ_j − α_j − γ_j ln√m` lies within `√2`
/// times its RMS over `set` (`m = |set|`). At least half survive.
fn deviation_stage(op: &SplitOperator, set: &[usize]) -> (Vec<usize>, f64) {
    let log_root = (set.len() as f64).sqrt().ln();
    let dev = |j: usize| {
        let b = op.block(j);
        b.delta - b.alpha - b.gamma * log_root
    };
    let thr = std::f64::consts::SQRT_2 * rms(set.iter().map(|&j| dev(j)));
    let kept = set.iter().copied().filter(|&j| dev(j).abs() <= thr).collect();
    (kept, thr)
}

/// Three-stage nested selection.
///
/// 1. `A′ ⊆ A` by [`gamma_threshold_subset`] with bound `M`.
/// 2. `B ⊆ A′`: deviation `δ − α − γ ln√k′` within `√2` × its RMS on `A′`.
/// 3. `B′ ⊆ B`: the `⌈√k′⌉` indices of smallest `|γ|` (ties by index), then
///    `A″ ⊆ B′` by the same deviation test with `k‴ = |B′|`.
///
/// Each stage keeps at least half its input, so `|A″| ≥ √k/(2√2)`.
pub fn nested_selection(op: &SplitOperator, subset: &[usize], norm_bound: f64) -> Result<SelectionReport> {
    check_subset(subset, op.n())?;
    let k = subset.len();
    if k <= MIN_NESTED {
        return Err(Error::Input(format!(
            "nested selection needs more than {MIN_NESTED} indices, got {k}"
        )));
    }
    let first = gamma_threshold_subset(op, subset, norm_bound)?;
    let a1 = first.output_set;
    let k1 = a1.len();

    let (b, thr2) = deviation_stage(op, &a1);

    let take = ((k1 as f64).sqrt().ceil() as usize).min(b.len());
    let mut by_gamma = b.clone();
    by_gamma.sort_by(|&i, &j| {
        op.block(i)
            .gamma
            .abs()
            .total_cmp(&op.block(j).gamma.abs())
            .then(i.cmp(&j))
    });
    let b1: Vec<usize> = by_gamma.into_iter().take(take).collect();

    let (a2, thr3) = deviation_stage(op, &b1);
    let a2 = sorted(a2);
    let (g, d) = achieved(op, &a2);
    Ok(SelectionReport {
        input_set: sorted(subset.to_vec()),
        stage_thresholds: vec![
            ("gamma".into(), first.stage_thresholds[0].1),
            ("deviation_k1".into(), thr2),
            ("deviation_k3".into(), thr3),
        ],
        stage_sizes: vec![
            ("A'".into(), k1),
            ("B".into(), b.len()),
            ("B'".into(), b1.len()),
            ("A''".into(), a2.len()),
        ],
        output_set: a2,
        achieved_max_gamma: g,
        achieved_max_delta_minus_alpha: d,
    })
}

/// Shape of a rank-one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOneShape {
    /// `(a, b; θa, θb)`.
    Full,
    /// `(0, 0; a, b)`, carried with `θ = 1`.
    LowerRow,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankOneTerm {
    pub a: f64,
    pub b: f64,
    pub theta: f64,
    pub shape: RankOneShape,
}

impl RankOneTerm {
    pub fn full(a: f64, b: f64, theta: f64) -> Self {
        Self {
            a,
            b,
            theta,
            shape: RankOneShape::Full,
        }
    }

    pub fn lower_row(a: f64, b: f64) -> Self {
        Self {
            a,
            b,
            theta: 1.0,
            shape: RankOneShape::LowerRow,
        }
    }

    /// The block `(α, β; γ, δ)` this term represents.
    pub fn block(&self) -> Block {
        match self.shape {
            RankOneShape::Full => Block::new(self.a, self.b, self.theta * self.a, self.theta * self.b),
            RankOneShape::LowerRow => Block::new(0.0, 0.0, self.a, self.b),
        }
    }
}

/// Which of the four alternatives a large-`θ` term satisfies. With
/// `(α, γ, δ)` taken from the term's block:
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOneClass {
    /// `γ > |δ| / (4K)`
    CouplingPositive,
    /// `−γ > |δ| / (4K)`
    CouplingNegative,
    /// `α − δ ≥ |δ| / 2`
    DiagonalDeficit,
    /// `δ − α ≥ |δ| / 2`
    DiagonalExcess,
}

impl RankOneClass {
    pub const ALL: [RankOneClass; 4] = [
        RankOneClass::CouplingPositive,
        RankOneClass::CouplingNegative,
        RankOneClass::DiagonalDeficit,
        RankOneClass::DiagonalExcess,
    ];

    fn classify(term: &RankOneTerm, k: f64) -> Option<Self> {
        let blk = term.block();
        let small = blk.delta.abs() / (4.0 * k);
        let half = 0.5 * blk.delta.abs();
        if blk.gamma > small {
            Some(Self::CouplingPositive)
        } else if -blk.gamma > small {
            Some(Self::CouplingNegative)
        } else if blk.alpha - blk.delta >= half {
            Some(Self::DiagonalDeficit)
        } else if blk.delta - blk.alpha >= half {
            Some(Self::DiagonalExcess)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankOneSelection {
    /// Indices with `|θ_i| > 1/(2K)`.
    pub large: Vec<usize>,
    /// Class of each member of `large`, in the same order.
    pub classes: Vec<RankOneClass>,
    /// Positive-`θb` members of the best single class.
    pub selected: Vec<usize>,
    pub selected_class: RankOneClass,
    pub large_sum: f64,
    pub selected_sum: f64,
}

/// Selection over a decomposition of one block into rank-one pieces.
///
/// Preconditions: `Σ θ_i b_i = 1` (to 1e-9) and `Σ |b_i| ≤ K`. Then the
/// large-`θ` set carries more than 1/2 of `Σ θ_i b_i`, every member falls in
/// one of the four [`RankOneClass`]es (first match in declaration order), and
/// some single class carries more than 1/8.
pub fn rank_one_selection(terms: &[RankOneTerm], k_bound: f64) -> Result<RankOneSelection> {
    if !(k_bound > 0.0 && k_bound.is_finite()) {
        return Err(Error::Input(format!("K must be positive, got {k_bound}")));
    }
    if terms.is_empty() {
        return Err(Error::Input("no rank-one terms".into()));
    }
    for (i, t) in terms.iter().enumerate() {
        if ![t.a, t.b, t.theta].iter().all(|v| v.is_finite()) {
            return Err(Error::Input(format!("term {i} has a non-finite entry")));
        }
        if t.shape == RankOneShape::LowerRow && t.theta != 1.0 {
            return Err(Error::Contract(format!(
                "term {i} has lower-row shape but θ = {} (must be 1)",
                t.theta
            )));
        }
    }
    let total: f64 = terms.iter().map(|t| t.theta * t.b).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Contract(format!("Σ θ_i b_i = {total}, expected 1")));
    }
    let abs_b: f64 = terms.iter().map(|t| t.b.abs()).sum();
    if abs_b > k_bound * (1.0 + 1e-12) {
        return Err(Error::Contract(format!("Σ |b_i| = {abs_b} exceeds K = {k_bound}")));
    }

    let cut = 1.0 / (2.0 * k_bound);
    let large: Vec<usize> = (0..terms.len()).filter(|&i| terms[i].theta.abs() > cut).collect();
    let large_sum: f64 = large.iter().map(|&i| terms[i].theta * terms[i].b).sum();

    let mut classes = Vec::with_capacity(large.len());
    for &i in &large {
        match RankOneClass::classify(&terms[i], k_bound) {
            Some(c) => classes.push(c),
            None => {
                return Err(Error::Contract(format!(
                    "term {i} satisfies none of the four alternatives"
                )))
            }
        }
    }

    let mut best: Option<(RankOneClass, f64, Vec<usize>)> = None;
    for class in RankOneClass::ALL {
        let members: Vec<usize> = large
            .iter()
            .zip(&classes)
            .filter(|(&i, &c)| c == class && terms[i].theta * terms[i].b > 0.0)
            .map(|(&i, _)| i)
            .collect();
        let sum: f64 = members.iter().map(|&i| terms[i].theta * terms[i].b).sum();
        if best.as_ref().is_none_or(|(_, s, _)| sum > *s) {
            best = Some((class, sum, members));
        }
    }
    let (selected_class, selected_sum, selected) = best.expect("four classes");
    Ok(RankOneSelection {
        large,
        classes,
        selected,
        selected_class,
        large_sum,
        selected_sum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::kp_norm;

    fn tv(a: &[f64], b: &[f64]) -> TwistedVector {
        TwistedVector::new(a.to_vec(), b.to_vec()).unwrap()
    }

    #[test]
    fn apply_examples() {
        let x = tv(&[1.0, -2.0], &[0.5, 3.0]);
        assert_eq!(SplitOperator::identity(2).apply(&x).unwrap(), x);
        let t = SplitOperator::new(vec![Block::new(1.0, 2.0, 3.0, 4.0)]).unwrap();
        assert_eq!(t.apply(&tv(&[5.0], &[6.0])).unwrap(), tv(&[17.0], &[39.0]));
        assert!(t.apply(&x).is_err());
    }

    #[test]
    fn unit_vector_images() {
        let t = SplitOperator::new(vec![Block::new(0.3, -1.0, 2.0, 0.25), Block::new(-0.7, 0.1, -0.4, 1.5)]).unwrap();
        for j in 0..2 {
            let b = t.block(j);
            let te = kp_norm(&t.apply(&TwistedVector::e(2, j)).unwrap());
            let tf = kp_norm(&t.apply(&TwistedVector::f(2, j)).unwrap());
            assert!((te - (b.alpha.abs() + b.gamma.abs())).abs() < 1e-12);
            assert!((tf - (b.beta.abs() + b.delta.abs())).abs() < 1e-12);
        }
    }

    #[test]
    fn entry_bound_examples() {
        assert_eq!(SplitOperator::identity(3).entry_lower_bound(), 1.0);
        let t = SplitOperator::new(vec![Block::new(0.0, 0.0, 2.0, 0.0)]).unwrap();
        assert_eq!(t.entry_lower_bound(), 2.0);
        assert_eq!(kp_norm(&t.apply(&TwistedVector::e(1, 0)).unwrap()), 2.0);
    }

    #[test]
    fn block_spectral_norm_matches_svd() {
        let b = Block::new(1.0, 2.0, 3.0, 4.0);
        let m = nalgebra::Matrix2::new(1.0, 2.0, 3.0, 4.0);
        let s: f64 = m.singular_values().max();
        assert!((b.spectral_norm() - s).abs() < 1e-12);
    }

    #[test]
    fn uniform_curve_vector_examples() {
        let x = uniform_curve_vector(&[0, 1, 2, 3], 6).unwrap();
        assert!((x.a()[0] + 2f64.ln() / 2.0).abs() < 1e-15);
        assert!((x.a()[0] + 0.346_574).abs() < 1e-6);
        assert_eq!(x.b()[3], 0.5);
        assert_eq!(x.b()[4], 0.0);
        assert!((kp_norm(&x) - 1.0).abs() < 1e-12);
        let y = uniform_curve_vector(&[0, 1], 2).unwrap();
        assert!((kp_norm(&y) - 1.0).abs() < 1e-12);
        let z = uniform_curve_vector(&[4, 5, 2, 3], 6).unwrap();
        assert!((kp_norm(&z) - kp_norm(&x)).abs() < 1e-15);
        assert!(uniform_curve_vector(&[1], 3).is_err());
        assert!(uniform_curve_vector(&[1, 1], 3).is_err());
        assert!(uniform_curve_vector(&[1, 3], 3).is_err());
    }

    #[test]
    fn chain_identity_operator() {
        let (lhs, rhs) = gamma_rms_chain(&SplitOperator::identity(5), &[0, 2, 4]).unwrap();
        assert!((lhs + 1.0).abs() < 1e-15);
        assert!((rhs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chain_pure_coupling() {
        // γ = c on A, α = β = δ = 0: T x = (0, c·a_A), and the quasi-norm of
        // (0, v) is ‖v‖₂ + ‖F(v)‖₂ with v uniform of norm c·ln√k
        let c = 0.8;
        let n = 6;
        let subset = [0, 1, 3, 5];
        let t = SplitOperator::uniform(n, Block::new(0.0, 0.0, c, 0.0));
        let (lhs, rhs) = gamma_rms_chain(&t, &subset).unwrap();
        let k = 4.0_f64;
        assert!((lhs - c * k.sqrt().ln()).abs() < 1e-14);
        let v = c * k.sqrt().ln();
        let want = v * (1.0 + k.sqrt().ln());
        assert!((rhs - want).abs() < 1e-12, "{rhs} vs {want}");
        assert!(lhs <= rhs);
    }

    #[test]
    fn gamma_threshold_examples() {
        let gammas = [5.0, 1.0, 0.5, 6.0];
        let t = SplitOperator::new(gammas.iter().map(|&g| Block::new(1.0, 0.0, g, 1.0)).collect()).unwrap();
        let rep = gamma_threshold_subset(&t, &[0, 1, 2, 3], 1.0).unwrap();
        assert!((rep.stage_thresholds[0].1 - 4.080_558).abs() < 1e-6);
        assert_eq!(rep.output_set, vec![1, 2]);
        let zero = SplitOperator::identity(4);
        assert_eq!(gamma_threshold_subset(&zero, &[0, 1, 2, 3], 1.0).unwrap().output_set, vec![0, 1, 2, 3]);
        assert!(gamma_threshold_subset(&zero, &[0, 1], 0.0).is_err());
        assert!(gamma_threshold_subset(&zero, &[0, 1], -1.0).is_err());
    }

    #[test]
    fn nested_selection_identity() {
        let n = 40;
        let t = SplitOperator::identity(n);
        let all: Vec<usize> = (0..n).collect();
        let rep = nested_selection(&t, &all, 1.0).unwrap();
        assert_eq!(rep.achieved_max_gamma, 0.0);
        assert_eq!(rep.achieved_max_delta_minus_alpha, 0.0);
        assert_eq!(rep.output_set.len(), 7); // ⌈√40⌉
        assert!(nested_selection(&t, &all[..16], 1.0).is_err());
    }

    #[test]
    fn nested_selection_cannot_raise_maxima() {
        let n = 64;
        let noise = 1e-3;
        let blocks = (0..n)
            .map(|j| Block::new(2.0, 0.0, noise * ((j as f64) * 0.7).sin(), 2.0))
            .collect();
        let t = SplitOperator::new(blocks).unwrap();
        let all: Vec<usize> = (0..n).collect();
        let rep = nested_selection(&t, &all, 10.0).unwrap();
        assert_eq!(rep.achieved_max_delta_minus_alpha, 0.0);
        assert!(rep.achieved_max_gamma <= noise);
        assert!(rep.output_set.iter().all(|j| rep.input_set.contains(j)));
        assert!(rep.output_set.len() as f64 >= (n as f64).sqrt() / (2.0 * 2f64.sqrt()) - 1.0);
    }

    #[test]
    fn rank_one_single_term() {
        let sel = rank_one_selection(&[RankOneTerm::full(0.0, 1.0, 1.0)], 1.0).unwrap();
        assert_eq!(sel.large, vec![0]);
        assert_eq!(sel.classes, vec![RankOneClass::DiagonalExcess]);
        assert_eq!(sel.selected, vec![0]);
        assert_eq!(sel.selected_sum, 1.0);
    }

    #[test]
    fn rank_one_two_terms() {
        let terms = [RankOneTerm::full(0.0, 0.6, 1.0), RankOneTerm::full(0.0, 0.4, 1.0)];
        let sel = rank_one_selection(&terms, 1.0).unwrap();
        assert_eq!(sel.large, vec![0, 1]);
        assert_eq!(sel.classes, vec![RankOneClass::DiagonalExcess; 2]);
        assert!((sel.selected_sum - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rank_one_threshold_excludes_small_theta() {
        let terms = [RankOneTerm::full(0.0, 0.9, 1.0), RankOneTerm::full(0.0, 1.0, 0.1)];
        let sel = rank_one_selection(&terms, 1.0).unwrap_err();
        // Σ|b| = 1.9 > K = 1, so use K = 2 for the admissible version
        assert!(matches!(sel, Error::Contract(_)));
        let sel = rank_one_selection(&terms, 2.0).unwrap();
        // threshold 1/(2K) = 0.25 still excludes θ = 0.1
        assert_eq!(sel.large, vec![0]);
        assert!((sel.large_sum - 0.9).abs() < 1e-15);
    }

    #[test]
    fn rank_one_precondition_errors() {
        let bad_sum = [RankOneTerm::full(0.0, 0.5, 1.0)];
        let e = rank_one_selection(&bad_sum, 1.0).unwrap_err();
        assert!(e.to_string().contains("Σ θ_i b_i"));
        let bad_shape = [RankOneTerm {
            theta: 2.0,
            ..RankOneTerm::lower_row(0.0, 0.5)
        }];
        assert!(rank_one_selection(&bad_shape, 1.0).is_err());
        assert!(rank_one_selection(&[RankOneTerm::lower_row(0.3, 1.0)], 0.0).is_err());
    }

    #[test]
    fn lower_row_terms_use_zero_alpha() {
        let t = RankOneTerm::lower_row(0.0, 1.0);
        assert_eq!(t.block(), Block::new(0.0, 0.0, 0.0, 1.0));
        let sel = rank_one_selection(&[t], 1.0).unwrap();
        assert_eq!(sel.classes, vec![RankOneClass::DiagonalExcess]);
    }

    #[test]
    fn serde_form() {
        let t: SplitOperator = serde_json::from_str(r#"{"blocks": [[1,2,3,4],[0.5,0,0,1]]}"#).unwrap();
        assert_eq!(t.block(0), Block::new(1.0, 2.0, 3.0, 4.0));
        let back = serde_json::to_string(&t).unwrap();
        assert_eq!(back, r#"{"blocks":[[1.0,2.0,3.0,4.0],[0.5,0.0,0.0,1.0]]}"#);
        assert!(serde_json::from_str::<SplitOperator>(r#"{"blocks": []}"#).is_err());
    }
}
