//! Haar averages of operator norms over compact subgroups of O(2n), the
//! commutant test for richness, and the trace-duality sandwich for the
//! operator/nuclear norm pair.

use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{DenseOperator, LinearMap, SignedPermutation};
use crate::opnorm::{opnorm_lower, orthogonal_envelope};
use crate::seeding;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupKind {
    FullOrthogonal,
    SignedPermutations,
    BlockSignedPermutations,
}

impl GroupKind {
    pub fn tag(&self) -> &'static str {
        match self {
            GroupKind::FullOrthogonal => "full_orthogonal",
            GroupKind::SignedPermutations => "signed_permutations",
            GroupKind::BlockSignedPermutations => "block_signed_permutations",
        }
    }
}

impl std::str::FromStr for GroupKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "fullorthogonal" | "orthogonal" | "o" => Ok(GroupKind::FullOrthogonal),
            "signedpermutations" | "signed" => Ok(GroupKind::SignedPermutations),
            "blocksignedpermutations" | "block" => Ok(GroupKind::BlockSignedPermutations),
            _ => Err(Error::Input(format!("unknown group {s:?}"))),
        }
    }
}

/// A compact subgroup of the orthogonal group on ℝ^dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupSpec {
    pub kind: GroupKind,
    pub dimension: usize,
}

impl GroupSpec {
    pub fn new(kind: GroupKind, dimension: usize) -> Result<Self> {
        if dimension < 2 || !dimension.is_multiple_of(2) {
            return Err(Error::Input(format!("group dimension must be even and >= 2, got {dimension}")));
        }
        Ok(Self { kind, dimension })
    }

    pub fn n(&self) -> usize {
        self.dimension / 2
    }
}

/// A group element in the cheapest exact representation.
#[derive(Debug, Clone, PartialEq)]
pub enum GroupElement {
    Dense(DenseOperator),
    Monomial(SignedPermutation),
}

impl GroupElement {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        match self {
            GroupElement::Dense(m) => m.matrix().clone(),
            GroupElement::Monomial(p) => p.to_matrix(),
        }
    }

    pub fn as_map(&self) -> &dyn LinearMap {
        match self {
            GroupElement::Dense(m) => m,
            GroupElement::Monomial(p) => p,
        }
    }
}

/// Haar-distributed orthogonal matrix: `Q·diag(sign R_ii)` from the QR
/// factorization of a standard Gaussian matrix.
pub fn haar_orthogonal<R: Rng>(d: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

fn random_sign<R: Rng>(rng: &mut R) -> f64 {
    if rng.random::<bool>() {
        1.0
    } else {
        -1.0
    }
}

pub fn sample_element<R: Rng>(spec: &GroupSpec, rng: &mut R) -> GroupElement {
    let d = spec.dimension;
    match spec.kind {
        GroupKind::FullOrthogonal => {
            GroupElement::Dense(DenseOperator::new(haar_orthogonal(d, rng)).expect("orthogonal"))
        }
        GroupKind::SignedPermutations => {
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(rng);
            let signs = (0..d).map(|_| random_sign(rng)).collect();
            GroupElement::Monomial(SignedPermutation::new(perm, signs).expect("valid"))
        }
        GroupKind::BlockSignedPermutations => {
            let n = spec.n();
            let mut blocks: Vec<usize> = (0..n).collect();
            blocks.shuffle(rng);
            let block_signs: Vec<f64> = (0..n).map(|_| random_sign(rng)).collect();
            let perm = (0..d).map(|i| if i < n { blocks[i] } else { n + blocks[i - n] }).collect();
            let signs = (0..d).map(|i| block_signs[i % n]).collect();
            GroupElement::Monomial(SignedPermutation::new(perm, signs).expect("valid"))
        }
    }
}

/// One Haar sample as a dense matrix.
pub fn sample_group(spec: &GroupSpec, seed: u64) -> DMatrix<f64> {
    sample_element(spec, &mut seeding::rng(seed)).to_matrix()
}

/// Generators of the finite groups: a transposition, a full cycle and one
/// sign flip (per coordinate or per block). Empty for the orthogonal group.
pub fn finite_generators(spec: &GroupSpec) -> Vec<SignedPermutation> {
    let d = spec.dimension;
    let n = spec.n();
    let monomial = |perm: Vec<usize>, signs: Vec<f64>| SignedPermutation::new(perm, signs).expect("valid");
    match spec.kind {
        GroupKind::FullOrthogonal => Vec::new(),
        GroupKind::SignedPermutations => {
            let mut swap: Vec<usize> = (0..d).collect();
            swap.swap(0, 1);
            let cycle = (0..d).map(|i| (i + 1) % d).collect();
            let mut flip = vec![1.0; d];
            flip[0] = -1.0;
            vec![
                monomial(swap, vec![1.0; d]),
                monomial(cycle, vec![1.0; d]),
                monomial((0..d).collect(), flip),
            ]
        }
        GroupKind::BlockSignedPermutations => {
            let lift = |p: &dyn Fn(usize) -> usize| -> Vec<usize> {
                (0..d).map(|i| if i < n { p(i) } else { n + p(i - n) }).collect()
            };
            let mut flip = vec![1.0; d];
            flip[0] = -1.0;
            flip[n] = -1.0;
            let mut gens = vec![monomial((0..d).collect(), flip)];
            if n >= 2 {
                let swap = |i: usize| match i {
                    0 => 1,
                    1 => 0,
                    _ => i,
                };
                gens.push(monomial(lift(&swap), vec![1.0; d]));
                gens.push(monomial(lift(&|i| (i + 1) % n), vec![1.0; d]));
            }
            gens
        }
    }
}

/// How a commutant dimension was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RichnessMethod {
    /// SVD null space of the stacked commutation constraints.
    NullSpace,
    /// Exact orbit count of index pairs under the monomial generators.
    OrbitCount,
    /// The group contains the signed permutations, whose commutant is scalar.
    SubgroupCertificate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Richness {
    pub commutant_dim: usize,
    pub rich: bool,
    pub method: RichnessMethod,
}

impl Richness {
    fn from_dim(commutant_dim: usize, method: RichnessMethod) -> Self {
        Self {
            commutant_dim,
            rich: commutant_dim == 1,
            method,
        }
    }
}

/// Largest dimension for which the null space is computed by SVD.
pub const NULL_SPACE_MAX_DIM: usize = 16;
pub const MAX_RICHNESS_SAMPLES: usize = 60;

/// Dimension of `{X : X g = g X for all g}` by SVD of the stacked
/// `(gᵀ ⊗ I − I ⊗ g) vec X = 0`; singular values `≤ tol` count as null.
pub fn commutant_dim_svd(generators: &[DMatrix<f64>], tol: f64) -> usize {
    let d = generators[0].nrows();
    let dd = d * d;
    let mut a = DMatrix::<f64>::zeros(generators.len() * dd, dd);
    for (t, g) in generators.iter().enumerate() {
        let off = t * dd;
        // vec is column-major: vec(X)[i + d·j] = X_ij
        for j in 0..d {
            for i in 0..d {
                let row = off + i + d * j;
                // (X g)_ij = Σ_k X_ik g_kj
                for k in 0..d {
                    a[(row, i + d * k)] += g[(k, j)];
                }
                // (g X)_ij = Σ_k g_ik X_kj
                for k in 0..d {
                    a[(row, k + d * j)] -= g[(i, k)];
                }
            }
        }
    }
    let sv = a.singular_values();
    sv.iter().filter(|&&s| s <= tol).count()
}

/// Union-find over index pairs with a sign bit: `parity[x]` is the sign
/// relating `X_x` to the value at its root.
struct ParityUnionFind {
    parent: Vec<usize>,
    parity: Vec<bool>,
    conflict: Vec<bool>,
}

impl ParityUnionFind {
    fn new(size: usize) -> Self {
        Self {
            parent: (0..size).collect(),
            parity: vec![false; size],
            conflict: vec![false; size],
        }
    }

    fn find(&mut self, x: usize) -> (usize, bool) {
        let mut path = Vec::new();
        let mut cur = x;
        while self.parent[cur] != cur {
            path.push(cur);
            cur = self.parent[cur];
        }
        let root = cur;
        // compress from the top down so each parity is relative to the root
        let mut acc = false;
        for &node in path.iter().rev() {
            acc ^= self.parity[node];
            self.parity[node] = acc;
            self.parent[node] = root;
        }
        (root, if path.is_empty() { false } else { self.parity[x] })
    }

    /// Records `X_x = (−1)^odd · X_y`.
    fn union(&mut self, x: usize, y: usize, odd: bool) {
        let (rx, px) = self.find(x);
        let (ry, py) = self.find(y);
        if rx == ry {
            if px ^ py != odd {
                self.conflict[rx] = true;
            }
            return;
        }
        self.parent[rx] = ry;
        self.parity[rx] = px ^ py ^ odd;
        let c = self.conflict[rx] || self.conflict[ry];
        self.conflict[ry] = c;
    }
}

/// Exact commutant dimension for a group generated by signed permutations.
///
/// For `g e_i = s_i e_{p(i)}`, `g X gᵀ = X` reads
/// `X_{p(i),p(j)} = s_i s_j X_{ij}`. The commutant is spanned by one matrix
/// per orbit of index pairs whose sign constraints are consistent.
pub fn commutant_dim_orbits(generators: &[SignedPermutation]) -> usize {
    let d = generators[0].perm().len();
    let mut uf = ParityUnionFind::new(d * d);
    for g in generators {
        let (p, s) = (g.perm(), g.signs());
        for i in 0..d {
            for j in 0..d {
                let odd = s[i] * s[j] < 0.0;
                uf.union(i * d + j, p[i] * d + p[j], odd);
            }
        }
    }
    (0..d * d)
        .filter(|&x| uf.parent[x] == x && !uf.conflict[x])
        .count()
}

/// Commutant dimension of the group and whether it is 1.
///
/// Finite groups use their exact generators: via SVD at the given `tol` up
/// to dimension [`NULL_SPACE_MAX_DIM`], by orbit counting above. The
/// orthogonal group uses `min(samples, 60)` Haar samples up to that
/// dimension and the signed-permutation subgroup above it.
pub fn is_rich(spec: &GroupSpec, samples: usize, tol: f64, seed: u64) -> Result<Richness> {
    let d = spec.dimension;
    if samples < d {
        return Err(Error::Input(format!("richness test needs at least {d} samples, got {samples}")));
    }
    if !(tol > 0.0) {
        return Err(Error::Input(format!("tolerance must be positive, got {tol}")));
    }
    let small = d <= NULL_SPACE_MAX_DIM;
    match spec.kind {
        GroupKind::FullOrthogonal if small => {
            let mut rng = seeding::rng(seeding::derive_seed(seed, "richness", d as u64));
            let gens: Vec<DMatrix<f64>> = (0..samples.min(MAX_RICHNESS_SAMPLES))
                .map(|_| haar_orthogonal(d, &mut rng))
                .collect();
            Ok(Richness::from_dim(commutant_dim_svd(&gens, tol), RichnessMethod::NullSpace))
        }
        GroupKind::FullOrthogonal => {
            let sub = GroupSpec::new(GroupKind::SignedPermutations, d)?;
            let dim = commutant_dim_orbits(&finite_generators(&sub));
            // scalars always commute, so a scalar commutant of the subgroup
            // pins the commutant of the whole group
            Ok(Richness::from_dim(dim, RichnessMethod::SubgroupCertificate))
        }
        _ => {
            let gens = finite_generators(spec);
            if small {
                let mats: Vec<DMatrix<f64>> = gens.iter().map(SignedPermutation::to_matrix).collect();
                Ok(Richness::from_dim(commutant_dim_svd(&mats, tol), RichnessMethod::NullSpace))
            } else {
                Ok(Richness::from_dim(commutant_dim_orbits(&gens), RichnessMethod::OrbitCount))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryEstimate {
    pub group: GroupKind,
    pub n: usize,
    pub mean_norm: f64,
    pub std_error: f64,
    /// Largest per-sample lower bound.
    pub max_norm: f64,
    pub samples: usize,
    pub restarts: u32,
    pub seed: u64,
    pub per_sample_method: String,
    pub upper_envelope: f64,
    pub rich: bool,
    pub commutant_dim: usize,
}

/// Monte-Carlo estimate of `∫_G ‖g‖ dμ(g)` on the twisted sum.
///
/// Each sample's norm is a witnessed lower bound from
/// [`opnorm_lower`], so the mean is biased low. Sample `s` uses the seed
/// derived from `(seed, "asym", s)`. `rich` is false for groups with a
/// non-scalar commutant, in which case the mean says nothing about symmetry.
pub fn asym_mc(spec: &GroupSpec, n: usize, samples: usize, restarts: u32, seed: u64) -> Result<AsymmetryEstimate> {
    if spec.dimension != 2 * n {
        return Err(Error::DimensionMismatch {
            expected: 2 * n,
            got: spec.dimension,
        });
    }
    if samples == 0 {
        return Err(Error::Input("asym_mc needs samples >= 1".into()));
    }
    let norms: Vec<f64> = (0..samples as u64)
        .into_par_iter()
        .map(|s| {
            let sample_seed = seeding::derive_seed(seed, "asym", s);
            let mut rng = seeding::rng(sample_seed);
            let g = sample_element(spec, &mut rng);
            opnorm_lower(g.as_map(), restarts, sample_seed).value
        })
        .collect();
    let m = samples as f64;
    let mean = norms.iter().sum::<f64>() / m;
    let var = if samples > 1 {
        norms.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
    } else {
        0.0
    };
    let richness = is_rich(spec, spec.dimension.max(50), 1e-8, seed)?;
    Ok(AsymmetryEstimate {
        group: spec.kind,
        n,
        mean_norm: mean,
        std_error: (var / m).sqrt(),
        max_norm: norms.iter().copied().fold(0.0, f64::max),
        samples,
        restarts,
        seed,
        per_sample_method: "multistart_projected_ascent".into(),
        upper_envelope: orthogonal_envelope(n),
        rich: richness.rich,
        commutant_dim: richness.commutant_dim,
    })
}

/// Outcome of the trace-duality sandwich for one dimension `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub k: usize,
    pub trials: usize,
    pub skipped_singular: usize,
    pub mc_samples: usize,
    pub left_failures: usize,
    pub right_failures: usize,
    /// Smallest `‖S‖·ν(S⁻¹)/k − 1` seen; nonnegative when LEFT holds.
    pub min_left_slack: f64,
    /// Smallest `(k·mean − ‖S‖·ν(S⁻¹)) / (k·SE)` seen, in standard errors.
    pub min_right_margin: f64,
    pub first_counterexample: Option<String>,
}

fn spectral(m: &DMatrix<f64>) -> f64 {
    m.singular_values().iter().copied().fold(0.0, f64::max)
}

/// Trace-duality sandwich for the operator norm on ℓ₂ᵏ, whose conjugate
/// ideal norm is the nuclear norm `ν`.
///
/// For each Gaussian `S`:
/// * LEFT: `k ≤ ‖S‖·ν(S⁻¹)`, from singular values, to 1e-8 relative.
/// * RIGHT (when `mc_samples > 0`): `k · E_g ‖S⁻¹ g S‖ ≥ ‖S‖·ν(S⁻¹)` with
///   the expectation over Haar `O(k)` estimated from `mc_samples` draws,
///   allowed to fall short by two standard errors of the left side.
///
/// Matrices with `σ_min ≤ 1e-12·σ_max` are skipped and logged.
pub fn trace_duality_sandwich(k: usize, trials: usize, mc_samples: usize, seed: u64) -> Result<SandwichReport> {
    if k == 0 {
        return Err(Error::Input("sandwich needs k >= 1".into()));
    }
    struct Trial {
        skipped: bool,
        left_slack: f64,
        right_margin: f64,
        note: Option<String>,
    }
    let kf = k as f64;
    let results: Vec<Trial> = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = seeding::rng(seeding::derive_seed(seed, "sandwich", t));
            let s = DMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
            let sv = s.clone().singular_values();
            let smax = sv.iter().copied().fold(0.0, f64::max);
            let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
            if !(smin > 1e-12 * smax) {
                log::warn!("sandwich trial {t}: singular S (σ_min = {smin:e}), skipped");
                return Trial {
                    skipped: true,
                    left_slack: f64::INFINITY,
                    right_margin: f64::INFINITY,
                    note: None,
                };
            }
            let product = smax * sv.iter().map(|v| 1.0 / v).sum::<f64>();
            let left_slack = product / kf - 1.0;
            let mut note = None;
            if left_slack < -1e-8 {
                note = Some(format!("trial {t}: LEFT {k} > ‖S‖·ν(S⁻¹) = {product}"));
            }
            let mut right_margin = f64::INFINITY;
            if mc_samples > 0 {
                let s_inv = s.clone().try_inverse().expect("nonsingular");
                let vals: Vec<f64> = (0..mc_samples)
                    .map(|_| spectral(&(&s_inv * haar_orthogonal(k, &mut rng) * &s)))
                    .collect();
                let m = mc_samples as f64;
                let mean = vals.iter().sum::<f64>() / m;
                let var = if mc_samples > 1 {
                    vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)
                } else {
                    0.0
                };
                let se = (var / m).sqrt();
                let gap = kf * mean - product;
                right_margin = if se > 0.0 { gap / (kf * se) } else if gap >= -1e-12 { f64::INFINITY } else { f64::NEG_INFINITY };
                if gap < -2.0 * kf * se - 1e-12 && note.is_none() {
                    note = Some(format!(
                        "trial {t}: RIGHT k·mean = {} < {product} − 2·k·SE (SE = {se})",
                        kf * mean
                    ));
                }
            }
            Trial {
                skipped: false,
                left_slack,
                right_margin,
                note,
            }
        })
        .collect();
    let used: Vec<&Trial> = results.iter().filter(|t| !t.skipped).collect();
    Ok(SandwichReport {
        k,
        trials,
        skipped_singular: trials - used.len(),
        mc_samples,
        left_failures: used.iter().filter(|t| t.left_slack < -1e-8).count(),
        right_failures: used.iter().filter(|t| t.right_margin < -2.0).count(),
        min_left_slack: used.iter().map(|t| t.left_slack).fold(f64::INFINITY, f64::min),
        min_right_margin: used.iter().map(|t| t.right_margin).fold(f64::INFINITY, f64::min),
        first_counterexample: results.into_iter().find_map(|t| t.note),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orth_defect(m: &DMatrix<f64>) -> f64 {
        let e = m.transpose() * m - DMatrix::identity(m.nrows(), m.ncols());
        e.abs().max()
    }

    #[test]
    fn samples_are_orthogonal() {
        for kind in [GroupKind::FullOrthogonal, GroupKind::SignedPermutations, GroupKind::BlockSignedPermutations] {
            let spec = GroupSpec::new(kind, 8).unwrap();
            for s in 0..20 {
                assert!(orth_defect(&sample_group(&spec, s)) <= 1e-12, "{kind:?}");
            }
        }
        assert!(GroupSpec::new(GroupKind::FullOrthogonal, 3).is_err());
    }

    #[test]
    fn signed_permutations_in_dimension_two_are_uniform() {
        let spec = GroupSpec::new(GroupKind::SignedPermutations, 2).unwrap();
        let mut rng = seeding::rng(11);
        let mut counts = std::collections::HashMap::new();
        let draws = 10_000;
        for _ in 0..draws {
            let m = sample_element(&spec, &mut rng).to_matrix();
            let key: Vec<i8> = m.iter().map(|v| *v as i8).collect();
            *counts.entry(key).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 8);
        let p = 1.0 / 8.0;
        let sigma = (draws as f64 * p * (1.0 - p)).sqrt();
        for c in counts.values() {
            assert!((*c as f64 - draws as f64 * p).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn block_group_preserves_the_quasi_norm() {
        let spec = GroupSpec::new(GroupKind::BlockSignedPermutations, 10).unwrap();
        let mut rng = seeding::rng(3);
        for _ in 0..200 {
            let g = sample_element(&spec, &mut rng);
            let x = crate::synth::random_vector(5, &mut rng).to_flat();
            let mut y = vec![0.0; 10];
            g.as_map().apply_flat(&x, &mut y);
            let (nx, ny) = (crate::space::kp_norm_flat(&x), crate::space::kp_norm_flat(&y));
            assert!((nx - ny).abs() <= 1e-12 * nx.max(1.0));
        }
    }

    #[test]
    fn commutant_dimensions() {
        for tol in [1e-10, 1e-8, 1e-6] {
            let sp = GroupSpec::new(GroupKind::SignedPermutations, 8).unwrap();
            assert_eq!(is_rich(&sp, 8, tol, 0).unwrap().commutant_dim, 1);
            let bs = GroupSpec::new(GroupKind::BlockSignedPermutations, 8).unwrap();
            assert_eq!(is_rich(&bs, 8, tol, 0).unwrap().commutant_dim, 4);
            let fo = GroupSpec::new(GroupKind::FullOrthogonal, 6).unwrap();
            let r = is_rich(&fo, 50, tol, 0).unwrap();
            assert_eq!((r.commutant_dim, r.rich), (1, true));
        }
    }

    #[test]
    fn orbit_count_agrees_with_null_space() {
        for d in [2, 4, 6, 8, 10] {
            for kind in [GroupKind::SignedPermutations, GroupKind::BlockSignedPermutations] {
                let spec = GroupSpec::new(kind, d).unwrap();
                let gens = finite_generators(&spec);
                let mats: Vec<DMatrix<f64>> = gens.iter().map(SignedPermutation::to_matrix).collect();
                assert_eq!(commutant_dim_orbits(&gens), commutant_dim_svd(&mats, 1e-8), "{kind:?} d={d}");
            }
        }
        let big = GroupSpec::new(GroupKind::BlockSignedPermutations, 64).unwrap();
        let r = is_rich(&big, 64, 1e-8, 0).unwrap();
        assert_eq!((r.commutant_dim, r.method), (4, RichnessMethod::OrbitCount));
    }

    #[test]
    fn block_group_mean_is_one() {
        let spec = GroupSpec::new(GroupKind::BlockSignedPermutations, 16).unwrap();
        let est = asym_mc(&spec, 8, 10, 3, 5).unwrap();
        assert!((est.mean_norm - 1.0).abs() <= 1e-12);
        assert!(!est.rich);
    }

    #[test]
    fn sandwich_examples() {
        let r = trace_duality_sandwich(1, 10, 0, 0).unwrap();
        assert_eq!(r.left_failures, 0);
        assert!(r.min_left_slack.abs() < 1e-12);
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        let sv = s.singular_values();
        let product: f64 = sv.max() * sv.iter().map(|v| 1.0 / v).sum::<f64>();
        assert!((product - 3.0).abs() < 1e-12);
        let r = trace_duality_sandwich(4, 5, 400, 1).unwrap();
        assert_eq!(r.left_failures, 0);
        assert_eq!(r.right_failures, 0, "{r:?}");
    }
}
