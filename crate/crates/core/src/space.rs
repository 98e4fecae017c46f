//! The twisted-sum quasi-norm on ℝⁿ × ℝⁿ and the quasi-linear map behind it.
//!
//! A point is a pair `(a, b)`. Its quasi-norm is
//!
//! ```text
//! ‖(a, b)‖ = ‖b‖₂ + ‖a − F(b)‖₂,    F(b)_j = b_j · ln(|b_j| / ‖b‖₂)
//! ```
//!
//! with `0 · ln 0 = 0` and `F(0) = 0`. Logarithms are natural.
//!
//! Internally the optimizers work on flat slices laid out as
//! `[a_1, …, a_n, b_1, …, b_n]`; the `*_flat` functions take that layout and
//! skip validation.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::seeding;

/// A point `(a, b)` of the twisted sum. Both halves have length `n ≥ 1` and
/// every entry is finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTwistedVector")]
pub struct TwistedVector {
    a: Vec<f64>,
    b: Vec<f64>,
}

#[derive(Deserialize)]
struct RawTwistedVector {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TryFrom<RawTwistedVector> for TwistedVector {
    type Error = Error;

    fn try_from(raw: RawTwistedVector) -> Result<Self> {
        TwistedVector::new(raw.a, raw.b)
    }
}

impl TwistedVector {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::Input("twisted vector needs n >= 1".into()));
        }
        ensure_len(a.len(), b.len())?;
        ensure_finite("a", &a)?;
        ensure_finite("b", &b)?;
        Ok(Self { a, b })
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n >= 1, "twisted vector needs n >= 1");
        Self {
            a: vec![0.0; n],
            b: vec![0.0; n],
        }
    }

    /// Unit vector in the `a`-slot of block `j`.
    pub fn e(n: usize, j: usize) -> Self {
        let mut x = Self::zeros(n);
        x.a[j] = 1.0;
        x
    }

    /// Unit vector in the `b`-slot of block `j`.
    pub fn f(n: usize, j: usize) -> Self {
        let mut x = Self::zeros(n);
        x.b[j] = 1.0;
        x
    }

    /// The identity-curve point `(F(u), u)`, whose quasi-norm is `‖u‖₂`.
    pub fn on_identity_curve(u: &[f64]) -> Result<Self> {
        Self::new(f_map(u)?, u.to_vec())
    }

    /// Splits a flat `[a; b]` slice of even length.
    pub fn from_flat(x: &[f64]) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::Input(format!(
                "flat twisted vector must have even length, got {}",
                x.len()
            )));
        }
        let n = x.len() / 2;
        Self::new(x[..n].to_vec(), x[n..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(2 * self.dim());
        v.extend_from_slice(&self.a);
        v.extend_from_slice(&self.b);
        v
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn scaled(&self, lambda: f64) -> Self {
        Self {
            a: self.a.iter().map(|v| lambda * v).collect(),
            b: self.b.iter().map(|v| lambda * v).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        ensure_len(self.dim(), other.dim())?;
        Ok(Self {
            a: self.a.iter().zip(&other.a).map(|(x, y)| x + y).collect(),
            b: self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect(),
        })
    }

    /// Euclidean norm of the flat vector, i.e. the image under the identity
    /// into ℓ₂²ⁿ.
    pub fn l2_norm(&self) -> f64 {
        (sum_sq(&self.a) + sum_sq(&self.b)).sqrt()
    }

    pub fn linf_norm(&self) -> f64 {
        self.a
            .iter()
            .chain(&self.b)
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub(crate) fn sum_sq(xs: &[f64]) -> f64 {
    xs.iter().map(|v| v * v).sum()
}

pub(crate) fn norm2(xs: &[f64]) -> f64 {
    sum_sq(xs).sqrt()
}

/// The term `t · ln(|t| / r)` with `0 · ln 0 = 0`.
#[inline]
fn twist_term(t: f64, r: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t * (t.abs() / r).ln()
    }
}

/// `F(b)` written into `out`. No validation.
pub fn f_map_into(b: &[f64], out: &mut [f64]) {
    debug_assert_eq!(b.len(), out.len());
    let r = norm2(b);
    if r == 0.0 {
        out.iter_mut().for_each(|v| *v = 0.0);
        return;
    }
    for (o, &t) in out.iter_mut().zip(b) {
        *o = twist_term(t, r);
    }
}

/// The quasi-linear map `F(b)_j = b_j ln(|b_j| / ‖b‖₂)`.
pub fn f_map(b: &[f64]) -> Result<Vec<f64>> {
    ensure_finite("b", b)?;
    let mut out = vec![0.0; b.len()];
    f_map_into(b, &mut out);
    Ok(out)
}

/// Quasi-norm of the pair `(a, b)` given as separate slices. No validation.
pub fn kp_norm_parts(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let r = norm2(b);
    if r == 0.0 {
        return norm2(a);
    }
    let resid: f64 = a
        .iter()
        .zip(b)
        .map(|(&aj, &bj)| {
            let d = aj - twist_term(bj, r);
            d * d
        })
        .sum();
    r + resid.sqrt()
}

/// Quasi-norm of a flat `[a; b]` slice.
pub fn kp_norm_flat(x: &[f64]) -> f64 {
    let n = x.len() / 2;
    kp_norm_parts(&x[..n], &x[n..])
}

/// Quasi-norm `‖b‖₂ + ‖a − F(b)‖₂`.
pub fn kp_norm(x: &TwistedVector) -> f64 {
    kp_norm_parts(&x.a, &x.b)
}

/// Quasi-norm of a flat vector together with its gradient.
///
/// Where the quasi-norm is not differentiable (`b_j = 0`, `b = 0`, or
/// `a = F(b)`) the offending terms are set to zero, which gives a one-sided
/// derivative along the coordinates that remain smooth.
pub fn kp_norm_with_gradient(x: &[f64], grad: &mut [f64]) -> f64 {
    let n = x.len() / 2;
    let (a, b) = x.split_at(n);
    let (ga, gb) = grad.split_at_mut(n);
    let rb = norm2(b);
    if rb == 0.0 {
        let ra = norm2(a);
        for (g, &v) in ga.iter_mut().zip(a) {
            *g = if ra > 0.0 { v / ra } else { 0.0 };
        }
        gb.iter_mut().for_each(|g| *g = 0.0);
        return ra;
    }
    // residual r = a − F(b), stashed in ga for now
    let mut rr = 0.0;
    for j in 0..n {
        let r = a[j] - twist_term(b[j], rb);
        ga[j] = r;
        rr += r * r;
    }
    let rn = rr.sqrt();
    let b_dot_r: f64 = b.iter().zip(ga.iter()).map(|(p, q)| p * q).sum();
    for j in 0..n {
        let mut g = b[j] / rb;
        if rn > 0.0 {
            let log_term = if b[j] == 0.0 {
                0.0
            } else {
                ((b[j].abs() / rb).ln() + 1.0) * ga[j]
            };
            let jt_r = log_term - b[j] * b_dot_r / (rb * rb);
            g -= jt_r / rn;
        }
        gb[j] = g;
    }
    if rn > 0.0 {
        ga.iter_mut().for_each(|g| *g /= rn);
    } else {
        ga.iter_mut().for_each(|g| *g = 0.0);
    }
    rb + rn
}

/// `‖F(a+b) − F(a) − F(b)‖₂ / (‖a‖₂ + ‖b‖₂)`.
pub fn quasilinearity_defect(a: &[f64], b: &[f64]) -> Result<f64> {
    ensure_len(a.len(), b.len())?;
    ensure_finite("a", a)?;
    ensure_finite("b", b)?;
    let denom = norm2(a) + norm2(b);
    if denom == 0.0 {
        return Err(Error::UndefinedRatio(
            "quasi-linearity defect of two zero vectors".into(),
        ));
    }
    Ok(defect_unchecked(a, b) / denom)
}

fn defect_unchecked(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len();
    let sum: Vec<f64> = a.iter().zip(b).map(|(x, y)| x + y).collect();
    let mut fs = vec![0.0; n];
    let mut fa = vec![0.0; n];
    let mut fb = vec![0.0; n];
    f_map_into(&sum, &mut fs);
    f_map_into(a, &mut fa);
    f_map_into(b, &mut fb);
    let d: f64 = (0..n)
        .map(|j| {
            let v = fs[j] - fa[j] - fb[j];
            v * v
        })
        .sum();
    d.sqrt()
}

/// Applies block sign flips and a block permutation.
///
/// Block `j` is multiplied by `signs[j] ∈ {−1, +1}` in both slots and moved
/// to position `perm[j]`. The quasi-norm is invariant under this action.
pub fn block_symmetry_apply(x: &TwistedVector, signs: &[i8], perm: &[usize]) -> Result<TwistedVector> {
    let n = x.dim();
    ensure_len(n, signs.len())?;
    ensure_len(n, perm.len())?;
    if let Some(s) = signs.iter().find(|s| **s != 1 && **s != -1) {
        return Err(Error::Input(format!("block sign must be ±1, got {s}")));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::Input(format!("{perm:?} is not a permutation of 0..{n}")));
        }
        seen[p] = true;
    }
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for j in 0..n {
        let s = f64::from(signs[j]);
        a[perm[j]] = s * x.a[j];
        b[perm[j]] = s * x.b[j];
    }
    Ok(TwistedVector { a, b })
}

/// Empirical quasi-linearity constants measured on random pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuasiConstants {
    pub n: usize,
    pub pairs: usize,
    pub seed: u64,
    /// Largest observed `quasilinearity_defect`.
    pub defect_sup: f64,
    /// Largest observed `‖x+y‖ / (‖x‖ + ‖y‖)`.
    pub triangle_sup: f64,
}

/// Random vector with a random support and Gaussian entries on it; the
/// sparse draws reach much larger defects than dense Gaussian ones.
pub(crate) fn random_sparse_gaussian<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let keep: f64 = rng.random_range(0.05..=1.0);
    let mut v: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < keep {
                rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            }
        })
        .collect();
    if v.iter().all(|t| *t == 0.0) {
        let j = rng.random_range(0..n);
        v[j] = 1.0;
    }
    let scale = 10f64.powf(rng.random_range(-2.0..2.0));
    v.iter_mut().for_each(|t| *t *= scale);
    v
}

impl QuasiConstants {
    /// Samples `pairs` random pairs in dimension `n` and records the sup of the
    /// defect of `F` and of the quasi-triangle ratio. Both are lower estimates
    /// of the true constants.
    pub fn measure(n: usize, pairs: usize, seed: u64) -> Result<Self> {
        if n == 0 || pairs == 0 {
            return Err(Error::Input("need n >= 1 and pairs >= 1".into()));
        }
        let mut rng = seeding::rng(seed);
        let mut defect_sup = 0.0_f64;
        let mut triangle_sup = 0.0_f64;
        for _ in 0..pairs {
            let u = random_sparse_gaussian(n, &mut rng);
            let v = random_sparse_gaussian(n, &mut rng);
            defect_sup = defect_sup.max(defect_unchecked(&u, &v) / (norm2(&u) + norm2(&v)));

            let x = TwistedVector::new(random_sparse_gaussian(n, &mut rng), u).expect("finite");
            let y = TwistedVector::new(random_sparse_gaussian(n, &mut rng), v).expect("finite");
            let s = x.add(&y).expect("same length");
            let denom = kp_norm(&x) + kp_norm(&y);
            if denom > 0.0 {
                triangle_sup = triangle_sup.max(kp_norm(&s) / denom);
            }
        }
        Ok(Self {
            n,
            pairs,
            seed,
            defect_sup,
            triangle_sup,
        })
    }
}
