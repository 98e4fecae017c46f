//! Witness constructions for the 1-summing, factorization and integral norms
//! of the identity between the twisted sum and ℓ₂²ⁿ / ℓ∞²ⁿ.

use rand::Rng;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::opnorm::{phi_certified_upper, Direction, NormBounds, NormEstimate};
use crate::seeding;
use crate::space::{f_map_into, kp_norm, kp_norm_parts, TwistedVector};

/// Above this many vectors a serialized family carries summary statistics only.
pub const SERIALIZE_VECTOR_LIMIT: usize = 64;

/// Default largest `n` for which all `2ⁿ` sign patterns are enumerated.
pub const EXHAUSTIVE_SIGN_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    L2,
    Linf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SignMethod {
    Exhaustive,
    Sampled { patterns: usize },
}

/// A family `x_1, …, x_m` together with its 1-summing ratio
/// `Σ ‖I x_j‖_target / sup_ε ‖Σ ε_j x_j‖`.
#[derive(Debug, Clone, PartialEq)]
pub struct WitnessFamily {
    pub vectors: Vec<TwistedVector>,
    pub target: Target,
    pub sign_sup: f64,
    /// Smallest signed-sum norm seen, for the "all signed sums are equal" check.
    pub sign_inf: f64,
    pub sign_method: SignMethod,
    pub ratio: f64,
}

impl Serialize for WitnessFamily {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("WitnessFamily", 6)?;
        st.serialize_field("count", &self.vectors.len())?;
        if self.vectors.len() <= SERIALIZE_VECTOR_LIMIT {
            st.serialize_field("vectors", &self.vectors)?;
        } else {
            st.serialize_field("vectors", &Option::<()>::None)?;
        }
        st.serialize_field("target", &self.target)?;
        st.serialize_field("sign_sup", &self.sign_sup)?;
        st.serialize_field("sign_method", &self.sign_method)?;
        st.serialize_field("ratio", &self.ratio)?;
        st.end()
    }
}

/// Coefficients `(ln(1/√n)/√n, 1/√n)` of `x_j = c_a e_j + c_b f_j`.
fn family_coefficients(n: usize) -> (f64, f64) {
    let s = (n as f64).sqrt();
    ((1.0 / s).ln() / s, 1.0 / s)
}

fn family(n: usize) -> Vec<TwistedVector> {
    let (ca, cb) = family_coefficients(n);
    (0..n)
        .map(|j| {
            let mut a = vec![0.0; n];
            let mut b = vec![0.0; n];
            a[j] = ca;
            b[j] = cb;
            TwistedVector::new(a, b).expect("finite")
        })
        .collect()
}

/// Quasi-norm of `Σ ε_j x_j` for the diagonal family: the signed sum is
/// `(c_a ε, c_b ε)`.
fn signed_sum_norm(n: usize, signs: &[f64], a: &mut [f64], b: &mut [f64]) -> f64 {
    let (ca, cb) = family_coefficients(n);
    for j in 0..n {
        a[j] = ca * signs[j];
        b[j] = cb * signs[j];
    }
    kp_norm_parts(a, b)
}

/// `(sup, inf, method)` of the signed-sum norms. Exhaustive up to `limit`,
/// otherwise `samples` random patterns plus all-ones and alternating.
fn sign_extremes(n: usize, limit: usize, samples: usize, seed: u64) -> Result<(f64, f64, SignMethod)> {
    let vectors = family(n);
    if n <= limit {
        let (sup, inf) = crate::oracles::signed_sum_extremes(&vectors)?;
        return Ok((sup, inf, SignMethod::Exhaustive));
    }
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut signs = vec![1.0; n];
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    let mut record = |v: f64| {
        sup = sup.max(v);
        inf = inf.min(v);
    };
    record(signed_sum_norm(n, &signs, &mut a, &mut b));
    for (j, s) in signs.iter_mut().enumerate() {
        *s = if j % 2 == 0 { 1.0 } else { -1.0 };
    }
    record(signed_sum_norm(n, &signs, &mut a, &mut b));
    let mut rng = seeding::rng(seed);
    for _ in 0..samples {
        for s in signs.iter_mut() {
            *s = if rng.random::<bool>() { 1.0 } else { -1.0 };
        }
        record(signed_sum_norm(n, &signs, &mut a, &mut b));
    }
    Ok((sup, inf, SignMethod::Sampled { patterns: samples + 2 }))
}

fn build_family(n: usize, target: Target, exhaustive_limit: usize, seed: u64) -> Result<WitnessFamily> {
    if n == 0 {
        return Err(Error::Input("family needs n >= 1".into()));
    }
    let vectors = family(n);
    let (sign_sup, sign_inf, sign_method) = sign_extremes(n, exhaustive_limit, 10_000, seed)?;
    let total: f64 = vectors
        .iter()
        .map(|x| match target {
            Target::L2 => x.l2_norm(),
            Target::Linf => x.linf_norm(),
        })
        .sum();
    Ok(WitnessFamily {
        vectors,
        target,
        sign_sup,
        sign_inf,
        sign_method,
        ratio: total / sign_sup,
    })
}

/// Lower bound for `Π₁(I: Z → ℓ₂²ⁿ)` from the family
/// `x_j = (ln(1/√n)/√n) e_j + (1/√n) f_j`.
///
/// Every signed sum is `(F(ε/√n), ε/√n)`, a point of the identity curve, so
/// all signed sums have quasi-norm 1 and the ratio is `√n·√(1 + ln²√n)`.
pub fn pi1_lower_identity(n: usize, exhaustive_limit: usize, seed: u64) -> Result<WitnessFamily> {
    build_family(n, Target::L2, exhaustive_limit, seed)
}

/// Same family measured in ℓ∞²ⁿ: `‖x_j‖∞ = max(ln√n, 1)/√n`.
pub fn pi1_lower_linf(n: usize, exhaustive_limit: usize, seed: u64) -> Result<WitnessFamily> {
    build_family(n, Target::Linf, exhaustive_limit, seed)
}

/// `√n·√(1 + ln²√n)`.
pub fn pi1_closed_form(n: usize) -> f64 {
    let nf = n as f64;
    nf.sqrt() * (1.0 + nf.sqrt().ln().powi(2)).sqrt()
}

/// Matrices of the reduction `P I⁻¹ W`: `P(a, b) = b`, `W(b) = (0, b)`,
/// `I⁻¹` the coordinate identity. Integer 0/1 entries, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReductionMatrices {
    pub n: usize,
    pub p: Vec<Vec<i64>>,
    pub w: Vec<Vec<i64>>,
    pub product: Vec<Vec<i64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaInfReduction {
    pub n: usize,
    /// `trace(P I⁻¹ W) = n`.
    pub trace: i64,
    /// `√n`, the known order of `γ∞(id on ℓ₂ⁿ)`. Reported as metadata; it is
    /// not computed here.
    pub gamma_inf_identity_order: f64,
}

fn matmul(x: &[Vec<i64>], y: &[Vec<i64>]) -> Vec<Vec<i64>> {
    let inner = y.len();
    let cols = y.first().map_or(0, Vec::len);
    x.iter()
        .map(|row| {
            (0..cols)
                .map(|c| (0..inner).map(|k| row[k] * y[k][c]).sum())
                .collect()
        })
        .collect()
}

pub fn reduction_matrices(n: usize) -> ReductionMatrices {
    let d = 2 * n;
    let p: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..d).map(|c| i64::from(c == n + i)).collect())
        .collect();
    let inv: Vec<Vec<i64>> = (0..d).map(|i| (0..d).map(|c| i64::from(c == i)).collect()).collect();
    let w: Vec<Vec<i64>> = (0..d)
        .map(|r| (0..n).map(|c| i64::from(r == n + c)).collect())
        .collect();
    let product = matmul(&matmul(&p, &inv), &w);
    ReductionMatrices { n, p, w, product }
}

/// Materializes `P I⁻¹ W` and checks it is the `n × n` identity.
///
/// `‖P‖_{Z→ℓ₂} = 1` because `‖b‖₂` is a summand of the quasi-norm, and `W` is
/// an isometric embedding, so `γ∞(I⁻¹) ≥ γ∞(id on ℓ₂ⁿ)`.
pub fn gamma_inf_reduction(n: usize) -> Result<GammaInfReduction> {
    if n == 0 {
        return Err(Error::Input("reduction needs n >= 1".into()));
    }
    let m = reduction_matrices(n);
    for (i, row) in m.product.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            if v != i64::from(i == j) {
                return Err(Error::Internal(format!("P·I⁻¹·W has entry ({i},{j}) = {v}")));
            }
        }
    }
    let trace = (0..n).map(|i| m.product[i][i]).sum();
    Ok(GammaInfReduction {
        n,
        trace,
        gamma_inf_identity_order: (n as f64).sqrt(),
    })
}

/// `trace(P I⁻¹ W) / ‖W‖ = n`, a trace-duality lower bound for
/// `i₁(I⁻¹: ℓ₂²ⁿ → Z)`.
pub fn i1_trace_lower(n: usize) -> Result<f64> {
    let red = gamma_inf_reduction(n)?;
    let m = reduction_matrices(n);
    // WᵀW = Id exactly, so ‖W‖ = 1
    let wtw_is_identity = (0..n).all(|i| {
        (0..n).all(|j| {
            let dot: i64 = (0..2 * n).map(|r| m.w[r][i] * m.w[r][j]).sum();
            dot == i64::from(i == j)
        })
    });
    if !wtw_is_identity {
        return Err(Error::Internal("W is not an isometric embedding".into()));
    }
    Ok(red.trace as f64)
}

/// Quasi-norm of `(a, b)` with `b` having `k` ones and `n − k` entries `t`,
/// and `a_j = −sign(F(b)_j)` (`+1` where `F(b)_j = 0`).
fn box_witness(n: usize, k: usize, t: f64) -> TwistedVector {
    let b: Vec<f64> = (0..n).map(|j| if j < k { 1.0 } else { t }).collect();
    let mut fb = vec![0.0; n];
    f_map_into(&b, &mut fb);
    let a = fb.iter().map(|&v| if v > 0.0 { -1.0 } else { 1.0 }).collect();
    TwistedVector::new(a, b).expect("finite")
}

/// Bounds for `‖I⁻¹: ℓ∞²ⁿ → Z‖`.
///
/// The lower bound searches box vertices-and-edges: `b` with `k` ones and
/// `n − k` entries `t ∈ [0, 1]`, and the coordinatewise best `a_j ∈ {±1}`.
/// With `b` all ones this is `√n(2 + ln√n)`. The upper bound uses the
/// containment of the unit box in the ℓ₂ ball of radius `√(2n)`.
pub fn linf_inverse_norm(n: usize) -> Result<NormBounds> {
    if n == 0 {
        return Err(Error::Input("linf_inverse_norm needs n >= 1".into()));
    }
    let mut best = box_witness(n, n, 1.0);
    let mut best_val = kp_norm(&best);
    const STEPS: usize = 20;
    let ks: Vec<usize> = if n <= 64 {
        (1..=n).collect()
    } else {
        let mut v: Vec<usize> = (1..=64).map(|i| (i * n).div_ceil(64)).collect();
        v.dedup();
        v
    };
    for &k in &ks {
        for i in 0..STEPS {
            let t = i as f64 / STEPS as f64;
            let x = box_witness(n, k, t);
            let v = kp_norm(&x);
            if v > best_val {
                best_val = v;
                best = x;
            }
        }
    }
    let value = kp_norm(&best) / best.linf_norm();
    let lower = NormEstimate {
        value,
        direction: Direction::Lower,
        method: "box_witness_search".into(),
        restarts: 0,
        seed: 0,
        witness: Some(best),
    };
    let phi_up = phi_certified_upper(n);
    let upper = NormEstimate::upper(
        (2.0 * n as f64).sqrt() * ((1.0 + phi_up).powi(2) + 1.0).sqrt(),
        "l2_ball_containment",
    );
    Ok(NormBounds { lower, upper })
}

/// `√n(2 + ln√n)`, the all-ones box witness value.
pub fn linf_all_ones_value(n: usize) -> f64 {
    let s = (n as f64).sqrt();
    s * (2.0 + s.ln())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_n1() {
        let fam = pi1_lower_identity(1, EXHAUSTIVE_SIGN_LIMIT, 0).unwrap();
        assert_eq!(fam.vectors[0], TwistedVector::new(vec![0.0], vec![1.0]).unwrap());
        assert!((fam.ratio - 1.0).abs() < 1e-15);
    }

    #[test]
    fn family_n4() {
        let fam = pi1_lower_identity(4, EXHAUSTIVE_SIGN_LIMIT, 0).unwrap();
        assert_eq!(fam.sign_method, SignMethod::Exhaustive);
        assert!((fam.sign_sup - 1.0).abs() < 1e-12);
        assert!((fam.sign_inf - 1.0).abs() < 1e-12);
        let want = 2.0 * (1.0 + 2f64.ln().powi(2)).sqrt();
        assert!((fam.ratio - want).abs() < 1e-12);
        assert!((fam.ratio - 2.433_477).abs() < 1e-6);
    }

    #[test]
    fn family_large_n_is_sampled() {
        let fam = pi1_lower_identity(100, EXHAUSTIVE_SIGN_LIMIT, 3).unwrap();
        assert!(matches!(fam.sign_method, SignMethod::Sampled { .. }));
        assert!((fam.sign_sup - 1.0).abs() < 1e-9 && (fam.sign_inf - 1.0).abs() < 1e-9);
        assert!((fam.ratio - pi1_closed_form(100)).abs() < 1e-9 * fam.ratio);
        let json = serde_json::to_value(&fam).unwrap();
        assert!(json["vectors"].is_null());
        assert_eq!(json["count"], 100);
        let small = serde_json::to_value(pi1_lower_identity(3, 12, 0).unwrap()).unwrap();
        assert_eq!(small["vectors"].as_array().unwrap().len(), 3);
    }

    #[test]
    fn linf_family_examples() {
        let fam = pi1_lower_linf(4, EXHAUSTIVE_SIGN_LIMIT, 0).unwrap();
        assert!((fam.ratio - 2.0).abs() < 1e-12);
        let fam = pi1_lower_linf(9, EXHAUSTIVE_SIGN_LIMIT, 0).unwrap();
        assert!((fam.vectors[0].linf_norm() - 3f64.ln() / 3.0).abs() < 1e-15);
        assert!((fam.ratio - 3.295_837).abs() < 1e-6);
    }

    #[test]
    fn reduction_examples() {
        let one = gamma_inf_reduction(1).unwrap();
        assert_eq!(reduction_matrices(1).product, vec![vec![1]]);
        assert_eq!(one.trace, 1);
        assert_eq!(gamma_inf_reduction(5).unwrap().trace, 5);
        assert_eq!(i1_trace_lower(1).unwrap(), 1.0);
        assert_eq!(i1_trace_lower(7).unwrap(), 7.0);
        assert!(gamma_inf_reduction(0).is_err());
    }

    #[test]
    fn projection_has_norm_at_most_one() {
        let mut rng = seeding::rng(5);
        for _ in 0..2000 {
            let n = rng.random_range(1..10);
            let a: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let x = TwistedVector::new(a, b).unwrap();
            let pb = crate::space::norm2(x.b());
            assert!(pb <= kp_norm(&x) + 1e-15);
        }
    }

    #[test]
    fn linf_inverse_examples() {
        let one = linf_inverse_norm(1).unwrap();
        assert!((one.lower.value - 2.0).abs() < 1e-12);
        assert!((one.upper.value - 2.0).abs() < 1e-12);
        let four = linf_inverse_norm(4).unwrap();
        assert!(four.lower.value >= 2.0 + 2.0 * (1.0 + 2f64.ln()) - 1e-12);
        assert!((linf_all_ones_value(4) - 5.386_294).abs() < 1e-6);
        for n in [1, 2, 3, 10, 50, 200] {
            let b = linf_inverse_norm(n).unwrap();
            assert!(b.lower.value <= b.upper.value + 1e-12, "n={n}");
            let w = b.lower.witness.as_ref().unwrap();
            assert!(w.linf_norm() <= 1.0);
        }
    }
}
