//! Brute-force references at tiny dimension.
//!
//! Everything here evaluates the defining formulas directly on grids or by
//! enumeration and shares no search logic with [`crate::opnorm`]. Work is
//! counted before it starts; requests above [`MAX_GRID_POINTS`] fail with
//! [`Error::CostGuard`].

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linear::LinearMap;
use crate::space::{f_map, kp_norm_flat, kp_norm_parts, TwistedVector};
use crate::split::{Block, SplitOperator};

pub const MAX_GRID_POINTS: u64 = 100_000_000;
pub const MAX_SPHERE_DIM: usize = 6;
pub const MAX_SIGN_VECTORS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Unit ℓ₂ sphere, hyperspherical angles with step `resolution`.
    Sphere,
    /// `[−1, 1]^dimension`, coordinate step `resolution`.
    Box,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dimension: usize,
    pub resolution: f64,
    pub domain: Domain,
}

impl GridSpec {
    pub fn sphere(dimension: usize, resolution: f64) -> Result<Self> {
        Self::new(dimension, resolution, Domain::Sphere)
    }

    pub fn cube(dimension: usize, resolution: f64) -> Result<Self> {
        Self::new(dimension, resolution, Domain::Box)
    }

    pub fn new(dimension: usize, resolution: f64, domain: Domain) -> Result<Self> {
        if !(resolution > 0.0 && resolution.is_finite()) {
            return Err(Error::Input(format!("resolution must be positive, got {resolution}")));
        }
        let min_dim = if domain == Domain::Sphere { 2 } else { 1 };
        if dimension < min_dim {
            return Err(Error::Input(format!("grid dimension {dimension} too small")));
        }
        if domain == Domain::Sphere && dimension > MAX_SPHERE_DIM {
            return Err(Error::CostGuard(format!(
                "sphere grids are limited to dimension {MAX_SPHERE_DIM}, got {dimension}"
            )));
        }
        Ok(Self {
            dimension,
            resolution,
            domain,
        })
    }

    /// Points per axis. For the sphere: `d − 2` polar angles on `[0, π]` and
    /// the last angle on `[0, π)`, which covers the sphere up to `x ↦ −x`.
    fn axes(&self) -> Vec<usize> {
        let h = self.resolution;
        match self.domain {
            Domain::Sphere => {
                let polar = (PI / h).ceil() as usize + 1;
                let last = (PI / h).ceil() as usize;
                let mut v = vec![polar; self.dimension - 2];
                v.push(last);
                v
            }
            Domain::Box => vec![(2.0 / h).ceil() as usize + 1; self.dimension],
        }
    }

    fn step(&self, axis: usize) -> f64 {
        let counts = self.axes();
        match self.domain {
            Domain::Sphere if axis + 1 == self.dimension - 1 => PI / counts[axis] as f64,
            Domain::Sphere => PI / (counts[axis] - 1) as f64,
            Domain::Box => 2.0 / (counts[axis] - 1) as f64,
        }
    }

    pub fn points(&self) -> u64 {
        self.axes().iter().fold(1u64, |acc, &c| acc.saturating_mul(c as u64))
    }
}

/// Unit vector with hyperspherical angles `theta` (length `d − 1`).
fn sphere_point(theta: &[f64], out: &mut [f64]) {
    let mut s = 1.0;
    for (i, &t) in theta.iter().enumerate() {
        out[i] = s * t.cos();
        s *= t.sin();
    }
    out[theta.len()] = s;
}

/// Best point of each slice `idx[0] = i` of an axis-aligned lattice given by
/// per-axis `origin`, `step` and `count`. Ties within a slice keep the
/// lexicographically first point.
fn lattice_slices<F>(origin: &[f64], step: &[f64], count: &[usize], map: bool, f: &F) -> Vec<(f64, Vec<f64>)>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let axes = count.len();
    let dim = if map { axes + 1 } else { axes };
    let shard = |i0: usize| -> (f64, Vec<f64>) {
        let mut idx = vec![0usize; axes];
        idx[0] = i0;
        let mut coord = vec![0.0; axes];
        let mut x = vec![0.0; dim];
        let mut best = (f64::NEG_INFINITY, Vec::new());
        loop {
            for k in 0..axes {
                coord[k] = origin[k] + step[k] * idx[k] as f64;
            }
            if map {
                sphere_point(&coord, &mut x);
            } else {
                x.copy_from_slice(&coord);
            }
            let v = f(&x);
            if v > best.0 {
                best = (v, coord.clone());
            }
            // odometer over axes 1..
            let mut k = axes;
            loop {
                if k == 1 {
                    return best;
                }
                k -= 1;
                idx[k] += 1;
                if idx[k] < count[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
    };
    (0..count[0]).into_par_iter().map(shard).collect()
}

/// Maximum over the whole lattice; ties keep the lexicographically first point.
fn lattice_max<F>(origin: &[f64], step: &[f64], count: &[usize], map: bool, f: &F) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let results = lattice_slices(origin, step, count, map, f);
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.0 > results[best].0 {
            best = i;
        }
    }
    results.into_iter().nth(best).expect("count[0] >= 1")
}

/// Result of a grid maximization.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridMax {
    pub value: f64,
    /// Maximizing point in ambient coordinates.
    pub point: Vec<f64>,
    pub evaluations: u64,
}

fn guard(points: u64) -> Result<()> {
    if points > MAX_GRID_POINTS {
        Err(Error::CostGuard(format!(
            "{points} grid points requested, limit is {MAX_GRID_POINTS}"
        )))
    } else {
        Ok(())
    }
}

/// Exhaustive maximum of `f` over the grid. On the sphere only half the last
/// angle is scanned, so `f` must be even.
pub fn grid_max<F>(spec: &GridSpec, f: F) -> Result<GridMax>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    grid_max_zoomed(spec, 0, f)
}

/// Number of coarse candidates refined by [`grid_max_zoomed`].
pub const ZOOM_SEEDS: usize = 8;

/// As [`grid_max`], followed by `rounds` local refinements around each of
/// the [`ZOOM_SEEDS`] best slice winners of the coarse scan (slices fix the
/// first coordinate). Each round rescans a 9-point-per-axis lattice of half
/// the previous radius around the candidate's current best point.
pub fn grid_max_zoomed<F>(spec: &GridSpec, rounds: usize, f: F) -> Result<GridMax>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let axes = spec.axes();
    let local = 9u64.saturating_pow(axes.len() as u32);
    let seeds = if rounds == 0 { 0 } else { ZOOM_SEEDS.min(axes[0]) as u64 };
    let total = spec
        .points()
        .saturating_add(local.saturating_mul(rounds as u64).saturating_mul(seeds));
    guard(total)?;
    let map = spec.domain == Domain::Sphere;
    let origin: Vec<f64> = match spec.domain {
        Domain::Sphere => vec![0.0; axes.len()],
        Domain::Box => vec![-1.0; axes.len()],
    };
    let step: Vec<f64> = (0..axes.len()).map(|k| spec.step(k)).collect();
    let mut slices = lattice_slices(&origin, &step, &axes, map, &f);
    let (mut value, mut coord) = {
        let mut best = 0;
        for (i, r) in slices.iter().enumerate() {
            if r.0 > slices[best].0 {
                best = i;
            }
        }
        slices[best].clone()
    };
    // stable sort keeps the lower slice first among equal values
    slices.sort_by(|x, y| y.0.total_cmp(&x.0));
    for (v0, c0) in slices.into_iter().take(seeds as usize) {
        let (v, c) = zoom(spec, map, &step, rounds, v0, c0, &f);
        if v > value {
            value = v;
            coord = c;
        }
    }
    let point = if map {
        let mut x = vec![0.0; spec.dimension];
        sphere_point(&coord, &mut x);
        x
    } else {
        coord
    };
    Ok(GridMax {
        value,
        point,
        evaluations: total,
    })
}

fn zoom<F>(spec: &GridSpec, map: bool, step: &[f64], rounds: usize, mut value: f64, mut coord: Vec<f64>, f: &F) -> (f64, Vec<f64>)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let axes = step.len();
    let mut radius: Vec<f64> = step.to_vec();
    for _ in 0..rounds {
        let lo: Vec<f64> = coord
            .iter()
            .zip(&radius)
            .map(|(c, r)| match spec.domain {
                Domain::Box => (c - r).max(-1.0),
                Domain::Sphere => c - r,
            })
            .collect();
        let st: Vec<f64> = lo
            .iter()
            .zip(coord.iter().zip(&radius))
            .map(|(l, (c, r))| match spec.domain {
                Domain::Box => ((c + r).min(1.0) - l) / 8.0,
                Domain::Sphere => 2.0 * r / 8.0,
            })
            .collect();
        let (v, c) = lattice_max(&lo, &st, &vec![9; axes], map, f);
        if v > value {
            value = v;
            coord = c;
        }
        radius.iter_mut().for_each(|r| *r *= 0.5);
    }
    (value, coord)
}

/// Grid maximum of `‖T x‖ / ‖x‖` over the unit sphere of ℝ^{2n}.
pub fn grid_opnorm<M: LinearMap + ?Sized>(op: &M, spec: &GridSpec) -> Result<GridMax> {
    grid_opnorm_zoomed(op, spec, 0)
}

pub fn grid_opnorm_zoomed<M: LinearMap + ?Sized>(op: &M, spec: &GridSpec, rounds: usize) -> Result<GridMax> {
    if spec.domain != Domain::Sphere {
        return Err(Error::Input("grid_opnorm scans the sphere".into()));
    }
    if spec.dimension != op.dim() {
        return Err(Error::DimensionMismatch {
            expected: op.dim(),
            got: spec.dimension,
        });
    }
    let d = op.dim();
    grid_max_zoomed(spec, rounds, |x| {
        let mut tx = [0.0; MAX_SPHERE_DIM];
        op.apply_flat(x, &mut tx[..d]);
        kp_norm_flat(&tx[..d]) / kp_norm_flat(x)
    })
}

/// Sphere-grid estimates of `(‖I: Z → ℓ₂‖, ‖I⁻¹: ℓ₂ → Z‖)` for `2n ≤ 6`.
pub fn grid_identity_norms(n: usize, resolution: f64) -> Result<(f64, f64)> {
    let spec = GridSpec::sphere(2 * n, resolution)?;
    let to = grid_max(&spec, |x| 1.0 / kp_norm_flat(x))?;
    let from = grid_max(&spec, kp_norm_flat)?;
    Ok((to.value, from.value))
}

/// Box-grid estimate of `‖I⁻¹: ℓ∞²ⁿ → Z‖`, i.e. the largest quasi-norm on the
/// unit cube (the quasi-norm is homogeneous, so the max sits on the boundary).
pub fn grid_linf_inverse(n: usize, resolution: f64) -> Result<f64> {
    let spec = GridSpec::cube(2 * n, resolution)?;
    Ok(grid_max(&spec, kp_norm_flat)?.value)
}

/// Sup and inf over all `2^m` sign patterns of the quasi-norm of `Σ ε_j x_j`.
///
/// The quasi-norm is even, so `ε_0 = +1` is fixed and the remaining patterns
/// are walked in Gray-code order, one sign flip per step.
pub fn signed_sum_extremes(vectors: &[TwistedVector]) -> Result<(f64, f64)> {
    let m = vectors.len();
    if m == 0 {
        return Err(Error::Input("no vectors".into()));
    }
    if m > MAX_SIGN_VECTORS {
        return Err(Error::CostGuard(format!(
            "{m} vectors exceed the enumeration limit of {MAX_SIGN_VECTORS}"
        )));
    }
    let n = vectors[0].dim();
    if let Some(v) = vectors.iter().find(|v| v.dim() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: v.dim(),
        });
    }
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    for v in vectors {
        for j in 0..n {
            a[j] += v.a()[j];
            b[j] += v.b()[j];
        }
    }
    let mut signs = vec![1.0; m];
    let first = kp_norm_parts(&a, &b);
    let (mut sup, mut inf) = (first, first);
    for step in 1u64..(1u64 << (m - 1)) {
        // Gray code: flip vector 1 + (index of the lowest set bit)
        let i = 1 + step.trailing_zeros() as usize;
        let s = signs[i];
        for j in 0..n {
            a[j] -= 2.0 * s * vectors[i].a()[j];
            b[j] -= 2.0 * s * vectors[i].b()[j];
        }
        signs[i] = -s;
        let v = kp_norm_parts(&a, &b);
        sup = sup.max(v);
        inf = inf.min(v);
    }
    Ok((sup, inf))
}

/// `sup_ε ‖Σ ε_j x_j‖` by full enumeration.
pub fn exhaustive_signs(vectors: &[TwistedVector]) -> Result<f64> {
    Ok(signed_sum_extremes(vectors)?.0)
}

/// Best `‖F(u)‖₂` over unit vectors with `k` coordinates at `s` and `n − k`
/// at `t`, scanning the mass `w = k s²` in steps of `resolution` for every
/// `k ∈ 1..=n`. With `‖u‖₂ = 1`, `F(u)_j = u_j ln|u_j|`.
pub fn two_level_phi(n: usize, resolution: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::Input("two_level_phi needs n >= 1".into()));
    }
    if !(resolution > 0.0 && resolution <= 1.0) {
        return Err(Error::Input(format!("resolution must lie in (0, 1], got {resolution}")));
    }
    let steps = (1.0 / resolution).ceil() as u64;
    guard(steps.saturating_mul(n as u64))?;
    let level = |mass: f64, count: usize| -> f64 {
        if count == 0 || mass <= 0.0 {
            return 0.0;
        }
        let u = (mass / count as f64).sqrt();
        count as f64 * (u * u.ln()).powi(2)
    };
    let best = (1..=n)
        .into_par_iter()
        .map(|k| {
            (0..=steps)
                .map(|i| {
                    let w = if k == n { 1.0 } else { i as f64 / steps as f64 };
                    (level(w, k) + level(1.0 - w, n - k)).sqrt()
                })
                .fold(0.0_f64, f64::max)
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Neumaier-compensated sum.
fn neumaier(xs: impl IntoIterator<Item = f64>) -> f64 {
    let (mut s, mut c) = (0.0_f64, 0.0_f64);
    for x in xs {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Quasi-norm with compensated sums of squares, for reference values.
pub fn kp_norm_compensated(x: &TwistedVector) -> f64 {
    let (a, b) = (x.a(), x.b());
    let rb = neumaier(b.iter().map(|v| v * v)).sqrt();
    if rb == 0.0 {
        return neumaier(a.iter().map(|v| v * v)).sqrt();
    }
    let resid = neumaier(a.iter().zip(b).map(|(&aj, &bj)| {
        let f = if bj == 0.0 { 0.0 } else { bj * (bj.abs().ln() - rb.ln()) };
        (aj - f).powi(2)
    }));
    rb + resid.sqrt()
}

/// One reference value with the parameters that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fixture {
    pub operation: String,
    pub params: serde_json::Value,
    pub value: f64,
    pub resolution: Option<f64>,
}

fn fixture(operation: &str, params: serde_json::Value, value: f64, resolution: Option<f64>) -> Fixture {
    Fixture {
        operation: operation.into(),
        params,
        value,
        resolution,
    }
}

/// Regenerates every reference value used by the tests.
pub fn fixtures() -> Result<Vec<Fixture>> {
    let tv = |a: &[f64], b: &[f64]| TwistedVector::new(a.to_vec(), b.to_vec());
    let mut out = Vec::new();

    out.push(fixture(
        "kp_norm",
        json!({"a": [0.0, 0.0], "b": [1.0, 1.0]}),
        kp_norm_compensated(&tv(&[0.0, 0.0], &[1.0, 1.0])?),
        None,
    ));
    let f = f_map(&[3.0, 4.0])?;
    out.push(fixture("f_map[0]", json!({"b": [3.0, 4.0]}), f[0], None));
    out.push(fixture("f_map[1]", json!({"b": [3.0, 4.0]}), f[1], None));
    let (ea, eb) = ([1.0, 0.0], [0.0, 1.0]);
    let fs = f_map(&[1.0, 1.0])?;
    out.push(fixture(
        "quasilinearity_defect",
        json!({"a": ea, "b": eb}),
        neumaier(fs.iter().map(|v| v * v)).sqrt() / 2.0,
        None,
    ));
    out.push(fixture(
        "gamma_threshold",
        json!({"k": 4, "M": 1.0}),
        4.0 * 2f64.sqrt() / 4f64.ln(),
        None,
    ));

    let shift = SplitOperator::new(vec![Block::new(0.0, 0.0, 1.0, 0.0)])?;
    let res = 1e-3;
    out.push(fixture(
        "grid_opnorm",
        json!({"blocks": [[0.0, 0.0, 1.0, 0.0]]}),
        grid_opnorm(&shift, &GridSpec::sphere(2, res)?)?.value,
        Some(res),
    ));
    let (to, from) = grid_identity_norms(1, 1e-4)?;
    out.push(fixture("grid_identity_to_l2", json!({"n": 1}), to, Some(1e-4)));
    out.push(fixture("grid_identity_from_l2", json!({"n": 1}), from, Some(1e-4)));
    out.push(fixture("grid_linf_inverse", json!({"n": 1}), grid_linf_inverse(1, 1e-3)?, Some(1e-3)));
    for n in [1usize, 2, 3, 4, 8] {
        out.push(fixture("two_level_phi", json!({"n": n}), two_level_phi(n, 1e-4)?, Some(1e-4)));
    }
    let fam = crate::summing::pi1_lower_identity(4, 0, 0)?;
    out.push(fixture("exhaustive_signs", json!({"family": "identity_curve", "n": 4}), exhaustive_signs(&fam.vectors)?, None));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear::DenseOperator;

    #[test]
    fn identity_and_scaling() {
        let id = SplitOperator::identity(2);
        let spec = GridSpec::sphere(4, 0.05).unwrap();
        let g = grid_opnorm(&id, &spec).unwrap();
        assert!((g.value - 1.0).abs() < 1e-12);
        let t = SplitOperator::new(vec![Block::new(0.3, -0.2, 0.9, 0.1), Block::new(-0.5, 0.4, 0.2, 0.7)]).unwrap();
        let v1 = grid_opnorm(&t, &spec).unwrap().value;
        let v2 = grid_opnorm(&t.scaled(2.0), &spec).unwrap().value;
        assert_eq!(v2, 2.0 * v1);
    }

    #[test]
    fn shift_block_has_norm_one() {
        let t = SplitOperator::new(vec![Block::new(0.0, 0.0, 1.0, 0.0)]).unwrap();
        let g = grid_opnorm(&t, &GridSpec::sphere(2, 1e-3).unwrap()).unwrap();
        assert!((g.value - 1.0).abs() < 1e-6, "{}", g.value);
    }

    #[test]
    fn cost_guard_is_a_hard_error() {
        assert!(matches!(GridSpec::sphere(8, 0.5), Err(Error::CostGuard(_))));
        let spec = GridSpec::sphere(6, 1e-3).unwrap();
        let id = DenseOperator::new(nalgebra::DMatrix::identity(6, 6)).unwrap();
        assert!(matches!(grid_opnorm(&id, &spec), Err(Error::CostGuard(_))));
        assert!(matches!(two_level_phi(10, 1e-8), Err(Error::CostGuard(_))));
    }

    #[test]
    fn identity_norms_at_n1() {
        let (to, from) = grid_identity_norms(1, 1e-4).unwrap();
        assert!((to - 1.0).abs() < 1e-6);
        assert!((from - 2f64.sqrt()).abs() < 1e-6);
        assert!((grid_linf_inverse(1, 1e-3).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn sign_enumeration() {
        let x = TwistedVector::new(vec![0.3, -1.0], vec![2.0, 0.5]).unwrap();
        assert!((exhaustive_signs(std::slice::from_ref(&x)).unwrap() - crate::kp_norm(&x)).abs() < 1e-15);
        let two = exhaustive_signs(&[x.clone(), x.clone()]).unwrap();
        assert!((two - 2.0 * crate::kp_norm(&x)).abs() < 1e-12);
        let (_, inf) = signed_sum_extremes(&[x.clone(), x.clone()]).unwrap();
        assert_eq!(inf, 0.0);
        let fam = crate::summing::pi1_lower_identity(4, 0, 0).unwrap();
        assert!((exhaustive_signs(&fam.vectors).unwrap() - 1.0).abs() < 1e-12);
        let many = vec![x; 21];
        assert!(matches!(exhaustive_signs(&many), Err(Error::CostGuard(_))));
    }

    #[test]
    fn two_level_phi_values() {
        assert_eq!(two_level_phi(1, 1e-3).unwrap(), 0.0);
        for n in 2..40 {
            let v = two_level_phi(n, 1e-3).unwrap();
            assert!(v >= (n as f64).sqrt().ln() - 1e-12, "n={n}");
            assert!(v <= crate::opnorm::phi_certified_upper(n) + 1e-12, "n={n}");
        }
    }

    #[test]
    fn compensated_norm_matches_plain() {
        let x = TwistedVector::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap();
        let want = 2f64.sqrt() * (1.0 + 2f64.sqrt().ln());
        assert!((kp_norm_compensated(&x) - want).abs() < 1e-15);
        assert!((kp_norm_compensated(&x) - 1.904_342).abs() < 1e-6);
    }

    #[test]
    fn box_grid_covers_corners() {
        let spec = GridSpec::cube(2, 0.5).unwrap();
        assert_eq!(spec.points(), 25);
        let g = grid_max(&spec, |x| x[0] + x[1]).unwrap();
        assert_eq!(g.value, 2.0);
        assert_eq!(g.point, vec![1.0, 1.0]);
    }
}
