//! Linear maps on ℝ²ⁿ in the flat `[a; b]` layout.

use nalgebra::DMatrix;

use crate::error::{ensure_len, Error, Result};

/// A linear map ℝ²ⁿ → ℝ²ⁿ acting on flat `[a; b]` vectors.
pub trait LinearMap: Sync {
    /// Ambient dimension `2n`.
    fn dim(&self) -> usize;

    fn apply_flat(&self, x: &[f64], out: &mut [f64]);

    fn apply_transpose_flat(&self, y: &[f64], out: &mut [f64]);

    /// Largest singular value, i.e. the ℓ₂ → ℓ₂ norm.
    fn spectral_norm(&self) -> f64;
}

/// A dense `2n × 2n` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOperator {
    matrix: DMatrix<f64>,
}

impl DenseOperator {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() || !matrix.nrows().is_multiple_of(2) || matrix.nrows() == 0 {
            return Err(Error::Input(format!(
                "dense operator must be square of even size, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if matrix.iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("dense operator has non-finite entries".into()));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }
}

impl LinearMap for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        let d = self.dim();
        out.iter_mut().for_each(|v| *v = 0.0);
        // column-major storage: accumulate column by column
        for (j, &xj) in x.iter().enumerate().take(d) {
            if xj == 0.0 {
                continue;
            }
            let col = self.matrix.column(j);
            for (o, m) in out.iter_mut().zip(col.iter()) {
                *o += m * xj;
            }
        }
    }

    fn apply_transpose_flat(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            *o = self.matrix.column(j).iter().zip(y).map(|(m, v)| m * v).sum();
        }
    }

    fn spectral_norm(&self) -> f64 {
        self.matrix
            .clone()
            .singular_values()
            .iter()
            .fold(0.0_f64, |m, v| m.max(*v))
    }
}

/// A signed permutation `x ↦ y` with `y[perm[i]] = signs[i] · x[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedPermutation {
    perm: Vec<usize>,
    signs: Vec<f64>,
}

impl SignedPermutation {
    pub fn new(perm: Vec<usize>, signs: Vec<f64>) -> Result<Self> {
        let d = perm.len();
        ensure_len(d, signs.len())?;
        let mut seen = vec![false; d];
        for &p in &perm {
            if p >= d || seen[p] {
                return Err(Error::Input(format!("not a permutation of 0..{d}")));
            }
            seen[p] = true;
        }
        if signs.iter().any(|s| *s != 1.0 && *s != -1.0) {
            return Err(Error::Input("signs must be ±1".into()));
        }
        Ok(Self { perm, signs })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            perm: (0..d).collect(),
            signs: vec![1.0; d],
        }
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        let d = self.perm.len();
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            m[(self.perm[i], i)] = self.signs[i];
        }
        m
    }
}

impl LinearMap for SignedPermutation {
    fn dim(&self) -> usize {
        self.perm.len()
    }

    fn apply_flat(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.perm.len() {
            out[self.perm[i]] = self.signs[i] * x[i];
        }
    }

    fn apply_transpose_flat(&self, y: &[f64], out: &mut [f64]) {
        for i in 0..self.perm.len() {
            out[i] = self.signs[i] * y[self.perm[i]];
        }
    }

    fn spectral_norm(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signed_permutation_matches_its_matrix() {
        let g = SignedPermutation::new(vec![2, 0, 3, 1], vec![1.0, -1.0, -1.0, 1.0]).unwrap();
        let m = DenseOperator::new(g.to_matrix()).unwrap();
        let x = [0.5, -2.0, 3.0, 7.0];
        let (mut y1, mut y2) = ([0.0; 4], [0.0; 4]);
        g.apply_flat(&x, &mut y1);
        m.apply_flat(&x, &mut y2);
        assert_eq!(y1, y2);
        g.apply_transpose_flat(&x, &mut y1);
        m.apply_transpose_flat(&x, &mut y2);
        assert_eq!(y1, y2);
        assert!((m.spectral_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(SignedPermutation::new(vec![0, 0], vec![1.0, 1.0]).is_err());
        assert!(SignedPermutation::new(vec![1, 0], vec![1.0, 0.5]).is_err());
        assert!(DenseOperator::new(DMatrix::zeros(3, 3)).is_err());
        assert!(DenseOperator::new(DMatrix::zeros(2, 4)).is_err());
    }
}
