//! Least-squares fits of `value ≈ c·(ln n)^p`.

use serde::{Deserialize, Serialize};

use crate::records::SweepRecord;
use crate::{CliError, Result};

pub const MIN_FIT_POINTS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub model: String,
    pub c: f64,
    pub p: f64,
    pub r_squared: f64,
    pub points: usize,
}

impl FitResult {
    pub fn predict(&self, n: f64) -> f64 {
        self.c * n.ln().powf(self.p)
    }
}

/// Ordinary least squares of `ln value` on `ln ln n`.
pub fn fit_points(points: &[(f64, f64)]) -> Result<FitResult> {
    if points.len() < MIN_FIT_POINTS {
        return Err(CliError::Fit(format!(
            "need at least {MIN_FIT_POINTS} points, got {}",
            points.len()
        )));
    }
    let mut ns: Vec<f64> = points.iter().map(|p| p.0).collect();
    ns.sort_by(f64::total_cmp);
    if ns.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Fit("n values must be distinct".into()));
    }
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for &(n, v) in points {
        if !(n > 1.0) {
            return Err(CliError::Fit(format!("ln ln n is undefined at n = {n}")));
        }
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Fit(format!("nonpositive value {v} at n = {n}")));
        }
        xs.push(n.ln().ln());
        ys.push(v.ln());
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let p = sxy / sxx;
    let intercept = my - p * mx;
    let ss_res: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - p * x).powi(2)).sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(FitResult {
        model: "c*(ln n)^p".into(),
        c: intercept.exp(),
        p,
        r_squared,
        points: points.len(),
    })
}

/// Fits the records of a single quantity.
pub fn fit_growth(records: &[SweepRecord]) -> Result<FitResult> {
    if let Some(first) = records.first() {
        if records.iter().any(|r| r.quantity != first.quantity) {
            return Err(CliError::Fit("records mix several quantities".into()));
        }
    }
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.value)).collect();
    fit_points(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn law(p: f64, c: f64) -> Vec<(f64, f64)> {
        (2..=12).map(|e| {
            let n = 2f64.powi(e);
            (n, c * n.ln().powf(p))
        })
        .collect()
    }

    #[test]
    fn recovers_exact_laws() {
        let f = fit_points(&law(1.0, 1.0)).unwrap();
        assert!((f.p - 1.0).abs() < 1e-9 && (f.c - 1.0).abs() < 1e-9);
        assert!((f.r_squared - 1.0).abs() < 1e-12);
        let f = fit_points(&law(2.0, 1.0)).unwrap();
        assert!((f.p - 2.0).abs() < 1e-9);
        let f = fit_points(&law(0.5, 3.0)).unwrap();
        assert!((f.p - 0.5).abs() < 1e-9 && (f.c - 3.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_inputs() {
        assert!(fit_points(&law(1.0, 1.0)[..3]).is_err());
        let mut bad = law(1.0, 1.0);
        bad[2].1 = 0.0;
        assert!(fit_points(&bad).is_err());
        let mut dup = law(1.0, 1.0);
        dup[1].0 = dup[0].0;
        assert!(fit_points(&dup).is_err());
        assert!(fit_points(&[(1.0, 1.0), (2.0, 1.0), (3.0, 1.0), (4.0, 1.0)]).is_err());
    }
}
