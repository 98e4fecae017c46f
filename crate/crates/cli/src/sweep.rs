//! Sweeps of one quantity over a list of dimensions.

use std::time::Instant;

use serde::Serialize;
use twistlab_core::asymmetry::{asym_mc, GroupKind, GroupSpec};
use twistlab_core::opnorm::{identity_norms, phi_max};
use twistlab_core::seeding::derive_seed;
use twistlab_core::space::QuasiConstants;
use twistlab_core::summing::{linf_inverse_norm, pi1_lower_identity, pi1_lower_linf, EXHAUSTIVE_SIGN_LIMIT};

use crate::records::{Quantity, RecordDirection, SweepRecord};
use crate::{CliError, Result};

/// Parameters for the quantities that take more than `n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepOptions {
    pub group: GroupKind,
    pub samples: usize,
    pub restarts: u32,
    pub qlc_pairs: usize,
    pub exhaustive_limit: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            group: GroupKind::SignedPermutations,
            samples: 20,
            restarts: 8,
            qlc_pairs: 10_000,
            exhaustive_limit: EXHAUSTIVE_SIGN_LIMIT,
        }
    }
}

/// Wall-clock limits. A point that finishes over `per_point_ms`, or a sweep
/// whose running total passes `total_ms`, stops the sweep after that point
/// and marks it partial. Running points are never interrupted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Budget {
    pub per_point_ms: Option<u64>,
    pub total_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepOutcome {
    pub records: Vec<SweepRecord>,
    pub partial: bool,
}

fn evaluate(quantity: Quantity, n: usize, seed: u64, opts: &SweepOptions) -> Result<(f64, RecordDirection)> {
    Ok(match quantity {
        Quantity::Pi1L2 => (
            pi1_lower_identity(n, opts.exhaustive_limit, seed)?.ratio,
            RecordDirection::Lower,
        ),
        Quantity::Pi1Linf => (pi1_lower_linf(n, opts.exhaustive_limit, seed)?.ratio, RecordDirection::Lower),
        Quantity::IdNorm => (identity_norms_checked(n)?.to_l2.lower.value, RecordDirection::Lower),
        Quantity::IdInvNorm => (identity_norms_checked(n)?.from_l2.lower.value, RecordDirection::Lower),
        Quantity::Qlc => (
            QuasiConstants::measure(n, opts.qlc_pairs, seed)?.defect_sup,
            RecordDirection::Point,
        ),
        Quantity::Asym => {
            let spec = GroupSpec::new(opts.group, 2 * n)?;
            let est = asym_mc(&spec, n, opts.samples, opts.restarts, seed)?;
            (est.mean_norm, RecordDirection::Point)
        }
        Quantity::Phi => (phi_max(n)?.0.value, RecordDirection::Lower),
        Quantity::LinfInv => (linf_inverse_norm(n)?.lower.value, RecordDirection::Lower),
    })
}

fn identity_norms_checked(n: usize) -> Result<twistlab_core::opnorm::IdentityNorms> {
    if n == 0 {
        return Err(twistlab_core::Error::Input("n must be >= 1".into()).into());
    }
    Ok(identity_norms(n))
}

/// Evaluates `quantity` at each `n`. Point `n` uses the seed derived from
/// `(seed, quantity tag, n)`, so values do not depend on which other points
/// are in the list.
pub fn run_sweep(quantity: Quantity, n_list: &[usize], seed: u64, opts: &SweepOptions, budget: &Budget) -> Result<SweepOutcome> {
    if n_list.is_empty() {
        return Err(CliError::Empty("n list is empty".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(twistlab_core::Error::Input(format!("n list must be strictly ascending, got {n_list:?}")).into());
    }
    let start = Instant::now();
    let mut records = Vec::with_capacity(n_list.len());
    let mut partial = false;
    for (i, &n) in n_list.iter().enumerate() {
        let point_seed = derive_seed(seed, quantity.tag(), n as u64);
        let t0 = Instant::now();
        let (value, direction) = evaluate(quantity, n, point_seed, opts)?;
        let wall_time_ms = t0.elapsed().as_millis() as u64;
        records.push(SweepRecord {
            quantity,
            n,
            value,
            direction,
            seed: point_seed,
            wall_time_ms,
        });
        let over_point = budget.per_point_ms.is_some_and(|b| wall_time_ms > b);
        let over_total = budget.total_ms.is_some_and(|b| start.elapsed().as_millis() as u64 > b);
        if (over_point || over_total) && i + 1 < n_list.len() {
            log::warn!("{quantity} sweep stopped after n = {n}: budget exceeded");
            partial = true;
            break;
        }
    }
    Ok(SweepOutcome { records, partial })
}
