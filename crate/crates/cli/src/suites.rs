//! Randomized property suites. Trial `t` of suite `s` draws from the seed
//! derived from `(master, s, t)`, so counts and the first counterexample do
//! not depend on thread scheduling.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use twistlab_core::asymmetry::trace_duality_sandwich;
use twistlab_core::opnorm::opnorm_upper;
use twistlab_core::seeding::{derive_seed, rng, Rng as SeedRng};
use twistlab_core::space::{block_symmetry_apply, f_map, kp_norm, TwistedVector};
use twistlab_core::split::{gamma_rms_chain, gamma_threshold_subset, nested_selection, rank_one_selection, MIN_NESTED};
use twistlab_core::synth::{random_rank_one, random_split, random_subset, random_vector};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    NormIdentities,
    LemmaChain,
    Selection,
    RankOne,
    LemmaQ,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::NormIdentities,
        Suite::LemmaChain,
        Suite::Selection,
        Suite::RankOne,
        Suite::LemmaQ,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Suite::NormIdentities => "norm_identities",
            Suite::LemmaChain => "lemma_chain",
            Suite::Selection => "selection",
            Suite::RankOne => "rank_one",
            Suite::LemmaQ => "lemma_q",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Suite {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Suite::ALL
            .into_iter()
            .find(|q| q.tag() == s)
            .ok_or_else(|| CliError::UnknownTag {
                kind: "suite",
                value: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOptions {
    /// Dimensions drawn by `norm_identities`.
    pub norm_dims: Vec<usize>,
    /// Haar samples per RIGHT check in `lemma_q`.
    pub mc_samples: usize,
    /// Only the first `right_trials` trials of `lemma_q` run the RIGHT check.
    pub right_trials: usize,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        Self {
            norm_dims: vec![1, 2, 8, 64, 512],
            mc_samples: 2000,
            right_trials: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub trials: usize,
    pub failures: usize,
    /// Largest value of the suite's own figure of merit, e.g. the worst
    /// relative error for identities or the largest `|A″|`-normalized
    /// coupling for selections.
    pub worst: f64,
    pub first_counterexample: Option<String>,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Outcome of one trial: `Err` carries the counterexample description.
pub type Trial = std::result::Result<f64, String>;

fn rel_diff(x: f64, y: f64) -> f64 {
    let scale = x.abs().max(y.abs());
    if scale == 0.0 {
        0.0
    } else {
        (x - y).abs() / scale
    }
}

fn norm_identity_trial(r: &mut SeedRng, dims: &[usize]) -> Trial {
    let n = dims[r.random_range(0..dims.len())];
    let x = random_vector(n, r);
    let nx = kp_norm(&x);

    let lambda = if r.random::<bool>() { 1.0 } else { -1.0 } * 10f64.powf(r.random_range(-3.0..3.0));
    let hom = rel_diff(kp_norm(&x.scaled(lambda)), lambda.abs() * nx);
    if hom > 1e-9 {
        return Err(format!("homogeneity: n={n} λ={lambda} rel err {hom:e}"));
    }

    let signs: Vec<i8> = (0..n).map(|_| if r.random::<bool>() { 1 } else { -1 }).collect();
    let mut perm: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), r);
    let y = block_symmetry_apply(&x, &signs, &perm).map_err(|e| e.to_string())?;
    let inv = rel_diff(kp_norm(&y), nx);
    if inv > 1e-12 {
        return Err(format!("block invariance: n={n} rel err {inv:e}"));
    }

    let u = x.b();
    let curve = TwistedVector::on_identity_curve(u).map_err(|e| e.to_string())?;
    let l2: f64 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
    let cur = rel_diff(kp_norm(&curve), l2);
    if cur > 1e-10 {
        return Err(format!("identity curve: n={n} rel err {cur:e}"));
    }

    let mu = 10f64.powf(r.random_range(-3.0..3.0));
    let fb = f_map(u).map_err(|e| e.to_string())?;
    let scaled: Vec<f64> = u.iter().map(|v| mu * v).collect();
    let fs = f_map(&scaled).map_err(|e| e.to_string())?;
    let diff: f64 = fs.iter().zip(&fb).map(|(p, q)| (p - mu * q).powi(2)).sum::<f64>().sqrt();
    // rounding in the log term scales with ‖b‖, not ‖F(b)‖, which can vanish
    let base = mu * (fb.iter().map(|v| v * v).sum::<f64>().sqrt() + l2);
    if diff > 1e-10 * base {
        return Err(format!("F homogeneity: n={n} μ={mu} err {diff:e}"));
    }
    Ok(hom.max(inv).max(cur))
}

fn lemma_chain_trial(r: &mut SeedRng) -> Trial {
    let k = r.random_range(4..=1024usize);
    let n = r.random_range(k..=1024usize.max(k));
    let op = random_split(n, r);
    let subset = random_subset(n, k, r);
    let (lhs, rhs) = gamma_rms_chain(&op, &subset).map_err(|e| e.to_string())?;
    if lhs > rhs + 1e-9 {
        return Err(format!("chain: n={n} k={k} lhs={lhs} rhs={rhs}"));
    }
    Ok(lhs - rhs)
}

/// Returns `max_{A″}|γ|·(ln k)²` with `T` normalized to certified norm 1.
pub fn selection_trial(r: &mut SeedRng, k: usize) -> Trial {
    let op = random_split(k, r);
    let m = opnorm_upper(&op).value;
    let op = op.scaled(1.0 / m);
    let all: Vec<usize> = (0..k).collect();
    let first = gamma_threshold_subset(&op, &all, 1.0).map_err(|e| e.to_string())?;
    let need = k.div_ceil(2);
    if first.output_set.len() < need {
        return Err(format!("k={k}: |A'| = {} < {need}", first.output_set.len()));
    }
    let rep = nested_selection(&op, &all, 1.0).map_err(|e| e.to_string())?;
    let floor = (k as f64).sqrt() / (2.0 * std::f64::consts::SQRT_2) - 1.0;
    if (rep.output_set.len() as f64) < floor {
        return Err(format!("k={k}: |A''| = {} < {floor}", rep.output_set.len()));
    }
    let lk = (k as f64).ln();
    Ok(rep.achieved_max_gamma * lk * lk)
}

fn rank_one_trial(r: &mut SeedRng) -> Trial {
    let inst = random_rank_one(12, r);
    let sel = rank_one_selection(&inst.terms, inst.k_bound).map_err(|e| e.to_string())?;
    if !(sel.large_sum > 0.5 && sel.selected_sum > 0.125) {
        return Err(format!(
            "rank one: Σ_B = {}, Σ_sel = {} for {:?}",
            sel.large_sum, sel.selected_sum, inst
        ));
    }
    Ok(sel.selected_sum)
}

fn lemma_q_trial(t: usize, trial_seed: u64, opts: &SuiteOptions) -> Trial {
    let k = 1 + t % 16;
    let mc = if t < opts.right_trials { opts.mc_samples } else { 0 };
    let rep = trace_duality_sandwich(k, 1, mc, trial_seed).map_err(|e| e.to_string())?;
    if rep.left_failures + rep.right_failures > 0 {
        return Err(rep.first_counterexample.unwrap_or_else(|| format!("k={k}: sandwich failed")));
    }
    Ok(rep.min_left_slack)
}

/// Runs `trials` randomized checks of `suite`.
pub fn check_suite(suite: Suite, trials: usize, seed: u64, opts: &SuiteOptions) -> SuiteReport {
    let outcomes: Vec<Trial> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let trial_seed = derive_seed(seed, suite.tag(), t as u64);
            let mut r = rng(trial_seed);
            match suite {
                Suite::NormIdentities => norm_identity_trial(&mut r, &opts.norm_dims),
                Suite::LemmaChain => lemma_chain_trial(&mut r),
                Suite::Selection => {
                    let e = r.random_range(5..=12u32);
                    let k = (1usize << e).max(MIN_NESTED + 1);
                    selection_trial(&mut r, k)
                }
                Suite::RankOne => rank_one_trial(&mut r),
                Suite::LemmaQ => lemma_q_trial(t, trial_seed, opts),
            }
        })
        .collect();
    let failures = outcomes.iter().filter(|o| o.is_err()).count();
    let worst = outcomes
        .iter()
        .filter_map(|o| o.as_ref().ok())
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let first_counterexample = outcomes.into_iter().find_map(|o| o.err());
    SuiteReport {
        suite,
        trials,
        failures,
        worst,
        first_counterexample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_runs_pass() {
        let opts = SuiteOptions {
            mc_samples: 200,
            right_trials: 4,
            ..SuiteOptions::default()
        };
        for suite in Suite::ALL {
            let rep = check_suite(suite, 40, 3, &opts);
            assert!(rep.passed(), "{rep:?}");
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let opts = SuiteOptions::default();
        let a = check_suite(Suite::LemmaChain, 30, 9, &opts);
        let b = check_suite(Suite::LemmaChain, 30, 9, &opts);
        assert_eq!(a, b);
    }

    #[test]
    fn tags_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.tag().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }
}
