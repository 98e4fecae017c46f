//! The acceptance criteria as runnable checks. Each returns an [`Outcome`]
//! whose detail line records the measured values.

use std::f64::consts::SQRT_2;
use std::time::Instant;

use rand::Rng;
use twistlab::fit::fit_points;
use twistlab::suites::selection_trial;
use twistlab::{check_suite, run_sweep, Budget, Quantity, Suite, SuiteOptions, SweepOptions};
use twistlab_core::asymmetry::{asym_mc, is_rich, trace_duality_sandwich, GroupKind, GroupSpec};
use twistlab_core::opnorm::{identity_norms, opnorm_lower};
use twistlab_core::oracles::{exhaustive_signs, grid_identity_norms, grid_opnorm_zoomed, GridSpec};
use twistlab_core::seeding::{derive_seed, rng};
use twistlab_core::space::kp_norm;
use twistlab_core::summing::{i1_trace_lower, pi1_lower_identity, reduction_matrices, SignMethod};
use twistlab_core::synth::{random_split, random_vector};
use twistlab_core::{LinearMap, TwistedVector};

const SEED: u64 = 20_240_601;

pub struct Outcome {
    pub pass: bool,
    pub detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn rel(x: f64, y: f64) -> f64 {
    (x - y).abs() / x.abs().max(y.abs()).max(f64::MIN_POSITIVE)
}

fn c1_norm_identities() -> Outcome {
    let start = Instant::now();
    let mut failures = Vec::new();
    for n in [1usize, 2, 8, 64, 512] {
        let opts = SuiteOptions {
            norm_dims: vec![n],
            ..SuiteOptions::default()
        };
        let rep = check_suite(Suite::NormIdentities, 100_000, derive_seed(SEED, "c1", n as u64), &opts);
        if !rep.passed() {
            failures.push(format!("n={n}: {} failures, {:?}", rep.failures, rep.first_counterexample));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && secs < 30.0,
        format!("5 x 1e5 vectors in {secs:.1}s {}", failures.join("; ")),
    )
}

fn c2_unit_witnesses() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..1000u64 {
        let mut r = rng(derive_seed(SEED, "c2", t));
        let n = r.random_range(1..=64usize);
        let op = random_split(n, &mut r);
        for j in 0..n {
            let b = op.block(j);
            let te = kp_norm(&op.apply(&TwistedVector::e(n, j)).unwrap());
            let tf = kp_norm(&op.apply(&TwistedVector::f(n, j)).unwrap());
            worst = worst
                .max((te - (b.alpha.abs() + b.gamma.abs())).abs())
                .max((tf - (b.delta.abs() + b.beta.abs())).abs());
        }
    }
    outcome(worst <= 1e-12, format!("1e3 operators, max abs error {worst:e}"))
}

fn suite(s: Suite, trials: usize, tag: &str) -> Outcome {
    let rep = check_suite(s, trials, derive_seed(SEED, tag, 0), &SuiteOptions::default());
    outcome(
        rep.passed(),
        format!("{trials} trials, {} failures {}", rep.failures, rep.first_counterexample.unwrap_or_default()),
    )
}

fn c3_chain() -> Outcome {
    suite(Suite::LemmaChain, 1000, "c3")
}

fn c5_rank_one() -> Outcome {
    suite(Suite::RankOne, 10_000, "c5")
}

fn c4_selection() -> Outcome {
    const PER_K: u64 = 6;
    let mut points = Vec::new();
    let mut errors = Vec::new();
    for e in 5..=12u32 {
        let k = 1usize << e;
        let mut q: f64 = 0.0;
        for t in 0..PER_K {
            let mut r = rng(derive_seed(SEED, "c4", u64::from(e) * 100 + t));
            match selection_trial(&mut r, k) {
                Ok(v) => q = q.max(v),
                Err(msg) => errors.push(msg),
            }
        }
        points.push(((k as f64).ln(), q));
    }
    let m = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / m, b + y / m));
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let constant = points.iter().map(|p| p.1).fold(0.0, f64::max);
    outcome(
        errors.is_empty() && (-0.2..=0.2).contains(&slope),
        format!(
            "k=32..4096, recorded constant {constant:.4}, slope {slope:.4} {}",
            errors.first().cloned().unwrap_or_default()
        ),
    )
}

fn c6_pi1_witness() -> Outcome {
    let start = Instant::now();
    let mut bad = Vec::new();
    for n in 1..=12usize {
        let w = pi1_lower_identity(n, 12, SEED).unwrap();
        if w.sign_method != SignMethod::Exhaustive || (w.sign_sup - 1.0).abs() > 1e-9 || (w.sign_inf - 1.0).abs() > 1e-9 {
            bad.push(format!("n={n} sup={} inf={}", w.sign_sup, w.sign_inf));
        }
    }
    let big = pi1_lower_identity(4096, 12, SEED).unwrap();
    let sampled = matches!(big.sign_method, SignMethod::Sampled { patterns } if patterns >= 10_000);
    if !sampled || big.sign_inf < 1.0 - 1e-9 || big.sign_sup > 1.0 + 1e-9 {
        bad.push(format!("n=4096 range [{}, {}]", big.sign_inf, big.sign_sup));
    }
    for e in 0..=12u32 {
        let n = 1usize << e;
        let w = if n == 4096 { big.clone() } else { pi1_lower_identity(n, 12, SEED).unwrap() };
        let nf = n as f64;
        let closed = nf.sqrt() * (1.0 + nf.sqrt().ln().powi(2)).sqrt();
        if rel(w.ratio, closed) > 1e-9 {
            bad.push(format!("n={n} ratio {} vs {closed}", w.ratio));
        }
        if n >= 16 && w.ratio < 0.4 * nf.sqrt() * nf.ln() {
            bad.push(format!("n={n} ratio {} below 0.4·√n·ln n", w.ratio));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(bad.is_empty() && secs < 60.0, format!("{secs:.1}s {}", bad.join("; ")))
}

fn c7_trace_witness() -> Outcome {
    let mut bad = Vec::new();
    for n in 1..=64usize {
        let v = i1_trace_lower(n).unwrap();
        if v != n as f64 {
            bad.push(format!("n={n} trace bound {v}"));
        }
        let m = reduction_matrices(n);
        let identity = m
            .product
            .iter()
            .enumerate()
            .all(|(i, row)| row.len() == n && row.iter().enumerate().all(|(j, &x)| x == i64::from(i == j)));
        if m.product.len() != n || !identity {
            bad.push(format!("n={n} product is not the identity"));
        }
    }
    outcome(bad.is_empty(), format!("n=1..64 {}", bad.join("; ")))
}

fn c8_identity_growth() -> Outcome {
    let ns: Vec<usize> = (2..=12).map(|e| 1usize << e).collect();
    let norms: Vec<_> = ns.iter().map(|&n| identity_norms(n)).collect();
    let to: Vec<(f64, f64)> = ns.iter().zip(&norms).map(|(&n, x)| (n as f64, x.to_l2.lower.value)).collect();
    let from: Vec<(f64, f64)> = ns.iter().zip(&norms).map(|(&n, x)| (n as f64, x.from_l2.lower.value)).collect();
    let f_to = fit_points(&to).unwrap();
    let f_from = fit_points(&from).unwrap();
    let ok_fit = |p: f64, r2: f64| (0.8..=1.2).contains(&p) && r2 >= 0.95;
    let one = identity_norms(1);
    let (grid_to, grid_from) = grid_identity_norms(1, 1e-4).unwrap();
    let base_ok = (one.to_l2.lower.value - 1.0).abs() <= 1e-6
        && (one.from_l2.lower.value - SQRT_2).abs() <= 1e-6
        && (grid_to - 1.0).abs() <= 1e-6
        && (grid_from - SQRT_2).abs() <= 1e-6;
    outcome(
        ok_fit(f_to.p, f_to.r_squared) && ok_fit(f_from.p, f_from.r_squared) && base_ok,
        format!(
            "‖I‖ p={:.3} r²={:.4}; ‖I⁻¹‖ p={:.3} r²={:.4}; n=1 values {:.9}, {:.9} (grid {:.9}, {:.9})",
            f_to.p,
            f_to.r_squared,
            f_from.p,
            f_from.r_squared,
            one.to_l2.lower.value,
            one.from_l2.lower.value,
            grid_to,
            grid_from
        ),
    )
}

fn sampled_sign_sup(vectors: &[TwistedVector], patterns: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let n = vectors[0].dim();
    let mut best: f64 = 0.0;
    for _ in 0..patterns {
        let mut acc = TwistedVector::zeros(n);
        for v in vectors {
            let s = if r.random::<bool>() { 1.0 } else { -1.0 };
            acc = acc.add(&v.scaled(s)).unwrap();
        }
        best = best.max(kp_norm(&acc));
    }
    best
}

fn c9_oracles() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ascent_above = 0;
    let mut bad = Vec::new();
    for t in 0..50u64 {
        let mut r = rng(derive_seed(SEED, "c9", t));
        let n = 1 + (t % 3) as usize;
        let op = random_split(n, &mut r);
        let lo = opnorm_lower(&op, 16, derive_seed(SEED, "c9-ascent", t)).value;
        let res = [1e-4, 0.02, 0.15][n - 1];
        let spec = GridSpec::sphere(op.dim(), res).unwrap();
        let grid = grid_opnorm_zoomed(&op, &spec, 6).unwrap().value;
        let gap = rel(lo, grid);
        if lo > grid {
            ascent_above += 1;
        }
        worst = worst.max(gap);
        if gap > 0.02 {
            bad.push(format!("operator {t} (n={n}): ascent {lo} grid {grid}"));
        }
    }
    let mut sign_mismatch = 0;
    for n in 1..=12usize {
        let w = pi1_lower_identity(n, 12, SEED).unwrap();
        let sampled = pi1_lower_identity(n, 0, SEED).unwrap();
        if rel(w.sign_sup, sampled.sign_sup) > 1e-12 || rel(exhaustive_signs(&w.vectors).unwrap(), sampled.sign_sup) > 1e-12 {
            sign_mismatch += 1;
        }
    }
    for t in 0..20u64 {
        let mut r = rng(derive_seed(SEED, "c9-signs", t));
        let m = r.random_range(1..=8usize);
        let vectors: Vec<TwistedVector> = (0..m).map(|_| random_vector(3, &mut r)).collect();
        let exact = exhaustive_signs(&vectors).unwrap();
        let sampled = sampled_sign_sup(&vectors, 10_000, derive_seed(SEED, "c9-sample", t));
        if rel(exact, sampled) > 1e-12 {
            sign_mismatch += 1;
        }
    }
    if sign_mismatch > 0 {
        bad.push(format!("{sign_mismatch} sign families disagree"));
    }
    outcome(
        bad.is_empty(),
        format!(
            "50 operators, worst relative gap {:.3}%, ascent above grid on {ascent_above} {}",
            100.0 * worst,
            bad.join("; ")
        ),
    )
}

fn c10_richness() -> Outcome {
    let mut bad = Vec::new();
    for tol in [1e-10, 1e-8, 1e-6] {
        for d in (2..=16).step_by(2) {
            let check = |kind: GroupKind, expect: usize, bad: &mut Vec<String>| {
                let spec = GroupSpec::new(kind, d).unwrap();
                let got = is_rich(&spec, 50, tol, SEED).unwrap().commutant_dim;
                if got != expect {
                    bad.push(format!("{} d={d} tol={tol:e}: dim {got}", kind.tag()));
                }
            };
            check(GroupKind::SignedPermutations, 1, &mut bad);
            check(GroupKind::BlockSignedPermutations, 4, &mut bad);
            if d <= 12 {
                check(GroupKind::FullOrthogonal, 1, &mut bad);
            }
        }
    }
    outcome(bad.is_empty(), format!("2n=2..16, tol 1e-10..1e-6 {}", bad.join("; ")))
}

fn c11_asymmetry() -> Outcome {
    let start = Instant::now();
    let spec = GroupSpec::new(GroupKind::SignedPermutations, 512).unwrap();
    let est = asym_mc(&spec, 256, 100, 30, SEED).unwrap();
    let floor = 0.15 * 256f64.ln();
    let block = GroupSpec::new(GroupKind::BlockSignedPermutations, 512).unwrap();
    let block_est = asym_mc(&block, 256, 100, 30, SEED).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let pass = est.mean_norm >= floor
        && est.mean_norm <= est.upper_envelope + 3.0 * est.std_error
        && est.rich
        && (block_est.mean_norm - 1.0).abs() <= 1e-12
        && secs < 600.0;
    outcome(
        pass,
        format!(
            "mean {:.4} ± {:.4} (floor {floor:.3}, envelope {:.3}), block mean {}, {secs:.1}s",
            est.mean_norm, est.std_error, est.upper_envelope, block_est.mean_norm
        ),
    )
}

fn c12_sandwich() -> Outcome {
    let mut left_trials = 0;
    let mut left_fail = 0;
    let mut right_fail = 0;
    let mut min_margin = f64::INFINITY;
    let mut first = None;
    for k in 1..=16usize {
        let left = trace_duality_sandwich(k, 63, 0, derive_seed(SEED, "c12-left", k as u64)).unwrap();
        left_trials += left.trials - left.skipped_singular;
        left_fail += left.left_failures;
        let right = trace_duality_sandwich(k, 4, 2000, derive_seed(SEED, "c12-right", k as u64)).unwrap();
        right_fail += right.right_failures + right.left_failures;
        min_margin = min_margin.min(right.min_right_margin);
        first = first.or(left.first_counterexample).or(right.first_counterexample);
    }
    outcome(
        left_fail == 0 && right_fail == 0,
        format!(
            "LEFT on {left_trials} matrices, RIGHT min margin {min_margin:.1} SE {}",
            first.unwrap_or_default()
        ),
    )
}

fn strip_wall_time(csv: &str) -> String {
    csv.lines()
        .map(|l| l.rsplit_once(',').map_or(l, |(head, _)| head))
        .collect::<Vec<_>>()
        .join("\n")
}

fn c13_determinism() -> Outcome {
    let opts = SweepOptions {
        samples: 4,
        restarts: 3,
        qlc_pairs: 500,
        ..SweepOptions::default()
    };
    let budget = Budget {
        per_point_ms: None,
        total_ms: None,
    };
    let mut bad = Vec::new();
    for q in Quantity::ALL {
        let ns: &[usize] = if q == Quantity::Asym { &[2, 4] } else { &[2, 4, 8, 16] };
        let run = || {
            let out = run_sweep(q, ns, SEED, &opts, &budget).unwrap();
            twistlab::emit::to_csv(&out.records).unwrap()
        };
        if strip_wall_time(&run()) != strip_wall_time(&run()) {
            bad.push(q.tag());
        }
    }
    outcome(bad.is_empty(), format!("8 quantities swept twice {}", bad.join(", ")))
}

pub type Check = fn() -> Outcome;

/// All criteria in order, named.
pub const CRITERIA: [(&str, Check); 13] = [
        ("norm identity suite", c1_norm_identities),
        ("unit witness identity", c2_unit_witnesses),
        ("gamma chain", c3_chain),
        ("threshold and nested selection", c4_selection),
        ("rank-one selection", c5_rank_one),
        ("1-summing witness", c6_pi1_witness),
        ("trace witness", c7_trace_witness),
        ("identity-norm growth", c8_identity_growth),
        ("oracle equivalence", c9_oracles),
        ("richness detector", c10_richness),
        ("asymmetry Monte Carlo", c11_asymmetry),
        ("trace-duality sandwich", c12_sandwich),
        ("determinism", c13_determinism),
    ];
