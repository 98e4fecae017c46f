use proptest::prelude::*;
use twistlab_core::opnorm::{opnorm_lower, opnorm_upper};
use twistlab_core::space::{block_symmetry_apply, f_map, kp_norm};
use twistlab_core::split::{gamma_rms_chain, gamma_threshold_subset, uniform_curve_vector};
use twistlab_core::{Block, SplitOperator, TwistedVector};

fn coord() -> impl Strategy<Value = f64> {
    prop_oneof![
        1 => Just(0.0),
        6 => -10.0..10.0f64,
        1 => -1e-4..1e-4f64,
    ]
}

fn vector_of(n: usize) -> impl Strategy<Value = TwistedVector> {
    (prop::collection::vec(coord(), n), prop::collection::vec(coord(), n))
        .prop_map(|(a, b)| TwistedVector::new(a, b).unwrap())
}

fn vector(max_n: usize) -> impl Strategy<Value = TwistedVector> {
    (1..=max_n).prop_flat_map(vector_of)
}

fn split(n: usize) -> impl Strategy<Value = SplitOperator> {
    prop::collection::vec(prop::array::uniform4(-1.0..1.0f64), n)
        .prop_map(|bs| SplitOperator::new(bs.into_iter().map(|[a, b, c, d]| Block::new(a, b, c, d)).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn homogeneity(x in vector(32), lambda in -50.0..50.0f64) {
        let lhs = kp_norm(&x.scaled(lambda));
        let rhs = lambda.abs() * kp_norm(&x);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn identity_curve(u in prop::collection::vec(coord(), 1..40)) {
        let x = TwistedVector::on_identity_curve(&u).unwrap();
        let l2 = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((kp_norm(&x) - l2).abs() <= 1e-10 * l2.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn block_invariance(x in vector(24), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::Rng;
        let n = x.dim();
        let mut rng = twistlab_core::seeding::rng(seed);
        let signs: Vec<i8> = (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let y = block_symmetry_apply(&x, &signs, &perm).unwrap();
        let (nx, ny) = (kp_norm(&x), kp_norm(&y));
        prop_assert!((nx - ny).abs() <= 1e-12 * nx.max(1.0));
    }

    #[test]
    fn f_is_positively_homogeneous(b in prop::collection::vec(coord(), 1..30), mu in 1e-3..1e3f64) {
        let fb = f_map(&b).unwrap();
        let scaled: Vec<f64> = b.iter().map(|v| mu * v).collect();
        let fs = f_map(&scaled).unwrap();
        let err: f64 = fs.iter().zip(&fb).map(|(p, q)| (p - mu * q).powi(2)).sum::<f64>().sqrt();
        let base: f64 = fb.iter().map(|v| v * v).sum::<f64>().sqrt() + b.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!(err <= 1e-10 * (mu * base).max(1e-300));
    }

    #[test]
    fn split_apply_is_linear(op in split(6), x in vector_of(6), y in vector_of(6)) {
        let lhs = op.apply(&x.add(&y).unwrap()).unwrap();
        let rhs = op.apply(&x).unwrap().add(&op.apply(&y).unwrap()).unwrap();
        for (p, q) in lhs.to_flat().iter().zip(rhs.to_flat()) {
            prop_assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
        }
    }

    #[test]
    fn unit_vector_witnesses(op in (1..12usize).prop_flat_map(split)) {
        let n = op.n();
        for j in 0..n {
            let b = op.block(j);
            let te = kp_norm(&op.apply(&TwistedVector::e(n, j)).unwrap());
            let tf = kp_norm(&op.apply(&TwistedVector::f(n, j)).unwrap());
            prop_assert!((te - (b.alpha.abs() + b.gamma.abs())).abs() <= 1e-12);
            prop_assert!((tf - (b.delta.abs() + b.beta.abs())).abs() <= 1e-12);
        }
    }

    #[test]
    fn chain_and_threshold(op in split(64), k in 2..64usize) {
        let subset: Vec<usize> = (0..k).collect();
        let (lhs, rhs) = gamma_rms_chain(&op, &subset).unwrap();
        prop_assert!(lhs <= rhs + 1e-9);
        let x = uniform_curve_vector(&subset, 64).unwrap();
        prop_assert!((kp_norm(&x) - 1.0).abs() < 1e-12);
        let m = opnorm_upper(&op).value;
        let rep = gamma_threshold_subset(&op, &subset, m).unwrap();
        prop_assert!(rep.output_set.len() >= k.div_ceil(2));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lower_never_exceeds_upper(op in (1..8usize).prop_flat_map(split), seed in any::<u64>()) {
        let lo = opnorm_lower(&op, 4, seed);
        let up = opnorm_upper(&op);
        prop_assert!(lo.value <= up.value + 1e-9);
        prop_assert!(op.entry_lower_bound() <= lo.value + 1e-9);
        let w = lo.witness.unwrap();
        let ratio = kp_norm(&op.apply(&w).unwrap()) / kp_norm(&w);
        prop_assert!(ratio >= lo.value - 1e-9);
    }

    #[test]
    fn lower_bound_scales(op in (1..6usize).prop_flat_map(split), lambda in -4.0..4.0f64, seed in any::<u64>()) {
        prop_assume!(lambda.abs() > 1e-3);
        let a = opnorm_lower(&op, 3, seed).value;
        let b = opnorm_lower(&op.scaled(lambda), 3, seed).value;
        prop_assert!((b - lambda.abs() * a).abs() <= 1e-9 * b.max(1.0), "{a} {b} {lambda}");
    }
}
