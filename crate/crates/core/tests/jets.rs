use halflie::jets::oracle::{functoriality_suite, inversion_and_bounds_suite, random_invertible_jet, random_jet, random_polymap};
use halflie::jets::{compose, evaluate, invert, jet_norm, jet_of_map, jet_of_polynomial, Jet, JetRecord, TangentPoint};
use halflie::scalar::Rational;
use halflie::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn factorial(j: usize) -> f64 {
    (1..=j).map(|i| i as f64).product()
}

/// Rebases `outer` so that its source is the target of `inner`.
fn chain(outer: &Jet, inner: &Jet) -> Jet {
    Jet::new(inner.target().to_vec(), outer.target().to_vec(), outer.blocks().to_vec()).unwrap()
}

#[test]
fn functoriality_on_random_polynomials() {
    let r = functoriality_suite(&mut ChaCha8Rng::seed_from_u64(1), 200).unwrap();
    assert!(r.max_error <= 1e-10, "{r:?}");
    assert!(r.rational_samples > 0 && r.rational_exact, "{r:?}");
}

#[test]
fn inversion_and_bounds_on_random_jets() {
    let r = inversion_and_bounds_suite(&mut ChaCha8Rng::seed_from_u64(2), 1000).unwrap();
    assert!(r.max_inversion_error <= 1e-9, "{r:?}");
    assert_eq!(r.composition_bound_violations, 0);
    assert_eq!(r.continuity_bound_violations, 0);
    assert_eq!(r.evaluation_bound_violations, 0);
}

#[test]
fn exp_and_log_are_mutually_inverse() {
    let k = 6;
    let exp: Vec<f64> = (1..=k).map(|j| 1.0 / factorial(j)).collect();
    let log: Vec<f64> = (1..=k).map(|j| if j % 2 == 1 { 1.0 } else { -1.0 } / j as f64).collect();
    let je = Jet::scalar(0.0, 1.0, &exp);
    let jl = Jet::scalar(1.0, 0.0, &log);
    let inv = invert(&je).unwrap();
    assert!(inv.max_abs_diff(&jl) < 1e-13);
    assert!(compose(&jl, &je).unwrap().max_abs_diff(&Jet::identity(vec![0.0], k)) < 1e-13);
}

#[test]
fn finite_differences_match_exact_polynomial_jets() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let f = random_polymap(&mut rng, 2, 2, 3);
        let x = vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
        let exact = jet_of_polynomial(&f, &x, 3).unwrap();
        let coarse = jet_of_map(|p: &[f64]| f.eval(p), &x, 3, 2e-2).unwrap().max_abs_diff(&exact);
        let fine = jet_of_map(|p: &[f64]| f.eval(p), &x, 3, 1e-2).unwrap().max_abs_diff(&exact);
        assert!(fine <= 1e-3, "{fine:e}");
        // second order: halving h divides the error by about four
        assert!(fine < 1e-9 || coarse / fine >= 3.5, "{coarse:e} {fine:e}");
    }
}

#[test]
fn tangent_functoriality() {
    // T(g o f) = Tg o Tf as (k-1)-jets at a tangent vector.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let k = rng.random_range(2..=4);
        let f = random_jet(&mut rng, 2, 2, k, 1.0);
        let g = chain(&random_jet(&mut rng, 2, 1, k, 1.0), &f);
        let xv: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xi = TangentPoint::new(f.source().to_vec(), xv).unwrap();
        let tf = evaluate(&f, &xi).unwrap();
        let (y, yv) = tf.target().split_at(2);
        let tg = evaluate(&g, &TangentPoint::new(y.to_vec(), yv.to_vec()).unwrap()).unwrap();
        let lhs = evaluate(&compose(&g, &f).unwrap(), &xi).unwrap();
        let rhs = compose(&tg, &tf).unwrap();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10, "{}", lhs.max_abs_diff(&rhs));
    }
}

#[test]
fn rational_inversion_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let j = random_invertible_jet(&mut rng, 2, 3);
        let q: Jet<Rational> = Jet::from_f64_jet(&j);
        let inv = invert(&q).unwrap();
        assert_eq!(compose(&inv, &q).unwrap(), Jet::identity(q.source().to_vec(), 3));
    }
}

#[test]
fn error_cases() {
    let a = Jet::scalar(0.0, 1.0, &[1.0, 2.0]);
    let b = Jet::scalar(5.0, 0.0, &[1.0, 2.0]);
    assert_eq!(compose(&b, &a), Err(Error::SourceTargetMismatch));
    let c = Jet::scalar(1.0, 0.0, &[1.0]);
    assert!(matches!(compose(&c, &a), Err(Error::OrderMismatch(_))));
    let flat = Jet::scalar(0.0, 0.0, &[0.0, 1.0]);
    assert!(matches!(invert(&flat), Err(Error::SingularLinearPart { .. })));
    assert!(matches!(jet_of_map(|x: &[f64]| x.to_vec(), &[0.0], 2, 1e-9), Err(Error::StepTooSmall { .. })));
    let xi = TangentPoint::new(vec![1.0], vec![1.0]).unwrap();
    assert_eq!(evaluate(&a, &xi), Err(Error::BaseMismatch));
}

#[test]
fn json_roundtrip_preserves_bits() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let j = random_jet(&mut rng, 2, 3, 3, 1.0);
    assert_eq!(Jet::from_json(&j.to_json()).unwrap(), j);
    let mut rec = JetRecord::from(&j);
    rec.order = 2;
    assert!(matches!(Jet::try_from(&rec), Err(Error::OrderMismatch(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn composition_is_associative(seed in any::<u64>(), k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_jet(&mut rng, 2, 2, k, 1.0);
        let g = chain(&random_jet(&mut rng, 2, 2, k, 1.0), &f);
        let h = chain(&random_jet(&mut rng, 2, 1, k, 1.0), &g);
        let a = compose(&h, &compose(&g, &f).unwrap()).unwrap();
        let b = compose(&compose(&h, &g).unwrap(), &f).unwrap();
        prop_assert!(a.max_abs_diff(&b) <= 1e-10 * (1.0 + jet_norm(&a)));
    }

    #[test]
    fn identity_is_neutral(seed in any::<u64>(), k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_jet(&mut rng, 2, 3, k, 1.0);
        let left = compose(&Jet::identity(f.target().to_vec(), k), &f).unwrap();
        let right = compose(&f, &Jet::identity(f.source().to_vec(), k)).unwrap();
        prop_assert!(left.max_abs_diff(&f) <= 1e-14);
        prop_assert!(right.max_abs_diff(&f) <= 1e-14);
    }

    #[test]
    fn inverse_of_inverse(seed in any::<u64>(), k in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_invertible_jet(&mut rng, 2, k);
        let back = invert(&invert(&s).unwrap()).unwrap();
        prop_assert!(back.max_abs_diff(&s) <= 1e-8 * (1.0 + jet_norm(&s)));
    }
}
