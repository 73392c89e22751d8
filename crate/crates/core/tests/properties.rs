use std::sync::Arc;

use markov_dilation::dilation;
use markov_dilation::random;
use markov_dilation::{
    CndFunction, DilationContext, FiniteGroup, GroupAlgebraElement, StepVector, Time,
    WeylPolynomial,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn time() -> impl Strategy<Value = Time> {
    (0i64..=16).prop_map(|k| Time::new(k, 8))
}

fn group() -> impl Strategy<Value = Arc<FiniteGroup>> {
    prop_oneof![
        (1usize..=8).prop_map(|n| FiniteGroup::cyclic(n).unwrap()),
        (3usize..=5).prop_map(|n| FiniteGroup::dihedral(n).unwrap()),
        (1usize..=3).prop_map(|k| FiniteGroup::hypercube(k).unwrap()),
        (2usize..=4).prop_map(|k| FiniteGroup::symmetric(k).unwrap()),
    ]
    .prop_map(Arc::new)
}

/// `c₁·δ + c₂·(1 − cos(2πk/n))` on `Z_n`; both summands are negative definite.
fn cyclic_psi() -> impl Strategy<Value = CndFunction> {
    (2usize..=7, 0.1f64..3.0, 0.0f64..3.0).prop_map(|(n, c1, c2)| {
        let g = Arc::new(FiniteGroup::cyclic(n).unwrap());
        let values = (0..n)
            .map(|k| {
                if k == 0 {
                    0.0
                } else {
                    c1 + c2 * (1.0 - (std::f64::consts::TAU * k as f64 / n as f64).cos())
                }
            })
            .collect();
        CndFunction::new(&g, values, 1e-9).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_algebra_is_a_star_algebra_with_trace(g in group(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::group_algebra_element(&mut rng, &g);
        let b = random::group_algebra_element(&mut rng, &g);
        let c = random::group_algebra_element(&mut rng, &g);
        let lhs = a.mul(&b).unwrap().mul(&c).unwrap();
        let rhs = a.mul(&b.mul(&c).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-12);
        let anti = a.mul(&b).unwrap().adjoint().max_abs_diff(&b.adjoint().mul(&a.adjoint()).unwrap());
        prop_assert!(anti < 1e-12);
        prop_assert!((a.mul(&b).unwrap().trace() - b.mul(&a).unwrap().trace()).norm() < 1e-12);
        prop_assert!(a.adjoint().mul(&a).unwrap().trace().re >= 0.0);
    }

    #[test]
    fn split_recombines(seed in any::<u64>(), u in time(), dim in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random::step_vector(&mut rng, dim, 4);
        let (before, after) = h.split_at(u).unwrap();
        prop_assert!(before.support_end() <= u);
        prop_assert!(after.is_zero() || after.support_start() >= u);
        prop_assert!(before.add(&after).unwrap().approx_eq(&h, 1e-15));
        prop_assert!(before.inner(&after).unwrap().abs() < 1e-15);
    }

    #[test]
    fn conditional_expectation_is_a_contraction(seed in any::<u64>(), u in time(), dim in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random::weyl_polynomial(&mut rng, dim, 4);
        let e = x.conditional_expectation(u).unwrap();
        prop_assert!(e.l2_norm() <= x.l2_norm() + 1e-12);
        prop_assert!(e.is_measurable_before(u));
        let both = x.conditional_expectation(u).unwrap().conditional_expectation_after(u).unwrap();
        let scalar = WeylPolynomial::one(dim).scale(x.expectation());
        prop_assert!(both.l2_distance(&scalar).unwrap() < 1e-12);
    }

    #[test]
    fn l2_distance_is_a_metric(seed in any::<u64>(), dim in 1usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random::weyl_polynomial(&mut rng, dim, 3);
        let y = random::weyl_polynomial(&mut rng, dim, 3);
        let z = random::weyl_polynomial(&mut rng, dim, 3);
        let dxy = x.l2_distance(&y).unwrap();
        prop_assert!((dxy - y.l2_distance(&x).unwrap()).abs() < 1e-12);
        prop_assert!(x.l2_distance(&x).unwrap() < 1e-12);
        prop_assert!(dxy <= x.l2_distance(&z).unwrap() + z.l2_distance(&y).unwrap() + 1e-12);
    }

    #[test]
    fn markov_identity_for_mixed_psi(psi in cyclic_psi(), a in time(), b in time(), seed in any::<u64>()) {
        let (u, t) = (a.min(b), a.max(b));
        let ctx = DilationContext::new(psi, 1e-9, Some(Time::new(2, 1))).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random::group_algebra_element(&mut rng, ctx.group());
        let (lhs, rhs) = dilation::markov_sides(&ctx, &x, u, t).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() <= 1e-9);
        let (lhs, rhs) = dilation::reversed_sides(&ctx, &x, u, t).unwrap();
        prop_assert!(lhs.distance(&rhs).unwrap() <= 1e-9);
    }

    #[test]
    fn pi_t_is_a_trace_preserving_homomorphism(g in group(), t in time(), seed in any::<u64>()) {
        let ctx = DilationContext::new(CndFunction::delta(&g, 0.7).unwrap(), 1e-9, None).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::group_algebra_element(&mut rng, &g);
        let b = random::group_algebra_element(&mut rng, &g);
        let pa = ctx.pi_t(t, &a).unwrap();
        let pb = ctx.pi_t(t, &b).unwrap();
        let pab = ctx.pi_t(t, &a.mul(&b).unwrap()).unwrap();
        prop_assert!(pab.distance(&pa.mul(&pb).unwrap()).unwrap() <= 1e-9);
        prop_assert!((pa.trace() - a.trace()).norm() <= 1e-12);
        let unit = ctx.pi_t(t, &GroupAlgebraElement::unit(&g)).unwrap();
        prop_assert!((unit.trace().re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn indicator_norm(a in time(), b in time(), v in prop::collection::vec(-2.0f64..2.0, 1..4)) {
        let (lo, hi) = (a.min(b), a.max(b));
        let h = StepVector::indicator(lo, hi, &v).unwrap();
        let len = *(hi - lo).numer() as f64 / *(hi - lo).denom() as f64;
        let expected = len * v.iter().map(|x| x * x).sum::<f64>();
        prop_assert!((h.norm_sq() - expected).abs() < 1e-12);
        let e = WeylPolynomial::exp_i(h).expectation();
        prop_assert!((e.re - (-expected / 2.0).exp()).abs() < 1e-15);
    }
}
