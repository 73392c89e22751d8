//! Independent oracles: closed forms, isomorphism searches and Monte Carlo.

use std::collections::HashMap;
use std::sync::Arc;

use markov_dilation::dilation;
use markov_dilation::mc::{self, PathSample};
use markov_dilation::{
    CndFunction, DilationContext, FiniteGroup, GroupAlgebraElement, StepVector, Time,
    WeylPolynomial,
};

fn r(n: i64, d: i64) -> Time {
    Time::new(n, d)
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

fn is_isomorphism(g: &FiniteGroup, h: &FiniteGroup, phi: &[usize]) -> bool {
    g.elements().all(|a| {
        g.elements()
            .all(|b| phi[g.mul(a, b)] == h.mul(phi[a], phi[b]))
    })
}

#[test]
fn dihedral3_is_symmetric3() {
    let d3 = FiniteGroup::dihedral(3).unwrap();
    let s3 = FiniteGroup::symmetric(3).unwrap();
    let found = permutations(6)
        .into_iter()
        .find(|phi| is_isomorphism(&d3, &s3, phi));
    let phi = found.expect("D3 and S3 are isomorphic");
    assert_eq!(phi[d3.identity()], s3.identity());
    assert!(!d3.is_abelian() && !s3.is_abelian());

    // the delta function is invariant under any isomorphism, so the two
    // dilations must produce the same residual profile
    let ctx = |g: FiniteGroup| {
        let g = Arc::new(g);
        DilationContext::new(CndFunction::delta(&g, 1.0).unwrap(), 1e-9, None).unwrap()
    };
    let (a, b) = (ctx(d3), ctx(s3));
    assert_eq!(a.dim(), 5);
    assert_eq!(b.dim(), 5);
    for t in [0.25, 1.0, 2.0] {
        let x = a
            .semigroup(t, &GroupAlgebraElement::basis(a.group(), 1))
            .unwrap();
        let y = b
            .semigroup(t, &GroupAlgebraElement::basis(b.group(), phi[1]))
            .unwrap();
        assert!((x.coeff(1) - y.coeff(phi[1])).norm() < 1e-15);
    }
}

#[test]
fn dihedral_matches_permutation_model() {
    for n in 3..=6 {
        // symmetries of the n-gon acting on vertices
        let compose =
            |p: &[usize], q: &[usize]| -> Vec<usize> { q.iter().map(|&i| p[i]).collect() };
        let rot: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
        let refl: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
        let mut elems = Vec::with_capacity(2 * n);
        for j in 0..2 {
            for k in 0..n {
                let mut p: Vec<usize> = (0..n).collect();
                for _ in 0..k {
                    p = compose(&rot, &p);
                }
                if j == 1 {
                    p = compose(&p, &refl);
                }
                elems.push(p);
            }
        }
        let index: HashMap<Vec<usize>, usize> = elems
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, p)| (p, i))
            .collect();
        assert_eq!(index.len(), 2 * n);
        let table: Vec<Vec<usize>> = elems
            .iter()
            .map(|a| elems.iter().map(|b| index[&compose(a, b)]).collect())
            .collect();
        let model = FiniteGroup::from_table(table).unwrap();
        let dn = FiniteGroup::dihedral(n).unwrap();
        let identity: Vec<usize> = (0..2 * n).collect();
        assert!(
            is_isomorphism(&dn, &model, &identity),
            "D{n} disagrees with the n-gon model"
        );
    }
}

#[test]
fn z2_closed_forms() {
    let g = Arc::new(FiniteGroup::cyclic(2).unwrap());
    let psi = CndFunction::new(&g, vec![0.0, 1.0], 1e-12).unwrap();
    let cocycle = psi.build_cocycle(1e-10).unwrap();
    assert_eq!(cocycle.dim(), 1);
    assert!((cocycle.b(1)[0].abs() - 1.0).abs() < 1e-12);
    let ctx = DilationContext::new(psi, 1e-9, Some(r(2, 1))).unwrap();
    let lam = GroupAlgebraElement::basis(&g, 1);
    for (u, t) in dilation::forward_pairs(&dilation::default_times()) {
        let (lhs, _) = dilation::markov_sides(&ctx, &lam, u, t).unwrap();
        let dt = *(t - u).numer() as f64 / *(t - u).denom() as f64;
        let c = lhs.fiber(1).terms()[0].coeff;
        assert!((c.re - (-dt).exp()).abs() < 1e-12, "u={u} t={t}");
    }
}

#[test]
fn exponential_expectation() {
    // ‖1_(1/2,1] ⊗ h‖² = 1 when ‖h‖² = 2
    let h = [1.0, 1.0];
    let x = WeylPolynomial::exp_i(StepVector::indicator(r(1, 2), r(1, 1), &h).unwrap());
    assert!((x.expectation().re - (-0.5f64).exp()).abs() < 1e-15);
    let cmp = mc::cross_validate_expectation(&x, 200_000, 3).unwrap();
    assert!(!cmp.flagged, "{cmp:?}");
    assert!((cmp.estimate[0] - 0.6065306597).abs() < 5.0 * cmp.stderr[0]);
}

#[test]
fn isonormal_second_moment() {
    let h = StepVector::from_pieces(
        2,
        vec![r(1, 4), r(1, 1)],
        vec![vec![0.5, -1.0], vec![1.5, 0.25]],
    )
    .unwrap();
    let p = PathSample::new(2, h.ends().to_vec(), 1_000_000, 11);
    let stats = p.estimate_w_squared(&h).unwrap();
    let z = mc::z_score(stats.mean.re, h.norm_sq(), stats.stderr_re());
    assert!(
        z <= 5.0,
        "mean {} vs {} (z = {z})",
        stats.mean.re,
        h.norm_sq()
    );
}

#[test]
fn stderr_scales_like_inverse_root() {
    let x = WeylPolynomial::exp_i(StepVector::indicator(r(0, 1), r(1, 1), &[0.7, -0.4]).unwrap());
    let se: Vec<f64> = [10_000, 100_000, 1_000_000]
        .iter()
        .map(|&n| mc::cross_validate_expectation(&x, n, 5).unwrap().stderr[0])
        .collect();
    for w in se.windows(2) {
        let ratio = w[0] / w[1];
        let ideal = 10f64.sqrt();
        assert!(ratio > ideal / 2.0 && ratio < ideal * 2.0, "ratio {ratio}");
    }
}

#[test]
fn conditional_pairing_closed_form() {
    let g = Arc::new(FiniteGroup::cyclic(3).unwrap());
    let psi = CndFunction::delta(&g, 1.0).unwrap();
    let ctx = DilationContext::new(psi, 1e-9, None).unwrap();
    let (u, t) = (r(1, 2), r(1, 1));
    let s = 1;
    let b = ctx.cocycle().b(s);
    let x = ctx.cocycle_weyl(s, r(0, 1), t).unwrap();
    let probe = StepVector::indicator(r(0, 1), u, &b).unwrap();
    let rep = mc::cross_validate_conditional(&x, u, &[probe], 100_000, 9).unwrap();

    // ‖√2·1_[0,u]⊗b + 1_[0,u]⊗b‖² = (√2 + 1)² u ψ(s)
    let psi_s = ctx.psi().value(s);
    let expected = (-0.5 * psi_s).exp() * (-(2f64.sqrt() + 1.0).powi(2) * 0.5 * psi_s / 2.0).exp();
    let check = &rep.probes[0];
    assert!((check.pairing.symbolic[0] - expected).abs() < 1e-12);
    assert!((check.symbolic_direct[0] - expected).abs() < 1e-12);
    assert!(rep.flagged == 0, "{rep:?}");

    let late = StepVector::indicator(r(1, 4), r(3, 4), &b).unwrap();
    assert!(mc::cross_validate_conditional(&x, u, &[late], 1000, 0).is_err());
}

#[test]
fn hamming_cocycle_is_coordinatewise() {
    let g = Arc::new(FiniteGroup::hypercube(3).unwrap());
    let psi = CndFunction::hamming(&g).unwrap();
    let c = psi.build_cocycle(1e-10).unwrap();
    assert_eq!(c.dim(), 3);
    for s in g.elements() {
        for q in g.elements() {
            let bs = c.b(s);
            let bq = c.b(q);
            let ip: f64 = bs.iter().zip(&bq).map(|(x, y)| x * y).sum();
            // ⟨b(s), b(q)⟩ counts shared coordinates
            assert!((ip - (s & q).count_ones() as f64).abs() < 1e-9);
        }
    }
}
