//! Seeded random instances for the property sweeps.

use std::sync::Arc;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::Rng;

use crate::crossed::{CrossedElement, DilationContext};
use crate::group::{FiniteGroup, GroupAlgebraElement};
use crate::step::{StepVector, Time};
use crate::weyl::WeylPolynomial;

/// Breakpoints are drawn from `{k/8 : 1 <= k <= 16}`.
const GRID_DENOM: i64 = 8;
const GRID_MAX: i64 = 16;

pub fn complex<R: Rng>(rng: &mut R) -> Complex64 {
    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

pub fn dyadic_time<R: Rng>(rng: &mut R) -> Time {
    Time::new(rng.gen_range(0..=GRID_MAX), GRID_DENOM)
}

/// Step function with up to `max_pieces` pieces.
pub fn step_vector<R: Rng>(rng: &mut R, dim: usize, max_pieces: usize) -> StepVector {
    let m = rng.gen_range(1..=max_pieces.max(1));
    let mut ends: Vec<i64> = sample(rng, GRID_MAX as usize, m)
        .into_iter()
        .map(|k| k as i64 + 1)
        .collect();
    ends.sort_unstable();
    let pieces = ends
        .iter()
        .map(|_| (0..dim).map(|_| rng.gen_range(-0.8..0.8)).collect())
        .collect();
    StepVector::from_pieces(
        dim,
        ends.into_iter().map(|k| Time::new(k, GRID_DENOM)).collect(),
        pieces,
    )
    .expect("generated breakpoints are increasing")
}

/// Step function supported in `[0, u]`.
pub fn step_vector_before<R: Rng>(
    rng: &mut R,
    dim: usize,
    max_pieces: usize,
    u: Time,
) -> StepVector {
    step_vector(rng, dim, max_pieces)
        .split_at(u)
        .expect("u is nonnegative")
        .0
}

pub fn weyl_polynomial<R: Rng>(rng: &mut R, dim: usize, max_terms: usize) -> WeylPolynomial {
    let n = rng.gen_range(1..=max_terms.max(1));
    let terms: Vec<_> = (0..n)
        .map(|_| (complex(rng), step_vector(rng, dim, 3)))
        .collect();
    WeylPolynomial::from_terms(dim, terms).expect("dimensions agree")
}

/// Dense element with every coefficient drawn at random.
pub fn group_algebra_element<R: Rng>(rng: &mut R, group: &Arc<FiniteGroup>) -> GroupAlgebraElement {
    GroupAlgebraElement::from_coeffs(group, group.elements().map(|s| (s, complex(rng))))
}

pub fn crossed_element<R: Rng>(
    rng: &mut R,
    ctx: &Arc<DilationContext>,
    max_fibers: usize,
    max_terms: usize,
) -> CrossedElement {
    let n = ctx.group().order();
    let k = rng.gen_range(1..=max_fibers.clamp(1, n));
    let fibers: Vec<_> = sample(rng, n, k)
        .into_iter()
        .map(|s| (s, weyl_polynomial(rng, ctx.dim(), max_terms)))
        .collect();
    CrossedElement::from_fibers(ctx, fibers)
}
