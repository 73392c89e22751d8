//! Verification sweeps for the dilation identity and the structural
//! properties it rests on, collected into a [`DilationReport`].
//!
//! The forward identity is `E_u π_t = π_u T_{t−u}` for `0 ≤ u ≤ t` and the
//! reversed one is `E_u π_t = π_u T_{u−t}` for `0 ≤ t ≤ u ≤ C`. Residuals are
//! the largest fiberwise `L²(Ω)` distance between the two sides.

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::crossed::{CrossedElement, DilationContext};
use crate::error::{Error, Result};
use crate::group::GroupAlgebraElement;
use crate::mc::{self, Comparison, ConditionalReport, IncrementCheck, PathSample};
use crate::random;
use crate::step::{time_to_f64, StepVector, Time};
use crate::weyl::WeylPolynomial;

pub const SCHEMA_VERSION: u32 = 1;

/// Number of random dense inputs added to the basis elements by default.
pub const DEFAULT_RANDOM_INPUTS: usize = 5;

/// Residual tolerances of the structural suites.
pub mod tol {
    pub const COCYCLE: f64 = 1e-9;
    pub const ORTHOGONAL: f64 = 1e-10;
    pub const SCHOENBERG: f64 = 1e-10;
    pub const ALGEBRA: f64 = 1e-10;
    pub const POSITIVITY: f64 = 1e-12;
    pub const TRACE: f64 = 1e-10;
    pub const PLANCHEREL: f64 = 1e-12;
    pub const TRACE_PRESERVATION: f64 = 1e-12;
    pub const HOMOMORPHISM: f64 = 1e-9;
}

/// `{0, 1/4, 1/2, 1, 3/2, 2}`.
pub fn default_times() -> Vec<Time> {
    [(0, 1), (1, 4), (1, 2), (1, 1), (3, 2), (2, 1)]
        .into_iter()
        .map(|(n, d)| Time::new(n, d))
        .collect()
}

/// All pairs `(u, t)` from `times` with `u <= t`.
pub fn forward_pairs(times: &[Time]) -> Vec<(Time, Time)> {
    let mut out = Vec::new();
    for &u in times {
        for &t in times {
            if u <= t {
                out.push((u, t));
            }
        }
    }
    out
}

/// All pairs `(t, u)` from `times` with `t <= u <= horizon`.
pub fn reversed_pairs(times: &[Time], horizon: Time) -> Vec<(Time, Time)> {
    let within: Vec<Time> = times.iter().copied().filter(|&t| t <= horizon).collect();
    forward_pairs(&within)
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct CheckParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub u: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub kind: String,
    pub params: CheckParams,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(
        kind: impl Into<String>,
        params: CheckParams,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            kind: kind.into(),
            params,
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarloSection {
    pub samples: usize,
    pub seed: u64,
    pub expectation: Vec<Comparison>,
    pub conditional: Vec<ConditionalReport>,
    pub increments: IncrementCheck,
    /// Fraction of comparisons with every z-score at most 5.
    pub fraction_within: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DilationReport {
    pub schema_version: u32,
    pub group: String,
    pub psi: Vec<f64>,
    pub cocycle_dim: usize,
    pub checks: Vec<Check>,
    pub max_residual: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monte_carlo: Option<MonteCarloSection>,
    pub wall_time_secs: f64,
}

impl DilationReport {
    pub fn new(ctx: &DilationContext) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            group: ctx.group().name().to_string(),
            psi: ctx.psi().values().to_vec(),
            cocycle_dim: ctx.dim(),
            checks: Vec::new(),
            max_residual: 0.0,
            pass: true,
            monte_carlo: None,
            wall_time_secs: 0.0,
        }
    }

    pub fn push(&mut self, check: Check) {
        self.max_residual = self.max_residual.max(check.residual);
        if check.residual.is_nan() {
            self.max_residual = f64::NAN;
        }
        self.pass &= check.pass;
        self.checks.push(check);
    }

    pub fn extend(&mut self, other: DilationReport) {
        for c in other.checks {
            self.push(c);
        }
        if let Some(mc) = other.monte_carlo {
            self.set_monte_carlo(mc);
        }
        self.wall_time_secs += other.wall_time_secs;
    }

    pub fn set_monte_carlo(&mut self, mc: MonteCarloSection) {
        self.pass &= mc.pass;
        self.monte_carlo = Some(mc);
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    /// Worst residual among checks of the given kind.
    pub fn worst(&self, kind: &str) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.kind == kind)
            .map(|c| c.residual)
            .reduce(f64::max)
    }
}

/// A group-algebra input with a label for the report.
#[derive(Clone, Debug)]
pub struct Input {
    pub label: String,
    pub element: GroupAlgebraElement,
}

/// `λ_s` for every `s`, then `count` dense random elements.
pub fn default_inputs(ctx: &DilationContext, count: usize, seed: u64) -> Vec<Input> {
    let g = ctx.group();
    let mut out: Vec<Input> = g
        .elements()
        .map(|s| Input {
            label: format!("lambda_{s}"),
            element: GroupAlgebraElement::basis(g, s),
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for k in 0..count {
        out.push(Input {
            label: format!("random_{k}"),
            element: random::group_algebra_element(&mut rng, g),
        });
    }
    out
}

/// Consecutive pairs `(inputs[i], inputs[i+1])`, wrapping around. These feed
/// the product checks, where `π_t(ab)` is formed as `π_t(a) π_t(b)` and so
/// goes through the action `α`.
fn consecutive_pairs(n: usize) -> Vec<(usize, usize)> {
    if n == 0 {
        return Vec::new();
    }
    (0..n).map(|i| (i, (i + 1) % n)).collect()
}

fn time_params(input: &str, u: Time, t: Time) -> CheckParams {
    CheckParams {
        input: Some(input.to_string()),
        u: Some(u.to_string()),
        t: Some(t.to_string()),
        samples: None,
    }
}

fn residual_or_inf(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::INFINITY)
}

enum Task {
    Single(usize),
    Product(usize, usize),
}

/// Left and right sides of the forward identity for one input.
pub fn markov_sides(
    ctx: &Arc<DilationContext>,
    a: &GroupAlgebraElement,
    u: Time,
    t: Time,
) -> Result<(CrossedElement, CrossedElement)> {
    let lhs = ctx.pi_t(t, a)?.conditional_expectation(u)?;
    let rhs = ctx.pi_t(u, &ctx.semigroup(time_to_f64(t - u), a)?)?;
    Ok((lhs, rhs))
}

fn markov_product_residual(
    ctx: &Arc<DilationContext>,
    a: &GroupAlgebraElement,
    b: &GroupAlgebraElement,
    u: Time,
    t: Time,
) -> Result<f64> {
    let lhs = ctx
        .pi_t(t, a)?
        .mul(&ctx.pi_t(t, b)?)?
        .conditional_expectation(u)?;
    let rhs = ctx.pi_t(u, &ctx.semigroup(time_to_f64(t - u), &a.mul(b)?)?)?;
    lhs.distance(&rhs)
}

/// Left and right sides of the reversed identity for one input.
pub fn reversed_sides(
    ctx: &Arc<DilationContext>,
    a: &GroupAlgebraElement,
    t: Time,
    u: Time,
) -> Result<(CrossedElement, CrossedElement)> {
    let lhs = ctx.pi_t_reversed(t, a)?.conditional_expectation_after(u)?;
    let rhs = ctx.pi_t_reversed(u, &ctx.semigroup(time_to_f64(u - t), a)?)?;
    Ok((lhs, rhs))
}

fn reversed_product_residual(
    ctx: &Arc<DilationContext>,
    a: &GroupAlgebraElement,
    b: &GroupAlgebraElement,
    t: Time,
    u: Time,
) -> Result<f64> {
    let lhs = ctx
        .pi_t_reversed(t, a)?
        .mul(&ctx.pi_t_reversed(t, b)?)?
        .conditional_expectation_after(u)?;
    let rhs = ctx.pi_t_reversed(u, &ctx.semigroup(time_to_f64(u - t), &a.mul(b)?)?)?;
    lhs.distance(&rhs)
}

/// Checks `E_u π_t(a) = π_u T_{t−u}(a)` for every input and every pair
/// `(u, t)`, and the same identity for products of consecutive inputs.
pub fn verify_markov(
    ctx: &Arc<DilationContext>,
    times: &[(Time, Time)],
    inputs: &[Input],
) -> Result<DilationReport> {
    for &(u, t) in times {
        if u < Time::default() || u > t {
            return Err(Error::InvalidTimes(u, t));
        }
    }
    let start = std::time::Instant::now();
    let tasks = build_tasks(inputs.len());
    let jobs: Vec<(&Task, Time, Time)> = tasks
        .iter()
        .flat_map(|task| times.iter().map(move |&(u, t)| (task, u, t)))
        .collect();
    let tol = ctx.tolerance();
    let checks: Vec<Check> = jobs
        .par_iter()
        .map(|&(task, u, t)| match *task {
            Task::Single(i) => {
                let r =
                    markov_sides(ctx, &inputs[i].element, u, t).and_then(|(l, r)| l.distance(&r));
                Check::new(
                    "markov",
                    time_params(&inputs[i].label, u, t),
                    residual_or_inf(r),
                    tol,
                )
            }
            Task::Product(i, j) => {
                let r = markov_product_residual(ctx, &inputs[i].element, &inputs[j].element, u, t);
                let label = format!("{}*{}", inputs[i].label, inputs[j].label);
                Check::new(
                    "markov_product",
                    time_params(&label, u, t),
                    residual_or_inf(r),
                    tol,
                )
            }
        })
        .collect();
    let mut report = DilationReport::new(ctx);
    checks.into_iter().for_each(|c| report.push(c));
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Checks `E_u π_t(a) = π_u T_{u−t}(a)` for pairs `(t, u)` with
/// `0 <= t <= u <= C`.
pub fn verify_reversed(
    ctx: &Arc<DilationContext>,
    times: &[(Time, Time)],
    inputs: &[Input],
) -> Result<DilationReport> {
    let horizon = ctx.horizon().ok_or(Error::MissingHorizon)?;
    for &(t, u) in times {
        if t < Time::default() || t > u {
            return Err(Error::InvalidTimes(t, u));
        }
        if u > horizon {
            return Err(Error::BeyondHorizon { time: u, horizon });
        }
    }
    let start = std::time::Instant::now();
    let tasks = build_tasks(inputs.len());
    let jobs: Vec<(&Task, Time, Time)> = tasks
        .iter()
        .flat_map(|task| times.iter().map(move |&(t, u)| (task, t, u)))
        .collect();
    let tol = ctx.tolerance();
    let checks: Vec<Check> = jobs
        .par_iter()
        .map(|&(task, t, u)| match *task {
            Task::Single(i) => {
                let r =
                    reversed_sides(ctx, &inputs[i].element, t, u).and_then(|(l, r)| l.distance(&r));
                Check::new(
                    "reversed",
                    time_params(&inputs[i].label, u, t),
                    residual_or_inf(r),
                    tol,
                )
            }
            Task::Product(i, j) => {
                let r =
                    reversed_product_residual(ctx, &inputs[i].element, &inputs[j].element, t, u);
                let label = format!("{}*{}", inputs[i].label, inputs[j].label);
                Check::new(
                    "reversed_product",
                    time_params(&label, u, t),
                    residual_or_inf(r),
                    tol,
                )
            }
        })
        .collect();
    let mut report = DilationReport::new(ctx);
    checks.into_iter().for_each(|c| report.push(c));
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

fn build_tasks(n: usize) -> Vec<Task> {
    (0..n)
        .map(Task::Single)
        .chain(
            consecutive_pairs(n)
                .into_iter()
                .map(|(i, j)| Task::Product(i, j)),
        )
        .collect()
}

type Property = (
    &'static str,
    f64,
    Box<dyn Fn(&mut ChaCha8Rng) -> Result<f64> + Sync>,
);

fn dist(x: &WeylPolynomial, y: &WeylPolynomial) -> Result<f64> {
    x.l2_distance(y)
}

fn properties(ctx: &Arc<DilationContext>) -> Vec<Property> {
    let d = ctx.dim();
    let g = ctx.group().clone();
    let n = g.order();
    let mut props: Vec<Property> = Vec::new();

    // cocycle (deterministic; evaluated once per sample for uniformity)
    {
        let c = ctx.clone();
        props.push((
            "cocycle_law",
            tol::COCYCLE,
            Box::new(move |_| Ok(c.cocycle().cocycle_law_residual(c.group()))),
        ));
        let c = ctx.clone();
        props.push((
            "psi_norm",
            tol::COCYCLE,
            Box::new(move |_| Ok(c.cocycle().norm_residual(c.psi()))),
        ));
        let c = ctx.clone();
        props.push((
            "pi_orthogonal",
            tol::ORTHOGONAL,
            Box::new(move |_| Ok(c.cocycle().orthogonality_residual())),
        ));
        let c = ctx.clone();
        props.push((
            "pi_s_homomorphism",
            tol::COCYCLE,
            Box::new(move |_| Ok(c.cocycle().homomorphism_residual(c.group()))),
        ));
        let c = ctx.clone();
        props.push((
            "gram_consistency",
            tol::COCYCLE,
            Box::new(move |_| Ok(c.cocycle().gram_residual(c.psi()))),
        ));
        let c = ctx.clone();
        props.push((
            "schoenberg",
            tol::SCHOENBERG,
            Box::new(move |_| {
                Ok(crate::cocycle::SCHOENBERG_TIMES
                    .iter()
                    .map(|&t| (-c.psi().schoenberg_min_eigenvalue(t)).max(0.0))
                    .fold(0.0, f64::max))
            }),
        ));
        let c = ctx.clone();
        props.push((
            "cnd_zero_sum",
            tol::SCHOENBERG,
            Box::new(move |rng| {
                let mut v: Vec<Complex64> = (0..n).map(|_| random::complex(rng)).collect();
                let mean = v.iter().sum::<Complex64>() / n as f64;
                v.iter_mut().for_each(|x| *x -= mean);
                Ok(c.psi().quadratic_form(&v).re.max(0.0))
            }),
        ));
    }

    // Weyl algebra
    props.push((
        "weyl_associativity",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let (x, y, z) = (
                random::weyl_polynomial(rng, d, 3),
                random::weyl_polynomial(rng, d, 3),
                random::weyl_polynomial(rng, d, 3),
            );
            dist(&x.mul(&y)?.mul(&z)?, &x.mul(&y.mul(&z)?)?)
        }),
    ));
    props.push((
        "weyl_commutativity",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let (x, y) = (
                random::weyl_polynomial(rng, d, 3),
                random::weyl_polynomial(rng, d, 3),
            );
            dist(&x.mul(&y)?, &y.mul(&x)?)
        }),
    ));
    props.push((
        "weyl_adjoint",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let (x, y) = (
                random::weyl_polynomial(rng, d, 3),
                random::weyl_polynomial(rng, d, 3),
            );
            let anti = dist(&x.mul(&y)?.adjoint(), &y.adjoint().mul(&x.adjoint())?)?;
            Ok(anti.max(dist(&x.adjoint().adjoint(), &x)?))
        }),
    ));
    props.push((
        "expectation_positive",
        tol::POSITIVITY,
        Box::new(move |rng| {
            let x = random::weyl_polynomial(rng, d, 4);
            let e = x.adjoint().mul(&x)?.expectation();
            Ok((-e.re).max(0.0).max(e.im.abs()))
        }),
    ));
    props.push((
        "expectation_disjoint_product",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let u = random::dyadic_time(rng);
            let x = random::weyl_polynomial(rng, d, 3).conditional_expectation(u)?;
            let y = random::weyl_polynomial(rng, d, 3).conditional_expectation_after(u)?;
            Ok((x.mul(&y)?.expectation() - x.expectation() * y.expectation()).norm())
        }),
    ));
    props.push((
        "conditional_idempotent",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let u = random::dyadic_time(rng);
            let x = random::weyl_polynomial(rng, d, 3);
            let once = x.conditional_expectation(u)?;
            dist(&once.conditional_expectation(u)?, &once)
        }),
    ));
    props.push((
        "conditional_tower",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let (u, t) = (random::dyadic_time(rng), random::dyadic_time(rng));
            let x = random::weyl_polynomial(rng, d, 3);
            let lhs = x.conditional_expectation(t)?.conditional_expectation(u)?;
            dist(&lhs, &x.conditional_expectation(u.min(t))?)
        }),
    ));
    props.push((
        "conditional_weight_preserving",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let u = random::dyadic_time(rng);
            let x = random::weyl_polynomial(rng, d, 3);
            Ok((x.conditional_expectation(u)?.expectation() - x.expectation()).norm())
        }),
    ));
    props.push((
        "conditional_module",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let u = random::dyadic_time(rng);
            let x = random::weyl_polynomial(rng, d, 3);
            let gp = random::weyl_polynomial(rng, d, 2).conditional_expectation(u)?;
            dist(
                &gp.mul(&x)?.conditional_expectation(u)?,
                &gp.mul(&x.conditional_expectation(u)?)?,
            )
        }),
    ));
    props.push((
        "conditional_independence",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let (a, b) = (random::dyadic_time(rng), random::dyadic_time(rng));
            let (u, t) = (a.min(b), a.max(b));
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = WeylPolynomial::exp_i(StepVector::indicator(u, t, &v)?);
            dist(
                &x.conditional_expectation(u)?,
                &WeylPolynomial::one(d).scale(x.expectation()),
            )
        }),
    ));
    props.push((
        "martingale_support",
        0.0,
        Box::new(move |rng| {
            let (a, b) = (random::dyadic_time(rng), random::dyadic_time(rng));
            let (u, t) = (a.min(b), a.max(b));
            let v: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = WeylPolynomial::exp_i(StepVector::indicator(Time::default(), t, &v)?);
            Ok(if x.conditional_expectation(u)?.is_measurable_before(u) {
                0.0
            } else {
                1.0
            })
        }),
    ));

    // action α
    let c = ctx.clone();
    props.push((
        "alpha_action",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let (s, r) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let x = random::weyl_polynomial(rng, d, 3);
            let composed = dist(
                &c.alpha(s, &c.alpha(r, &x)),
                &c.alpha(c.group().mul(s, r), &x),
            )?;
            let integral = (c.alpha(s, &x).expectation() - x.expectation()).norm();
            Ok(composed.max(integral))
        }),
    ));

    // crossed product
    let c = ctx.clone();
    props.push((
        "cp_associativity",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let x = random::crossed_element(rng, &c, 3, 2);
            let y = random::crossed_element(rng, &c, 3, 2);
            let z = random::crossed_element(rng, &c, 3, 2);
            x.mul(&y)?.mul(&z)?.distance(&x.mul(&y.mul(&z)?)?)
        }),
    ));
    let c = ctx.clone();
    props.push((
        "cp_adjoint",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let x = random::crossed_element(rng, &c, 3, 2);
            let y = random::crossed_element(rng, &c, 3, 2);
            let anti = x
                .mul(&y)?
                .adjoint()
                .distance(&y.adjoint().mul(&x.adjoint())?)?;
            Ok(anti.max(x.adjoint().adjoint().distance(&x)?))
        }),
    ));
    let c = ctx.clone();
    props.push((
        "cp_trace_property",
        tol::TRACE,
        Box::new(move |rng| {
            let x = random::crossed_element(rng, &c, 3, 2);
            let y = random::crossed_element(rng, &c, 3, 2);
            Ok((x.mul(&y)?.trace() - y.mul(&x)?.trace()).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "plancherel",
        tol::PLANCHEREL,
        Box::new(move |rng| {
            let x = random::crossed_element(rng, &c, 3, 2);
            let y = random::crossed_element(rng, &c, 3, 2);
            Ok((x.adjoint().mul(&y)?.trace() - x.plancherel(&y)?).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "cp_faithful",
        tol::TRACE,
        Box::new(move |rng| {
            let x = random::crossed_element(rng, &c, 3, 2);
            let tr = x.adjoint().mul(&x)?.trace();
            let norms: f64 = x.fibers().map(|(_, f)| f.l2_norm().powi(2)).sum();
            Ok((tr - Complex64::new(norms, 0.0)).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "alpha_trace_preserving",
        tol::TRACE_PRESERVATION,
        Box::new(move |rng| {
            let s = rng.gen_range(0..n);
            let x = random::weyl_polynomial(rng, d, 3);
            Ok((c.alpha(s, &x).expectation() - x.expectation()).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "j_trace_preserving",
        tol::TRACE_PRESERVATION,
        Box::new(move |rng| {
            let a = random::group_algebra_element(rng, c.group());
            Ok((c.embed(&a)?.trace() - a.trace()).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "j_homomorphism",
        tol::HOMOMORPHISM,
        Box::new(move |rng| {
            let a = random::group_algebra_element(rng, c.group());
            let b = random::group_algebra_element(rng, c.group());
            let hom = c
                .embed(&a.mul(&b)?)?
                .distance(&c.embed(&a)?.mul(&c.embed(&b)?)?)?;
            let adj = c.embed(&a.adjoint())?.distance(&c.embed(&a)?.adjoint())?;
            Ok(hom.max(adj))
        }),
    ));
    let c = ctx.clone();
    props.push((
        "u_trace_preserving",
        tol::TRACE_PRESERVATION,
        Box::new(move |rng| {
            let t = random::dyadic_time(rng);
            let x = random::crossed_element(rng, &c, 3, 2);
            Ok((x.takesaki_u(t)?.trace() - x.trace()).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "u_weight_preserving",
        tol::TRACE,
        Box::new(move |rng| {
            let t = random::dyadic_time(rng);
            let x = random::crossed_element(rng, &c, 3, 2);
            let ux = x.takesaki_u(t)?;
            Ok((ux.adjoint().mul(&ux)?.trace() - x.adjoint().mul(&x)?.trace()).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "u_automorphism",
        tol::HOMOMORPHISM,
        Box::new(move |rng| {
            let t = random::dyadic_time(rng);
            let x = random::crossed_element(rng, &c, 3, 2);
            let y = random::crossed_element(rng, &c, 3, 2);
            let hom = x
                .mul(&y)?
                .takesaki_u(t)?
                .distance(&x.takesaki_u(t)?.mul(&y.takesaki_u(t)?)?)?;
            let adj = x
                .adjoint()
                .takesaki_u(t)?
                .distance(&x.takesaki_u(t)?.adjoint())?;
            Ok(hom.max(adj))
        }),
    ));
    let c = ctx.clone();
    props.push((
        "pi_trace_preserving",
        tol::TRACE_PRESERVATION,
        Box::new(move |rng| {
            let t = random::dyadic_time(rng);
            let a = random::group_algebra_element(rng, c.group());
            Ok((c.pi_t(t, &a)?.trace() - a.trace()).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "pi_t_homomorphism",
        tol::HOMOMORPHISM,
        Box::new(move |rng| {
            let t = random::dyadic_time(rng);
            let a = random::group_algebra_element(rng, c.group());
            let b = random::group_algebra_element(rng, c.group());
            let hom = c
                .pi_t(t, &a.mul(&b)?)?
                .distance(&c.pi_t(t, &a)?.mul(&c.pi_t(t, &b)?)?)?;
            let adj = c
                .pi_t(t, &a.adjoint())?
                .distance(&c.pi_t(t, &a)?.adjoint())?;
            let unit = c
                .pi_t(t, &GroupAlgebraElement::unit(c.group()))?
                .distance(&CrossedElement::unit(&c))?;
            let measurable = if c.pi_t(t, &a)?.is_measurable_before(t) {
                0.0
            } else {
                1.0
            };
            Ok(hom.max(adj).max(unit).max(measurable))
        }),
    ));
    let c = ctx.clone();
    props.push((
        "e_trace_preserving",
        tol::TRACE_PRESERVATION,
        Box::new(move |rng| {
            let t = random::dyadic_time(rng);
            let x = random::crossed_element(rng, &c, 3, 2);
            Ok((x.conditional_expectation(t)?.trace() - x.trace()).norm())
        }),
    ));
    let c = ctx.clone();
    props.push((
        "e_filtration",
        tol::ALGEBRA,
        Box::new(move |rng| {
            let (a, b) = (random::dyadic_time(rng), random::dyadic_time(rng));
            let (u, t) = (a.min(b), a.max(b));
            let x = random::crossed_element(rng, &c, 3, 2);
            let once = x.conditional_expectation(u)?;
            let idem = once.conditional_expectation(u)?.distance(&once)?;
            let mono = x
                .conditional_expectation(t)?
                .conditional_expectation(u)?
                .distance(&once)?;
            let ja = c.embed(&random::group_algebra_element(rng, c.group()))?;
            let fixed = ja.conditional_expectation(u)?.distance(&ja)?;
            Ok(idem.max(mono).max(fixed))
        }),
    ));
    if let Some(horizon) = ctx.horizon() {
        let c = ctx.clone();
        props.push((
            "pi_reversed_homomorphism",
            tol::HOMOMORPHISM,
            Box::new(move |rng| {
                let t = random::dyadic_time(rng).min(horizon);
                let a = random::group_algebra_element(rng, c.group());
                let b = random::group_algebra_element(rng, c.group());
                let hom = c
                    .pi_t_reversed(t, &a.mul(&b)?)?
                    .distance(&c.pi_t_reversed(t, &a)?.mul(&c.pi_t_reversed(t, &b)?)?)?;
                let adj = c
                    .pi_t_reversed(t, &a.adjoint())?
                    .distance(&c.pi_t_reversed(t, &a)?.adjoint())?;
                let tr = (c.pi_t_reversed(t, &a)?.trace() - a.trace()).norm();
                Ok(hom.max(adj).max(tr))
            }),
        ));
    }
    props
}

/// Runs every structural property on `samples` seeded random instances and
/// records the worst residual of each.
pub fn verify_structure(
    ctx: &Arc<DilationContext>,
    samples: usize,
    seed: u64,
) -> Result<DilationReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be at least 1".into()));
    }
    let start = std::time::Instant::now();
    let props = properties(ctx);
    let checks: Vec<Check> = props
        .par_iter()
        .enumerate()
        .map(|(idx, (name, tolerance, f))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let mut worst: f64 = 0.0;
            for _ in 0..samples {
                let r = residual_or_inf(f(&mut rng));
                worst = if r.is_nan() { f64::NAN } else { worst.max(r) };
            }
            let params = CheckParams {
                samples: Some(samples),
                ..Default::default()
            };
            Check::new(*name, params, worst, *tolerance)
        })
        .collect();
    let mut report = DilationReport::new(ctx);
    checks.into_iter().for_each(|c| report.push(c));
    report.wall_time_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

/// Monte Carlo cross-check: `n_polys` random Weyl polynomials against their
/// symbolic expectation, and conditional pairings of the dilation fibers
/// `e^{√2 i W_t(b(s))}` against `n_probes` probes in total.
pub fn monte_carlo_suite(
    ctx: &Arc<DilationContext>,
    n_polys: usize,
    n_probes: usize,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloSection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let poly_dim = ctx.dim().clamp(1, 4);
    let mut expectation = Vec::with_capacity(n_polys);
    for k in 0..n_polys {
        let x = random::weyl_polynomial(&mut rng, poly_dim, 5);
        expectation.push(mc::cross_validate_expectation(
            &x,
            samples,
            seed.wrapping_add(k as u64),
        )?);
    }

    let (u, t) = (Time::new(1, 2), Time::new(1, 1));
    let g = ctx.group();
    let mut conditional = Vec::new();
    let mut remaining = n_probes;
    let mut s = 0;
    while remaining > 0 {
        // skip the identity, whose fiber carries no randomness
        let elem = if g.order() > 1 {
            1 + s % (g.order() - 1)
        } else {
            0
        };
        let x = ctx.cocycle_weyl(elem, Time::default(), t)?;
        let mut probes = vec![StepVector::indicator(
            Time::default(),
            u,
            &ctx.cocycle().b(elem),
        )?];
        if remaining > 1 {
            probes.push(random::step_vector_before(&mut rng, ctx.dim(), 3, u));
        }
        remaining -= probes.len();
        conditional.push(mc::cross_validate_conditional(
            &x,
            u,
            &probes,
            samples,
            seed.wrapping_add(1_000 + s as u64),
        )?);
        s += 1;
    }

    let probe = PathSample::new(
        poly_dim,
        (1..=4).map(|k| Time::new(k, 2)),
        samples.min(20_000),
        seed,
    );
    let increments = probe.increment_check();

    let total = expectation.len() + conditional.iter().map(|c| c.probes.len()).sum::<usize>();
    let within = expectation.iter().filter(|c| !c.flagged).count()
        + conditional
            .iter()
            .flat_map(|c| &c.probes)
            .filter(|p| !p.pairing.flagged)
            .count();
    let fraction_within = if total == 0 {
        1.0
    } else {
        within as f64 / total as f64
    };
    Ok(MonteCarloSection {
        samples,
        seed,
        expectation,
        conditional,
        pass: fraction_within >= 0.95 && increments.pass,
        increments,
        fraction_within,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cocycle::CndFunction;
    use crate::group::FiniteGroup;

    fn ctx_for(psi: CndFunction) -> Arc<DilationContext> {
        DilationContext::new(psi, 1e-9, Some(Time::new(2, 1))).unwrap()
    }

    #[test]
    fn default_grid_pairs() {
        let times = default_times();
        assert_eq!(forward_pairs(&times).len(), 21);
        assert_eq!(reversed_pairs(&times, Time::new(1, 1)).len(), 10);
    }

    #[test]
    fn z2_key_example() {
        let g = Arc::new(FiniteGroup::cyclic(2).unwrap());
        let ctx = ctx_for(CndFunction::new(&g, vec![0.0, 1.0], 1e-12).unwrap());
        let a = GroupAlgebraElement::basis(&g, 1);
        let (lhs, rhs) = markov_sides(&ctx, &a, Time::new(1, 2), Time::new(1, 1)).unwrap();
        assert!(lhs.distance(&rhs).unwrap() <= 1e-9);
        let c = lhs.fiber(1).terms()[0].coeff;
        assert!((c.re - 0.6065306597).abs() < 1e-10);
    }

    #[test]
    fn zero_psi_is_exact() {
        let g = Arc::new(FiniteGroup::dihedral(3).unwrap());
        let ctx = ctx_for(CndFunction::zero(&g));
        let inputs = default_inputs(&ctx, 2, 9);
        let times = forward_pairs(&default_times());
        let rep = verify_markov(&ctx, &times, &inputs).unwrap();
        assert!(rep.pass);
        assert_eq!(rep.max_residual, 0.0);
        let rep = verify_reversed(
            &ctx,
            &reversed_pairs(&default_times(), Time::new(2, 1)),
            &inputs,
        )
        .unwrap();
        assert_eq!(rep.max_residual, 0.0);
    }

    #[test]
    fn equal_times_reproduce_pi_t() {
        let g = Arc::new(FiniteGroup::cyclic(3).unwrap());
        let ctx = ctx_for(CndFunction::delta(&g, 1.0).unwrap());
        let a = random::group_algebra_element(&mut ChaCha8Rng::seed_from_u64(1), &g);
        let t = Time::new(3, 4);
        let (lhs, _) = markov_sides(&ctx, &a, t, t).unwrap();
        assert!(lhs.distance(&ctx.pi_t(t, &a).unwrap()).unwrap() == 0.0);
        let (lhs, _) = reversed_sides(&ctx, &a, t, t).unwrap();
        assert!(lhs.distance(&ctx.pi_t_reversed(t, &a).unwrap()).unwrap() == 0.0);
    }

    #[test]
    fn reversed_damping_on_z2() {
        let g = Arc::new(FiniteGroup::cyclic(2).unwrap());
        let psi = CndFunction::new(&g, vec![0.0, 1.0], 1e-12).unwrap();
        let ctx = DilationContext::new(psi, 1e-9, Some(Time::new(1, 1))).unwrap();
        let a = GroupAlgebraElement::basis(&g, 1);
        let (lhs, rhs) = reversed_sides(&ctx, &a, Time::new(0, 1), Time::new(1, 2)).unwrap();
        assert!(lhs.distance(&rhs).unwrap() < 1e-12);
        assert!((lhs.fiber(1).terms()[0].coeff.re - (-0.5f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn malformed_times() {
        let g = Arc::new(FiniteGroup::cyclic(2).unwrap());
        let ctx = ctx_for(CndFunction::delta(&g, 1.0).unwrap());
        let inputs = default_inputs(&ctx, 0, 0);
        assert!(verify_markov(&ctx, &[(Time::new(1, 1), Time::new(1, 2))], &inputs).is_err());
        assert!(verify_reversed(&ctx, &[(Time::new(1, 1), Time::new(3, 1))], &inputs).is_err());
        assert!(verify_structure(&ctx, 0, 0).is_err());
    }

    #[test]
    fn structure_on_dihedral() {
        let g = Arc::new(FiniteGroup::dihedral(3).unwrap());
        let ctx = ctx_for(CndFunction::delta(&g, 1.0).unwrap());
        let rep = verify_structure(&ctx, 10, 5).unwrap();
        for c in &rep.checks {
            assert!(c.pass, "{} residual {:e}", c.kind, c.residual);
        }
        assert!(rep.worst("pi_t_homomorphism").unwrap() <= 1e-9);
    }

    #[test]
    fn report_is_deterministic() {
        let g = Arc::new(FiniteGroup::cyclic(3).unwrap());
        let ctx = ctx_for(CndFunction::delta(&g, 1.0).unwrap());
        let mut a = verify_structure(&ctx, 3, 11).unwrap();
        let mut b = verify_structure(&ctx, 3, 11).unwrap();
        a.wall_time_secs = 0.0;
        b.wall_time_secs = 0.0;
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }
}
